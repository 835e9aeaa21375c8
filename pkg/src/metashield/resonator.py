"""Lorentzian frequency response of a single Mie-type resonator unit.

Frequencies are plain Hz throughout (no rad/s); the amplitude ``A`` is
calibrated in Hz**2 so that ``A / ((f0 - f)**2 + hw**2)`` is a pure ratio.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from ._validation import ParameterDomainError, check_nonnegative, check_positive, inclusive_grid

#: Reference design: 73x peak at 500 Hz, half-gain at 300 and 700 Hz.
DEFAULT_PEAK_GAIN = 73.0
DEFAULT_CENTER_HZ = 500.0
DEFAULT_HALF_WIDTH_HZ = 200.0
DEFAULT_L0 = 779.0
DEFAULT_BAND_HZ = (300.0, 700.0)


@dataclass(frozen=True)
class Geometry:
    """Physical dimensions of the printed unit, in mm.

    Kept for record only; the reduced model is calibrated and never derives
    the resonance from these values.
    """

    d: float = 19.5
    h: float = 21.0
    t: float = 1.95
    s: float = 49.5
    z: float | None = None


@dataclass(frozen=True)
class ResonatorSpec:
    peak_gain: float
    center_hz: float
    half_width_hz: float
    amplitude: float
    c_eff: float
    l0: float
    geometry: Geometry = field(default_factory=Geometry)

    def __post_init__(self):
        for name in ("peak_gain", "half_width_hz", "l0", "center_hz"):
            check_positive(name, getattr(self, name))

    def to_dict(self):
        return {
            "peak_gain": self.peak_gain,
            "center_hz": self.center_hz,
            "half_width_hz": self.half_width_hz,
            "l0": self.l0,
        }


def calibrate(peak_gain=DEFAULT_PEAK_GAIN, center_hz=DEFAULT_CENTER_HZ,
              half_width_hz=DEFAULT_HALF_WIDTH_HZ, l0=DEFAULT_L0, geometry=None):
    """Build a :class:`ResonatorSpec` whose Lorentzian peaks at ``peak_gain``.

    ``amplitude`` is set to ``peak_gain * half_width_hz**2`` and ``c_eff`` to
    ``center_hz * l0``, so that ``resonance_frequency(l0, c_eff)`` recovers
    ``center_hz``.

    Examples
    --------
    >>> spec = calibrate(73, 500, 200, 779)
    >>> spec.amplitude
    2920000.0
    >>> float(lorentzian_gain(300, spec))
    36.5
    """
    peak_gain = check_positive("peak_gain", peak_gain)
    center_hz = check_positive("center_hz", center_hz)
    half_width_hz = check_positive("half_width_hz", half_width_hz)
    l0 = check_positive("l0", l0)
    c_eff = center_hz * l0
    # c_eff / l0 must give back center_hz bit-for-bit; otherwise store the
    # recomputed center so the invariant holds exactly.
    center = c_eff / l0
    return ResonatorSpec(
        peak_gain=peak_gain,
        center_hz=center,
        half_width_hz=half_width_hz,
        amplitude=peak_gain * half_width_hz ** 2,
        c_eff=c_eff,
        l0=l0,
        geometry=geometry if geometry is not None else Geometry(),
    )


def lorentzian_gain(f, spec, center_hz=None):
    """Resonance amplification ``A / ((f0 - f)**2 + hw**2)``.

    ``f`` may be a scalar or an array. ``center_hz`` overrides the spec's
    resonance, which is how a slide-shifted unit is evaluated (amplitude and
    damping stay fixed while the center moves).

    The expression is evaluated as ``peak * hw**2 / (delta**2 + hw**2)``,
    algebraically identical to the above, so the value at resonance is the
    calibrated peak exactly.
    """
    f0 = spec.center_hz if center_hz is None else center_hz
    hw2 = spec.half_width_hz ** 2
    delta = np.asarray(f, dtype=float) - f0
    out = spec.peak_gain * (hw2 / (delta * delta + hw2))
    return out if out.ndim else float(out)


def unit_peak_gain(f, spec, center_hz=None):
    """Lorentzian normalized to 1 at its center."""
    f0 = spec.center_hz if center_hz is None else center_hz
    hw2 = spec.half_width_hz ** 2
    delta = np.asarray(f, dtype=float) - f0
    out = hw2 / (delta * delta + hw2)
    return out if out.ndim else float(out)


def resonance_frequency(l, c_eff):
    """Size-frequency rule ``f0 = c_eff / L``: smaller units resonate higher."""
    l = check_positive("l", l)
    return c_eff / l


@dataclass(frozen=True)
class GainCurve:
    frequencies: np.ndarray
    gains: np.ndarray

    def __post_init__(self):
        if len(self.frequencies) != len(self.gains):
            raise ParameterDomainError("frequencies and gains differ in length")

    def peak(self):
        i = int(np.argmax(self.gains))
        return float(self.frequencies[i]), float(self.gains[i])

    def band_mean(self, lo, hi):
        """Trapezoid mean of the tabulated gain over ``[lo, hi]``."""
        mask = (self.frequencies >= lo) & (self.frequencies <= hi)
        f = self.frequencies[mask]
        g = self.gains[mask]
        if len(f) < 2:
            raise ParameterDomainError("band contains fewer than two grid points")
        return float(np.trapezoid(g, f) / (f[-1] - f[0]))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["frequency_hz", "gain"])
            for f, g in zip(self.frequencies, self.gains):
                writer.writerow([repr(float(f)), repr(float(g))])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != ["frequency_hz", "gain"]:
                raise ParameterDomainError(f"unexpected gain-curve header {header}")
            rows = [(float(a), float(b)) for a, b in reader]
        arr = np.array(rows, dtype=float).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1])


def gain_curve(spec, f_lo, f_hi, step):
    """Tabulate :func:`lorentzian_gain` on ``f_lo, f_lo+step, ... <= f_hi``."""
    check_nonnegative("f_lo", f_lo)
    if not f_hi > f_lo:
        raise ParameterDomainError(f"empty frequency range [{f_lo}, {f_hi}]")
    freqs = inclusive_grid(f_lo, f_hi, step, name="frequency grid")
    return GainCurve(freqs, np.asarray(lorentzian_gain(freqs, spec), dtype=float))
