"""Reduced-order interference model for one or more resonator units.

Stands in for a full-wave simulation. At the microphone, the direct sound is
superposed with the field scattered by each unit:

    H(f, theta) = 1 + sum_j k * D(theta - a_j) * g(f) * exp(2j*pi*f*dr_j / c)

where ``D`` is a cardioid-power directivity, ``g`` the unit-peak Lorentzian,
``a_j`` the unit orientations and ``dr_j`` the extra path length
source -> unit -> mic over the direct path. Units sit on a 2 cm ring around
the mic at the azimuth they face. The interference gain is the band mean of
``|H|``.
"""

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._validation import (
    GeometryError,
    ParameterDomainError,
    check_angles,
    check_nonnegative,
    inclusive_grid,
)
from .geometry import mic_position, source_position
from .resonator import DEFAULT_BAND_HZ, unit_peak_gain

C_AIR_M_S = 343.0
RING_RADIUS_CM = 2.0
DEFAULT_COUPLING = 72.0
DEFAULT_N_FREQ = 128
MAX_UNITS = 8


@dataclass(frozen=True)
class Layout:
    unit_angles_deg: tuple
    directivity_exponent: float = 1.0
    coupling: float = DEFAULT_COUPLING

    def __post_init__(self):
        angles = tuple(float(a) for a in np.atleast_1d(self.unit_angles_deg))
        if not 1 <= len(angles) <= MAX_UNITS:
            raise ParameterDomainError(f"a layout holds 1..{MAX_UNITS} units, got {len(angles)}")
        check_angles("unit_angles_deg", angles)
        check_nonnegative("directivity_exponent", self.directivity_exponent)
        check_nonnegative("coupling", self.coupling)
        object.__setattr__(self, "unit_angles_deg", angles)

    def with_unit(self, angle_deg):
        return Layout(self.unit_angles_deg + (float(angle_deg),),
                      self.directivity_exponent, self.coupling)

    def mirrored(self):
        return Layout(tuple(-a for a in self.unit_angles_deg),
                      self.directivity_exponent, self.coupling)

    def to_dict(self):
        return {
            "unit_angles_deg": list(self.unit_angles_deg),
            "directivity_exponent": self.directivity_exponent,
            "coupling": self.coupling,
        }


@dataclass(frozen=True)
class InterferenceMap:
    user_angles_deg: np.ndarray
    band_hz: tuple
    gains: np.ndarray = field(repr=False)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["theta_deg", "gain"])
            for t, g in zip(self.user_angles_deg, self.gains):
                writer.writerow([repr(float(t)), repr(float(g))])

    @classmethod
    def from_csv(cls, path, band_hz=DEFAULT_BAND_HZ):
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != ["theta_deg", "gain"]:
                raise ParameterDomainError(f"unexpected gain-map header {header}")
            rows = np.array([(float(a), float(b)) for a, b in reader]).reshape(-1, 2)
        return cls(rows[:, 0], tuple(band_hz), rows[:, 1])

    def argmax_deg(self):
        return float(self.user_angles_deg[int(np.argmax(self.gains))])

    def gain_at(self, theta_deg):
        idx = np.flatnonzero(np.isclose(self.user_angles_deg, theta_deg, rtol=0, atol=1e-9))
        if len(idx) == 0:
            raise ParameterDomainError(f"{theta_deg} deg is not on the map grid")
        return float(self.gains[idx[0]])


def directivity(delta_deg, p=1.0):
    """Cardioid-power pattern ``((1 + cos(delta)) / 2) ** p``.

    Equals 1 on axis, 1/2 at 90 deg for ``p = 1`` and 0 at 180 deg.
    """
    p = check_nonnegative("p", p)
    c = np.cos(np.asarray(delta_deg, dtype=float) * (math.pi / 180.0))
    # Clamp tiny negative round-off near 180 deg before a fractional power.
    out = np.maximum((1.0 + c) * 0.5, 0.0) ** p
    return out if out.ndim else float(out)


def unit_positions(mic_xyz, angles_deg, ring_radius_cm=RING_RADIUS_CM):
    """Unit centers on a horizontal ring around the mic.

    A unit at orientation ``a`` sits at azimuth ``a`` measured from the +y
    axis (towards the speaker at zero head turn), so it faces outward from
    the mic along ``(sin a, cos a, 0)``.
    """
    rad = np.asarray(angles_deg, dtype=float) * (math.pi / 180.0)
    offset = np.stack([np.sin(rad), np.cos(rad), np.zeros_like(rad)], axis=-1) * ring_radius_cm
    mic = np.asarray(mic_xyz, dtype=float)
    return mic[..., None, :] + offset


def path_differences_cm(scene, theta_deg, angles_deg, ring_radius_cm=RING_RADIUS_CM):
    """Extra path ``|S-U_j| + |U_j-M| - |S-M|`` in cm, shape ``(n_theta, n_units)``."""
    theta = np.atleast_1d(np.asarray(theta_deg, dtype=float))
    src = source_position(scene, theta)
    mic = mic_position(scene, theta)
    direct = np.linalg.norm(src - mic, axis=-1)
    if np.any(direct <= 1e-9):
        raise GeometryError("sound source coincides with the microphone")
    units = unit_positions(mic, angles_deg, ring_radius_cm)
    via = (np.linalg.norm(src[:, None, :] - units, axis=-1)
           + np.linalg.norm(units - mic[:, None, :], axis=-1))
    return via - direct[:, None]


def band_frequencies(band, n_freq):
    lo, hi = (float(band[0]), float(band[1]))
    if not (0 < lo <= hi):
        raise ParameterDomainError(f"invalid band {band}")
    n_freq = int(n_freq)
    if n_freq < 1 or (n_freq < 3 and hi > lo):
        raise ParameterDomainError(f"n_freq must be >= 3 for a non-degenerate band, got {n_freq}")
    return np.linspace(lo, hi, n_freq)


def scattered_terms(angles_deg, scene, theta_deg, spec, freqs, directivity_exponent=1.0,
                    coupling=DEFAULT_COUPLING, path_phase=True):
    """Per-unit scattered field, shape ``(n_units, n_theta, n_freq)``."""
    theta = np.atleast_1d(check_angles("theta_user", theta_deg))
    angles = np.atleast_1d(check_angles("unit_angles_deg", angles_deg))
    freqs = np.asarray(freqs, dtype=float)
    weight = coupling * directivity(angles[:, None] - theta[None, :], directivity_exponent)
    g = np.asarray(unit_peak_gain(freqs, spec), dtype=float)
    if path_phase:
        dr_m = path_differences_cm(scene, theta, angles).T / 100.0
        phase = np.exp(2j * math.pi * freqs[None, None, :] * dr_m[:, :, None] / C_AIR_M_S)
        return weight[:, :, None] * g[None, None, :] * phase
    # Still reject coincident source/mic so the error contract holds.
    path_differences_cm(scene, theta, angles[:1])
    return (weight[:, :, None] * g[None, None, :]).astype(complex)


def transfer(layout, scene, theta_deg, spec, freqs, path_phase=True):
    """Complex mic response ``H``, shape ``(n_theta, n_freq)``."""
    terms = scattered_terms(layout.unit_angles_deg, scene, theta_deg, spec, freqs,
                            layout.directivity_exponent, layout.coupling, path_phase)
    # Units are added in layout order; the greedy search relies on this to
    # reproduce gain_map values exactly.
    total = np.ones(terms.shape[1:], dtype=complex)
    for term in terms:
        total = total + term
    return total


def interference_gain(layout, scene, theta_user, spec, band=DEFAULT_BAND_HZ,
                      n_freq=DEFAULT_N_FREQ, path_phase=True):
    """Band-mean ``|H|`` at one user angle (or an array of angles)."""
    freqs = band_frequencies(band, n_freq)
    h = transfer(layout, scene, theta_user, spec, freqs, path_phase=path_phase)
    out = np.abs(h).mean(axis=1)
    return float(out[0]) if np.ndim(theta_user) == 0 else out


def _n_threads():
    raw = os.environ.get("METASHIELD_THREADS")
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ParameterDomainError(f"METASHIELD_THREADS must be an integer, got {raw!r}")


def gain_map(layout, scene, theta_range=(-90.0, 90.0), theta_step=1.0, spec=None,
             band=DEFAULT_BAND_HZ, n_freq=DEFAULT_N_FREQ, path_phase=True):
    """Interference gain over a grid of user angles.

    When ``METASHIELD_THREADS`` > 1 the angles are split across threads; each
    gain is computed independently, so the result does not depend on the
    thread count.
    """
    if spec is None:
        from .resonator import calibrate
        spec = calibrate()
    grid = inclusive_grid(theta_range[0], theta_range[1], theta_step, name="user-angle grid")
    check_angles("theta_range", grid)
    n = _n_threads()
    if n == 1 or len(grid) < 2 * n:
        gains = interference_gain(layout, scene, grid, spec, band, n_freq, path_phase)
    else:
        chunks = np.array_split(grid, n)
        with ThreadPoolExecutor(max_workers=n) as pool:
            parts = list(pool.map(
                lambda c: interference_gain(layout, scene, c, spec, band, n_freq, path_phase),
                chunks))
        gains = np.concatenate(parts)
    return InterferenceMap(grid, (float(band[0]), float(band[1])), np.asarray(gains, dtype=float))
