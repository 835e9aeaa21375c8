"""Passive randomization by a sliding block inside the resonator.

Sliding the block by ``u`` mm shrinks the effective size to
``L(u) = l0 - slide_coeff * u`` and so raises the resonance to
``c_eff / L(u)``. User motion moves the block; here that motion is a seeded
reflected random walk.
"""

import json
from dataclasses import dataclass

import numpy as np

from ._validation import (
    ParameterDomainError,
    ScheduleRangeError,
    check_in_range,
    check_nonnegative,
    check_positive,
)
from .resonator import DEFAULT_L0

DEFAULT_STEP_MM = 0.2
DEFAULT_FRAME_HOP_S = 0.016


@dataclass(frozen=True)
class SlideParams:
    l0: float = DEFAULT_L0
    slide_coeff: float = 0.0
    u_max: float = 4.0
    block_total_mm: float = 16.0
    u2_fixed_mm: float = 8.0
    block_cross_mm: float = 5.0

    def __post_init__(self):
        check_positive("l0", self.l0)
        check_nonnegative("slide_coeff", self.slide_coeff)
        check_positive("u_max", self.u_max)
        if self.l0 - self.slide_coeff * self.u_max <= 0:
            raise ParameterDomainError(
                "slide_coeff * u_max must stay below l0 (effective size would vanish)")

    def effective_size(self, u):
        return self.l0 - self.slide_coeff * u


def shifted_resonance(u, slide, c_eff):
    u = check_in_range("u", u, 0.0, slide.u_max)
    return c_eff / (slide.l0 - slide.slide_coeff * u)


def max_slide_coefficient(slide, band_hz, c_eff=None):
    """Largest slide coefficient keeping the full-travel shift within ``band_hz``.

    Solves ``f0 * l0 / (l0 - k * u_max) = f0 + band_hz`` for ``k``, where
    ``f0 = c_eff / l0`` is the unshifted resonance (500 Hz when ``c_eff`` is
    omitted).
    """
    band_hz = check_positive("band_hz", band_hz)
    f0 = 500.0 if c_eff is None else check_positive("c_eff", c_eff) / slide.l0
    return slide.l0 * (1.0 - f0 / (f0 + band_hz)) / slide.u_max


@dataclass(frozen=True)
class PerturbationSchedule:
    seed: int
    frame_hop_s: float
    u_values: np.ndarray
    omega0_values: np.ndarray

    def __len__(self):
        return len(self.u_values)

    def center_at(self, frame_index):
        if not 0 <= frame_index < len(self.u_values):
            raise ScheduleRangeError(
                f"frame {frame_index} outside schedule of {len(self.u_values)} frames")
        return float(self.omega0_values[frame_index])

    def to_dict(self):
        return {
            "seed": int(self.seed),
            "frame_hop_s": float(self.frame_hop_s),
            "u_values": [float(v) for v in self.u_values],
            "omega0_values": [float(v) for v in self.omega0_values],
        }

    @classmethod
    def from_dict(cls, data):
        missing = {"seed", "frame_hop_s", "u_values", "omega0_values"} - set(data)
        if missing:
            raise ParameterDomainError(f"schedule is missing keys {sorted(missing)}")
        u = np.asarray(data["u_values"], dtype=float)
        w = np.asarray(data["omega0_values"], dtype=float)
        if u.shape != w.shape or u.ndim != 1:
            raise ParameterDomainError("u_values and omega0_values must be equal-length lists")
        return cls(int(data["seed"]), float(data["frame_hop_s"]), u, w)

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _reflect(u, u_max):
    # Fold onto [0, u_max]; one fold suffices because |step| <= u_max.
    if u < 0.0:
        u = -u
    if u > u_max:
        u = 2.0 * u_max - u
    return min(max(u, 0.0), u_max)


def make_schedule(seed, n_frames, frame_hop_s=DEFAULT_FRAME_HOP_S, step_mm=DEFAULT_STEP_MM,
                  slide=None, c_eff=None, u_start=None):
    """Seeded reflected uniform random walk of the slide displacement.

    The walk starts at ``u_start`` (default: drawn uniformly from
    ``[0, u_max]``) and each frame adds a step drawn from
    ``U(-step_mm, step_mm)``, reflected at both ends of travel.
    ``step_mm = 0`` yields a constant schedule.
    """
    if slide is None:
        slide = SlideParams()
    if c_eff is None:
        c_eff = 500.0 * slide.l0
    n_frames = int(n_frames)
    if n_frames < 1:
        raise ParameterDomainError(f"n_frames must be >= 1, got {n_frames}")
    check_positive("frame_hop_s", frame_hop_s)
    step_mm = check_nonnegative("step_mm", step_mm)
    if step_mm > slide.u_max:
        raise ParameterDomainError(f"step_mm must not exceed u_max={slide.u_max}")

    rng = np.random.default_rng(seed)
    u0 = rng.uniform(0.0, slide.u_max) if u_start is None else float(u_start)
    check_in_range("u_start", u0, 0.0, slide.u_max)
    steps = rng.uniform(-step_mm, step_mm, size=n_frames - 1)

    u = np.empty(n_frames)
    u[0] = u0
    for i, s in enumerate(steps, start=1):
        u[i] = _reflect(u[i - 1] + s, slide.u_max)
    omega0 = c_eff / (slide.l0 - slide.slide_coeff * u)
    return PerturbationSchedule(int(seed), float(frame_hop_s), u, omega0)
