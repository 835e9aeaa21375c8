"""Greedy orientation search for multi-unit layouts.

Unit 1 always faces the speaker (0 deg). Each further unit is placed by
scanning its orientation over a grid while earlier units stay fixed, keeping
the angle that maximizes an aggregate of the interference gain over the
speaker's head-turn range.
"""

import json
from dataclasses import asdict, dataclass

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import ParameterDomainError, check_positive, inclusive_grid
from .field import (
    DEFAULT_COUPLING,
    DEFAULT_N_FREQ,
    MAX_UNITS,
    InterferenceMap,
    Layout,
    band_frequencies,
    gain_map,
    scattered_terms,
)
from .geometry import Scene
from .resonator import DEFAULT_BAND_HZ, calibrate

AGGREGATES = ("mean", "min")
# Scores closer than this (relative) count as tied.
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class SearchConfig:
    user_range_deg: tuple = (-90.0, 90.0)
    user_step_deg: float = 5.0
    unit_angle_range_deg: tuple = (-180.0, 180.0)
    unit_step_deg: float = 5.0
    aggregate: str = "mean"
    max_units: int = 3
    band_hz: tuple = DEFAULT_BAND_HZ
    n_freq: int = DEFAULT_N_FREQ

    def __post_init__(self):
        check_positive("user_step_deg", self.user_step_deg)
        check_positive("unit_step_deg", self.unit_step_deg)
        for name in ("user_range_deg", "unit_angle_range_deg"):
            lo, hi = getattr(self, name)
            if not -180.0 <= lo <= hi <= 180.0:
                raise ParameterDomainError(f"{name} must satisfy -180 <= lo <= hi <= 180")
            object.__setattr__(self, name, (float(lo), float(hi)))
        if self.aggregate not in AGGREGATES:
            raise ParameterDomainError(f"aggregate must be one of {AGGREGATES}")
        if not 1 <= int(self.max_units) <= MAX_UNITS:
            raise ParameterDomainError(f"max_units must lie in 1..{MAX_UNITS}")
        object.__setattr__(self, "max_units", int(self.max_units))
        object.__setattr__(self, "band_hz", (float(self.band_hz[0]), float(self.band_hz[1])))

    def user_grid(self):
        return inclusive_grid(*self.user_range_deg, self.user_step_deg, name="user-angle grid")

    def unit_grid(self):
        return inclusive_grid(*self.unit_angle_range_deg, self.unit_step_deg,
                              name="unit-angle grid")

    def to_dict(self):
        d = asdict(self)
        d["user_range_deg"] = list(self.user_range_deg)
        d["unit_angle_range_deg"] = list(self.unit_angle_range_deg)
        d["band_hz"] = list(self.band_hz)
        return d


def aggregate_objective(gains, mode="mean"):
    """Mean or minimum gain over the user-angle grid.

    ``gains`` is an :class:`InterferenceMap` or an array whose last axis is
    the user-angle grid.
    """
    values = gains.gains if isinstance(gains, InterferenceMap) else np.asarray(gains, float)
    if values.size == 0 or values.shape[-1] == 0:
        raise ParameterDomainError("cannot aggregate an empty map")
    if mode == "mean":
        return values.mean(axis=-1)
    if mode == "min":
        return values.min(axis=-1)
    raise ParameterDomainError(f"unknown aggregate {mode!r}")


def pick_best(candidates, scores):
    """Argmax with a total tie-break: smaller ``|angle|``, then negative angle."""
    candidates = np.asarray(candidates, dtype=float)
    scores = np.asarray(scores, dtype=float)
    best = scores.max()
    tol = TIE_RTOL * max(abs(best), 1.0)
    tied = candidates[scores >= best - tol]
    order = sorted(tied, key=lambda a: (abs(a), a > 0))
    return float(order[0])


@dataclass(frozen=True)
class LayoutResult:
    layout: Layout
    stage_scores: tuple
    config: SearchConfig

    @property
    def unit_angles_deg(self):
        return self.layout.unit_angles_deg

    def to_dict(self):
        return {
            "unit_angles_deg": list(self.layout.unit_angles_deg),
            "stage_scores": [float(s) for s in self.stage_scores],
            "config": self.config.to_dict(),
        }

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def candidate_scores(partial, candidates, scene, spec, config):
    """Objective for ``partial`` extended by each candidate orientation."""
    users = config.user_grid()
    freqs = band_frequencies(config.band_hz, config.n_freq)
    base = np.ones((len(users), len(freqs)), dtype=complex)
    for term in scattered_terms(partial.unit_angles_deg, scene, users, spec, freqs,
                                partial.directivity_exponent, partial.coupling):
        base = base + term
    extra = scattered_terms(candidates, scene, users, spec, freqs,
                            partial.directivity_exponent, partial.coupling)
    gains = np.abs(base[None, :, :] + extra).mean(axis=2)
    return aggregate_objective(gains, config.aggregate)


def layout_score(layout, scene, spec, config):
    m = gain_map(layout, scene, config.user_range_deg, config.user_step_deg, spec,
                 config.band_hz, config.n_freq)
    return float(aggregate_objective(m, config.aggregate))


def design_layout(scene=None, spec=None, config=None, directivity_exponent=1.0,
                  coupling=DEFAULT_COUPLING):
    """Greedy per-unit orientation search.

    Returns a :class:`LayoutResult` whose ``stage_scores[k]`` is the
    objective of the first ``k + 1`` units.
    """
    scene = Scene() if scene is None else scene
    spec = calibrate() if spec is None else spec
    config = SearchConfig() if config is None else config

    layout = Layout((0.0,), directivity_exponent, coupling)
    scores = [layout_score(layout, scene, spec, config)]
    candidates = config.unit_grid()
    for _ in range(1, config.max_units):
        s = candidate_scores(layout, candidates, scene, spec, config)
        best = pick_best(candidates, s)
        layout = layout.with_unit(best)
        scores.append(float(s[np.flatnonzero(candidates == best)[0]]))
    return LayoutResult(layout, tuple(scores), config)


class LayoutDesigner(BaseEstimator):
    """scikit-learn style wrapper around :func:`design_layout`.

    ``fit`` takes a :class:`~metashield.geometry.Scene` (or nothing, for the
    default gooseneck scene) and sets ``unit_angles_``, ``stage_scores_`` and
    ``layout_``. ``predict`` returns the fitted layout's interference gain at
    the given user angles.
    """

    def __init__(self, max_units=3, aggregate="mean", user_step_deg=5.0, unit_step_deg=5.0,
                 user_range_deg=(-90.0, 90.0), unit_angle_range_deg=(-180.0, 180.0),
                 directivity_exponent=1.0, coupling=DEFAULT_COUPLING, n_freq=DEFAULT_N_FREQ,
                 peak_gain=73.0, center_hz=500.0, half_width_hz=200.0, l0=779.0):
        self.max_units = max_units
        self.aggregate = aggregate
        self.user_step_deg = user_step_deg
        self.unit_step_deg = unit_step_deg
        self.user_range_deg = user_range_deg
        self.unit_angle_range_deg = unit_angle_range_deg
        self.directivity_exponent = directivity_exponent
        self.coupling = coupling
        self.n_freq = n_freq
        self.peak_gain = peak_gain
        self.center_hz = center_hz
        self.half_width_hz = half_width_hz
        self.l0 = l0

    def _config(self):
        return SearchConfig(tuple(self.user_range_deg), self.user_step_deg,
                            tuple(self.unit_angle_range_deg), self.unit_step_deg,
                            self.aggregate, self.max_units, DEFAULT_BAND_HZ, self.n_freq)

    def fit(self, X=None, y=None):
        scene = X if isinstance(X, Scene) else Scene()
        self.spec_ = calibrate(self.peak_gain, self.center_hz, self.half_width_hz, self.l0)
        self.scene_ = scene
        self.result_ = design_layout(scene, self.spec_, self._config(),
                                     self.directivity_exponent, self.coupling)
        self.layout_ = self.result_.layout
        self.unit_angles_ = np.array(self.layout_.unit_angles_deg)
        self.stage_scores_ = np.array(self.result_.stage_scores)
        return self

    def predict(self, X):
        if not hasattr(self, "layout_"):
            raise ParameterDomainError("LayoutDesigner is not fitted yet; call fit first")
        from .field import interference_gain

        theta = np.asarray(X, dtype=float).ravel()
        return interference_gain(self.layout_, self.scene_, theta, self.spec_,
                                 DEFAULT_BAND_HZ, self.n_freq)

    def score(self, X=None, y=None):
        """Aggregate objective of the fitted layout (higher is better)."""
        return layout_score(self.layout_, self.scene_, self.spec_, self._config())
