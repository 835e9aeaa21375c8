"""Mouth and microphone positions as the speaker turns their head.

All coordinates are in cm and all angles in degrees. The head turns in the
horizontal plane about a center ``r1`` behind the mouth; vertical head motion
is ignored.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from ._validation import ParameterDomainError, check_angles, check_in_range, check_positive

MIC_KINDS = ("gooseneck", "handheld")


@dataclass(frozen=True)
class Scene:
    origin: tuple = (0.0, 0.0, 0.0)
    r1: float = 10.0
    mic_kind: str = "gooseneck"
    d_cm: float = 20.0
    h_cm: float = 0.0

    def __post_init__(self):
        if len(self.origin) != 3:
            raise ParameterDomainError("origin must have three coordinates")
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        check_positive("r1", self.r1)
        if self.mic_kind not in MIC_KINDS:
            raise ParameterDomainError(f"mic_kind must be one of {MIC_KINDS}, got {self.mic_kind!r}")
        check_in_range("d_cm", self.d_cm, 10.0, 30.0)
        check_in_range("h_cm", self.h_cm, 0.0, 30.0)

    @property
    def standoff(self):
        """Horizontal (and vertical) mic offset ``sqrt(D**2 / 2)``."""
        return math.sqrt(self.d_cm ** 2 / 2.0)

    def to_dict(self):
        return {
            "origin": list(self.origin),
            "r1_cm": self.r1,
            "mic_kind": self.mic_kind,
            "d_cm": self.d_cm,
            "h_cm": self.h_cm,
        }

    @classmethod
    def from_dict(cls, data):
        allowed = {"origin", "r1_cm", "mic_kind", "d_cm", "h_cm"}
        unknown = set(data) - allowed
        if unknown:
            raise ParameterDomainError(f"unknown scene keys {sorted(unknown)}")
        kwargs = {}
        if "origin" in data:
            kwargs["origin"] = tuple(data["origin"])
        if "r1_cm" in data:
            kwargs["r1"] = float(data["r1_cm"])
        for key in ("mic_kind", "d_cm", "h_cm"):
            if key in data:
                kwargs[key] = data[key]
        return cls(**kwargs)

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _radians(theta_deg):
    theta = check_angles("theta", theta_deg)
    return theta * (math.pi / 180.0)


def source_position(scene, theta_deg):
    """Mouth position after turning by ``theta_deg``.

    Accepts a scalar (returns a length-3 array) or an array of angles
    (returns shape ``(n, 3)``).
    """
    rad = _radians(theta_deg)
    x0, y0, z0 = scene.origin
    x = x0 + scene.r1 * np.sin(rad)
    y = y0 + scene.r1 * (1.0 - np.cos(rad))
    z = np.full_like(x, z0)
    return np.stack([x, y, z], axis=-1)


def mic_position(scene, theta_deg):
    """Microphone position for the scene's mic archetype.

    A gooseneck stays put on the table; a handheld mic is carried around the
    same head center as the mouth, on a radius ``sqrt(D**2/2) + r1``.
    """
    rad = _radians(theta_deg)
    x0, y0, z0 = scene.origin
    a = scene.standoff
    x1 = np.full_like(rad, x0)
    y1 = np.full_like(rad, y0 - a)
    if scene.mic_kind == "gooseneck":
        z1 = np.full_like(rad, z0 - a - scene.h_cm)
        return np.stack([x1, y1, z1], axis=-1)
    radius = a + scene.r1
    x2 = x1 + radius * np.sin(rad)
    y2 = y1 + radius * (1.0 - np.cos(rad))
    z2 = np.full_like(rad, z0 - a)
    return np.stack([x2, y2, z2], axis=-1)


def source_mic_distance(scene, theta_deg):
    diff = source_position(scene, theta_deg) - mic_position(scene, theta_deg)
    return np.linalg.norm(diff, axis=-1)
