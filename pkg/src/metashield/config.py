"""Run configuration: nested JSON with defaults, strict key checking and
conversion into the module-level objects."""

import copy
import json

from ._validation import ParameterDomainError
from .field import Layout
from .geometry import Scene
from .layout import SearchConfig
from .perturb import StftConfig
from .randomizer import SlideParams, max_slide_coefficient
from .resonator import calibrate

DEFAULTS = {
    "seed": 0,
    "resonator": {"peak_gain": 73.0, "center_hz": 500.0, "half_width_hz": 200.0, "l0": 779.0},
    # slide_coeff / step_mm of null mean "derive": the 50 Hz band limit, and
    # 0.2 mm per 16 ms rescaled to the frame hop.
    "slide": {"slide_coeff": None, "band_hz": 50.0, "u_max_mm": 4.0, "step_mm": None},
    "scene": {"origin": [0.0, 0.0, 0.0], "r1_cm": 10.0, "mic_kind": "gooseneck",
              "d_cm": 20.0, "h_cm": 0.0},
    "field": {"coupling": 72.0, "directivity_exponent": 1.0, "n_freq": 128,
              "band_hz": [300.0, 700.0]},
    "search": {"user_range_deg": [-90.0, 90.0], "user_step_deg": 5.0,
               "unit_angle_range_deg": [-180.0, 180.0], "unit_step_deg": 5.0,
               "aggregate": "mean", "max_units": 3},
    "gain_curve": {"f_lo": 100.0, "f_hi": 900.0, "step": 1.0},
    "gain_map": {"theta_range_deg": [-90.0, 90.0], "theta_step_deg": 1.0,
                 "unit_angles_deg": None},
    "schedule": {"n_frames": 1000, "frame_hop_s": 0.016},
    "stft": {"frame_len": 1024, "hop": 64},
    "eval": {"threshold": 0.25, "trials": 30, "n_speakers": 10, "utterances_per_speaker": 3},
    "audio": {"sample_rate_hz": 16000, "subtype": "FLOAT"},
}


class ConfigError(ParameterDomainError):
    """Invalid or unknown configuration content."""


def _merge(base, override, path=""):
    for key, value in override.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {where!r} must be an object")
            _merge(base[key], value, where + ".")
        else:
            base[key] = value
    return base


def resolve(overrides=None):
    """Defaults merged with ``overrides`` (a dict or list of dicts)."""
    cfg = copy.deepcopy(DEFAULTS)
    if overrides is None:
        return cfg
    if isinstance(overrides, dict):
        overrides = [overrides]
    for item in overrides:
        _merge(cfg, item)
    return cfg


def load(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno} col {exc.colno}: {exc.msg}")
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return data


def parse_assignment(text):
    """``"section.key=value"`` -> nested dict; value is parsed as JSON when possible."""
    if "=" not in text:
        raise ConfigError(f"expected key=value, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    out = value
    for part in reversed(key.strip().split(".")):
        out = {part: out}
    return out


def build_spec(cfg):
    r = cfg["resonator"]
    return calibrate(r["peak_gain"], r["center_hz"], r["half_width_hz"], r["l0"])


def build_slide(cfg, spec):
    s = cfg["slide"]
    base = SlideParams(l0=spec.l0, u_max=s["u_max_mm"])
    coeff = s["slide_coeff"]
    if coeff is None:
        coeff = max_slide_coefficient(base, s["band_hz"], spec.c_eff)
    return SlideParams(l0=spec.l0, slide_coeff=coeff, u_max=s["u_max_mm"])


def build_scene(cfg):
    return Scene.from_dict(cfg["scene"])


def build_search(cfg):
    s = cfg["search"]
    f = cfg["field"]
    return SearchConfig(tuple(s["user_range_deg"]), s["user_step_deg"],
                        tuple(s["unit_angle_range_deg"]), s["unit_step_deg"], s["aggregate"],
                        s["max_units"], tuple(f["band_hz"]), f["n_freq"])


def build_layout(cfg, angles):
    f = cfg["field"]
    return Layout(tuple(angles), f["directivity_exponent"], f["coupling"])


def build_stft(cfg):
    return StftConfig(int(cfg["stft"]["frame_len"]), int(cfg["stft"]["hop"]))


def validate(cfg):
    """Build every object once so that bad values fail before any work."""
    spec = build_spec(cfg)
    build_slide(cfg, spec)
    build_scene(cfg)
    build_search(cfg)
    build_stft(cfg)
    e = cfg["eval"]
    if not -1 <= float(e["threshold"]) <= 1:
        raise ConfigError("eval.threshold must lie in [-1, 1]")
    if int(e["trials"]) < 1:
        raise ConfigError("eval.trials must be >= 1")
    if cfg["audio"]["subtype"] not in ("PCM_16", "FLOAT"):
        raise ConfigError("audio.subtype must be PCM_16 or FLOAT")
    seed = cfg["seed"]
    if not isinstance(seed, int) or seed < 0 or seed >= 2 ** 64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return cfg
