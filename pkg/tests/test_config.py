import json

import pytest

from metashield import config as cfgmod
from metashield.config import ConfigError
from metashield.pipeline import trial_seed


def test_defaults_build():
    cfg = cfgmod.resolve()
    cfgmod.validate(cfg)
    spec = cfgmod.build_spec(cfg)
    assert spec.peak_gain == 73 and spec.center_hz == 500
    slide = cfgmod.build_slide(cfg, spec)
    assert slide.slide_coeff == pytest.approx(17.7045454545, rel=1e-10)
    assert cfgmod.build_scene(cfg).mic_kind == "gooseneck"
    assert cfgmod.build_stft(cfg).hop == 64


def test_defaults_not_mutated():
    a = cfgmod.resolve({"field": {"coupling": 0}})
    assert a["field"]["coupling"] == 0
    assert cfgmod.resolve()["field"]["coupling"] == 72


def test_layers_apply_in_order():
    cfg = cfgmod.resolve([{"seed": 1}, cfgmod.parse_assignment("seed=2")])
    assert cfg["seed"] == 2


@pytest.mark.parametrize("text,expected", [
    ("seed=5", {"seed": 5}),
    ("scene.mic_kind=handheld", {"scene": {"mic_kind": "handheld"}}),
    ("search.user_range_deg=[-45, 45]", {"search": {"user_range_deg": [-45, 45]}}),
    ("slide.slide_coeff=null", {"slide": {"slide_coeff": None}}),
])
def test_parse_assignment(text, expected):
    assert cfgmod.parse_assignment(text) == expected


@pytest.mark.parametrize("override", [{"nope": 1}, {"scene": {"x": 1}}, {"scene": 3}])
def test_unknown_keys_rejected(override):
    with pytest.raises(ConfigError):
        cfgmod.resolve(override)


@pytest.mark.parametrize("override", [{"seed": -1}, {"seed": 2 ** 64}, {"seed": 1.5},
                                      {"eval": {"threshold": 2}}, {"eval": {"trials": 0}}])
def test_validate_rejects(override):
    with pytest.raises(cfgmod.ParameterDomainError):
        cfgmod.validate(cfgmod.resolve(override))


def test_load(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"seed": 9}))
    assert cfgmod.load(p) == {"seed": 9}
    p.write_text("[1]")
    with pytest.raises(ConfigError):
        cfgmod.load(p)
    p.write_text("{")
    with pytest.raises(ConfigError, match="line 1"):
        cfgmod.load(p)


def test_trial_seed_wraps():
    assert trial_seed(5, 2) == 7
    assert trial_seed(2 ** 64 - 1, 1) == 0
