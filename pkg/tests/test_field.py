import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metashield._validation import GeometryError, ParameterDomainError
from metashield.field import (
    InterferenceMap,
    Layout,
    band_frequencies,
    directivity,
    gain_map,
    interference_gain,
    path_differences_cm,
    transfer,
)
from metashield.geometry import Scene


def test_directivity_values():
    assert directivity(0.0) == 1.0
    assert directivity(90.0) == pytest.approx(0.5, abs=1e-15)
    assert directivity(180.0) == pytest.approx(0.0, abs=1e-15)
    assert directivity(90.0, p=2) == pytest.approx(0.25, abs=1e-15)
    assert directivity(123.0, p=0) == 1.0


@given(st.floats(-360, 360), st.floats(0, 8))
def test_directivity_bounded_and_even(delta, p):
    v = directivity(delta, p)
    assert 0.0 <= v <= 1.0
    assert v == pytest.approx(directivity(-delta, p), abs=1e-12)


def test_single_unit_on_axis(gooseneck, calibrated_spec):
    g = interference_gain(Layout((0.0,)), gooseneck, 0.0, calibrated_spec,
                          band=(500, 500), n_freq=1, path_phase=False)
    assert g == pytest.approx(73.0, rel=1e-12)


def test_zero_coupling_is_identity(gooseneck, calibrated_spec):
    layout = Layout((-120.0, 0.0, 120.0), coupling=0.0)
    m = gain_map(layout, gooseneck, spec=calibrated_spec)
    assert np.all(m.gains == 1.0)


def test_gain_upper_bound(gooseneck, handheld, calibrated_spec):
    layout = Layout((-30.0, 10.0, 95.0))
    for scene in (gooseneck, handheld):
        m = gain_map(layout, scene, spec=calibrated_spec)
        assert np.all(m.gains <= 1 + 3 * 72 + 1e-9)
        assert np.all(m.gains >= 0)


@pytest.mark.parametrize("kind", ["gooseneck", "handheld"])
def test_mirror_invariance(kind, calibrated_spec):
    scene = Scene(mic_kind=kind)
    m = gain_map(Layout((-120.0, 0.0, 120.0)), scene, spec=calibrated_spec)
    assert np.max(np.abs(m.gains - m.gains[::-1])) <= 1e-12 * np.max(m.gains)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-180, 180), min_size=1, max_size=4), st.floats(-90, 90))
def test_mirrored_layout_mirrors_gain(angles, theta):
    scene = Scene()
    from metashield.resonator import calibrate
    spec = calibrate()
    lay = Layout(tuple(angles))
    a = interference_gain(lay, scene, theta, spec)
    b = interference_gain(lay.mirrored(), scene, -theta, spec)
    assert a == pytest.approx(b, rel=1e-9)


def test_frequency_resolution(gooseneck, calibrated_spec):
    lay = Layout((0.0, 40.0))
    a = gain_map(lay, gooseneck, spec=calibrated_spec, n_freq=64).gains
    b = gain_map(lay, gooseneck, spec=calibrated_spec, n_freq=128).gains
    assert np.max(np.abs(a - b) / b) < 0.005


def test_single_unit_pattern(gooseneck, calibrated_spec):
    m = gain_map(Layout((0.0,)), gooseneck, spec=calibrated_spec)
    assert m.argmax_deg() == 0.0
    ratio = m.gain_at(90.0) / m.gain_at(0.0)
    assert 0.4 <= ratio <= 0.6


def test_path_differences_non_negative(gooseneck):
    dr = path_differences_cm(gooseneck, np.arange(-90, 91, 10.0), [-120, 0, 45, 180])
    assert dr.shape == (19, 4)
    assert np.all(dr >= -1e-12)  # triangle inequality


def test_coincident_source_raises(calibrated_spec):
    # Valid scenes never coincide, so use a duck-typed scene with no standoff.
    class Stub:
        origin = (0.0, 0.0, 0.0)
        r1 = 10.0
        mic_kind = "gooseneck"
        h_cm = 0.0
        standoff = 0.0

    with pytest.raises(GeometryError):
        interference_gain(Layout((0.0,)), Stub(), 0.0, calibrated_spec)
    with pytest.raises(GeometryError):
        interference_gain(Layout((0.0,)), Stub(), 0.0, calibrated_spec, path_phase=False)


def test_transfer_shape(gooseneck, calibrated_spec):
    h = transfer(Layout((0.0, 90.0)), gooseneck, np.array([0.0, 10.0, 20.0]), calibrated_spec,
                 band_frequencies((300, 700), 16))
    assert h.shape == (3, 16) and np.iscomplexobj(h)


@pytest.mark.parametrize("band,n", [((300, 700), 2), ((700, 300), 128), ((0, 700), 16),
                                    ((300, 700), 0)])
def test_band_validation(band, n):
    with pytest.raises(ParameterDomainError):
        band_frequencies(band, n)


def test_layout_validation():
    with pytest.raises(ParameterDomainError):
        Layout(())
    with pytest.raises(ParameterDomainError):
        Layout(tuple([0.0] * 9))
    with pytest.raises(ParameterDomainError):
        Layout((181.0,))
    assert Layout((10.0, -20.0)).mirrored().unit_angles_deg == (-10.0, 20.0)


def test_map_csv_roundtrip(tmp_path, gooseneck, calibrated_spec):
    m = gain_map(Layout((0.0,)), gooseneck, theta_step=2.5, spec=calibrated_spec)
    path = tmp_path / "map.csv"
    m.to_csv(path)
    assert path.read_text().splitlines()[0] == "theta_deg,gain"
    back = InterferenceMap.from_csv(path)
    assert np.array_equal(back.gains, m.gains)
    assert np.array_equal(back.user_angles_deg, m.user_angles_deg)
    with pytest.raises(ParameterDomainError):
        m.gain_at(1.0)


def test_thread_count_does_not_change_map(monkeypatch, handheld, calibrated_spec):
    lay = Layout((-120.0, 0.0, 120.0))
    monkeypatch.setenv("METASHIELD_THREADS", "1")
    one = gain_map(lay, handheld, spec=calibrated_spec).gains
    monkeypatch.setenv("METASHIELD_THREADS", "4")
    four = gain_map(lay, handheld, spec=calibrated_spec).gains
    assert np.array_equal(one, four)
    monkeypatch.setenv("METASHIELD_THREADS", "lots")
    with pytest.raises(ParameterDomainError):
        gain_map(lay, handheld, spec=calibrated_spec)
