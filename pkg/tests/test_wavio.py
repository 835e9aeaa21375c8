import struct

import numpy as np
import pytest
from scipy.io import wavfile

from metashield._validation import DataFormatError
from metashield.perturb import AudioClip
from metashield.wavio import parse_wav, read_wav, wav_bytes, write_wav


@pytest.fixture
def clip():
    rng = np.random.default_rng(0)
    return AudioClip(np.clip(0.3 * rng.standard_normal(1001), -1, 1), 16000)


def test_float_roundtrip(tmp_path, clip):
    path = tmp_path / "a.wav"
    write_wav(path, clip, "FLOAT")
    back = read_wav(path)
    assert back.sample_rate_hz == 16000
    assert np.array_equal(back.samples, clip.samples.astype(np.float32).astype(float))
    sr, ref = wavfile.read(path)
    assert sr == 16000 and np.array_equal(ref, clip.samples.astype(np.float32))


def test_pcm_roundtrip_against_scipy(tmp_path, clip):
    path = tmp_path / "b.wav"
    write_wav(path, clip, "PCM_16")
    sr, ref = wavfile.read(path)
    assert ref.dtype == np.int16
    back = read_wav(path)
    assert np.array_equal(back.samples, ref / 32768.0)
    assert np.max(np.abs(back.samples - clip.samples)) <= 1 / 32768
    # and we read what scipy writes
    wavfile.write(tmp_path / "c.wav", 8000, ref)
    assert np.array_equal(read_wav(tmp_path / "c.wav").samples, back.samples)


def test_full_scale_clips_not_wraps():
    data = wav_bytes(AudioClip(np.array([1.0, -1.0, 0.0]), 8000))
    assert np.array_equal(np.frombuffer(data[44:], "<i2"), [32767, -32768, 0])


def test_output_is_byte_stable(clip):
    assert wav_bytes(clip) == wav_bytes(clip)
    assert len(wav_bytes(clip)) == 44 + 2 * 1001


@pytest.mark.parametrize("mutate,offset", [
    (lambda b: b[:8], 8),
    (lambda b: b"RIFX" + b[4:], 0),
    (lambda b: b[:8] + b"WAVX" + b[12:], 8),
    (lambda b: b[:40] + struct.pack("<I", 10 ** 6) + b[44:], 40),
    (lambda b: b[:22] + struct.pack("<H", 2) + b[24:], 22),
    (lambda b: b[:34] + struct.pack("<H", 24) + b[36:], 20),
    (lambda b: b[:12], 12),
    (lambda b: b[:36], 36),
])
def test_errors_carry_offsets(clip, mutate, offset):
    with pytest.raises(DataFormatError) as exc:
        parse_wav(mutate(wav_bytes(clip)), "x.wav")
    assert exc.value.offset == offset
    assert "x.wav" in str(exc.value)


def test_nonfinite_float_rejected():
    data = bytearray(wav_bytes(AudioClip(np.zeros(4), 8000), "FLOAT"))
    data[44 + 8:44 + 12] = struct.pack("<f", float("nan"))
    with pytest.raises(DataFormatError) as exc:
        parse_wav(bytes(data))
    assert exc.value.offset == 52


def test_atomic_write_leaves_no_temp(tmp_path, clip):
    write_wav(tmp_path / "sub" / "o.wav", clip)
    assert [p.name for p in (tmp_path / "sub").iterdir()] == ["o.wav"]
    with pytest.raises(ValueError):
        write_wav(tmp_path / "sub" / "bad.wav", clip, "PCM_24")
    assert [p.name for p in (tmp_path / "sub").iterdir()] == ["o.wav"]
