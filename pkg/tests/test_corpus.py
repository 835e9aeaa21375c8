import numpy as np
import pytest

from metashield._validation import ParameterDomainError
from metashield.corpus import VOWELS, make_corpus, make_speakers, synthesize_utterance


def test_speakers_are_distinct():
    spk = make_speakers(10, seed=0)
    assert len({s.f0_hz for s in spk}) == 10
    assert len({s.tract_scale for s in spk}) == 10
    assert min(s.f0_hz for s in spk) == 90.0 and max(s.f0_hz for s in spk) == 260.0
    assert spk[3].formants("a") == tuple(f * spk[3].tract_scale for f in VOWELS["a"])
    with pytest.raises(ParameterDomainError):
        make_speakers(0)


def test_corpus_shape_and_determinism():
    a = make_corpus(3, 2, seed=4)
    b = make_corpus(3, 2, seed=4)
    assert [(s, k) for s, k, _ in a] == [(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1)]
    for (_, _, x), (_, _, y) in zip(a, b):
        assert np.array_equal(x, y)
        assert len(x) == int(1.2 * 16000)
        assert np.max(np.abs(x)) == pytest.approx(0.5)
    with pytest.raises(ParameterDomainError):
        make_corpus(2, 0)


def test_pitch_shows_up_in_spectrum():
    low, high = make_speakers(2, seed=0)
    x = synthesize_utterance(low, ("a",), seed=1)
    y = synthesize_utterance(high, ("a",), seed=1)

    def pitch(sig):
        ac = np.correlate(sig[:4000], sig[:4000], "full")[3999:]
        lag = np.argmax(ac[40:400]) + 40
        return 16000 / lag

    assert pitch(x) == pytest.approx(low.f0_hz, rel=0.1)
    assert pitch(y) == pytest.approx(high.f0_hz, rel=0.1)
