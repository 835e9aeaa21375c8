"""Formant-synthesized vowel corpus used for offline evaluation.

Each synthetic speaker has its own pitch, vocal-tract scale (which moves all
formants together) and breathiness. An utterance is a short sequence of
vowels rendered by a glottal pulse train through a cascade of formant
resonators.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal

from ._validation import ParameterDomainError

# Adult-male reference formants (Hz) for a handful of vowels.
VOWELS = {
    "a": (730.0, 1090.0, 2440.0),
    "i": (270.0, 2290.0, 3010.0),
    "u": (300.0, 870.0, 2240.0),
    "e": (530.0, 1840.0, 2480.0),
    "o": (570.0, 840.0, 2410.0),
    "ae": (660.0, 1720.0, 2410.0),
}
FORMANT_BANDWIDTHS = (80.0, 100.0, 140.0)


@dataclass(frozen=True)
class SyntheticSpeaker:
    speaker_id: int
    f0_hz: float
    tract_scale: float
    breathiness: float
    jitter: float = 0.01

    def formants(self, vowel):
        return tuple(f * self.tract_scale for f in VOWELS[vowel])


def make_speakers(n_speakers, seed=0):
    """Speakers with pitch spread over 90-260 Hz and tract scale 0.85-1.25."""
    if n_speakers < 1:
        raise ParameterDomainError("need at least one speaker")
    rng = np.random.default_rng([int(seed), 0xC0])
    f0 = np.linspace(90.0, 260.0, n_speakers)
    scale = np.linspace(0.85, 1.25, n_speakers)
    rng.shuffle(scale)
    breath = rng.uniform(0.01, 0.05, n_speakers)
    return [SyntheticSpeaker(i, float(f0[i]), float(scale[i]), float(breath[i]))
            for i in range(n_speakers)]


def _glottal_source(n, sample_rate_hz, f0_hz, jitter, rng):
    """Impulse train with per-period pitch jitter, lightly low-passed."""
    src = np.zeros(n)
    t = 0.0
    while True:
        idx = int(round(t))
        if idx >= n:
            break
        src[idx] = 1.0
        period = sample_rate_hz / (f0_hz * (1.0 + jitter * rng.standard_normal()))
        t += period
    # Two-pole glottal roll-off (~ -12 dB/oct above a few hundred Hz).
    pole = math.exp(-2.0 * math.pi * 250.0 / sample_rate_hz)
    return signal.lfilter([1.0], [1.0, -2.0 * pole, pole * pole], src)


def _formant_filter(x, freqs, bandwidths, sample_rate_hz):
    y = x
    for f, bw in zip(freqs, bandwidths):
        if f >= sample_rate_hz / 2:
            continue
        r = math.exp(-math.pi * bw / sample_rate_hz)
        theta = 2.0 * math.pi * f / sample_rate_hz
        a = [1.0, -2.0 * r * math.cos(theta), r * r]
        # Unity gain at DC so stacking resonators does not blow up.
        y = signal.lfilter([sum(a)], a, y)
    return y


def synthesize_utterance(speaker, vowels, sample_rate_hz=16000, vowel_s=0.3, seed=0):
    """Render ``vowels`` back-to-back for ``speaker``; peak-scaled to 0.5."""
    rng = np.random.default_rng([int(seed), speaker.speaker_id, 0x5EED])
    n_vowel = int(round(vowel_s * sample_rate_hz))
    fade = min(n_vowel // 4, int(0.02 * sample_rate_hz))
    ramp = np.ones(n_vowel)
    ramp[:fade] = np.linspace(0.0, 1.0, fade)
    ramp[-fade:] = np.linspace(1.0, 0.0, fade)
    pieces = []
    for v in vowels:
        src = _glottal_source(n_vowel, sample_rate_hz, speaker.f0_hz, speaker.jitter, rng)
        src = src / (np.max(np.abs(src)) + 1e-12)
        src = src + speaker.breathiness * rng.standard_normal(n_vowel)
        pieces.append(_formant_filter(src, speaker.formants(v), FORMANT_BANDWIDTHS,
                                      sample_rate_hz) * ramp)
    x = np.concatenate(pieces)
    return 0.5 * x / np.max(np.abs(x))


UTTERANCE_SCRIPTS = (
    ("a", "i", "u", "e"),
    ("o", "ae", "i", "a"),
    ("e", "u", "o", "ae"),
)


def make_corpus(n_speakers=10, utterances_per_speaker=3, sample_rate_hz=16000, seed=0):
    """List of ``(speaker_id, utterance_index, samples)`` tuples."""
    if utterances_per_speaker < 1:
        raise ParameterDomainError("need at least one utterance per speaker")
    out = []
    for spk in make_speakers(n_speakers, seed):
        for k in range(utterances_per_speaker):
            script = UTTERANCE_SCRIPTS[k % len(UTTERANCE_SCRIPTS)]
            x = synthesize_utterance(spk, script, sample_rate_hz, seed=seed * 1000 + k)
            out.append((spk.speaker_id, k, x))
    return out
