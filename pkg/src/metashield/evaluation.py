"""Anonymization-quality metrics.

The speaker embedding is a deliberately simple proxy for a verification
model: per-coefficient mean and standard deviation of MFCCs 1..n_mfcc (the
energy coefficient c0 is dropped, which makes the embedding invariant to
overall gain).
"""

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.fft import dct
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import DegenerateInputError, ParameterDomainError, check_positive

MMR_THRESHOLD = 0.25
MMR_TRIALS = 30


@dataclass(frozen=True)
class EmbeddingConfig:
    n_mfcc: int = 13
    n_mel: int = 26
    win_ms: float = 25.0
    hop_ms: float = 10.0
    fmin_hz: float = 0.0
    fmax_hz: float = 8000.0

    def __post_init__(self):
        for name in ("n_mfcc", "n_mel", "win_ms", "hop_ms"):
            check_positive(name, getattr(self, name))
        if self.win_ms < self.hop_ms:
            raise ParameterDomainError("win_ms must be >= hop_ms")
        if self.n_mfcc >= self.n_mel:
            raise ParameterDomainError("n_mfcc must be smaller than n_mel")
        if not 0 <= self.fmin_hz < self.fmax_hz:
            raise ParameterDomainError("mel range must satisfy 0 <= fmin < fmax")


def _hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f) / 700.0)


def _mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m) / 2595.0) - 1.0)


def mel_filterbank(n_mel, n_fft, sample_rate_hz, fmin_hz, fmax_hz):
    """Triangular filters, shape ``(n_mel, n_fft // 2 + 1)``."""
    fmax_hz = min(fmax_hz, sample_rate_hz / 2.0)
    edges = _mel_to_hz(np.linspace(_hz_to_mel(fmin_hz), _hz_to_mel(fmax_hz), n_mel + 2))
    bins = np.fft.rfftfreq(n_fft, 1.0 / sample_rate_hz)
    fb = np.zeros((n_mel, len(bins)))
    for m in range(n_mel):
        lo, mid, hi = edges[m], edges[m + 1], edges[m + 2]
        up = (bins - lo) / (mid - lo)
        down = (hi - bins) / (hi - mid)
        fb[m] = np.maximum(0.0, np.minimum(up, down))
    return fb


def mfcc(samples, sample_rate_hz, config=None):
    """MFCC matrix ``(n_frames, n_mfcc + 1)`` including c0."""
    cfg = EmbeddingConfig() if config is None else config
    win = int(round(cfg.win_ms * 1e-3 * sample_rate_hz))
    hop = int(round(cfg.hop_ms * 1e-3 * sample_rate_hz))
    x = np.asarray(samples, dtype=float)
    if len(x) < win + 2 * hop:
        raise ParameterDomainError(
            f"audio too short for embedding: {len(x)} samples, need >= {win + 2 * hop}")
    n_frames = 1 + (len(x) - win) // hop
    idx = np.arange(win)[None, :] + hop * np.arange(n_frames)[:, None]
    frames = x[idx] * np.hamming(win)[None, :]
    n_fft = 1 << (win - 1).bit_length()
    power = np.abs(np.fft.rfft(frames, n_fft, axis=1)) ** 2
    fb = mel_filterbank(cfg.n_mel, n_fft, sample_rate_hz, cfg.fmin_hz, cfg.fmax_hz)
    energies = power @ fb.T
    tiny = np.finfo(float).tiny
    log_e = np.log(np.maximum(energies, tiny))
    return dct(log_e, type=2, norm="ortho", axis=1)[:, : cfg.n_mfcc + 1]


def embed(audio, config=None, sample_rate_hz=16000):
    """Speaker-embedding proxy: mean and std of MFCC 1..n_mfcc over frames.

    ``audio`` is an :class:`~metashield.perturb.AudioClip` or a 1-D array
    sampled at ``sample_rate_hz``.
    """
    if hasattr(audio, "samples"):
        samples, sr = audio.samples, audio.sample_rate_hz
    else:
        samples, sr = audio, sample_rate_hz
    c = mfcc(samples, sr, config)[:, 1:]
    return np.concatenate([c.mean(axis=0), c.std(axis=0)])


def similarity(e1, e2):
    e1 = np.asarray(e1, dtype=float)
    e2 = np.asarray(e2, dtype=float)
    n1 = np.linalg.norm(e1)
    n2 = np.linalg.norm(e2)
    if n1 == 0 or n2 == 0:
        raise DegenerateInputError("cosine similarity of a zero vector is undefined")
    return float(np.clip(np.dot(e1, e2) / (n1 * n2), -1.0, 1.0))


def trial_similarities(pairs, config=None, sample_rate_hz=16000):
    return [similarity(embed(a, config, sample_rate_hz), embed(b, config, sample_rate_hz))
            for a, b in pairs]


def mmr(pairs, threshold=MMR_THRESHOLD, config=None, sample_rate_hz=16000):
    """Miss-match rate: share of (original, anonymized) pairs scoring below threshold."""
    sims = trial_similarities(pairs, config, sample_rate_hz)
    if not sims:
        raise ParameterDomainError("mmr needs at least one pair")
    return sum(s < threshold for s in sims) / len(sims)


def third_octave_bands(f_lo=20.0, f_hi=8000.0):
    """Base-2 third-octave bands ``(center, lower, upper)`` around 1 kHz."""
    out = []
    for k in range(-20, 14):
        fc = 1000.0 * 2.0 ** (k / 3.0)
        lo, hi = fc * 2.0 ** (-1 / 6), fc * 2.0 ** (1 / 6)
        if lo >= f_lo and hi <= f_hi:
            out.append((fc, lo, hi))
    return out


def band_distortion(original, anonymized, exclude=(250.0, 800.0)):
    """Absolute energy change in dB per third-octave band outside ``exclude``.

    Bands overlapping the excluded range are skipped. The anonymized clip's
    recorded peak normalization is undone first. Returns a list of
    ``(center_hz, db)`` tuples.
    """
    if original.sample_rate_hz != anonymized.sample_rate_hz:
        raise ParameterDomainError("sample rates differ")
    if len(original.samples) != len(anonymized.samples):
        raise ParameterDomainError(
            f"length mismatch: {len(original.samples)} vs {len(anonymized.samples)} samples")
    sr = original.sample_rate_hz
    x = original.denormalized()
    y = anonymized.denormalized()
    freqs = np.fft.rfftfreq(len(x), 1.0 / sr)
    px = np.abs(np.fft.rfft(x)) ** 2
    py = np.abs(np.fft.rfft(y)) ** 2
    out = []
    for fc, lo, hi in third_octave_bands(f_hi=sr / 2.0):
        if hi > exclude[0] and lo < exclude[1]:
            continue
        mask = (freqs >= lo) & (freqs < hi)
        ex = px[mask].sum()
        ey = py[mask].sum()
        if ex <= 0 and ey <= 0:
            out.append((fc, 0.0))
            continue
        if ex <= 0 or ey <= 0:
            out.append((fc, math.inf))
            continue
        out.append((fc, abs(10.0 * math.log10(ey / ex))))
    return out


def rtc(audio_duration_s, processing_duration_s):
    """Real-time coefficient: processing time over audio duration."""
    check_positive("audio_duration_s", audio_duration_s)
    check_positive("processing_duration_s", processing_duration_s)
    return processing_duration_s / audio_duration_s


@dataclass
class EvalReport:
    similarities: list
    threshold: float = MMR_THRESHOLD
    oob_distortion_db: list = field(default_factory=list)
    rtc: float | None = None
    rtc_kind: str = "software processing time / audio duration"

    @property
    def trials(self):
        return len(self.similarities)

    @property
    def mmr(self):
        if not self.similarities:
            return 0.0
        return sum(s < self.threshold for s in self.similarities) / len(self.similarities)

    def to_dict(self):
        return {
            "mmr": self.mmr,
            "threshold": self.threshold,
            "trials": self.trials,
            "similarities": [float(s) for s in self.similarities],
            "oob_distortion_db": [[float(fc), float(db)] for fc, db in self.oob_distortion_db],
            "rtc": self.rtc,
            "rtc_kind": self.rtc_kind,
        }

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    def trials_to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["trial", "similarity", "below_threshold"])
            for i, s in enumerate(self.similarities):
                writer.writerow([i, repr(float(s)), int(s < self.threshold)])


class MFCCEmbedder(BaseEstimator, TransformerMixin):
    """Stateless transformer mapping 1-D audio arrays to proxy embeddings."""

    def __init__(self, n_mfcc=13, n_mel=26, win_ms=25.0, hop_ms=10.0, sample_rate_hz=16000):
        self.n_mfcc = n_mfcc
        self.n_mel = n_mel
        self.win_ms = win_ms
        self.hop_ms = hop_ms
        self.sample_rate_hz = sample_rate_hz

    def fit(self, X=None, y=None):
        self.config_ = EmbeddingConfig(self.n_mfcc, self.n_mel, self.win_ms, self.hop_ms,
                                       0.0, self.sample_rate_hz / 2.0)
        return self

    def transform(self, X):
        if not hasattr(self, "config_"):
            self.fit()
        return np.vstack([embed(x, self.config_, self.sample_rate_hz) for x in X])
