"""Signal-level perturbation: run audio through the resonator's time-varying
transfer function in the STFT domain.

Each STFT frame ``t`` sees

    H(f, t) = 1 + k * g(f; f0_t) * exp(1j * phi_t)

inside the perturbation band and exactly 1 outside it, where ``f0_t`` comes
from the slide schedule and ``phi_t`` is a seeded random scattering phase.
"""

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import signal
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import (
    ParameterDomainError,
    ScheduleRangeError,
    check_nonnegative,
    check_positive,
)
from .field import DEFAULT_COUPLING
from .randomizer import SlideParams, make_schedule
from .resonator import calibrate, unit_peak_gain

log = logging.getLogger(__name__)

BAND_LIMIT_HZ = (250.0, 800.0)


@dataclass(frozen=True)
class AudioClip:
    """Mono audio with samples nominally in [-1, 1].

    ``normalization`` records the scale factor already applied to
    ``samples`` by a peak-normalization stage (1.0 when none was applied).
    """

    samples: np.ndarray
    sample_rate_hz: int = 16000
    normalization: float = 1.0

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=float)
        if x.ndim != 1:
            raise ParameterDomainError("audio must be mono (1-D samples)")
        if not np.all(np.isfinite(x)):
            raise ParameterDomainError("audio contains NaN or infinite samples")
        check_positive("sample_rate_hz", self.sample_rate_hz)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate_hz", int(self.sample_rate_hz))

    @property
    def duration_s(self):
        return len(self.samples) / self.sample_rate_hz

    def denormalized(self):
        """Samples with the recorded peak-normalization undone."""
        return self.samples / self.normalization


@dataclass(frozen=True)
class StftConfig:
    frame_len: int = 1024
    # A 256-sample hop aliases the ~35 dB in-band boost into neighbouring
    # third-octave bands (> 0.5 dB); 64 keeps out-of-band change < 0.2 dB.
    hop: int = 64
    window: str = "hann"

    def __post_init__(self):
        if not 0 < self.hop <= self.frame_len:
            raise ParameterDomainError(f"need 0 < hop <= frame_len, got hop={self.hop}")
        if not signal.check_COLA(self.window, self.frame_len, self.frame_len - self.hop):
            raise ParameterDomainError(
                f"{self.window} window with hop {self.hop} is not constant-overlap-add")

    def n_frames(self, n_samples):
        """Frame count produced by :func:`stft` for ``n_samples`` samples."""
        # Short clips are zero-padded to one frame first (see stft), then
        # half-frame padding at both ends and padding up to whole hops.
        n_samples = max(int(n_samples), self.frame_len)
        padded = n_samples + 2 * (self.frame_len // 2)
        extra = (-(padded - self.frame_len)) % self.hop
        return (padded + extra - self.frame_len) // self.hop + 1


def stft(x, sample_rate_hz, config):
    x = np.asarray(x, dtype=float)
    if len(x) < config.frame_len:
        # scipy would silently shrink the frame for short input
        x = np.pad(x, (0, config.frame_len - len(x)))
    freqs, _, spec = signal.stft(
        x, fs=sample_rate_hz, window=config.window, nperseg=config.frame_len,
        noverlap=config.frame_len - config.hop, boundary="zeros", padded=True)
    return freqs, spec


def istft(spec, sample_rate_hz, config, n_samples):
    _, x = signal.istft(
        spec, fs=sample_rate_hz, window=config.window, nperseg=config.frame_len,
        noverlap=config.frame_len - config.hop, boundary=True)
    return x[:n_samples]


def frame_phases(seed, n_frames):
    """Per-frame scattering phases, uniform on ``[0, 2*pi)``."""
    rng = np.random.default_rng([int(seed), 0x5CA7])
    return rng.uniform(0.0, 2.0 * math.pi, size=int(n_frames))


def frame_transfer(f, frame_index, schedule, spec, coupling=DEFAULT_COUPLING, phase_seed=0,
                   phase=None, band_limit=BAND_LIMIT_HZ):
    """Complex gain ``H(f, t)`` for one frame.

    ``phase`` fixes the scattering phase; otherwise it is drawn from
    ``phase_seed`` exactly as :func:`anonymize` draws it. ``band_limit=None``
    disables the hard band limit.
    """
    center = schedule.center_at(frame_index)
    if phase is None:
        phase = frame_phases(phase_seed, len(schedule))[frame_index]
    f = np.asarray(f, dtype=float)
    h = 1.0 + coupling * unit_peak_gain(f, spec, center) * np.exp(1j * phase)
    if band_limit is not None:
        h = np.where((f >= band_limit[0]) & (f <= band_limit[1]), h, 1.0 + 0j)
    return h if np.ndim(h) else complex(h)


def transfer_matrix(freqs, schedule, spec, coupling, phases, band_limit=BAND_LIMIT_HZ):
    """``H`` for every bin and frame, shape ``(n_bins, n_frames)``."""
    n = len(phases)
    centers = np.asarray(schedule.omega0_values[:n], dtype=float)
    g = unit_peak_gain(freqs[:, None], spec, centers[None, :])
    h = 1.0 + coupling * g * np.exp(1j * phases)[None, :]
    if band_limit is not None:
        outside = (freqs < band_limit[0]) | (freqs > band_limit[1])
        h[outside, :] = 1.0
    return h


def anonymize(audio, schedule=None, spec=None, coupling=DEFAULT_COUPLING, stft_config=None,
              seed=0, phase=None, band_limit=BAND_LIMIT_HZ, cycle_schedule=False,
              normalize=True):
    """Apply the metamaterial channel to ``audio``.

    Parameters
    ----------
    audio : AudioClip
    schedule : PerturbationSchedule, optional
        Per-frame resonance centers. Defaults to a seeded walk long enough for
        the clip, with the slide coefficient at its 50 Hz limit.
    phase : float, optional
        Use this scattering phase for every frame instead of random phases.
    cycle_schedule : bool
        Reuse the schedule cyclically when it is shorter than the clip.
        A short schedule raises ``ScheduleRangeError`` otherwise.
    normalize : bool
        Scale the result down so that its peak is at most 1. The applied
        factor is stored in ``AudioClip.normalization`` and logged.

    Returns
    -------
    AudioClip
    """
    spec = calibrate() if spec is None else spec
    cfg = StftConfig() if stft_config is None else stft_config
    check_nonnegative("coupling", coupling)
    sr = audio.sample_rate_hz
    if band_limit is not None and band_limit[1] >= sr / 2.0:
        raise ParameterDomainError(
            f"perturbation band up to {band_limit[1]} Hz exceeds Nyquist for {sr} Hz audio")

    n = len(audio.samples)
    n_frames = cfg.n_frames(n)
    if schedule is None:
        schedule = default_schedule(seed, n_frames, cfg.hop / sr, spec)
    if len(schedule) < n_frames:
        if not cycle_schedule:
            raise ScheduleRangeError(
                f"schedule covers {len(schedule)} frames but the clip needs {n_frames}")
        reps = -(-n_frames // len(schedule))
        schedule = replace(schedule,
                           u_values=np.tile(schedule.u_values, reps)[:n_frames],
                           omega0_values=np.tile(schedule.omega0_values, reps)[:n_frames])

    freqs, spec_x = stft(audio.samples, sr, cfg)
    if phase is None:
        phases = frame_phases(seed, spec_x.shape[1])
    else:
        phases = np.full(spec_x.shape[1], float(phase))
    h = transfer_matrix(freqs, schedule, spec, coupling, phases, band_limit)
    y = istft(spec_x * h, sr, cfg, n)

    factor = 1.0
    if normalize:
        peak = float(np.max(np.abs(y))) if len(y) else 0.0
        if peak > 1.0:
            factor = 1.0 / peak
            y = y * factor
            log.info("peak-normalized anonymized audio by %.6g (peak was %.6g)", factor, peak)
    return AudioClip(y, sr, normalization=factor)


def default_schedule(seed, n_frames, frame_hop_s, spec, band_hz=50.0, step_mm=None, slide=None):
    """Slide walk matched to the STFT hop.

    ``slide`` defaults to the slide coefficient at its ``band_hz`` limit.

    ``step_mm`` defaults to the randomizer's 0.2 mm per 16 ms, rescaled by
    ``sqrt(frame_hop_s / 16 ms)`` so the walk diffuses at the same rate in
    real time whatever the hop.
    """
    from .randomizer import DEFAULT_FRAME_HOP_S, DEFAULT_STEP_MM, max_slide_coefficient

    if step_mm is None:
        step_mm = DEFAULT_STEP_MM * math.sqrt(frame_hop_s / DEFAULT_FRAME_HOP_S)
    if slide is None:
        base = SlideParams(l0=spec.l0)
        slide = SlideParams(l0=spec.l0,
                            slide_coeff=max_slide_coefficient(base, band_hz, spec.c_eff))
    return make_schedule(seed, n_frames, frame_hop_s, step_mm, slide, spec.c_eff)


class MetamaterialAnonymizer(BaseEstimator, TransformerMixin):
    """scikit-learn transformer wrapping :func:`anonymize`.

    ``transform`` takes a sequence of 1-D sample arrays (or
    :class:`AudioClip` objects) and returns the anonymized sample arrays.
    Clip ``i`` uses seed ``seed + i`` for its schedule and phases.
    """

    def __init__(self, coupling=DEFAULT_COUPLING, peak_gain=73.0, center_hz=500.0,
                 half_width_hz=200.0, l0=779.0, band_hz=50.0, step_mm=None, frame_len=1024,
                 hop=64, sample_rate_hz=16000, seed=0, normalize=True):
        self.coupling = coupling
        self.peak_gain = peak_gain
        self.center_hz = center_hz
        self.half_width_hz = half_width_hz
        self.l0 = l0
        self.band_hz = band_hz
        self.step_mm = step_mm
        self.frame_len = frame_len
        self.hop = hop
        self.sample_rate_hz = sample_rate_hz
        self.seed = seed
        self.normalize = normalize

    def fit(self, X=None, y=None):
        self.spec_ = calibrate(self.peak_gain, self.center_hz, self.half_width_hz, self.l0)
        self.stft_config_ = StftConfig(self.frame_len, self.hop)
        self.normalization_ = []
        return self

    def transform(self, X):
        if not hasattr(self, "spec_"):
            self.fit()
        out = []
        self.normalization_ = []
        for i, item in enumerate(X):
            clip = item if isinstance(item, AudioClip) else AudioClip(item, self.sample_rate_hz)
            n_frames = self.stft_config_.n_frames(len(clip.samples))
            sched = default_schedule(self.seed + i, n_frames, self.hop / clip.sample_rate_hz,
                                     self.spec_, self.band_hz, self.step_mm)
            res = anonymize(clip, sched, self.spec_, self.coupling, self.stft_config_,
                            seed=self.seed + i, normalize=self.normalize)
            self.normalization_.append(res.normalization)
            out.append(res.samples)
        return out
