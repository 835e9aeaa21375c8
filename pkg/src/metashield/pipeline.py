"""End-to-end run: synthetic corpus -> metamaterial channel -> metrics."""

import time

import numpy as np

from . import config as cfgmod
from .corpus import make_corpus
from .evaluation import EvalReport, band_distortion, rtc, trial_similarities
from .perturb import AudioClip, anonymize, default_schedule

U64 = 2 ** 64


def trial_seed(seed, index):
    return (int(seed) + int(index)) % U64


def anonymize_clip(clip, cfg, seed, coupling=None):
    """Anonymize one clip under the run configuration ``cfg``."""
    spec = cfgmod.build_spec(cfg)
    stft = cfgmod.build_stft(cfg)
    slide = cfgmod.build_slide(cfg, spec)
    n_frames = stft.n_frames(len(clip.samples))
    sched = default_schedule(seed, n_frames, stft.hop / clip.sample_rate_hz, spec,
                             step_mm=cfg["slide"]["step_mm"], slide=slide)
    k = cfg["field"]["coupling"] if coupling is None else coupling
    return anonymize(clip, sched, spec, k, stft, seed=seed)


def white_noise_probe(seed, seconds=8.0, sample_rate_hz=16000):
    rng = np.random.default_rng([int(seed) % U64, 0x0B])
    return AudioClip(0.05 * rng.standard_normal(int(seconds * sample_rate_hz)), sample_rate_hz)


def corpus_trials(cfg, coupling=None):
    """Anonymize the synthetic corpus; returns ``(pairs, processing_seconds)``.

    Trial ``i`` uses seed ``cfg['seed'] + i`` for its slide walk and phases.
    """
    e = cfg["eval"]
    sr = int(cfg["audio"]["sample_rate_hz"])
    corpus = make_corpus(int(e["n_speakers"]), int(e["utterances_per_speaker"]), sr,
                         seed=int(cfg["seed"]) % (2 ** 32))
    trials = int(e["trials"])
    if len(corpus) < trials:
        raise cfgmod.ConfigError(
            f"corpus has {len(corpus)} utterances but eval.trials is {trials}")
    pairs = []
    elapsed = 0.0
    for i, (_, _, samples) in enumerate(corpus[:trials]):
        clip = AudioClip(samples, sr)
        t0 = time.perf_counter()
        anon = anonymize_clip(clip, cfg, trial_seed(cfg["seed"], i), coupling)
        elapsed += time.perf_counter() - t0
        pairs.append((clip, anon))
    return pairs, elapsed


def evaluate_pairs(pairs, threshold, probe=None, probe_anon=None):
    sims = trial_similarities(pairs)
    report = EvalReport(sims, threshold)
    if probe is not None:
        report.oob_distortion_db = band_distortion(probe, probe_anon)
    return report


def run_pipeline(cfg, coupling=None):
    """Full corpus evaluation. Returns ``(report, pairs, timing)``.

    ``timing`` holds wall-clock figures (including the software RTC) and is
    the only non-deterministic output.
    """
    pairs, elapsed = corpus_trials(cfg, coupling)
    probe = white_noise_probe(cfg["seed"], sample_rate_hz=int(cfg["audio"]["sample_rate_hz"]))
    probe_anon = anonymize_clip(probe, cfg, trial_seed(cfg["seed"], 10_000), coupling)
    report = evaluate_pairs(pairs, float(cfg["eval"]["threshold"]), probe, probe_anon)
    audio_s = sum(p[0].duration_s for p in pairs)
    timing = {
        "audio_seconds": audio_s,
        "processing_seconds": elapsed,
        "rtc_software": rtc(audio_s, max(elapsed, 1e-9)),
    }
    return report, pairs, timing
