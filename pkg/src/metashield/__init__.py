"""Desk-scale design and simulation of a passive acoustic-metamaterial
voiceprint anonymizer."""

__version__ = "0.1.0"

from .evaluation import EmbeddingConfig, EvalReport, MFCCEmbedder, embed, mmr, similarity
from .field import InterferenceMap, Layout, directivity, gain_map, interference_gain
from .geometry import Scene, mic_position, source_position
from .layout import LayoutDesigner, LayoutResult, SearchConfig, aggregate_objective, design_layout
from .perturb import AudioClip, MetamaterialAnonymizer, StftConfig, anonymize, frame_transfer
from .randomizer import (
    PerturbationSchedule,
    SlideParams,
    make_schedule,
    max_slide_coefficient,
    shifted_resonance,
)
from .resonator import GainCurve, ResonatorSpec, calibrate, gain_curve, lorentzian_gain, resonance_frequency

__all__ = [
    "AudioClip", "EmbeddingConfig", "EvalReport", "GainCurve", "InterferenceMap", "Layout",
    "LayoutDesigner", "LayoutResult", "MFCCEmbedder", "MetamaterialAnonymizer",
    "PerturbationSchedule", "ResonatorSpec", "Scene", "SearchConfig", "SlideParams",
    "StftConfig", "aggregate_objective", "anonymize", "calibrate", "design_layout",
    "directivity", "embed", "frame_transfer", "gain_curve", "gain_map", "interference_gain",
    "lorentzian_gain", "make_schedule", "max_slide_coefficient", "mic_position", "mmr",
    "resonance_frequency", "shifted_resonance", "similarity", "source_position",
]
