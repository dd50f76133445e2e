from .manifest import (
    INTERVALS,
    FrameRecord,
    SequenceManifest,
    load_manifest,
    manifest_stats,
    save_manifest,
)
from .synthetic import SynthParams, synth_dataset, synth_sequence
from .transforms import augment, downscale
from .splits import SplitPlan, StratifiedGroupKFold, stratified_kfold

__all__ = [
    "INTERVALS",
    "FrameRecord",
    "SequenceManifest",
    "load_manifest",
    "save_manifest",
    "manifest_stats",
    "SynthParams",
    "synth_sequence",
    "synth_dataset",
    "augment",
    "downscale",
    "SplitPlan",
    "StratifiedGroupKFold",
    "stratified_kfold",
]
