from .manifest import BatchPlan, Manifest, ManifestEntry
from .synth import SynthLesion, SynthSummary

__all__ = [
    "BatchPlan",
    "Manifest",
    "ManifestEntry",
    "SynthLesion",
    "SynthSummary",
]
