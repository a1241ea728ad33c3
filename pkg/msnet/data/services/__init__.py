from .sampler_service import SamplerService
from .synth_service import SynthService

__all__ = ["SamplerService", "SynthService"]
