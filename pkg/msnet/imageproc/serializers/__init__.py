from .ppm_serializer import PpmSerializer

__all__ = [
    "PpmSerializer",
]
