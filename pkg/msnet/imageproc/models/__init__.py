from .image import ImageBuffer, NormalizedImage

__all__ = [
    "ImageBuffer",
    "NormalizedImage",
]
