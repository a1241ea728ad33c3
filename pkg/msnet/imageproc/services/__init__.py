from .transform_service import TransformService

__all__ = [
    "TransformService",
]
