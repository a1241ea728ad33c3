from .infer_service import PROB_FLOOR, InferService

__all__ = [
    "PROB_FLOOR",
    "InferService",
]
