from .prediction_serializer import PredictionSerializer

__all__ = [
    "PredictionSerializer",
]
