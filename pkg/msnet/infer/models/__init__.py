from .prediction_record import SUM_TOLERANCE, PredictionRecord, Predictions

__all__ = [
    "SUM_TOLERANCE",
    "PredictionRecord",
    "Predictions",
]
