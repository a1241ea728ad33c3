from .train_log_serializer import TrainLogSerializer

__all__ = [
    "TrainLogSerializer",
]
