from .train_service import TrainService

__all__ = [
    "TrainService",
]
