from .prepared_set import PreparedSet
from .train_log import StageConfig, TrainLog, TrainRecord

__all__ = [
    "PreparedSet",
    "StageConfig",
    "TrainLog",
    "TrainRecord",
]
