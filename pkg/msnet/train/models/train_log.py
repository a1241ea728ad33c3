from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from common.exceptions.custom_exceptions import CustomException
from msnet.model.enums import FreezeStage
from msnet.train.exceptions import TrainExceptionEnum


@dataclass(frozen=True)
class StageConfig:
    stage: FreezeStage
    learning_rate: float
    updates: int
    batch_size: int = 32
    augment: bool = True

    def __post_init__(self):
        object.__setattr__(self, "stage", FreezeStage(self.stage))
        if not self.learning_rate > 0:
            _invalid(f"learning rate must be positive, got {self.learning_rate}")
        if self.updates < 0:
            _invalid(f"updates must be non-negative, got {self.updates}")
        if self.batch_size < 3:
            _invalid(f"batch size must be at least 3, got {self.batch_size}")


@dataclass(frozen=True)
class TrainRecord:
    update: int
    stage: FreezeStage
    loss: float


@dataclass
class TrainLog:
    """One record per weight update, in update order."""

    records: list[TrainRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[TrainRecord]:
        return iter(self.records)

    def append(self, record: TrainRecord) -> None:
        self.records.append(record)

    def extend(self, other: "TrainLog") -> None:
        self.records.extend(other.records)

    @property
    def losses(self) -> np.ndarray:
        return np.array([record.loss for record in self.records])

    @property
    def final_loss(self) -> float | None:
        return self.records[-1].loss if self.records else None

    def head_mean(self, count: int) -> float:
        return float(self.losses[:count].mean())

    def tail_mean(self, count: int) -> float:
        return float(self.losses[-count:].mean())


def _invalid(reason: str):
    raise CustomException(TrainExceptionEnum.INVALID_STAGE, reason=reason)
