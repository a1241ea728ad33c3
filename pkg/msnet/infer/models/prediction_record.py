import math
from dataclasses import dataclass
from typing import Sequence

from common.exceptions.custom_exceptions import CustomException
from msnet.data.enums import ClassLabel
from msnet.infer.exceptions import InferExceptionEnum

SUM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class PredictionRecord:
    """
    Three-class probabilities of one image, in ``ClassLabel`` order.

    The one-vs-rest task scores are the melanoma and seborrheic keratosis
    probabilities themselves.
    """

    image_id: str
    probs: tuple[float, float, float]

    def __post_init__(self):
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))

    @classmethod
    def checked(
        cls, image_id: str, probs: Sequence[float], tolerance: float = SUM_TOLERANCE
    ) -> "PredictionRecord":
        record = cls(image_id, tuple(probs))
        record.validate(tolerance)
        return record

    def validate(self, tolerance: float = SUM_TOLERANCE) -> None:
        if len(self.probs) != len(ClassLabel):
            self._invalid(f"expected {len(ClassLabel)} probabilities, got {len(self.probs)}")
        if not all(math.isfinite(p) and 0.0 <= p <= 1.0 for p in self.probs):
            self._invalid(f"probabilities outside [0, 1]: {self.probs}")
        total = math.fsum(self.probs)
        if abs(total - 1.0) > tolerance:
            self._invalid(f"probabilities sum to {total!r}")

    @property
    def melanoma(self) -> float:
        return self.probs[ClassLabel.MELANOMA]

    @property
    def seborrheic_keratosis(self) -> float:
        return self.probs[ClassLabel.SEBORRHEIC_KERATOSIS]

    @property
    def nevus(self) -> float:
        return self.probs[ClassLabel.NEVUS]

    @property
    def melanoma_score(self) -> float:
        return self.melanoma

    @property
    def sk_score(self) -> float:
        return self.seborrheic_keratosis

    def _invalid(self, reason: str):
        raise CustomException(InferExceptionEnum.INVALID_PROBS, image_id=self.image_id, reason=reason)


Predictions = list[PredictionRecord]
