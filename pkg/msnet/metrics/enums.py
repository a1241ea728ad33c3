from enum import Enum

from msnet.data.enums import ClassLabel


class Task(str, Enum):
    """The two one-vs-rest binary tasks."""

    MELANOMA = "melanoma"
    SEBORRHEIC_KERATOSIS = "seborrheic_keratosis"

    @property
    def positive_label(self) -> ClassLabel:
        return ClassLabel[self.name]
