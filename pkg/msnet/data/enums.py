from enum import IntEnum
from typing import Optional


class ClassLabel(IntEnum):
    """The three diagnoses; the integer value is the class index."""

    MELANOMA = 0
    SEBORRHEIC_KERATOSIS = 1
    NEVUS = 2

    @property
    def slug(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, text: str) -> Optional["ClassLabel"]:
        """Case-insensitive lookup by slug; None when unknown."""
        key = text.strip().upper().replace(" ", "_")
        return cls.__members__.get(key)
