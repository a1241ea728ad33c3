from enum import Enum


class ScaleMode(str, Enum):
    MULTI_SCALE = "multi_scale"
    SINGLE_SCALE = "single_scale"

    @property
    def code(self) -> int:
        """Byte stored in weight files."""
        return 0 if self is ScaleMode.MULTI_SCALE else 1

    @classmethod
    def from_code(cls, code: int) -> "ScaleMode | None":
        return {0: cls.MULTI_SCALE, 1: cls.SINGLE_SCALE}.get(code)


class FreezeStage(str, Enum):
    STAGE1 = "stage1"  # backbone frozen, head trainable
    STAGE2 = "stage2"  # last blocks and head trainable
