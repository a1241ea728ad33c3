from enum import Enum

import numpy as np


class Dihedral(Enum):
    """
    The 8 symmetries of a square, each stored as ``flip ∘ r^k``.

    ``r`` is a 90° clockwise rotation and ``flip`` a horizontal mirror; the
    rotation is applied first. Member order is the canonical enumeration
    used by test-time augmentation.
    """

    ID = (False, 0)
    R90 = (False, 1)
    R180 = (False, 2)
    R270 = (False, 3)
    FLIP = (True, 0)
    FLIP_R90 = (True, 1)
    FLIP_R180 = (True, 2)
    FLIP_R270 = (True, 3)

    def __init__(self, flip: bool, quarter_turns: int):
        self.flip = flip
        self.quarter_turns = quarter_turns

    @classmethod
    def elements(cls) -> list["Dihedral"]:
        return list(cls)

    @classmethod
    def of(cls, flip: bool, quarter_turns: int) -> "Dihedral":
        return cls((bool(flip), quarter_turns % 4))

    @property
    def swaps_axes(self) -> bool:
        return self.quarter_turns % 2 == 1

    def compose(self, other: "Dihedral") -> "Dihedral":
        """``self ∘ other``: apply ``other`` first."""
        # r^k ∘ flip == flip ∘ r^-k
        if other.flip:
            turns = other.quarter_turns - self.quarter_turns
        else:
            turns = other.quarter_turns + self.quarter_turns
        return Dihedral.of(self.flip != other.flip, turns)

    def inverse(self) -> "Dihedral":
        if self.flip:
            return self
        return Dihedral.of(False, -self.quarter_turns)

    def transform(self, array: np.ndarray, axes: tuple[int, int] = (-2, -1)) -> np.ndarray:
        """Permute the (row, column) axes of ``array``; no interpolation."""
        row_axis, col_axis = axes
        out = np.rot90(array, k=-self.quarter_turns, axes=(row_axis, col_axis))
        if self.flip:
            out = np.flip(out, axis=col_axis)
        return np.ascontiguousarray(out)
