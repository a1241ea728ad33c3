from dataclasses import dataclass
from typing import Sequence

import numpy as np

from msnet.imageproc.enums import Dihedral


@dataclass(frozen=True)
class PreparedSet:
    """
    Preprocessed model inputs of a manifest, kept in memory for training.

    ``views[i]`` holds the planar ``[3,S,S]`` arrays of entry ``i``, one per
    model input scale.
    """

    views: list[tuple[np.ndarray, ...]]
    labels: np.ndarray

    def __len__(self) -> int:
        return len(self.views)

    def batch(
        self, indices: Sequence[int], elements: Sequence[Dihedral] | None = None
    ) -> list[np.ndarray]:
        """Stack the given entries per view, each optionally transformed."""
        scales = len(self.views[indices[0]])
        stacked = []
        for scale in range(scales):
            arrays = []
            for position, index in enumerate(indices):
                view = self.views[index][scale]
                if elements is not None:
                    view = elements[position].transform(view, axes=(-2, -1))
                arrays.append(view)
            stacked.append(np.stack(arrays))
        return stacked

    def targets(self, indices: Sequence[int]) -> np.ndarray:
        return self.labels[list(indices)]
