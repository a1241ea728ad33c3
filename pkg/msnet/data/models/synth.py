from dataclasses import dataclass
from pathlib import Path

import numpy as np

from msnet.data.enums import ClassLabel
from msnet.imageproc.models import ImageBuffer


@dataclass(frozen=True)
class SynthLesion:
    """A rendered image together with its lesion mask ``[H, W]`` bool."""

    label: ClassLabel
    image: ImageBuffer
    mask: np.ndarray


@dataclass(frozen=True)
class SynthSummary:
    out_dir: Path
    train_manifest: Path
    test_manifest: Path
    train_count: int
    test_count: int

    @property
    def file_count(self) -> int:
        return self.train_count + self.test_count
