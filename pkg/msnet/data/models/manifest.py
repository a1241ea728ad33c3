from dataclasses import dataclass
from pathlib import Path

from msnet.data.enums import ClassLabel


@dataclass(frozen=True)
class ManifestEntry:
    image_id: str
    path: Path
    label: ClassLabel


@dataclass(frozen=True)
class BatchPlan:
    """
    One mini-batch: manifest indices in draw order plus per-class counts,
    indexed by ``ClassLabel`` value.
    """

    indices: tuple[int, ...]
    counts: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.indices)

    def count(self, label: ClassLabel) -> int:
        return self.counts[label]


Manifest = list[ManifestEntry]
