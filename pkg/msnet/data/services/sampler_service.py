from typing import Sequence

import numpy as np
from loguru import logger

from common.exceptions.custom_exceptions import CustomException
from msnet.data.enums import ClassLabel
from msnet.data.exceptions import DataExceptionEnum
from msnet.data.models import BatchPlan, Manifest, ManifestEntry


class SamplerService:
    @classmethod
    def class_indices(cls, manifest: Sequence[ManifestEntry]) -> dict[ClassLabel, np.ndarray]:
        """Manifest positions per class, in manifest order."""
        labels = np.array([entry.label for entry in manifest], dtype=np.int64)
        return {label: np.flatnonzero(labels == label) for label in ClassLabel}

    @classmethod
    def balanced_batch(
        cls, rng: np.random.Generator, manifest: Sequence[ManifestEntry], batch_size: int
    ) -> BatchPlan:
        """
        Oversampled class-balanced batch.

        Every class gets ``batch_size // 3`` slots; the remaining slots go to
        distinct classes chosen uniformly at random. Within a class indices
        are drawn uniformly with replacement, then the batch is shuffled.
        """
        if batch_size < 3:
            raise CustomException(DataExceptionEnum.BAD_BATCH_SIZE, batch_size=batch_size)
        pools = cls.class_indices(manifest)
        empty = [label.slug for label, pool in pools.items() if pool.size == 0]
        if empty:
            raise CustomException(DataExceptionEnum.EMPTY_CLASS, classes=", ".join(empty))

        counts = np.full(len(ClassLabel), batch_size // len(ClassLabel), dtype=np.int64)
        remainder = batch_size % len(ClassLabel)
        if remainder:
            counts[rng.choice(len(ClassLabel), size=remainder, replace=False)] += 1

        picks = [rng.choice(pools[label], size=counts[label], replace=True) for label in ClassLabel]
        indices = rng.permutation(np.concatenate(picks))

        logger.trace(f"balanced batch counts={counts.tolist()}")
        return BatchPlan(
            indices=tuple(int(i) for i in indices),
            counts=tuple(int(c) for c in counts),
        )

    @classmethod
    def kfold_split(
        cls, manifest: Sequence[ManifestEntry], k: int, fold_index: int, rng: np.random.Generator
    ) -> tuple[Manifest, Manifest]:
        """
        Stratified k-fold split; returns (train, holdout) in manifest order.

        Each class is shuffled and dealt round-robin onto the folds; the
        dealing position carries over from one class to the next so fold
        sizes stay within one item of each other.
        """
        if k < 2 or not 0 <= fold_index < k or k > len(manifest):
            raise CustomException(
                DataExceptionEnum.BAD_FOLD, fold_index=fold_index, k=k, size=len(manifest)
            )

        folds = cls.fold_assignments(manifest, k, rng)
        train = [entry for entry, fold in zip(manifest, folds) if fold != fold_index]
        holdout = [entry for entry, fold in zip(manifest, folds) if fold == fold_index]
        logger.debug(f"fold {fold_index}/{k}: {len(train)} train, {len(holdout)} holdout")
        return train, holdout

    @classmethod
    def fold_assignments(
        cls, manifest: Sequence[ManifestEntry], k: int, rng: np.random.Generator
    ) -> np.ndarray:
        folds = np.empty(len(manifest), dtype=np.int64)
        dealt = 0
        for pool in cls.class_indices(manifest).values():
            shuffled = rng.permutation(pool)
            folds[shuffled] = (dealt + np.arange(shuffled.size)) % k
            dealt += shuffled.size
        return folds
