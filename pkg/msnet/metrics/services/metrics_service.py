from typing import Sequence

import numpy as np
from loguru import logger
from scipy.stats import rankdata

from common.exceptions.custom_exceptions import CustomException
from msnet.data.models import ManifestEntry
from msnet.infer.models import PredictionRecord
from msnet.metrics.enums import Task
from msnet.metrics.exceptions import MetricsExceptionEnum
from msnet.metrics.models import EvalReport, TaskMetrics

THRESHOLD = 0.5
# ids listed in missing/unknown id errors
MAX_LISTED_IDS = 10


class MetricsService:
    @classmethod
    def roc_auc(cls, scores: Sequence[float], labels: Sequence[int]) -> float:
        """
        Mann-Whitney AUC from average ranks; tied positive/negative pairs
        count one half.
        """
        scores, labels = cls._aligned(scores, labels, "AUC")
        positives = int(labels.sum())
        negatives = labels.size - positives
        if positives == 0 or negatives == 0:
            raise CustomException(
                MetricsExceptionEnum.AUC_UNDEFINED,
                reason=f"{positives} positive and {negatives} negative labels",
            )

        ranks = rankdata(scores, method="average")
        u = ranks[labels == 1].sum() - positives * (positives + 1) / 2
        return float(u / (positives * negatives))

    @classmethod
    def accuracy(cls, scores: Sequence[float], labels: Sequence[int], threshold: float = THRESHOLD) -> float:
        """Fraction of items where ``score >= threshold`` matches the label."""
        scores, labels = cls._aligned(scores, labels, "accuracy")
        predicted = (scores >= threshold).astype(np.int64)
        return float(np.mean(predicted == labels))

    @classmethod
    def task_labels(cls, manifest: Sequence[ManifestEntry], task: Task) -> dict[str, int]:
        return {entry.image_id: int(entry.label == task.positive_label) for entry in manifest}

    @classmethod
    def evaluate(
        cls, predictions: Sequence[PredictionRecord], manifest: Sequence[ManifestEntry]
    ) -> EvalReport:
        by_id = {record.image_id: record for record in predictions}
        manifest_ids = {entry.image_id for entry in manifest}
        missing = sorted(manifest_ids - set(by_id))
        unknown = sorted(set(by_id) - manifest_ids)
        if missing:
            raise CustomException(
                MetricsExceptionEnum.MISSING_IDS, count=len(missing), ids=cls._listing(missing)
            )
        if unknown:
            raise CustomException(
                MetricsExceptionEnum.UNKNOWN_IDS, count=len(unknown), ids=cls._listing(unknown)
            )

        image_ids = sorted(manifest_ids)
        results = {}
        for task in Task:
            truth = cls.task_labels(manifest, task)
            scores = [cls._task_score(by_id[image_id], task) for image_id in image_ids]
            labels = [truth[image_id] for image_id in image_ids]
            results[task] = TaskMetrics(
                task=task, accuracy=cls.accuracy(scores, labels), auc=cls.roc_auc(scores, labels)
            )

        report = EvalReport(
            melanoma=results[Task.MELANOMA],
            seborrheic_keratosis=results[Task.SEBORRHEIC_KERATOSIS],
        )
        logger.debug(f"evaluated {len(image_ids)} predictions: average auc {report.average_auc:.4f}")
        return report

    @staticmethod
    def _task_score(record: PredictionRecord, task: Task) -> float:
        return record.melanoma_score if task is Task.MELANOMA else record.sk_score

    @staticmethod
    def _aligned(scores, labels, metric: str) -> tuple[np.ndarray, np.ndarray]:
        scores = np.asarray(scores, dtype=np.float64).ravel()
        labels = np.asarray(labels).ravel()
        if scores.size != labels.size:
            raise CustomException(
                MetricsExceptionEnum.LENGTH_MISMATCH, scores=scores.size, labels=labels.size
            )
        if scores.size == 0:
            raise CustomException(MetricsExceptionEnum.EMPTY_INPUT, metric=metric)
        bad = sorted({v for v in labels.tolist() if v not in (0, 1)})
        if bad:
            raise CustomException(MetricsExceptionEnum.BAD_LABELS, values=bad)
        return scores, labels.astype(np.int64)

    @staticmethod
    def _listing(ids: list[str]) -> str:
        shown = ", ".join(ids[:MAX_LISTED_IDS])
        if len(ids) > MAX_LISTED_IDS:
            shown += f", ... ({len(ids) - MAX_LISTED_IDS} more)"
        return shown
