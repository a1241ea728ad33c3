from pathlib import Path

import numpy as np
import pytest

from common.exceptions.custom_exceptions import CustomException
from msnet.data.enums import ClassLabel
from msnet.data.models import ManifestEntry
from msnet.data.serializers import ManifestSerializer
from msnet.infer.models import PredictionRecord
from msnet.metrics.enums import Task
from msnet.metrics.exceptions import MetricsExceptionEnum
from msnet.metrics.models import CSV_HEADER, EvalReport, TaskMetrics
from msnet.metrics.services import MetricsService


def pair_count_auc(scores, labels):
    """O(n^2) reference: wins plus half the ties over all positive/negative pairs."""
    positives = [s for s, y in zip(scores, labels) if y == 1]
    negatives = [s for s, y in zip(scores, labels) if y == 0]
    credit = 0.0
    for p in positives:
        for n in negatives:
            credit += 1.0 if p > n else 0.5 if p == n else 0.0
    return credit / (len(positives) * len(negatives))


def random_instance(rng):
    n = int(rng.integers(2, 51))
    scores = rng.integers(0, 8, size=n) / 8
    labels = rng.integers(0, 2, size=n)
    labels[:2] = (1, 0)
    return scores, labels


def manifest_of(labels):
    return [
        ManifestEntry(image_id=f"img{i:04d}", path=Path(f"img{i:04d}.ppm"), label=ClassLabel(label))
        for i, label in enumerate(labels)
    ]


class TestRocAuc:
    def test_perfect_separation(self):
        assert MetricsService.roc_auc([0.9, 0.8, 0.3, 0.2], [1, 1, 0, 0]) == 1.0

    def test_pair_count(self):
        assert MetricsService.roc_auc([0.9, 0.8, 0.3, 0.2], [1, 0, 1, 0]) == 0.75

    def test_all_tied(self):
        assert MetricsService.roc_auc([0.4] * 6, [1, 0, 1, 0, 0, 1]) == 0.5

    def test_matches_pair_counting(self, rng):
        for _ in range(200):
            scores, labels = random_instance(rng)
            assert MetricsService.roc_auc(scores, labels) == pair_count_auc(scores, labels)

    def test_monotone_invariance(self, rng):
        for _ in range(50):
            scores, labels = random_instance(rng)
            base = MetricsService.roc_auc(scores, labels)
            for transform in (lambda s: 3 * s - 7, np.exp, lambda s: s**3 + s):
                assert MetricsService.roc_auc(transform(scores), labels) == base

    def test_complement(self, rng):
        for _ in range(50):
            scores, labels = random_instance(rng)
            total = MetricsService.roc_auc(scores, labels) + MetricsService.roc_auc(scores, 1 - labels)
            assert abs(total - 1.0) <= 1e-12

    @pytest.mark.parametrize("labels", [[1, 1, 1], [0, 0, 0]])
    def test_single_class(self, labels):
        with pytest.raises(CustomException) as e:
            MetricsService.roc_auc([0.1, 0.2, 0.3], labels)
        assert e.value.error_code is MetricsExceptionEnum.AUC_UNDEFINED
        assert "AUC undefined" in e.value.message

    def test_non_binary_labels(self):
        with pytest.raises(CustomException) as e:
            MetricsService.roc_auc([0.1, 0.2], [0, 2])
        assert e.value.error_code is MetricsExceptionEnum.BAD_LABELS


class TestAccuracy:
    def test_examples(self):
        assert MetricsService.accuracy([0.6, 0.4], [1, 0]) == 1.0
        assert MetricsService.accuracy([0.6, 0.4], [0, 1]) == 0.0

    def test_threshold_is_positive(self):
        assert MetricsService.accuracy([0.5], [1]) == 1.0
        assert MetricsService.accuracy([0.5], [0]) == 0.0

    def test_custom_threshold(self):
        assert MetricsService.accuracy([0.3, 0.7], [1, 1], threshold=0.25) == 1.0

    def test_empty(self):
        with pytest.raises(CustomException) as e:
            MetricsService.accuracy([], [])
        assert e.value.error_code is MetricsExceptionEnum.EMPTY_INPUT

    def test_length_mismatch(self):
        with pytest.raises(CustomException) as e:
            MetricsService.accuracy([0.1, 0.2], [1])
        assert e.value.error_code is MetricsExceptionEnum.LENGTH_MISMATCH


class TestEvaluate:
    def test_perfect_predictions(self, toy_dataset):
        manifest = ManifestSerializer.load(toy_dataset.test_manifest)
        predictions = [
            PredictionRecord.checked(entry.image_id, np.eye(3)[entry.label]) for entry in manifest
        ]
        report = MetricsService.evaluate(predictions, manifest)

        assert report.melanoma.auc == report.seborrheic_keratosis.auc == 1.0
        assert report.melanoma.accuracy == report.seborrheic_keratosis.accuracy == 1.0
        assert report.average_auc == 1.0

    def test_task_labels(self):
        manifest = manifest_of([0, 1, 2, 1])
        assert list(MetricsService.task_labels(manifest, Task.MELANOMA).values()) == [1, 0, 0, 0]
        assert list(MetricsService.task_labels(manifest, Task.SEBORRHEIC_KERATOSIS).values()) == [0, 1, 0, 1]

    def test_uses_task_scores(self):
        manifest = manifest_of([0, 1, 2])
        predictions = [
            PredictionRecord.checked("img0000", (0.7, 0.2, 0.1)),
            PredictionRecord.checked("img0001", (0.3, 0.6, 0.1)),
            PredictionRecord.checked("img0002", (0.4, 0.1, 0.5)),
        ]
        report = MetricsService.evaluate(predictions, manifest)
        assert report.melanoma == TaskMetrics(Task.MELANOMA, accuracy=1.0, auc=1.0)
        assert report.seborrheic_keratosis == TaskMetrics(Task.SEBORRHEIC_KERATOSIS, accuracy=1.0, auc=1.0)

    def test_random_scores_near_chance(self, rng):
        manifest = manifest_of(np.repeat([0, 1, 2], 100))
        predictions = [
            PredictionRecord.checked(entry.image_id, rng.dirichlet(np.ones(3))) for entry in manifest
        ]
        report = MetricsService.evaluate(predictions, manifest)
        for metrics in report.tasks:
            assert 0.40 <= metrics.auc <= 0.60

    def test_missing_ids(self):
        manifest = manifest_of([0, 1, 2])
        predictions = [PredictionRecord.checked("img0000", (0.7, 0.2, 0.1))]
        with pytest.raises(CustomException) as e:
            MetricsService.evaluate(predictions, manifest)
        assert e.value.error_code is MetricsExceptionEnum.MISSING_IDS
        assert "img0001, img0002" in e.value.message

    def test_unknown_ids(self):
        manifest = manifest_of([0, 1])
        predictions = [
            PredictionRecord.checked(image_id, (0.7, 0.2, 0.1))
            for image_id in ("img0000", "img0001", "ghost")
        ]
        with pytest.raises(CustomException) as e:
            MetricsService.evaluate(predictions, manifest)
        assert e.value.error_code is MetricsExceptionEnum.UNKNOWN_IDS
        assert "ghost" in e.value.message


class TestEvalReport:
    @pytest.fixture
    def published(self):
        return EvalReport(
            melanoma=TaskMetrics(Task.MELANOMA, accuracy=0.893, auc=0.896),
            seborrheic_keratosis=TaskMetrics(Task.SEBORRHEIC_KERATOSIS, accuracy=0.913, auc=0.990),
        )

    def test_averages(self, published):
        assert published.average_accuracy == pytest.approx(0.903)
        assert published.average_auc == pytest.approx(0.943)

    def test_table(self, published):
        lines = published.format_table().splitlines()
        assert [line.split() for line in lines] == [
            ["task", "accuracy", "auc"],
            ["melanoma", "0.893", "0.896"],
            ["seborrheic_keratosis", "0.913", "0.990"],
            ["average", "0.903", "0.943"],
        ]
        assert len({len(line) for line in lines}) == 1

    def test_csv_row(self, published):
        assert CSV_HEADER.split(",")[0] == "melanoma_accuracy"
        assert published.csv_row() == "0.893000,0.896000,0.913000,0.990000,0.903000,0.943000"

    def test_out_of_range(self):
        with pytest.raises(CustomException) as e:
            TaskMetrics(Task.MELANOMA, accuracy=1.2, auc=0.5)
        assert e.value.error_code is MetricsExceptionEnum.OUT_OF_RANGE
