import itertools

import numpy as np
import pytest

from common.exceptions.custom_exceptions import CustomException
from msnet.data.enums import ClassLabel
from msnet.data.services import SynthService
from msnet.imageproc.enums import Dihedral
from msnet.imageproc.models import ImageBuffer
from msnet.infer.exceptions import InferExceptionEnum
from msnet.infer.models import PredictionRecord
from msnet.infer.serializers import PredictionSerializer
from msnet.infer.services import PROB_FLOOR, InferService
from msnet.model.services import ModelService


@pytest.fixture
def model(small_config):
    params = ModelService.from_run_config(small_config, np.random.default_rng(5))
    bias_rng = np.random.default_rng(6)
    for param in params:
        if param.name.endswith("bias"):
            param.value.data[:] = bias_rng.normal(scale=0.1, size=param.shape)
    return params


def random_image(rng, side=40):
    return ImageBuffer(rng.integers(0, 256, size=(side, side, 3), dtype=np.uint8))


def random_records(rng, ids):
    probs = rng.dirichlet(np.ones(3), size=len(ids))
    # keep every probability well above the clamp floor
    probs = (probs + 0.01) / (probs + 0.01).sum(axis=1, keepdims=True)
    return [PredictionRecord.checked(image_id, row) for image_id, row in zip(ids, probs)]


class TestPredictionRecord:
    def test_task_scores(self):
        record = PredictionRecord.checked("a", (0.2, 0.3, 0.5))
        assert (record.melanoma_score, record.sk_score) == (0.2, 0.3)
        assert record.nevus == 0.5

    @pytest.mark.parametrize("probs", [(0.5, 0.5, 0.1), (1.2, -0.2, 0.0), (0.5, 0.5)])
    def test_invalid(self, probs):
        with pytest.raises(CustomException) as e:
            PredictionRecord.checked("a", probs)
        assert e.value.error_code is InferExceptionEnum.INVALID_PROBS


class TestBinaryTasks:
    def test_one_vs_rest(self):
        assert InferService.to_binary_tasks((0.2, 0.3, 0.5)) == (0.2, 0.3)
        assert InferService.to_binary_tasks(np.array([1.0, 0.0, 0.0])) == (1.0, 0.0)

    def test_scores_in_unit_interval(self, rng):
        for probs in rng.dirichlet(np.ones(3), size=50):
            assert all(0.0 <= score <= 1.0 for score in InferService.to_binary_tasks(probs))


class TestTtaPredict:
    def test_is_distribution(self, model, rng):
        probs = InferService.tta_predict(model, random_image(rng))
        assert probs.shape == (3,)
        assert abs(probs.sum() - 1.0) <= 1e-9

    def test_input_independent_model(self, model, rng):
        model["hidden.weight"].value.data[:] = 0.0
        image = random_image(rng)
        with_tta = InferService.tta_predict(model, image, tta=True)
        without = InferService.tta_predict(model, image, tta=False)
        np.testing.assert_allclose(with_tta, without, rtol=0, atol=1e-15)

    def test_orbit_invariance_on_synthetic_lesions(self, model, rng):
        labels = itertools.islice(itertools.cycle(ClassLabel), 20)
        for label in labels:
            image = SynthService.synth_generate(label, rng)
            base = InferService.tta_predict(model, image)
            for g in Dihedral:
                moved = InferService.tta_predict(model, image.transformed(g))
                np.testing.assert_allclose(moved, base, rtol=0, atol=1e-12)

    def test_no_tta_is_single_pass(self, model, rng):
        image = random_image(rng)
        coarse, fine = ModelService.preprocess(model, image)
        expected = ModelService.multiscale_forward(model, coarse, fine).data
        np.testing.assert_allclose(InferService.tta_predict(model, image, tta=False), expected, atol=1e-14)

    def test_averages_canonical_orbit(self, model, rng):
        image = random_image(rng)
        coarse, fine = ModelService.preprocess(model, image)
        outputs = [
            ModelService.multiscale_forward(model, g.transform(coarse), g.transform(fine)).data
            for g in Dihedral.elements()
        ]
        np.testing.assert_allclose(InferService.tta_predict(model, image), np.mean(outputs, axis=0), atol=1e-14)


class TestPredictManifest:
    def test_sorted_records(self, model, toy_manifest):
        records = InferService.predict_manifest(model, toy_manifest)
        assert len(records) == len(toy_manifest)
        assert [r.image_id for r in records] == sorted(entry.image_id for entry in toy_manifest)

    def test_forward_passes(self, model, toy_manifest):
        ModelService.reset_forward_count()
        InferService.predict_manifest(model, toy_manifest, tta=True)
        with_tta = ModelService.forward_count

        ModelService.reset_forward_count()
        InferService.predict_manifest(model, toy_manifest, tta=False)
        assert with_tta == 8 * ModelService.forward_count == 8 * len(toy_manifest)


class TestGeometricEnsemble:
    def test_pool_two_models(self):
        pooled = InferService.geometric_pool([[0.1, 0.5, 0.4], [0.4, 0.2, 0.4]])
        np.testing.assert_allclose(pooled, [0.2, np.sqrt(0.1), 0.4], rtol=1e-12)

    def test_pool_clamps_zero(self):
        pooled = InferService.geometric_pool([[0.0, 0.5, 0.5], [0.3, 0.3, 0.4]])
        assert pooled[0] == pytest.approx(np.sqrt(PROB_FLOOR * 0.3), rel=1e-12)
        assert pooled[0] > 0

    def test_idempotent(self, rng):
        records = random_records(rng, [f"img{i}" for i in range(20)])
        for k in (1, 2, 5):
            merged = InferService.ensemble_geometric([records] * k)
            for got, expected in zip(merged, records):
                assert got.image_id == expected.image_id
                np.testing.assert_allclose(got.probs, expected.probs, rtol=0, atol=1e-12)

    def test_order_invariant(self, rng):
        ids = [f"img{i}" for i in range(15)]
        sets = [random_records(rng, ids) for _ in range(3)]
        reference = InferService.ensemble_geometric(sets)
        for order in itertools.permutations(sets):
            # alignment is by id, not by position
            shuffled = [list(reversed(records)) for records in order]
            for got, expected in zip(InferService.ensemble_geometric(shuffled), reference):
                np.testing.assert_allclose(got.probs, expected.probs, rtol=0, atol=1e-12)

    def test_normalized(self, rng):
        ids = [f"img{i}" for i in range(30)]
        merged = InferService.ensemble_geometric([random_records(rng, ids) for _ in range(10)])
        for record in merged:
            assert abs(sum(record.probs) - 1.0) <= 1e-9
            assert record.melanoma_score == record.probs[0]

    def test_shared_ranking_preserved(self, rng):
        n = 40
        sets = [rng.uniform(0.01, 1.0, size=(n, 3)) for _ in range(4)]
        pooled = InferService.geometric_pool(sets)
        for a, b in itertools.permutations(range(n), 2):
            for c in range(3):
                if all(s[a, c] > s[b, c] for s in sets):
                    assert pooled[a, c] > pooled[b, c]

    def test_id_mismatch(self, rng):
        first = random_records(rng, ["a", "b", "c"])
        second = random_records(rng, ["a", "b", "d"])
        with pytest.raises(CustomException) as e:
            InferService.ensemble_geometric([first, second])
        assert e.value.error_code is InferExceptionEnum.ID_MISMATCH
        assert "lacks c" in e.value.message
        assert "adds d" in e.value.message

    def test_empty(self):
        with pytest.raises(CustomException) as e:
            InferService.ensemble_geometric([])
        assert e.value.error_code is InferExceptionEnum.NO_PREDICTIONS

    def test_duplicate_id(self, rng):
        records = random_records(rng, ["a", "a"])
        with pytest.raises(CustomException) as e:
            InferService.ensemble_geometric([records])
        assert e.value.error_code is InferExceptionEnum.DUPLICATE_ID


class TestPredictionSerializer:
    def test_round_trip(self, rng, tmp_path):
        records = random_records(rng, [f"img{i:03d}" for i in range(25)])
        path = tmp_path / "preds.csv"
        PredictionSerializer.write(records, path)

        loaded = PredictionSerializer.read(path)
        assert [r.image_id for r in loaded] == [r.image_id for r in records]
        for got, expected in zip(loaded, records):
            np.testing.assert_allclose(got.probs, expected.probs, rtol=0, atol=1e-9)

    def test_rows_sorted(self, tmp_path):
        records = [
            PredictionRecord.checked("b", (0.2, 0.3, 0.5)),
            PredictionRecord.checked("a", (0.6, 0.3, 0.1)),
            PredictionRecord.checked("B", (0.1, 0.1, 0.8)),
        ]
        path = tmp_path / "preds.csv"
        PredictionSerializer.write(records, path)

        lines = path.read_text().splitlines()
        assert lines[0] == "image_id,melanoma,seborrheic_keratosis,nevus,melanoma_score,sk_score"
        assert [line.split(",")[0] for line in lines[1:]] == ["B", "a", "b"]
        assert lines[3] == "b,0.2,0.3,0.5,0.2,0.3"

    def test_header_mismatch(self, tmp_path):
        path = tmp_path / "preds.csv"
        path.write_text("image_id,mel,sk,nevus\n")
        with pytest.raises(CustomException) as e:
            PredictionSerializer.read(path)
        assert e.value.error_code is InferExceptionEnum.BAD_HEADER
        assert "image_id,melanoma,seborrheic_keratosis,nevus,melanoma_score,sk_score" in e.value.message

    @pytest.mark.parametrize(
        "row",
        [
            "a,0.2,0.3,0.5,0.2",
            "a,0.2,0.3,x,0.2,0.3",
            "a,0.2,0.3,0.6,0.2,0.3",
            "a,0.2,0.3,0.5,0.3,0.3",
        ],
    )
    def test_bad_row(self, tmp_path, row):
        path = tmp_path / "preds.csv"
        path.write_text(
            "image_id,melanoma,seborrheic_keratosis,nevus,melanoma_score,sk_score\n"
            f"z,0.1,0.1,0.8,0.1,0.1\n{row}\n"
        )
        with pytest.raises(CustomException) as e:
            PredictionSerializer.read(path)
        assert e.value.error_code is InferExceptionEnum.BAD_ROW
        assert "line 3" in e.value.message
