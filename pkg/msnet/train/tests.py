from dataclasses import replace

import numpy as np
import pytest

from common.exceptions.custom_exceptions import CustomException
from msnet.imageproc.enums import Dihedral
from msnet.model.enums import FreezeStage
from msnet.model.models import HEAD_NAMES, block_names
from msnet.model.services import ModelService
from msnet.train.exceptions import TrainExceptionEnum
from msnet.train.models import StageConfig, TrainLog, TrainRecord
from msnet.train.serializers import TrainLogSerializer
from msnet.train.services import TrainService


def fresh_model(config):
    return ModelService.from_run_config(config, np.random.default_rng(config.seed))


def changed(before, params):
    return {name for name, value in before.items() if not np.array_equal(value, params[name].value.data)}


class TestStageConfig:
    def test_valid(self):
        config = StageConfig(FreezeStage.STAGE1, 0.01, 10)
        assert config.batch_size == 32
        assert config.augment

    def test_stage_from_string(self):
        assert StageConfig("stage2", 0.001, 1).stage is FreezeStage.STAGE2

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"learning_rate": 0.0},
            {"learning_rate": -1.0},
            {"updates": -1},
            {"batch_size": 2},
        ],
    )
    def test_invalid(self, kwargs):
        base = {"stage": FreezeStage.STAGE1, "learning_rate": 0.01, "updates": 1}
        with pytest.raises(CustomException) as e:
            StageConfig(**{**base, **kwargs})
        assert e.value.error_code is TrainExceptionEnum.INVALID_STAGE

    def test_run_config_schedule(self, small_config):
        stage1, stage2 = small_config.stage_configs()
        assert (stage1.stage, stage1.learning_rate, stage1.updates) == (FreezeStage.STAGE1, 0.01, 3)
        assert (stage2.stage, stage2.learning_rate, stage2.updates) == (FreezeStage.STAGE2, 0.001, 3)
        assert stage1.batch_size == stage2.batch_size == 6


class TestPreparedSet:
    def test_views_and_labels(self, small_config, toy_manifest):
        params = fresh_model(small_config)
        prepared = TrainService.prepare(params, toy_manifest)

        assert len(prepared) == len(toy_manifest)
        assert [view.shape for view in prepared.views[0]] == [(3, 16, 16), (3, 16, 16)]
        assert prepared.labels.tolist() == [int(entry.label) for entry in toy_manifest]

    def test_batch_applies_elements(self, small_config, toy_manifest):
        prepared = TrainService.prepare(fresh_model(small_config), toy_manifest)
        coarse, fine = prepared.batch([2, 0], [Dihedral.R90, Dihedral.FLIP])

        assert coarse.shape == fine.shape == (2, 3, 16, 16)
        np.testing.assert_array_equal(coarse[0], Dihedral.R90.transform(prepared.views[2][0]))
        np.testing.assert_array_equal(fine[1], Dihedral.FLIP.transform(prepared.views[0][1]))

    def test_batch_without_elements(self, small_config, toy_manifest):
        prepared = TrainService.prepare(fresh_model(small_config), toy_manifest)
        coarse, _ = prepared.batch([1, 1])
        np.testing.assert_array_equal(coarse[0], prepared.views[1][0])
        np.testing.assert_array_equal(coarse[1], prepared.views[1][0])


class TestAugmentation:
    def test_uniform_over_elements(self, rng):
        draws = TrainService.draw_augmentations(rng, 8000)
        counts = {element: 0 for element in Dihedral}
        for element in draws:
            counts[element] += 1
        for count in counts.values():
            assert abs(count / 8000 - 1 / 8) <= 0.03

    def test_count(self, rng):
        assert len(TrainService.draw_augmentations(rng, 5)) == 5


class TestTrainStage:
    def test_zero_updates(self, small_config, toy_manifest, rng):
        params = fresh_model(small_config)
        before = params.snapshot()
        config = StageConfig(FreezeStage.STAGE1, 0.01, 0, batch_size=6)

        params, log = TrainService.train_stage(params, toy_manifest, config, rng)

        assert len(log) == 0
        assert changed(before, params) == set()

    def test_stage1_keeps_backbone(self, small_config, toy_manifest, rng):
        params = ModelService.set_freeze(fresh_model(small_config), FreezeStage.STAGE1)
        before = params.snapshot()
        config = StageConfig(FreezeStage.STAGE1, 0.01, 5, batch_size=6)

        params, log = TrainService.train_stage(params, toy_manifest, config, rng)

        assert changed(before, params) == set(HEAD_NAMES)
        assert [record.update for record in log] == [1, 2, 3, 4, 5]
        assert all(record.stage is FreezeStage.STAGE1 for record in log)

    def test_non_finite_loss(self, small_config, toy_manifest, rng):
        params = fresh_model(small_config)
        params["output.bias"].value.data[0] = np.nan
        config = StageConfig(FreezeStage.STAGE1, 0.01, 2, batch_size=6)

        with pytest.raises(CustomException) as e:
            TrainService.train_stage(params, toy_manifest, config, rng)
        assert e.value.error_code is TrainExceptionEnum.NON_FINITE_LOSS


class TestTwoStageTrain:
    def test_freeze_ledger(self, small_config, toy_manifest):
        stage1, stage2 = small_config.stage_configs()

        head_only = fresh_model(small_config)
        before = head_only.snapshot()
        TrainService.two_stage_train(
            head_only, toy_manifest, [stage1, replace(stage2, updates=0)], np.random.default_rng(0)
        )
        assert changed(before, head_only) == set(HEAD_NAMES)

        full = fresh_model(small_config)
        params, log = TrainService.two_stage_train(
            full, toy_manifest, [stage1, stage2], np.random.default_rng(0)
        )
        assert changed(before, params) == set(HEAD_NAMES) | set(block_names(2)) | set(block_names(3))
        assert changed(before, params).isdisjoint(block_names(1))
        assert params.trainable_names() == set(HEAD_NAMES) | set(block_names(2)) | set(block_names(3))

    def test_log_covers_both_stages(self, small_config, toy_manifest, rng):
        params, log = TrainService.two_stage_train(
            fresh_model(small_config), toy_manifest, small_config.stage_configs(), rng
        )
        assert len(log) == 6
        assert [record.update for record in log] == list(range(1, 7))
        assert [record.stage for record in log] == [FreezeStage.STAGE1] * 3 + [FreezeStage.STAGE2] * 3
        assert np.all(np.isfinite(log.losses))

    def test_unfreeze_one_block(self, small_config, toy_manifest, rng):
        params = fresh_model(small_config)
        before = params.snapshot()
        params, _ = TrainService.two_stage_train(
            params, toy_manifest, small_config.stage_configs(), rng, unfreeze_blocks=1
        )
        assert changed(before, params) == set(HEAD_NAMES) | set(block_names(3))

    def test_schedule_order(self, small_config, toy_manifest, rng):
        stage1, stage2 = small_config.stage_configs()
        for schedule in ([stage2, stage1], [stage1], [stage1, stage2, stage2]):
            with pytest.raises(CustomException) as e:
                TrainService.two_stage_train(fresh_model(small_config), toy_manifest, schedule, rng)
            assert e.value.error_code is TrainExceptionEnum.INVALID_SCHEDULE

    def test_deterministic(self, small_config, toy_manifest):
        first, first_log = TrainService.train(small_config, toy_manifest)
        second, second_log = TrainService.train(small_config, toy_manifest)

        for name, value in first.snapshot().items():
            np.testing.assert_array_equal(value, second[name].value.data)
        assert first_log.losses.tolist() == second_log.losses.tolist()

    def test_seed_changes_weights(self, small_config, toy_manifest):
        first, _ = TrainService.train(small_config, toy_manifest)
        second, _ = TrainService.train(small_config.with_seed(4), toy_manifest)
        assert not np.array_equal(first["output.weight"].value.data, second["output.weight"].value.data)

    def test_loss_trends_down(self, small_config, toy_manifest):
        config = replace(
            small_config, hidden_units=16, stage1_updates=100, stage2_updates=100, augment=False
        )
        _, log = TrainService.train(config, toy_manifest)
        assert log.tail_mean(50) < log.head_mean(50)

    @pytest.mark.slow
    def test_overfits_toy_set(self, small_config, toy_manifest):
        config = replace(
            small_config,
            blocks=(8, 16, 32),
            hidden_units=32,
            batch_size=12,
            stage1_updates=300,
            stage2_updates=300,
            augment=False,
        )
        _, log = TrainService.train(config, toy_manifest)
        assert log.tail_mean(20) < 0.1


class TestTrainLog:
    def test_summaries(self):
        log = TrainLog()
        for update, loss in enumerate([1.0, 0.8, 0.5, 0.25], start=1):
            log.append(TrainRecord(update, FreezeStage.STAGE1, loss))
        assert log.final_loss == 0.25
        assert log.head_mean(2) == pytest.approx(0.9)
        assert log.tail_mean(2) == pytest.approx(0.375)
        assert TrainLog().final_loss is None

    def test_csv(self, tmp_path):
        log = TrainLog(
            [
                TrainRecord(1, FreezeStage.STAGE1, 1.0986122886681098),
                TrainRecord(2, FreezeStage.STAGE2, 0.1),
            ]
        )
        path = tmp_path / "log.csv"
        TrainLogSerializer.write(log, path)

        assert path.read_text().splitlines() == [
            "update,stage,loss",
            "1,stage1,1.0986122886681098",
            "2,stage2,0.1",
        ]
        assert TrainLogSerializer.load(path).records == log.records

    def test_bad_row(self, tmp_path):
        path = tmp_path / "log.csv"
        path.write_text("update,stage,loss\n1,stage3,0.5\n")
        with pytest.raises(CustomException) as e:
            TrainLogSerializer.load(path)
        assert e.value.error_code is TrainExceptionEnum.BAD_LOG
        assert "line 2" in str(e.value)
