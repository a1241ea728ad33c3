from dataclasses import replace

import numpy as np
import pytest

from common.exceptions.custom_exceptions import CustomException
from common.exceptions.exception_enum import ExitStatus
from config.exceptions import ConfigExceptionEnum
from config.run_config import RunConfig, load_run_config, parse_run_config
from config.settings.base import PRESETS_DIR
from msnet.cli.router import main
from msnet.data.serializers import ManifestSerializer
from msnet.infer.models import PredictionRecord
from msnet.infer.serializers import PredictionSerializer
from msnet.metrics.services import MetricsService
from msnet.model.enums import ScaleMode
from msnet.model.serializers import WeightSerializer
from msnet.train.serializers import TrainLogSerializer


def run(*argv):
    return main(["--log-level", "WARNING", *(str(arg) for arg in argv)])


def files_under(root):
    return {path.relative_to(root): path.read_bytes() for path in sorted(root.rglob("*")) if path.is_file()}


@pytest.fixture
def config_file(tmp_path, small_config):
    path = tmp_path / "small.cfg"
    path.write_text(small_config.dumps())
    return path


@pytest.fixture
def weights(tmp_path, config_file, toy_dataset):
    path = tmp_path / "model.bin"
    assert run("train", "--config", config_file, "--data", toy_dataset.train_manifest, "--out", path) == 0
    return path


class TestRunConfig:
    def test_defaults(self):
        config = RunConfig()
        assert (config.coarse_size, config.fine_resize, config.crop_size) == (64, 128, 64)
        assert config.blocks == (8, 16, 32, 64)
        assert (config.stage1_updates, config.stage2_updates) == (150, 600)
        assert (config.stage1_lr, config.stage2_lr) == (0.01, 0.001)
        assert config.tta and config.augment and not config.single_scale

    def test_desk_preset_is_default(self):
        assert load_run_config(PRESETS_DIR / "desk.cfg") == RunConfig(seed=7)

    def test_full_scale_preset(self):
        config = load_run_config(PRESETS_DIR / "full.cfg")
        assert (config.coarse_size, config.fine_resize, config.stage2_updates) == (224, 448, 3500)
        assert config.hidden_units == 1024

    def test_round_trip(self, small_config):
        assert parse_run_config(small_config.dumps()) == small_config
        variant = RunConfig(seed=5, single_scale=True, coarse_size=128, augment=False)
        assert parse_run_config(variant.dumps()) == variant

    def test_comments_and_blanks(self):
        config = parse_run_config("# header\n\nseed = 4  \n\n# tail\nblocks = 4, 8, 16\n")
        assert config.seed == 4
        assert config.blocks == (4, 8, 16)

    @pytest.mark.parametrize(
        "text, error, line",
        [
            ("seed = 1\nwidth = 3\n", ConfigExceptionEnum.UNKNOWN_KEY, 2),
            ("seed = 1\n\nseed = 2\n", ConfigExceptionEnum.DUPLICATE_KEY, 3),
            ("batch_size = 3.5\n", ConfigExceptionEnum.BAD_VALUE, 1),
            ("augment = maybe\n", ConfigExceptionEnum.BAD_VALUE, 1),
            ("# ok\nseed 4\n", ConfigExceptionEnum.MALFORMED_LINE, 2),
        ],
    )
    def test_parse_errors(self, text, error, line):
        with pytest.raises(CustomException) as e:
            parse_run_config(text)
        assert e.value.error_code is error
        assert f"line {line}" in e.value.message

    @pytest.mark.parametrize(
        "text",
        [
            "crop_size = 256\n",
            "unfreeze_blocks = 4\n",
            "blocks = 8,16\n",
            "coarse_size = 40\n",
            "crop_size = 32\n",
            "fine_resize = 65\n",
            "stage1_lr = 0\n",
        ],
    )
    def test_validation(self, text):
        with pytest.raises(CustomException) as e:
            parse_run_config(text)
        assert e.value.error_code is ConfigExceptionEnum.INVALID


class TestRouter:
    def test_missing_command(self, capsys):
        assert run() == ExitStatus.USAGE

    def test_unknown_command(self):
        assert run("serve") == ExitStatus.USAGE

    def test_success_exits_ok(self, tmp_path):
        status = run("synth", "--out", tmp_path, "--train", 1, "--test", 1)
        assert status == ExitStatus.OK == 0

    def test_help(self, capsys):
        with pytest.raises(SystemExit) as e:
            run("--help")
        assert e.value.code == 0
        assert "synth" in capsys.readouterr().out


class TestSynth:
    def test_writes_dataset(self, tmp_path, capsys):
        assert run("synth", "--out", tmp_path / "a", "--train", 2, "--test", 1, "--seed", 3) == 0
        files = files_under(tmp_path / "a")

        assert len([name for name in files if name.suffix == ".ppm"]) == 9
        assert {name.name for name in files if name.suffix == ".csv"} == {"train.csv", "test.csv"}
        assert "train: 6 images" in capsys.readouterr().out

    def test_same_seed_same_bytes(self, tmp_path):
        for name in ("a", "b"):
            assert run("synth", "--out", tmp_path / name, "--train", 1, "--test", 1, "--seed", 9) == 0
        assert files_under(tmp_path / "a") == files_under(tmp_path / "b")

    def test_missing_out(self):
        assert run("synth", "--train", 2) == 1

    def test_unwritable_out(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        assert run("synth", "--out", blocker, "--train", 1, "--test", 1) == 2


class TestTrain:
    def test_writes_artifacts(self, weights, small_config):
        params = WeightSerializer.load(weights, mode=ScaleMode.MULTI_SCALE)
        assert params.backbone.widths == small_config.blocks

        log = TrainLogSerializer.load(f"{weights}.log.csv")
        assert len(log) == small_config.stage1_updates + small_config.stage2_updates
        assert load_run_config(f"{weights}.cfg") == small_config

    def test_deterministic(self, tmp_path, weights, config_file, toy_dataset):
        again = tmp_path / "again.bin"
        assert run("train", "--config", config_file, "--data", toy_dataset.train_manifest, "--out", again) == 0
        assert again.read_bytes() == weights.read_bytes()

    def test_fold(self, tmp_path, config_file, toy_dataset, capsys):
        out = tmp_path / "fold.bin"
        argv = ("train", "--config", config_file, "--data", toy_dataset.train_manifest, "--out", out)
        assert run(*argv, "--fold", "2/0") == 0
        assert "on 6 images" in capsys.readouterr().out

    @pytest.mark.parametrize("fold", ["5", "a/b", "2/"])
    def test_bad_fold_spec(self, tmp_path, config_file, toy_dataset, fold):
        out = tmp_path / "fold.bin"
        argv = ("train", "--config", config_file, "--data", toy_dataset.train_manifest, "--out", out)
        assert run(*argv, "--fold", fold) == 1
        assert not out.exists()

    def test_fold_out_of_range(self, tmp_path, config_file, toy_dataset):
        out = tmp_path / "fold.bin"
        argv = ("train", "--config", config_file, "--data", toy_dataset.train_manifest, "--out", out)
        assert run(*argv, "--fold", "3/3") == 2

    def test_invalid_config_rejected(self, tmp_path, toy_dataset, small_config):
        config = tmp_path / "bad.cfg"
        config.write_text(small_config.dumps().replace("fine_resize = 32", "fine_resize = 8"))
        out = tmp_path / "model.bin"
        assert run("train", "--config", config, "--data", toy_dataset.train_manifest, "--out", out) == 2
        assert not out.exists()

    def test_config_parse_error_names_line(self, tmp_path, toy_dataset, capsys):
        config = tmp_path / "bad.cfg"
        config.write_text("seed = 1\nbatch_size = many\n")
        out = tmp_path / "model.bin"
        assert run("train", "--config", config, "--data", toy_dataset.train_manifest, "--out", out) == 2
        assert "line 2" in capsys.readouterr().err

    def test_custom_log_paths(self, tmp_path, config_file, toy_dataset):
        out = tmp_path / "model.bin"
        log = tmp_path / "losses.csv"
        dump = tmp_path / "effective.cfg"
        argv = ("train", "--config", config_file, "--data", toy_dataset.train_manifest, "--out", out)
        assert run(*argv, "--log", log, "--dump-config", dump) == 0
        assert log.is_file() and dump.is_file()
        assert not (tmp_path / "model.bin.log.csv").exists()


class TestPredict:
    def test_one_row_per_entry(self, tmp_path, weights, toy_dataset, capsys):
        out = tmp_path / "preds.csv"
        assert run("predict", "--model", weights, "--data", toy_dataset.test_manifest, "--out", out) == 0

        records = PredictionSerializer.read(out)
        manifest = ManifestSerializer.load(toy_dataset.test_manifest)
        assert [r.image_id for r in records] == sorted(entry.image_id for entry in manifest)
        assert f"({8 * len(manifest)} forward passes)" in capsys.readouterr().out

    def test_no_tta(self, tmp_path, weights, toy_dataset, capsys):
        out = tmp_path / "preds.csv"
        argv = ("predict", "--model", weights, "--data", toy_dataset.test_manifest, "--out", out)
        assert run(*argv, "--no-tta") == 0
        assert "(6 forward passes)" in capsys.readouterr().out

    def test_config_disables_tta(self, tmp_path, weights, toy_dataset, capsys):
        dump = weights.with_name(f"{weights.name}.cfg")
        dump.write_text(dump.read_text().replace("tta = true", "tta = false"))
        out = tmp_path / "preds.csv"
        assert run("predict", "--model", weights, "--data", toy_dataset.test_manifest, "--out", out) == 0
        assert "(6 forward passes)" in capsys.readouterr().out

    def test_corrupt_weights(self, tmp_path, weights, toy_dataset):
        payload = bytearray(weights.read_bytes())
        payload[60] ^= 0xFF
        broken = tmp_path / "broken.bin"
        broken.write_bytes(bytes(payload))
        out = tmp_path / "preds.csv"
        assert run("predict", "--model", broken, "--data", toy_dataset.test_manifest, "--out", out) == 2

    def test_missing_weights(self, tmp_path, toy_dataset):
        out = tmp_path / "preds.csv"
        missing = tmp_path / "none.bin"
        assert run("predict", "--model", missing, "--data", toy_dataset.test_manifest, "--out", out) == 2


def write_random_predictions(path, ids, seed):
    rng = np.random.default_rng(seed)
    probs = rng.dirichlet(np.ones(3), size=len(ids)) * 0.97 + 0.01
    PredictionSerializer.write(
        [PredictionRecord.checked(image_id, row) for image_id, row in zip(ids, probs)], path
    )


class TestEnsemble:
    ids = [f"img{i:03d}" for i in range(30)]

    def test_single_input(self, tmp_path):
        source = tmp_path / "a.csv"
        write_random_predictions(source, self.ids, 1)
        out = tmp_path / "merged.csv"
        assert run("ensemble", "--out", out, source) == 0

        for got, expected in zip(PredictionSerializer.read(out), PredictionSerializer.read(source)):
            assert got.image_id == expected.image_id
            np.testing.assert_allclose(got.probs, expected.probs, rtol=0, atol=5e-9)

    def test_duplicates_match_single(self, tmp_path):
        source = tmp_path / "a.csv"
        write_random_predictions(source, self.ids, 2)
        single, triple = tmp_path / "single.csv", tmp_path / "triple.csv"
        assert run("ensemble", "--out", single, source) == 0
        assert run("ensemble", "--out", triple, source, source, source) == 0
        for got, expected in zip(PredictionSerializer.read(triple), PredictionSerializer.read(single)):
            np.testing.assert_allclose(got.probs, expected.probs, rtol=0, atol=5e-9)

    def test_ten_models(self, tmp_path):
        sources = []
        for seed in range(10):
            sources.append(tmp_path / f"m{seed}.csv")
            write_random_predictions(sources[-1], self.ids, seed)
        out = tmp_path / "merged.csv"
        assert run("ensemble", "--out", out, *sources) == 0

        merged = PredictionSerializer.read(out)
        assert len(merged) == len(self.ids)
        assert all(abs(sum(record.probs) - 1.0) <= 1e-8 for record in merged)

    def test_id_mismatch(self, tmp_path, capsys):
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        write_random_predictions(first, self.ids, 1)
        write_random_predictions(second, self.ids[:-1], 2)
        assert run("ensemble", "--out", tmp_path / "merged.csv", first, second) == 2
        assert "img029" in capsys.readouterr().err

    def test_needs_input(self, tmp_path):
        assert run("ensemble", "--out", tmp_path / "merged.csv") == 1


class TestEvaluate:
    def test_perfect_predictions(self, tmp_path, toy_dataset, capsys):
        manifest = ManifestSerializer.load(toy_dataset.test_manifest)
        preds = tmp_path / "preds.csv"
        PredictionSerializer.write(
            [PredictionRecord.checked(entry.image_id, np.eye(3)[entry.label]) for entry in manifest],
            preds,
        )
        assert run("evaluate", "--preds", preds, "--labels", toy_dataset.test_manifest, "--csv") == 0

        lines = capsys.readouterr().out.splitlines()
        assert lines[0].split() == ["task", "accuracy", "auc"]
        assert lines[1].split() == ["melanoma", "1.000", "1.000"]
        assert lines[2].split() == ["seborrheic_keratosis", "1.000", "1.000"]
        assert lines[3].split() == ["average", "1.000", "1.000"]
        assert lines[5] == "1.000000,1.000000,1.000000,1.000000,1.000000,1.000000"

    def test_malformed_predictions(self, tmp_path, toy_dataset, capsys):
        preds = tmp_path / "preds.csv"
        preds.write_text(
            "image_id,melanoma,seborrheic_keratosis,nevus,melanoma_score,sk_score\n"
            "test_00000,0.5,0.5\n"
        )
        assert run("evaluate", "--preds", preds, "--labels", toy_dataset.test_manifest) == 2
        assert "line 2" in capsys.readouterr().err

    def test_missing_ids(self, tmp_path, toy_dataset, capsys):
        preds = tmp_path / "preds.csv"
        write_random_predictions(preds, ["test_00000"], 0)
        assert run("evaluate", "--preds", preds, "--labels", toy_dataset.test_manifest) == 2
        assert "test_00001" in capsys.readouterr().err


@pytest.mark.slow
class TestAcceptance:
    """Desk-scale runs on a 200/100-per-class synthetic dataset."""

    @pytest.fixture(scope="class")
    def dataset(self, tmp_path_factory):
        out = tmp_path_factory.mktemp("desk")
        assert run("synth", "--out", out, "--train", 200, "--test", 100, "--seed", 7) == 0
        return out

    @staticmethod
    def train_and_predict(workdir, dataset, name, config, *extra):
        config_path = workdir / f"{name}.cfg"
        config_path.write_text(config.dumps())
        weights = workdir / f"{name}.bin"
        preds = workdir / f"{name}.csv"
        assert run("train", "--config", config_path, "--data", dataset / "train.csv", "--out", weights, *extra) == 0
        assert run("predict", "--model", weights, "--data", dataset / "test.csv", "--out", preds) == 0
        return preds

    @staticmethod
    def report(preds, dataset):
        manifest = ManifestSerializer.load(dataset / "test.csv", check_files=False)
        return MetricsService.evaluate(PredictionSerializer.read(preds), manifest)

    def test_end_to_end(self, tmp_path, dataset):
        preds = self.train_and_predict(tmp_path, dataset, "desk", RunConfig(seed=7))
        assert self.report(preds, dataset).average_auc >= 0.85

    def test_multiscale_beats_coarse_only(self, tmp_path, dataset):
        gains = []
        for seed in (1, 2, 3):
            multi = self.train_and_predict(tmp_path, dataset, f"multi{seed}", RunConfig(seed=seed))
            single = self.train_and_predict(
                tmp_path, dataset, f"single{seed}", RunConfig(seed=seed, single_scale=True)
            )
            gains.append(
                self.report(multi, dataset).seborrheic_keratosis.auc
                - self.report(single, dataset).seborrheic_keratosis.auc
            )
        assert np.mean(gains) >= 0.05

    def test_three_model_ensemble(self, tmp_path, dataset):
        base = RunConfig(seed=11)
        sources = [
            self.train_and_predict(tmp_path, dataset, "seed", base),
            self.train_and_predict(tmp_path, dataset, "fold", base.with_seed(12), "--fold", "5/0"),
            self.train_and_predict(
                tmp_path,
                dataset,
                "fine",
                replace(base, single_scale=True, coarse_size=128),
            ),
        ]
        merged = tmp_path / "ensemble.csv"
        assert run("ensemble", "--out", merged, *sources) == 0

        records = PredictionSerializer.read(merged)
        assert len(records) == 300
        assert all(abs(sum(record.probs) - 1.0) <= 1e-8 for record in records)
