from collections import Counter

import numpy as np
import pytest

from common.exceptions.custom_exceptions import CustomException
from msnet.data.enums import ClassLabel
from msnet.data.exceptions import DataExceptionEnum
from msnet.data.models import ManifestEntry
from msnet.data.serializers import ManifestSerializer
from msnet.data.services import SamplerService, SynthService
from msnet.imageproc.serializers import PpmSerializer


def make_manifest(sizes):
    """Entries with ``sizes[label]`` examples per class, paths unused."""
    entries = []
    for label, size in zip(ClassLabel, sizes):
        for i in range(size):
            entries.append(ManifestEntry(f"{label.slug}_{i}", f"{label.slug}_{i}.ppm", label))
    return entries


def write_csv(tmp_path, rows, header="image_id,path,label", touch=True):
    for row in rows:
        if touch:
            (tmp_path / row.split(",")[1]).write_bytes(b"")
    path = tmp_path / "manifest.csv"
    path.write_text("\n".join([header, *rows]) + "\n", encoding="utf-8")
    return path


class TestClassLabel:
    def test_stable_encoding(self):
        assert [int(label) for label in ClassLabel] == [0, 1, 2]
        assert [label.slug for label in ClassLabel] == [
            "melanoma",
            "seborrheic_keratosis",
            "nevus",
        ]

    def test_parse_is_case_insensitive(self):
        assert ClassLabel.parse("Melanoma") is ClassLabel.MELANOMA
        assert ClassLabel.parse("SEBORRHEIC_KERATOSIS") is ClassLabel.SEBORRHEIC_KERATOSIS
        assert ClassLabel.parse("basal_cell") is None


class TestManifest:
    def test_one_of_each(self, tmp_path):
        path = write_csv(tmp_path, ["a,a.ppm,melanoma", "b,b.ppm,nevus", "c,c.ppm,Seborrheic_Keratosis"])
        entries = ManifestSerializer.load(path)
        assert [e.image_id for e in entries] == ["a", "b", "c"]
        assert [e.label for e in entries] == [
            ClassLabel.MELANOMA,
            ClassLabel.NEVUS,
            ClassLabel.SEBORRHEIC_KERATOSIS,
        ]
        assert entries[0].path == tmp_path / "a.ppm"

    def test_crlf_accepted(self, tmp_path):
        (tmp_path / "a.ppm").write_bytes(b"")
        path = tmp_path / "manifest.csv"
        path.write_bytes(b"image_id,path,label\r\na,a.ppm,MELANOMA\r\n")
        assert ManifestSerializer.load(path)[0].label is ClassLabel.MELANOMA

    def test_unknown_label_names_row(self, tmp_path):
        path = write_csv(tmp_path, ["a,a.ppm,melanoma", "b,b.ppm,basal_cell"])
        with pytest.raises(CustomException) as exc:
            ManifestSerializer.load(path)
        assert exc.value.error_code is DataExceptionEnum.UNKNOWN_LABEL
        assert "line 3" in exc.value.message
        assert "basal_cell" in exc.value.message

    def test_duplicate_id(self, tmp_path):
        path = write_csv(tmp_path, ["a,a.ppm,melanoma", "a,b.ppm,nevus"])
        with pytest.raises(CustomException) as exc:
            ManifestSerializer.load(path)
        assert exc.value.error_code is DataExceptionEnum.DUPLICATE_ID

    def test_missing_file(self, tmp_path):
        path = write_csv(tmp_path, ["a,a.ppm,melanoma"], touch=False)
        with pytest.raises(CustomException) as exc:
            ManifestSerializer.load(path)
        assert exc.value.error_code is DataExceptionEnum.MISSING_FILE
        assert len(ManifestSerializer.load(path, check_files=False)) == 1

    def test_bad_header(self, tmp_path):
        path = write_csv(tmp_path, ["a,a.ppm,melanoma"], header="id,file,label")
        with pytest.raises(CustomException) as exc:
            ManifestSerializer.load(path)
        assert exc.value.error_code is DataExceptionEnum.BAD_HEADER

    def test_write_then_load(self, tmp_path):
        rows = ["x1,x1.ppm,nevus", "x2,x2.ppm,melanoma"]
        entries = ManifestSerializer.load(write_csv(tmp_path, rows))
        out = tmp_path / "copy.csv"
        ManifestSerializer.write(entries, out)
        assert out.read_text(encoding="utf-8").splitlines()[1] == "x1,x1.ppm,nevus"
        assert ManifestSerializer.load(out) == entries


class TestBalancedBatch:
    def test_singletons(self, rng):
        manifest = make_manifest([1, 1, 1])
        plan = SamplerService.balanced_batch(rng, manifest, 3)
        assert sorted(plan.indices) == [0, 1, 2]
        assert plan.counts == (1, 1, 1)

    def test_forced_oversampling(self, rng):
        manifest = make_manifest([1, 3, 3])
        plan = SamplerService.balanced_batch(rng, manifest, 6)
        assert plan.counts == (2, 2, 2)
        assert Counter(plan.indices)[0] == 2

    def test_long_run_frequencies(self):
        rng = np.random.default_rng(2017)
        manifest = make_manifest([5, 40, 200])
        labels = np.array([entry.label for entry in manifest])
        totals = np.zeros(3)
        for _ in range(3000):
            plan = SamplerService.balanced_batch(rng, manifest, 32)
            assert plan.size == 32
            drawn = np.bincount(labels[list(plan.indices)], minlength=3)
            assert drawn.tolist() == list(plan.counts)
            assert drawn.min() >= 10
            totals += drawn
        np.testing.assert_allclose(totals / totals.sum(), [1 / 3] * 3, atol=0.01)

    def test_remainder_goes_to_distinct_classes(self, rng):
        manifest = make_manifest([2, 2, 2])
        for _ in range(50):
            counts = SamplerService.balanced_batch(rng, manifest, 32).counts
            assert sorted(counts) == [10, 11, 11]

    def test_deterministic(self):
        manifest = make_manifest([3, 4, 5])
        first = SamplerService.balanced_batch(np.random.default_rng(5), manifest, 12)
        second = SamplerService.balanced_batch(np.random.default_rng(5), manifest, 12)
        assert first == second

    def test_empty_class_listed(self, rng):
        with pytest.raises(CustomException) as exc:
            SamplerService.balanced_batch(rng, make_manifest([2, 0, 3]), 6)
        assert exc.value.error_code is DataExceptionEnum.EMPTY_CLASS
        assert "seborrheic_keratosis" in exc.value.message

    def test_batch_too_small(self, rng):
        with pytest.raises(CustomException):
            SamplerService.balanced_batch(rng, make_manifest([1, 1, 1]), 2)


class TestKFold:
    def test_two_folds_are_stratified(self):
        manifest = make_manifest([2, 0, 2])
        for fold in range(2):
            train, holdout = SamplerService.kfold_split(
                manifest, 2, fold, np.random.default_rng(0)
            )
            assert sorted(e.label for e in holdout) == [ClassLabel.MELANOMA, ClassLabel.NEVUS]
            assert len(train) == 2

    def test_partition(self):
        manifest = make_manifest([7, 11, 5])
        holdouts = [
            SamplerService.kfold_split(manifest, 5, fold, np.random.default_rng(9))[1]
            for fold in range(5)
        ]
        ids = [e.image_id for holdout in holdouts for e in holdout]
        assert len(ids) == len(set(ids)) == len(manifest)
        for fold, holdout in enumerate(holdouts):
            train, _ = SamplerService.kfold_split(manifest, 5, fold, np.random.default_rng(9))
            assert {e.image_id for e in train} | {e.image_id for e in holdout} == {
                e.image_id for e in manifest
            }

    def test_proportional_per_class(self):
        manifest = make_manifest([7, 11, 5])
        sizes = [7, 11, 5]
        for fold in range(4):
            _, holdout = SamplerService.kfold_split(manifest, 4, fold, np.random.default_rng(1))
            counts = Counter(e.label for e in holdout)
            for label, size in zip(ClassLabel, sizes):
                assert abs(counts[label] - size / 4) < 1

    def test_deterministic(self):
        manifest = make_manifest([6, 6, 6])
        first = SamplerService.kfold_split(manifest, 3, 1, np.random.default_rng(4))
        second = SamplerService.kfold_split(manifest, 3, 1, np.random.default_rng(4))
        assert first == second

    @pytest.mark.parametrize("k,fold", [(1, 0), (3, 3), (3, -1), (30, 0)])
    def test_invalid_fold(self, rng, k, fold):
        with pytest.raises(CustomException) as exc:
            SamplerService.kfold_split(make_manifest([3, 3, 3]), k, fold, rng)
        assert exc.value.error_code is DataExceptionEnum.BAD_FOLD


class TestSynth:
    SEEDS = range(40)

    def render(self, label, seed):
        return SynthService.render(label, np.random.default_rng(seed))

    def test_shape_and_dtype(self):
        lesion = self.render(ClassLabel.NEVUS, 0)
        assert lesion.image.array.shape == (256, 256, 3)
        assert lesion.mask.shape == (256, 256)
        assert lesion.mask.any()

    def test_nevus_is_mirror_symmetric(self):
        for seed in self.SEEDS:
            lesion = self.render(ClassLabel.NEVUS, seed)
            assert SynthService.measure_mirror_asymmetry(lesion.mask) < 0.02

    def test_melanoma_is_asymmetric(self):
        hits = sum(
            SynthService.measure_mirror_asymmetry(self.render(ClassLabel.MELANOMA, seed).mask) > 0.10
            for seed in self.SEEDS
        )
        assert hits >= 0.95 * len(self.SEEDS)

    def test_melanoma_has_two_colours(self):
        lesion = self.render(ClassLabel.MELANOMA, 3)
        grey = lesion.image.array.astype(float).mean(axis=2)[lesion.mask]
        assert np.percentile(grey, 95) - np.percentile(grey, 5) > 20

    def test_keratosis_texture_beats_nevus(self):
        hits = 0
        for seed in self.SEEDS:
            sk = self.render(ClassLabel.SEBORRHEIC_KERATOSIS, seed)
            nevus = self.render(ClassLabel.NEVUS, seed)
            sk_energy = SynthService.measure_texture_energy(sk.image, sk.mask)
            nevus_energy = SynthService.measure_texture_energy(nevus.image, nevus.mask)
            hits += sk_energy >= 3 * nevus_energy
        assert hits >= 0.95 * len(self.SEEDS)

    @pytest.mark.slow
    def test_class_cues_hold_over_500_seeds(self):
        seeds = range(500)
        symmetric = asymmetric = textured = 0
        for seed in seeds:
            nevus = self.render(ClassLabel.NEVUS, seed)
            melanoma = self.render(ClassLabel.MELANOMA, seed)
            sk = self.render(ClassLabel.SEBORRHEIC_KERATOSIS, seed)
            symmetric += SynthService.measure_mirror_asymmetry(nevus.mask) < 0.02
            asymmetric += SynthService.measure_mirror_asymmetry(melanoma.mask) > 0.10
            textured += SynthService.measure_texture_energy(
                sk.image, sk.mask
            ) >= 3 * SynthService.measure_texture_energy(nevus.image, nevus.mask)
        assert symmetric >= 0.95 * len(seeds)
        assert asymmetric >= 0.95 * len(seeds)
        assert textured >= 0.95 * len(seeds)

    def test_checker_vanishes_at_quarter_resolution(self):
        from msnet.imageproc.models import NormalizedImage
        from msnet.imageproc.services import TransformService

        pattern = 0.5 + 0.1 * SynthService.checker(256)
        image = NormalizedImage(np.stack([pattern] * 3))
        coarse = TransformService.resize_bilinear(image, 64, 64).data
        fine = TransformService.resize_bilinear(image, 128, 128).data
        np.testing.assert_allclose(coarse, 0.5, atol=1e-12)
        assert np.ptp(fine) == pytest.approx(0.2)

    def test_same_seed_same_pixels(self):
        for label in ClassLabel:
            first = self.render(label, 21).image.array
            assert np.array_equal(first, self.render(label, 21).image.array)

    def test_native_size_too_small(self, rng):
        with pytest.raises(CustomException) as exc:
            SynthService.synth_generate(ClassLabel.NEVUS, rng, native_size=64)
        assert exc.value.error_code is DataExceptionEnum.BAD_NATIVE_SIZE


class TestSynthDataset:
    def test_counts_and_round_trip(self, toy_dataset):
        assert (toy_dataset.train_count, toy_dataset.test_count) == (12, 6)
        train = ManifestSerializer.load(toy_dataset.train_manifest)
        test = ManifestSerializer.load(toy_dataset.test_manifest)
        assert Counter(e.label for e in train) == {label: 4 for label in ClassLabel}
        assert Counter(e.label for e in test) == {label: 2 for label in ClassLabel}
        assert PpmSerializer.read(train[0].path).width == 256

    def test_manifest_paths_are_relative(self, toy_dataset):
        rows = toy_dataset.train_manifest.read_text(encoding="utf-8").splitlines()
        assert rows[1].split(",")[1] == "train/train_00000.ppm"

    def test_byte_identical_for_same_seed(self, tmp_path):
        first = SynthService.synth_dataset(tmp_path / "a", 1, 1, seed=7)
        second = SynthService.synth_dataset(tmp_path / "b", 1, 1, seed=7)
        files = sorted(p.relative_to(first.out_dir) for p in first.out_dir.rglob("*") if p.is_file())
        assert len(files) == 8
        for rel in files:
            assert (first.out_dir / rel).read_bytes() == (second.out_dir / rel).read_bytes()

    def test_write_failure_names_path(self, tmp_path):
        blocker = tmp_path / "taken"
        blocker.write_text("x")
        with pytest.raises(CustomException) as exc:
            SynthService.synth_dataset(blocker, 1, 1, seed=0)
        assert exc.value.error_code is DataExceptionEnum.WRITE_FAILED
        assert "taken" in exc.value.message

    @pytest.mark.slow
    def test_desk_scale_counts(self, tmp_path):
        summary = SynthService.synth_dataset(tmp_path, 200, 100, seed=7)
        assert summary.file_count == 900
        assert len(list((tmp_path / "train").glob("*.ppm"))) == 600
        assert len(list((tmp_path / "test").glob("*.ppm"))) == 300
