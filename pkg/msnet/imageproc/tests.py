import itertools

import numpy as np
import pytest

from common.exceptions.custom_exceptions import CustomException
from msnet.imageproc.enums import Dihedral
from msnet.imageproc.exceptions import ImageExceptionEnum
from msnet.imageproc.models import ImageBuffer, NormalizedImage
from msnet.imageproc.serializers import PpmSerializer
from msnet.imageproc.services import TransformService


def labelled(size=4):
    """Single-channel-looking planar image with distinct values."""
    values = np.arange(3 * size * size, dtype=float).reshape(3, size, size)
    return NormalizedImage(values / values.max())


def random_buffer(rng, height, width):
    return ImageBuffer(rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8))


class TestPpm:
    def test_decode_minimal(self):
        image = PpmSerializer.decode(b"P6\n2 1\n255\n" + bytes([1, 2, 3, 4, 5, 6]))
        assert (image.width, image.height) == (2, 1)
        assert image.pixels == bytes([1, 2, 3, 4, 5, 6])
        assert image.array[0, 1].tolist() == [4, 5, 6]

    def test_round_trip(self, rng):
        for height, width in [(1, 1), (3, 5), (16, 9)]:
            encoded = PpmSerializer.encode(random_buffer(rng, height, width))
            assert PpmSerializer.encode(PpmSerializer.decode(encoded)) == encoded

    def test_unsupported_maxval(self):
        with pytest.raises(CustomException) as exc:
            PpmSerializer.decode(b"P6\n1 1\n65535\n" + bytes(6))
        assert exc.value.error_code is ImageExceptionEnum.UNSUPPORTED_MAXVAL
        assert "unsupported maxval" in exc.value.message

    def test_wrong_magic(self):
        with pytest.raises(CustomException) as exc:
            PpmSerializer.decode(b"P3\n1 1\n255\n0 0 0\n")
        assert exc.value.error_code is ImageExceptionEnum.BAD_MAGIC

    def test_truncated_payload(self):
        with pytest.raises(CustomException) as exc:
            PpmSerializer.decode(b"P6\n2 2\n255\n" + bytes(5))
        assert exc.value.error_code is ImageExceptionEnum.TRUNCATED

    def test_errors_are_distinct(self):
        codes = {
            ImageExceptionEnum.BAD_MAGIC.code,
            ImageExceptionEnum.UNSUPPORTED_MAXVAL.code,
            ImageExceptionEnum.TRUNCATED.code,
        }
        assert len(codes) == 3

    def test_file_round_trip(self, rng, tmp_path):
        image = random_buffer(rng, 4, 6)
        PpmSerializer.write(tmp_path / "x.ppm", image)
        assert np.array_equal(PpmSerializer.read(tmp_path / "x.ppm").array, image.array)


class TestRescale:
    def test_endpoints(self):
        buffer = ImageBuffer(np.array([[[255, 0, 128]]], dtype=np.uint8))
        unit = TransformService.rescale_to_unit(buffer)
        assert unit.data.shape == (3, 1, 1)
        assert unit.data[:, 0, 0].tolist() == [1.0, 0.0, 128 / 255]
        assert unit.data[2, 0, 0] == pytest.approx(0.50196, abs=1e-5)

    def test_round_trip_to_samples(self, rng):
        buffer = random_buffer(rng, 5, 7)
        unit = TransformService.rescale_to_unit(buffer).data
        back = np.rint(unit * 255).astype(np.uint8).transpose(1, 2, 0)
        assert np.array_equal(back, buffer.array)


class TestResize:
    def test_constant_stays_constant(self):
        image = NormalizedImage(np.full((3, 7, 5), 0.3))
        for out_w, out_h in [(1, 1), (3, 11), (20, 4)]:
            out = TransformService.resize_bilinear(image, out_w, out_h)
            assert out.data.shape == (3, out_h, out_w)
            assert np.all(out.data == 0.3)

    def test_identity_size(self, rng):
        image = NormalizedImage(rng.random((3, 6, 9)))
        out = TransformService.resize_bilinear(image, 9, 6)
        np.testing.assert_allclose(out.data, image.data, rtol=0, atol=1e-12)

    def test_two_by_two_to_one(self):
        channel = np.array([[0.0, 0.4], [0.8, 1.0]])
        image = NormalizedImage(np.stack([channel] * 3))
        out = TransformService.resize_bilinear(image, 1, 1)
        np.testing.assert_allclose(out.data[:, 0, 0], [0.55] * 3, rtol=0, atol=1e-12)

    def test_stays_within_input_range(self, rng):
        for _ in range(20):
            image = NormalizedImage(0.2 + 0.5 * rng.random((3, 8, 13)))
            out = TransformService.resize_bilinear(image, 5, 17).data
            assert out.min() >= image.data.min() - 1e-12
            assert out.max() <= image.data.max() + 1e-12

    def test_rejects_zero_size(self):
        with pytest.raises(CustomException):
            TransformService.resize_bilinear(labelled(), 0, 3)


class TestCenterCrop:
    def test_even_offset(self):
        image = labelled(4)
        out = TransformService.center_crop(image, 2)
        assert np.array_equal(out.data, image.data[:, 1:3, 1:3])

    def test_full_size_is_identity(self):
        image = labelled(4)
        assert np.array_equal(TransformService.center_crop(image, 4).data, image.data)

    def test_odd_margin_floors(self):
        image = labelled(5)
        assert np.array_equal(TransformService.center_crop(image, 2).data, image.data[:, 1:3, 1:3])

    def test_too_large(self):
        with pytest.raises(CustomException) as exc:
            TransformService.center_crop(labelled(4), 5)
        assert exc.value.error_code is ImageExceptionEnum.CROP_TOO_LARGE


class TestDihedral:
    def test_r90_is_clockwise(self):
        a, b, c, d = 0.1, 0.2, 0.3, 0.4
        image = NormalizedImage(np.stack([np.array([[a, b], [c, d]])] * 3))
        out = TransformService.apply_dihedral(Dihedral.R90, image).data[0]
        assert out.tolist() == [[c, a], [d, b]]

    def test_group_laws(self):
        image = labelled(4)
        four = image
        for _ in range(4):
            four = TransformService.apply_dihedral(Dihedral.R90, four)
        assert np.array_equal(four.data, image.data)
        twice = TransformService.apply_dihedral(
            Dihedral.FLIP, TransformService.apply_dihedral(Dihedral.FLIP, image)
        )
        assert np.array_equal(twice.data, image.data)

    def test_composition_table(self):
        image = labelled(4)
        for g, h in itertools.product(Dihedral.elements(), repeat=2):
            sequential = TransformService.apply_dihedral(
                g, TransformService.apply_dihedral(h, image)
            )
            composed = TransformService.apply_dihedral(g.compose(h), image)
            assert np.array_equal(sequential.data, composed.data), (g, h)

    def test_orbit_has_eight_distinct_images(self):
        image = labelled(4)
        orbit = {TransformService.apply_dihedral(g, image).data.tobytes() for g in Dihedral}
        assert len(orbit) == 8

    def test_inverse_undoes(self):
        image = labelled(4)
        for g in Dihedral:
            there = TransformService.apply_dihedral(g, image)
            back = TransformService.apply_dihedral(g.inverse(), there)
            assert np.array_equal(back.data, image.data)
            assert g.compose(g.inverse()) is Dihedral.ID

    def test_canonical_order(self):
        assert [g.name for g in Dihedral.elements()] == [
            "ID", "R90", "R180", "R270", "FLIP", "FLIP_R90", "FLIP_R180", "FLIP_R270",
        ]

    def test_non_square_rotation_rejected(self):
        image = NormalizedImage(np.zeros((3, 2, 4)))
        with pytest.raises(CustomException) as exc:
            TransformService.apply_dihedral(Dihedral.R90, image)
        assert exc.value.error_code is ImageExceptionEnum.NOT_SQUARE
        assert TransformService.apply_dihedral(Dihedral.R180, image).data.shape == (3, 2, 4)

    def test_buffer_and_planar_agree(self, rng):
        buffer = random_buffer(rng, 6, 6)
        for g in Dihedral:
            via_buffer = TransformService.rescale_to_unit(buffer.transformed(g))
            via_planar = TransformService.apply_dihedral(g, TransformService.rescale_to_unit(buffer))
            assert np.array_equal(via_buffer.data, via_planar.data)


class TestPreprocessPair:
    def test_default_shapes(self, rng):
        coarse, fine = TransformService.preprocess_pair(random_buffer(rng, 256, 256), 64, 128, 64)
        assert coarse.data.shape == (3, 64, 64)
        assert fine.data.shape == (3, 64, 64)

    def test_shapes_do_not_depend_on_input(self, rng):
        for height, width in [(200, 300), (97, 64), (512, 512)]:
            coarse, fine = TransformService.preprocess_pair(
                random_buffer(rng, height, width), 64, 128, 64
            )
            assert coarse.data.shape == fine.data.shape == (3, 64, 64)

    def test_constant_input(self):
        buffer = ImageBuffer(np.full((100, 80, 3), 77, dtype=np.uint8))
        coarse, fine = TransformService.preprocess_pair(buffer, 64, 128, 64)
        assert np.all(coarse.data == 77 / 255)
        assert np.all(fine.data == 77 / 255)

    def test_fine_view_is_centre_quarter_at_half_resolution(self, rng):
        buffer = random_buffer(rng, 256, 256)
        _, fine = TransformService.preprocess_pair(buffer, 64, 128, 64)
        centre = buffer.array[64:192, 64:192].astype(float).transpose(2, 0, 1) / 255
        expected = centre.reshape(3, 64, 2, 64, 2).mean(axis=(2, 4))
        np.testing.assert_allclose(fine.data, expected, rtol=0, atol=1e-12)

    def test_crop_larger_than_resize_rejected(self, rng):
        with pytest.raises(CustomException):
            TransformService.preprocess_pair(random_buffer(rng, 32, 32), 16, 16, 32)

    def test_commutes_with_dihedral(self, rng):
        buffer = random_buffer(rng, 256, 256)
        base = TransformService.preprocess_pair(buffer, 64, 128, 64)
        for g in Dihedral:
            moved = TransformService.preprocess_pair(buffer.transformed(g), 64, 128, 64)
            for view, reference in zip(moved, base):
                expected = TransformService.apply_dihedral(g, reference).data
                np.testing.assert_allclose(view.data, expected, rtol=0, atol=1e-12)

    def test_odd_crop_margin_breaks_flip_symmetry(self, rng):
        buffer = random_buffer(rng, 256, 256)
        _, base = TransformService.preprocess_pair(buffer, 64, 129, 64)
        _, moved = TransformService.preprocess_pair(buffer.transformed(Dihedral.FLIP), 64, 129, 64)
        expected = TransformService.apply_dihedral(Dihedral.FLIP, base).data
        assert not np.allclose(moved.data, expected, rtol=0, atol=1e-12)
