import numpy as np

from common.exceptions.custom_exceptions import CustomException
from msnet.imageproc.enums import Dihedral
from msnet.imageproc.exceptions import ImageExceptionEnum
from msnet.imageproc.models import ImageBuffer, NormalizedImage


class TransformService:
    @classmethod
    def rescale_to_unit(cls, image: ImageBuffer) -> NormalizedImage:
        """sample / 255, interleaved [H,W,3] -> planar [3,H,W]"""
        planar = image.array.transpose(2, 0, 1).astype(np.float64) / 255.0
        return NormalizedImage(np.ascontiguousarray(planar))

    @classmethod
    def resize_bilinear(cls, image: NormalizedImage, out_w: int, out_h: int) -> NormalizedImage:
        """
        Bilinear resize with half-pixel centres.

        Source coordinate of output pixel ``d`` is ``(d + 0.5) * in / out - 0.5``,
        clamped to the valid range. Interpolating as ``a + t * (b - a)`` keeps
        constant regions exact.
        """
        cls._check_size("out_w", out_w)
        cls._check_size("out_h", out_h)
        data = image.data
        _, in_h, in_w = data.shape

        lo, hi, frac = cls._axis_weights(in_h, out_h)
        top = data[:, lo, :]
        rows = top + frac[None, :, None] * (data[:, hi, :] - top)

        lo, hi, frac = cls._axis_weights(in_w, out_w)
        left = rows[:, :, lo]
        out = left + frac[None, None, :] * (rows[:, :, hi] - left)
        return NormalizedImage(np.clip(out, 0.0, 1.0))

    @classmethod
    def center_crop(cls, image: NormalizedImage, size: int) -> NormalizedImage:
        cls._check_size("crop size", size)
        if size > min(image.height, image.width):
            raise CustomException(
                ImageExceptionEnum.CROP_TOO_LARGE,
                size=size,
                height=image.height,
                width=image.width,
            )
        top = (image.height - size) // 2
        left = (image.width - size) // 2
        return NormalizedImage(image.data[:, top : top + size, left : left + size].copy())

    @classmethod
    def apply_dihedral(cls, element: Dihedral, image: NormalizedImage) -> NormalizedImage:
        """Exact pixel permutation of a planar image."""
        if element.swaps_axes and image.height != image.width:
            raise CustomException(
                ImageExceptionEnum.NOT_SQUARE,
                element=element.name,
                height=image.height,
                width=image.width,
            )
        return NormalizedImage(element.transform(image.data, axes=(1, 2)))

    @classmethod
    def preprocess_pair(
        cls, image: ImageBuffer, coarse: int, fine_resize: int, crop: int
    ) -> tuple[NormalizedImage, NormalizedImage]:
        """
        Coarse view = whole image resized; fine view = centre crop of a
        larger resize.
        """
        if crop > fine_resize:
            raise CustomException(
                ImageExceptionEnum.CROP_TOO_LARGE,
                size=crop,
                height=fine_resize,
                width=fine_resize,
            )
        unit = cls.rescale_to_unit(image)
        coarse_view = cls.resize_bilinear(unit, coarse, coarse)
        fine_view = cls.center_crop(cls.resize_bilinear(unit, fine_resize, fine_resize), crop)
        return coarse_view, fine_view

    @classmethod
    def preprocess_single(cls, image: ImageBuffer, side: int) -> NormalizedImage:
        return cls.resize_bilinear(cls.rescale_to_unit(image), side, side)

    @staticmethod
    def _axis_weights(size_in: int, size_out: int):
        src = (np.arange(size_out) + 0.5) * (size_in / size_out) - 0.5
        src = np.clip(src, 0.0, size_in - 1)
        lo = np.floor(src).astype(np.intp)
        hi = np.minimum(lo + 1, size_in - 1)
        return lo, hi, src - lo

    @staticmethod
    def _check_size(what: str, value: int):
        if value < 1:
            raise CustomException(ImageExceptionEnum.BAD_SIZE, what=what, value=value)
