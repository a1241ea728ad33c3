from dataclasses import dataclass

import numpy as np

from common.exceptions.custom_exceptions import CustomException
from msnet.imageproc.enums import Dihedral
from msnet.imageproc.exceptions import ImageExceptionEnum


@dataclass(frozen=True)
class ImageBuffer:
    """8-bit interleaved RGB image, stored as an ``[H, W, 3]`` uint8 array."""

    array: np.ndarray

    def __post_init__(self):
        if self.array.dtype != np.uint8 or self.array.ndim != 3 or self.array.shape[2] != 3:
            raise CustomException(
                ImageExceptionEnum.BAD_PIXELS,
                what="ImageBuffer",
                reason=f"need uint8 [H,W,3], got {self.array.dtype} {self.array.shape}",
            )
        if self.array.shape[0] < 1 or self.array.shape[1] < 1:
            raise CustomException(
                ImageExceptionEnum.BAD_PIXELS, what="ImageBuffer", reason="empty image"
            )

    @classmethod
    def from_bytes(cls, width: int, height: int, pixels: bytes) -> "ImageBuffer":
        expected = width * height * 3
        if len(pixels) != expected:
            raise CustomException(
                ImageExceptionEnum.TRUNCATED, expected=expected, actual=len(pixels)
            )
        array = np.frombuffer(pixels, dtype=np.uint8).reshape(height, width, 3)
        return cls(array.copy())

    @property
    def width(self) -> int:
        return self.array.shape[1]

    @property
    def height(self) -> int:
        return self.array.shape[0]

    @property
    def pixels(self) -> bytes:
        return self.array.tobytes()

    def transformed(self, element: Dihedral) -> "ImageBuffer":
        if element.swaps_axes and self.width != self.height:
            raise CustomException(
                ImageExceptionEnum.NOT_SQUARE,
                element=element.name,
                height=self.height,
                width=self.width,
            )
        return ImageBuffer(element.transform(self.array, axes=(0, 1)))


@dataclass(frozen=True)
class NormalizedImage:
    """Planar ``[3, H, W]`` float64 image with every value in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 3 or self.data.shape[0] != 3:
            raise CustomException(
                ImageExceptionEnum.BAD_PIXELS,
                what="NormalizedImage",
                reason=f"need [3,H,W], got {self.data.shape}",
            )
        if self.data.size and (self.data.min() < 0.0 or self.data.max() > 1.0):
            raise CustomException(
                ImageExceptionEnum.BAD_PIXELS,
                what="NormalizedImage",
                reason="values outside [0, 1]",
            )

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]
