import re
from pathlib import Path

from common.exceptions.custom_exceptions import CustomException
from msnet.imageproc.exceptions import ImageExceptionEnum
from msnet.imageproc.models import ImageBuffer

# magic, width, height, maxval, then exactly one whitespace byte before the payload
_HEADER = re.compile(rb"(\S+)\s+(\S+)\s+(\S+)\s+(\S+)\s")


class PpmSerializer:
    """Binary PPM ("P6", maxval 255) codec."""

    MAGIC = b"P6"
    MAXVAL = 255

    @classmethod
    def decode(cls, payload: bytes) -> ImageBuffer:
        if not payload.startswith(cls.MAGIC):
            raise CustomException(
                ImageExceptionEnum.BAD_MAGIC, magic=payload[:2].decode("latin-1")
            )
        header = _HEADER.match(payload)
        if header is None:
            raise CustomException(
                ImageExceptionEnum.BAD_HEADER, reason="incomplete header"
            )
        magic, width, height, maxval = header.groups()
        if magic != cls.MAGIC:
            raise CustomException(
                ImageExceptionEnum.BAD_MAGIC, magic=magic.decode("latin-1")
            )
        try:
            width, height, maxval = int(width), int(height), int(maxval)
        except ValueError:
            raise CustomException(
                ImageExceptionEnum.BAD_HEADER, reason="non-numeric size or maxval"
            ) from None
        if width < 1 or height < 1:
            raise CustomException(
                ImageExceptionEnum.BAD_HEADER, reason=f"size {width}x{height}"
            )
        if maxval != cls.MAXVAL:
            raise CustomException(ImageExceptionEnum.UNSUPPORTED_MAXVAL, maxval=maxval)

        body = payload[header.end() :]
        expected = width * height * 3
        if len(body) < expected:
            raise CustomException(
                ImageExceptionEnum.TRUNCATED, expected=expected, actual=len(body)
            )
        return ImageBuffer.from_bytes(width, height, body[:expected])

    @classmethod
    def encode(cls, image: ImageBuffer) -> bytes:
        header = b"%s\n%d %d\n%d\n" % (cls.MAGIC, image.width, image.height, cls.MAXVAL)
        return header + image.pixels

    @classmethod
    def read(cls, path: str | Path) -> ImageBuffer:
        return cls.decode(Path(path).read_bytes())

    @classmethod
    def write(cls, path: str | Path, image: ImageBuffer) -> None:
        Path(path).write_bytes(cls.encode(image))
