"""
Portable weight file.

Layout, all integers little-endian::

    b"MSCW" | version u32 | entry count u32
    per entry: name length u16 | UTF-8 name | ndim u8 | dims u32 * ndim | payload f64 * prod(dims)
    CRC32 u32 over the concatenated payload bytes
    mode u8 (0 multi_scale, 1 single_scale)
    config: block count u8 | widths u32 * count | side u32 | hidden u32
            | coarse_size u32 | fine_resize u32 | crop_size u32
"""

import struct
import zlib
from pathlib import Path

import numpy as np
from loguru import logger

from common.exceptions.custom_exceptions import CustomException
from msnet.model.enums import ScaleMode
from msnet.model.exceptions import ModelExceptionEnum
from msnet.model.models import BackboneConfig, InputConfig, ModelParams
from msnet.tensor.models import Parameter

MAGIC = b"MSCW"
VERSION = 1


class _Reader:
    def __init__(self, payload: bytes, path: Path):
        self.payload = payload
        self.path = path
        self.offset = 0

    def take(self, size: int, what: str) -> bytes:
        end = self.offset + size
        if end > len(self.payload):
            raise CustomException(ModelExceptionEnum.TRUNCATED, path=self.path, what=what)
        chunk = self.payload[self.offset : end]
        self.offset = end
        return chunk

    def unpack(self, fmt: str, what: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))

    @property
    def remaining(self) -> int:
        return len(self.payload) - self.offset


class WeightSerializer:
    @classmethod
    def dumps(cls, params: ModelParams) -> bytes:
        out = bytearray(struct.pack("<4sII", MAGIC, VERSION, len(params)))
        crc = 0
        for param in params:
            name = param.name.encode("utf-8")
            shape = param.shape
            payload = np.ascontiguousarray(param.value.data, dtype="<f8").tobytes()
            out += struct.pack("<H", len(name)) + name
            out += struct.pack(f"<B{len(shape)}I", len(shape), *shape)
            out += payload
            crc = zlib.crc32(payload, crc)
        out += struct.pack("<I", crc)

        widths = params.backbone.widths
        out += struct.pack("<B", params.mode.code)
        out += struct.pack(f"<B{len(widths)}I", len(widths), *widths)
        out += struct.pack(
            "<5I",
            params.backbone.side,
            params.hidden_units,
            params.inputs.coarse_size,
            params.inputs.fine_resize,
            params.inputs.crop_size,
        )
        return bytes(out)

    @classmethod
    def loads(
        cls, payload: bytes, path: str | Path = "<bytes>", mode: ScaleMode | None = None
    ) -> ModelParams:
        """
        Parse a weight file; with ``mode`` set, a file of the other mode is
        rejected.
        """
        reader = _Reader(payload, Path(path))
        magic, = reader.unpack("<4s", "magic")
        if magic != MAGIC:
            raise CustomException(
                ModelExceptionEnum.BAD_MAGIC, path=path, magic=magic.decode("latin-1")
            )
        version, count = reader.unpack("<II", "header")
        if version != VERSION:
            raise CustomException(
                ModelExceptionEnum.VERSION_MISMATCH, path=path, version=version, expected=VERSION
            )

        arrays: dict[str, np.ndarray] = {}
        crc = 0
        for index in range(count):
            what = f"entry {index}"
            name_length, = reader.unpack("<H", what)
            name = reader.take(name_length, what).decode("utf-8")
            ndim, = reader.unpack("<B", what)
            shape = reader.unpack(f"<{ndim}I", what)
            raw = reader.take(8 * int(np.prod(shape, dtype=np.int64)), f"payload of {name}")
            crc = zlib.crc32(raw, crc)
            arrays[name] = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)

        stored, = reader.unpack("<I", "CRC trailer")
        if stored != crc:
            raise CustomException(
                ModelExceptionEnum.CRC_MISMATCH, path=path, actual=crc, stored=stored
            )

        mode_code, = reader.unpack("<B", "mode byte")
        file_mode = ScaleMode.from_code(mode_code)
        if file_mode is None:
            raise CustomException(
                ModelExceptionEnum.CORRUPT, path=path, reason=f"unknown mode byte {mode_code}"
            )
        if mode is not None and file_mode is not ScaleMode(mode):
            raise CustomException(
                ModelExceptionEnum.MODE_MISMATCH,
                operation=f"loading {path}",
                expected=ScaleMode(mode).value,
                actual=file_mode.value,
            )

        blocks, = reader.unpack("<B", "config block")
        widths = reader.unpack(f"<{blocks}I", "config block")
        side, hidden, coarse_size, fine_resize, crop_size = reader.unpack("<5I", "config block")
        if reader.remaining:
            raise CustomException(
                ModelExceptionEnum.CORRUPT,
                path=path,
                reason=f"{reader.remaining} unexpected trailing bytes",
            )

        params = ModelParams(
            backbone=BackboneConfig(widths=widths, side=side),
            hidden_units=hidden,
            mode=file_mode,
            inputs=InputConfig(
                coarse_size=coarse_size, fine_resize=fine_resize, crop_size=crop_size
            ),
        )
        expected = params.schema()
        actual = [(name, array.shape) for name, array in arrays.items()]
        if actual != expected:
            raise CustomException(
                ModelExceptionEnum.CORRUPT,
                path=path,
                reason="parameter names or shapes do not match the stored config",
            )
        for name, array in arrays.items():
            params.parameters[name] = Parameter(name, array)
        return params

    @classmethod
    def save(cls, params: ModelParams, path: str | Path) -> None:
        payload = cls.dumps(params)
        Path(path).write_bytes(payload)
        logger.debug(f"wrote {len(payload)} bytes of weights to {path}")

    @classmethod
    def load(cls, path: str | Path, mode: ScaleMode | None = None) -> ModelParams:
        return cls.loads(Path(path).read_bytes(), path=path, mode=mode)
