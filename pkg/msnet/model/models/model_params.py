from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from common.exceptions.custom_exceptions import CustomException
from msnet.model.enums import ScaleMode
from msnet.model.exceptions import ModelExceptionEnum
from msnet.tensor.models import Parameter

NUM_CLASSES = 3

HIDDEN_WEIGHT = "hidden.weight"
HIDDEN_BIAS = "hidden.bias"
OUTPUT_WEIGHT = "output.weight"
OUTPUT_BIAS = "output.bias"
HEAD_NAMES = (HIDDEN_WEIGHT, HIDDEN_BIAS, OUTPUT_WEIGHT, OUTPUT_BIAS)


def block_names(block: int) -> tuple[str, str]:
    """Kernel and bias names of a 1-based backbone block."""
    return f"block{block}.kernel", f"block{block}.bias"


@dataclass(frozen=True)
class BackboneConfig:
    widths: tuple[int, ...] = (8, 16, 32, 64)
    side: int = 64

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if len(self.widths) < 3:
            _invalid(f"at least 3 blocks required, got {len(self.widths)}")
        if any(w <= 0 for w in self.widths):
            _invalid(f"block widths must be positive, got {self.widths}")
        if self.side <= 0 or self.side % (2 ** len(self.widths)):
            _invalid(f"side {self.side} not divisible by 2**{len(self.widths)}")

    @property
    def num_blocks(self) -> int:
        return len(self.widths)

    @property
    def feature_width(self) -> int:
        return self.widths[-1]


@dataclass(frozen=True)
class InputConfig:
    """Preprocessing sizes the model was trained with."""

    coarse_size: int = 64
    fine_resize: int = 128
    crop_size: int = 64

    def __post_init__(self):
        if min(self.coarse_size, self.fine_resize, self.crop_size) <= 0:
            _invalid("input sizes must be positive")
        if self.crop_size > self.fine_resize:
            _invalid(f"crop_size {self.crop_size} exceeds fine_resize {self.fine_resize}")


@dataclass
class ModelParams:
    """
    Named parameters of one model plus the configuration that shaped them.

    Parameter order is the schema order: block kernels and biases from the
    first block to the last, then the hidden and output layers.
    """

    backbone: BackboneConfig
    hidden_units: int
    mode: ScaleMode
    inputs: InputConfig
    parameters: dict[str, Parameter] = field(default_factory=dict)

    def __getitem__(self, name: str) -> Parameter:
        return self.parameters[name]

    def __iter__(self) -> Iterator[Parameter]:
        return iter(self.parameters.values())

    def __len__(self) -> int:
        return len(self.parameters)

    @property
    def feature_width(self) -> int:
        return self.backbone.feature_width

    @property
    def head_input_width(self) -> int:
        scales = 2 if self.mode is ScaleMode.MULTI_SCALE else 1
        return scales * self.feature_width

    def names(self) -> list[str]:
        return list(self.parameters)

    def trainable_names(self) -> set[str]:
        return {p.name for p in self if p.trainable}

    def snapshot(self) -> dict[str, np.ndarray]:
        """Copies of every parameter value."""
        return {p.name: p.value.data.copy() for p in self}

    def schema(self) -> list[tuple[str, tuple[int, ...]]]:
        """Expected (name, shape) pairs for this configuration."""
        entries = []
        in_channels = 3
        for block, width in enumerate(self.backbone.widths, start=1):
            kernel, bias = block_names(block)
            entries.append((kernel, (width, in_channels, 3, 3)))
            entries.append((bias, (width,)))
            in_channels = width
        entries.append((HIDDEN_WEIGHT, (self.hidden_units, self.head_input_width)))
        entries.append((HIDDEN_BIAS, (self.hidden_units,)))
        entries.append((OUTPUT_WEIGHT, (NUM_CLASSES, self.hidden_units)))
        entries.append((OUTPUT_BIAS, (NUM_CLASSES,)))
        return entries


def _invalid(reason: str):
    raise CustomException(ModelExceptionEnum.INVALID_CONFIG, reason=reason)
