"""
Flat ``key = value`` run configuration.

Every numeric hyperparameter of a run lives here; the desk-scale values are the
defaults and ``config/presets/full.cfg`` carries the full-scale ones.
"""

import io
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from dotenv.parser import parse_stream

from common.exceptions.custom_exceptions import CustomException
from config.exceptions import ConfigExceptionEnum


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    coarse_size: int = 64
    fine_resize: int = 128
    crop_size: int = 64
    hidden_units: int = 32
    blocks: tuple[int, ...] = field(default=(8, 16, 32, 64))
    batch_size: int = 32
    stage1_updates: int = 150
    stage1_lr: float = 0.01
    stage2_updates: int = 600
    stage2_lr: float = 0.001
    unfreeze_blocks: int = 2
    single_scale: bool = False
    augment: bool = True
    tta: bool = True

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        self.validate()

    def validate(self) -> None:
        sizes = {
            "coarse_size": self.coarse_size,
            "fine_resize": self.fine_resize,
            "crop_size": self.crop_size,
            "hidden_units": self.hidden_units,
        }
        for name, value in sizes.items():
            if value <= 0:
                _invalid(f"{name} must be positive, got {value}")
        if self.batch_size < 3:
            _invalid(f"batch_size must be at least 3, got {self.batch_size}")
        if self.stage1_updates < 0 or self.stage2_updates < 0:
            _invalid("update counts must be non-negative")
        if self.stage1_lr <= 0 or self.stage2_lr <= 0:
            _invalid("learning rates must be positive")
        if len(self.blocks) < 3:
            _invalid(f"at least 3 backbone blocks required, got {len(self.blocks)}")
        if any(width <= 0 for width in self.blocks):
            _invalid("block widths must be positive")
        if not 0 <= self.unfreeze_blocks < len(self.blocks):
            _invalid(
                f"unfreeze_blocks must be in [0, {len(self.blocks)}), "
                f"got {self.unfreeze_blocks}"
            )
        if self.crop_size > self.fine_resize:
            _invalid(
                f"crop_size {self.crop_size} exceeds fine_resize {self.fine_resize}"
            )
        if not self.single_scale and self.crop_size != self.coarse_size:
            _invalid("multi-scale models need crop_size == coarse_size")
        if not self.single_scale and (self.fine_resize - self.crop_size) % 2:
            # odd margin: the crop sits one pixel off centre
            _invalid(
                f"fine_resize - crop_size must be even, got "
                f"{self.fine_resize} - {self.crop_size}"
            )
        if self.coarse_size % (2 ** len(self.blocks)):
            _invalid(
                f"coarse_size {self.coarse_size} not divisible by "
                f"2**{len(self.blocks)}"
            )

    def dumps(self) -> str:
        lines = ["# effective run configuration"]
        for f in fields(self):
            lines.append(f"{f.name} = {_format_value(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, seed=seed)

    def backbone_config(self):
        from msnet.model.models.model_params import BackboneConfig

        return BackboneConfig(widths=self.blocks, side=self.coarse_size)

    def input_config(self):
        from msnet.model.models.model_params import InputConfig

        return InputConfig(
            coarse_size=self.coarse_size,
            fine_resize=self.fine_resize,
            crop_size=self.crop_size,
        )

    def stage_configs(self):
        from msnet.model.enums import FreezeStage
        from msnet.train.models.train_log import StageConfig

        return [
            StageConfig(
                stage=FreezeStage.STAGE1,
                learning_rate=self.stage1_lr,
                updates=self.stage1_updates,
                batch_size=self.batch_size,
                augment=self.augment,
            ),
            StageConfig(
                stage=FreezeStage.STAGE2,
                learning_rate=self.stage2_lr,
                updates=self.stage2_updates,
                batch_size=self.batch_size,
                augment=self.augment,
            ),
        ]


def parse_run_config(text: str) -> RunConfig:
    types = {f.name: f.type for f in fields(RunConfig)}
    values = {}
    seen_at = {}

    for binding in parse_stream(io.StringIO(text)):
        line = _binding_line(binding)
        if binding.error or (binding.key is not None and binding.value is None):
            raise CustomException(
                ConfigExceptionEnum.MALFORMED_LINE,
                line=line,
                text=binding.original.string.strip(),
            )
        if binding.key is None:
            # blank line or comment
            continue

        key = binding.key.strip()
        if key not in types:
            raise CustomException(ConfigExceptionEnum.UNKNOWN_KEY, line=line, key=key)
        if key in seen_at:
            raise CustomException(ConfigExceptionEnum.DUPLICATE_KEY, line=line, key=key)
        seen_at[key] = line
        values[key] = _convert(key, binding.value.strip(), types[key], line)

    return RunConfig(**values)


def load_run_config(path: str | Path) -> RunConfig:
    return parse_run_config(Path(path).read_text(encoding="utf-8"))


def _binding_line(binding) -> int:
    """1-based line of the binding's first non-blank character."""
    original = binding.original
    stripped = original.string.lstrip()
    leading = original.string[: len(original.string) - len(stripped)]
    return original.line + leading.count("\n")


def _convert(key: str, raw: str, kind, line: int):
    try:
        if kind in (bool, "bool"):
            lowered = raw.lower()
            if lowered in ("true", "yes", "1", "on"):
                return True
            if lowered in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        if kind in (int, "int"):
            return int(raw)
        if kind in (float, "float"):
            return float(raw)
        return tuple(int(part) for part in raw.replace(" ", "").split(",") if part)
    except ValueError:
        raise CustomException(
            ConfigExceptionEnum.BAD_VALUE,
            line=line,
            key=key,
            value=raw,
            kind=getattr(kind, "__name__", str(kind)),
        ) from None


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _invalid(reason: str):
    raise CustomException(ConfigExceptionEnum.INVALID, reason=reason)
