from .model_params import (
    HEAD_NAMES,
    NUM_CLASSES,
    BackboneConfig,
    InputConfig,
    ModelParams,
    block_names,
)

__all__ = [
    "HEAD_NAMES",
    "NUM_CLASSES",
    "BackboneConfig",
    "InputConfig",
    "ModelParams",
    "block_names",
]
