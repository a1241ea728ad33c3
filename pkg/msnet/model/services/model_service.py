import math
from typing import Sequence

import numpy as np
from loguru import logger

from common.exceptions.custom_exceptions import CustomException
from msnet.imageproc.models import ImageBuffer, NormalizedImage
from msnet.imageproc.services import TransformService
from msnet.model.enums import FreezeStage, ScaleMode
from msnet.model.exceptions import ModelExceptionEnum
from msnet.model.models import (
    HEAD_NAMES,
    BackboneConfig,
    InputConfig,
    ModelParams,
    block_names,
)
from msnet.model.models.model_params import (
    HIDDEN_BIAS,
    HIDDEN_WEIGHT,
    OUTPUT_BIAS,
    OUTPUT_WEIGHT,
)
from msnet.tensor.models import Parameter, Tensor
from msnet.tensor.services import TensorOps

ImageLike = NormalizedImage | np.ndarray | Tensor


class ModelService:
    # samples pushed through the classifier head since the last reset
    forward_count = 0

    @classmethod
    def build_model(
        cls,
        backbone: BackboneConfig,
        hidden_units: int,
        rng: np.random.Generator,
        mode: ScaleMode = ScaleMode.MULTI_SCALE,
        inputs: InputConfig | None = None,
    ) -> ModelParams:
        """
        Glorot-uniform weights, zero biases, every parameter trainable.

        Weights are drawn in schema order, so the same rng state always
        produces the same model.
        """
        if hidden_units <= 0:
            raise CustomException(
                ModelExceptionEnum.INVALID_CONFIG,
                reason=f"hidden_units must be positive, got {hidden_units}",
            )
        if inputs is None:
            side = backbone.side
            inputs = InputConfig(coarse_size=side, fine_resize=2 * side, crop_size=side)

        params = ModelParams(
            backbone=backbone, hidden_units=hidden_units, mode=ScaleMode(mode), inputs=inputs
        )
        for name, shape in params.schema():
            if name.endswith("bias"):
                value = np.zeros(shape)
            else:
                value = rng.uniform(-1.0, 1.0, size=shape) * cls._glorot_limit(shape)
            params.parameters[name] = Parameter(name, value)

        logger.debug(
            f"built {params.mode.value} model: blocks={backbone.widths} side={backbone.side} "
            f"hidden={hidden_units}"
        )
        return params

    @classmethod
    def from_run_config(cls, config, rng: np.random.Generator) -> ModelParams:
        mode = ScaleMode.SINGLE_SCALE if config.single_scale else ScaleMode.MULTI_SCALE
        return cls.build_model(
            config.backbone_config(),
            config.hidden_units,
            rng,
            mode=mode,
            inputs=config.input_config(),
        )

    @classmethod
    def backbone_forward(cls, params: ModelParams, image: ImageLike) -> Tensor:
        """
        conv3x3 -> relu -> maxpool2 per block, then global average pooling.

        Takes ``[3,S,S]`` (returns ``[F]``) or a batch ``[N,3,S,S]`` (returns ``[N,F]``).
        """
        x = cls._as_tensor(image)
        side = params.backbone.side
        if x.ndim not in (3, 4) or x.shape[-3] != 3 or x.shape[-2:] != (side, side):
            raise CustomException(
                ModelExceptionEnum.WRONG_SIDE, actual=x.shape, expected=(3, side, side)
            )

        for block in range(1, params.backbone.num_blocks + 1):
            kernel, bias = block_names(block)
            x = TensorOps.conv2d(x, params[kernel].value, params[bias].value)
            x = TensorOps.maxpool2(TensorOps.relu(x))
        return TensorOps.global_avg_pool(x)

    @classmethod
    def multiscale_features(cls, params: ModelParams, coarse: ImageLike, fine: ImageLike) -> Tensor:
        """
        ``concat(backbone(coarse), backbone(fine))`` with one shared backbone.

        Both scales travel through the backbone as a single stacked batch, so
        the very same parameter tensors serve both halves.
        """
        coarse_x = cls._as_tensor(coarse)
        fine_x = cls._as_tensor(fine)
        if coarse_x.shape != fine_x.shape:
            raise CustomException(
                ModelExceptionEnum.WRONG_SIDE, actual=fine_x.shape, expected=coarse_x.shape
            )

        batched = coarse_x.ndim == 4
        if not batched:
            coarse_x = TensorOps.reshape(coarse_x, (1, *coarse_x.shape))
            fine_x = TensorOps.reshape(fine_x, (1, *fine_x.shape))
        n = coarse_x.shape[0]

        features = cls.backbone_forward(params, TensorOps.concat([coarse_x, fine_x], axis=0))
        fused = TensorOps.concat(
            [TensorOps.narrow(features, 0, 0, n), TensorOps.narrow(features, 0, n, n)], axis=-1
        )
        if not batched:
            fused = TensorOps.reshape(fused, (fused.shape[-1],))
        return fused

    @classmethod
    def multiscale_forward(cls, params: ModelParams, coarse: ImageLike, fine: ImageLike) -> Tensor:
        """Class probabilities ``[3]`` (or ``[N,3]``) of a multi-scale model."""
        cls._require_mode(params, ScaleMode.MULTI_SCALE, "multiscale_forward")
        return cls.head_forward(params, cls.multiscale_features(params, coarse, fine))

    @classmethod
    def single_scale_forward(cls, params: ModelParams, image: ImageLike) -> Tensor:
        cls._require_mode(params, ScaleMode.SINGLE_SCALE, "single_scale_forward")
        return cls.head_forward(params, cls.backbone_forward(params, image))

    @classmethod
    def forward_batch(cls, params: ModelParams, views: Sequence[np.ndarray]) -> Tensor:
        """
        Forward a batch given as per-view arrays ``[N,3,S,S]``: (coarse, fine)
        for multi-scale models, (image,) for single-scale ones.
        """
        expected = 2 if params.mode is ScaleMode.MULTI_SCALE else 1
        if len(views) != expected:
            raise CustomException(
                ModelExceptionEnum.VIEW_COUNT,
                mode=params.mode.value,
                expected=expected,
                actual=len(views),
            )
        if params.mode is ScaleMode.MULTI_SCALE:
            return cls.multiscale_forward(params, views[0], views[1])
        return cls.single_scale_forward(params, views[0])

    @classmethod
    def preprocess(cls, params: ModelParams, image: ImageBuffer) -> tuple[np.ndarray, ...]:
        """The planar input views this model expects for one image."""
        if params.mode is ScaleMode.MULTI_SCALE:
            coarse, fine = TransformService.preprocess_pair(
                image,
                params.inputs.coarse_size,
                params.inputs.fine_resize,
                params.inputs.crop_size,
            )
            return coarse.data, fine.data
        return (TransformService.preprocess_single(image, params.backbone.side).data,)

    @classmethod
    def set_freeze(
        cls, params: ModelParams, stage: FreezeStage, unfreeze_blocks: int = 2
    ) -> ModelParams:
        """
        stage1: only the hidden and output layers train.
        stage2: the last ``unfreeze_blocks`` backbone blocks train as well.
        """
        num_blocks = params.backbone.num_blocks
        if not 0 <= unfreeze_blocks < num_blocks:
            raise CustomException(
                ModelExceptionEnum.INVALID_CONFIG,
                reason=f"unfreeze_blocks must be in [0, {num_blocks}), got {unfreeze_blocks}",
            )

        trainable = set(HEAD_NAMES)
        if FreezeStage(stage) is FreezeStage.STAGE2:
            for block in range(num_blocks - unfreeze_blocks + 1, num_blocks + 1):
                trainable.update(block_names(block))

        for param in params:
            param.trainable = param.name in trainable
        logger.debug(f"{FreezeStage(stage).value}: trainable={sorted(trainable)}")
        return params

    @classmethod
    def reset_forward_count(cls) -> None:
        cls.forward_count = 0

    @classmethod
    def head_forward(cls, params: ModelParams, features: Tensor) -> Tensor:
        hidden = TensorOps.relu(
            TensorOps.dense(features, params[HIDDEN_WEIGHT].value, params[HIDDEN_BIAS].value)
        )
        logits = TensorOps.dense(hidden, params[OUTPUT_WEIGHT].value, params[OUTPUT_BIAS].value)
        cls.forward_count += features.shape[0] if features.ndim == 2 else 1
        return TensorOps.softmax(logits)

    @staticmethod
    def _require_mode(params: ModelParams, mode: ScaleMode, operation: str) -> None:
        if params.mode is not mode:
            raise CustomException(
                ModelExceptionEnum.MODE_MISMATCH,
                operation=operation,
                expected=mode.value,
                actual=params.mode.value,
            )

    @staticmethod
    def _as_tensor(image: ImageLike) -> Tensor:
        if isinstance(image, Tensor):
            return image
        if isinstance(image, NormalizedImage):
            return Tensor(image.data)
        return Tensor(image)

    @staticmethod
    def _glorot_limit(shape: tuple[int, ...]) -> float:
        if len(shape) == 4:
            receptive = shape[2] * shape[3]
            fan_in, fan_out = shape[1] * receptive, shape[0] * receptive
        else:
            fan_in, fan_out = shape[1], shape[0]
        return math.sqrt(6.0 / (fan_in + fan_out))
