import math
from typing import Sequence

import numpy as np
from loguru import logger

from common.exceptions.custom_exceptions import CustomException
from config.run_config import RunConfig
from config.settings.base import TRAIN_LOG_EVERY
from msnet.data.models import ManifestEntry
from msnet.data.services import SamplerService
from msnet.imageproc.enums import Dihedral
from msnet.imageproc.serializers import PpmSerializer
from msnet.model.enums import FreezeStage
from msnet.model.models import ModelParams
from msnet.model.services import ModelService
from msnet.tensor.models import AdamState
from msnet.tensor.services import AutogradService, OptimizerService, TensorOps
from msnet.train.exceptions import TrainExceptionEnum
from msnet.train.models import PreparedSet, StageConfig, TrainLog, TrainRecord


class TrainService:
    @classmethod
    def prepare(cls, params: ModelParams, manifest: Sequence[ManifestEntry]) -> PreparedSet:
        """Decode and preprocess every manifest image once."""
        views = [ModelService.preprocess(params, PpmSerializer.read(entry.path)) for entry in manifest]
        labels = np.array([int(entry.label) for entry in manifest], dtype=np.int64)
        logger.debug(f"prepared {len(views)} images for {params.mode.value} training")
        return PreparedSet(views=views, labels=labels)

    @classmethod
    def draw_augmentations(cls, rng: np.random.Generator, count: int) -> list[Dihedral]:
        """Independent uniform draws from the 8 dihedral elements."""
        elements = Dihedral.elements()
        return [elements[i] for i in rng.integers(0, len(elements), size=count)]

    @classmethod
    def train_stage(
        cls,
        params: ModelParams,
        manifest: Sequence[ManifestEntry],
        config: StageConfig,
        rng: np.random.Generator,
        prepared: PreparedSet | None = None,
        first_update: int = 1,
    ) -> tuple[ModelParams, TrainLog]:
        """
        ``config.updates`` Adam steps on balanced, optionally augmented batches.

        Trains whatever is currently trainable in ``params``; the optimizer
        state starts fresh.
        """
        log = TrainLog()
        if config.updates == 0:
            return params, log
        if prepared is None:
            prepared = cls.prepare(params, manifest)

        state = AdamState.initial(params)
        for step in range(config.updates):
            update = first_update + step
            plan = SamplerService.balanced_batch(rng, manifest, config.batch_size)
            elements = cls.draw_augmentations(rng, plan.size) if config.augment else None

            probs = ModelService.forward_batch(params, prepared.batch(plan.indices, elements))
            loss = TensorOps.cross_entropy(probs, prepared.targets(plan.indices))
            value = loss.item()
            if not math.isfinite(value):
                raise CustomException(TrainExceptionEnum.NON_FINITE_LOSS, loss=value, update=update)

            grads = AutogradService.backward(loss, params)
            OptimizerService.adam_step(params, grads, state, config.learning_rate)
            log.append(TrainRecord(update=update, stage=config.stage, loss=value))

            if (step + 1) % TRAIN_LOG_EVERY == 0:
                logger.info(
                    f"{config.stage.value} update {update}: "
                    f"loss {log.tail_mean(TRAIN_LOG_EVERY):.4f}"
                )
        return params, log

    @classmethod
    def two_stage_train(
        cls,
        params: ModelParams,
        manifest: Sequence[ManifestEntry],
        schedule: Sequence[StageConfig],
        rng: np.random.Generator,
        unfreeze_blocks: int = 2,
        prepared: PreparedSet | None = None,
    ) -> tuple[ModelParams, TrainLog]:
        """Head-only stage, then fine-tuning of the last ``unfreeze_blocks`` blocks."""
        stages = [stage_config.stage for stage_config in schedule]
        if stages != [FreezeStage.STAGE1, FreezeStage.STAGE2]:
            raise CustomException(
                TrainExceptionEnum.INVALID_SCHEDULE, stages=[s.value for s in stages]
            )
        if prepared is None and any(stage_config.updates for stage_config in schedule):
            prepared = cls.prepare(params, manifest)

        log = TrainLog()
        for stage_config in schedule:
            ModelService.set_freeze(params, stage_config.stage, unfreeze_blocks)
            logger.info(
                f"{stage_config.stage.value}: {stage_config.updates} updates "
                f"at lr {stage_config.learning_rate}"
            )
            params, stage_log = cls.train_stage(
                params,
                manifest,
                stage_config,
                rng,
                prepared=prepared,
                first_update=len(log) + 1,
            )
            log.extend(stage_log)
            if stage_log.final_loss is not None:
                logger.info(f"{stage_config.stage.value} done: last loss {stage_log.final_loss:.4f}")
        return params, log

    @classmethod
    def train(
        cls, config: RunConfig, manifest: Sequence[ManifestEntry]
    ) -> tuple[ModelParams, TrainLog]:
        """Build a model from ``config`` and run the full schedule; one rng seeds everything."""
        rng = np.random.default_rng(config.seed)
        params = ModelService.from_run_config(config, rng)
        return cls.two_stage_train(
            params,
            manifest,
            config.stage_configs(),
            rng,
            unfreeze_blocks=config.unfreeze_blocks,
        )
