import argparse
from pathlib import Path

import numpy as np
from loguru import logger

from common.exceptions.custom_exceptions import CustomException
from common.exceptions.exception_enum import ExitStatus
from config.run_config import RunConfig, load_run_config
from msnet.cli.exceptions import CliExceptionEnum
from msnet.cli.views.base_view import CommandView
from msnet.data.serializers import ManifestSerializer
from msnet.data.services import SamplerService
from msnet.model.serializers import WeightSerializer
from msnet.train.serializers import TrainLogSerializer
from msnet.train.services import TrainService


def fold_spec(value: str) -> tuple[int, int]:
    k, sep, index = value.partition("/")
    if not sep or not k.strip().isdigit() or not index.strip().isdigit():
        raise CustomException(CliExceptionEnum.BAD_FOLD_SPEC, value=value)
    return int(k), int(index)


class TrainView(CommandView):
    name = "train"
    help = "train one model with the two-stage schedule"

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--config", type=Path, help="run configuration (default: built-in)")
        parser.add_argument("--data", type=Path, required=True, help="training manifest")
        parser.add_argument("--out", type=Path, required=True, help="weight file to write")
        parser.add_argument("--fold", help="train on every fold but the i-th of k, as k/i")
        parser.add_argument("--seed", type=int, help="override the configured seed")
        parser.add_argument("--log", type=Path, help="loss CSV (default: <out>.log.csv)")
        parser.add_argument(
            "--dump-config", type=Path, help="effective config (default: <out>.cfg)"
        )

    @classmethod
    def handle(cls, args: argparse.Namespace) -> int:
        fold = fold_spec(args.fold) if args.fold else None
        config = load_run_config(args.config) if args.config else RunConfig()
        if args.seed is not None:
            config = config.with_seed(args.seed)

        manifest = ManifestSerializer.load(args.data)
        if fold is not None:
            k, index = fold
            manifest, holdout = SamplerService.kfold_split(
                manifest, k, index, np.random.default_rng(config.seed)
            )
            logger.info(f"fold {index}/{k}: training on {len(manifest)}, holding out {len(holdout)}")

        params, log = TrainService.train(config, manifest)

        log_path = args.log or Path(f"{args.out}.log.csv")
        config_path = args.dump_config or Path(f"{args.out}.cfg")
        WeightSerializer.save(params, args.out)
        TrainLogSerializer.write(log, log_path)
        config_path.write_text(config.dumps(), encoding="utf-8")
        logger.info(f"wrote {args.out}, {log_path}, {config_path}")

        final = "n/a" if log.final_loss is None else f"{log.final_loss:.6f}"
        print(f"trained {len(log)} updates on {len(manifest)} images; final loss {final}")
        return ExitStatus.OK
