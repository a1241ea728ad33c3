import argparse
from pathlib import Path

from loguru import logger

from common.exceptions.exception_enum import ExitStatus
from msnet.cli.views.base_view import CommandView
from msnet.infer.serializers import PredictionSerializer
from msnet.infer.services import InferService


class EnsembleView(CommandView):
    name = "ensemble"
    help = "merge prediction files by geometric averaging"

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--out", type=Path, required=True, help="merged prediction CSV")
        parser.add_argument("predictions", type=Path, nargs="+", help="prediction CSVs to merge")

    @classmethod
    def handle(cls, args: argparse.Namespace) -> int:
        prediction_sets = []
        for path in args.predictions:
            prediction_sets.append(PredictionSerializer.read(path))
            logger.debug(f"ensemble input {path}: {len(prediction_sets[-1])} rows")

        merged = InferService.ensemble_geometric(prediction_sets)
        PredictionSerializer.write(merged, args.out)
        print(f"merged {len(prediction_sets)} files, {len(merged)} images -> {args.out}")
        return ExitStatus.OK
