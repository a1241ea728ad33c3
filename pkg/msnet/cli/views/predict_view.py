import argparse
from pathlib import Path

from common.exceptions.exception_enum import ExitStatus
from config.run_config import load_run_config
from msnet.cli.views.base_view import CommandView
from msnet.data.serializers import ManifestSerializer
from msnet.infer.serializers import PredictionSerializer
from msnet.infer.services import InferService
from msnet.model.serializers import WeightSerializer
from msnet.model.services import ModelService


class PredictView(CommandView):
    name = "predict"
    help = "write class probabilities for every manifest entry"

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--model", type=Path, required=True, help="weight file")
        parser.add_argument("--data", type=Path, required=True, help="manifest to predict")
        parser.add_argument("--out", type=Path, required=True, help="prediction CSV")
        parser.add_argument("--no-tta", action="store_true", help="single forward pass per image")

    @classmethod
    def handle(cls, args: argparse.Namespace) -> int:
        params = WeightSerializer.load(args.model)
        tta = not args.no_tta
        config_path = Path(f"{args.model}.cfg")
        if tta and config_path.is_file():
            tta = load_run_config(config_path).tta
        manifest = ManifestSerializer.load(args.data)

        ModelService.reset_forward_count()
        records = InferService.predict_manifest(params, manifest, tta=tta)
        PredictionSerializer.write(records, args.out)
        print(f"{len(records)} predictions -> {args.out} ({ModelService.forward_count} forward passes)")
        return ExitStatus.OK
