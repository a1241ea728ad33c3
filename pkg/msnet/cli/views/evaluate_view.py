import argparse
from pathlib import Path

from common.exceptions.exception_enum import ExitStatus
from msnet.cli.views.base_view import CommandView
from msnet.data.serializers import ManifestSerializer
from msnet.infer.serializers import PredictionSerializer
from msnet.metrics.models import CSV_HEADER
from msnet.metrics.services import MetricsService


class EvaluateView(CommandView):
    name = "evaluate"
    help = "accuracy and AUC of a prediction file"

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--preds", type=Path, required=True, help="prediction CSV")
        parser.add_argument("--labels", type=Path, required=True, help="labelled manifest")
        parser.add_argument("--csv", action="store_true", help="also print a CSV row")

    @classmethod
    def handle(cls, args: argparse.Namespace) -> int:
        predictions = PredictionSerializer.read(args.preds)
        manifest = ManifestSerializer.load(args.labels, check_files=False)

        report = MetricsService.evaluate(predictions, manifest)
        print(report.format_table())
        if args.csv:
            print(CSV_HEADER)
            print(report.csv_row())
        return ExitStatus.OK
