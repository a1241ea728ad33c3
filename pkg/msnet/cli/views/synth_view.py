import argparse
from pathlib import Path

from common.exceptions.exception_enum import ExitStatus
from msnet.cli.views.base_view import CommandView
from msnet.data.services import SynthService


class SynthView(CommandView):
    name = "synth"
    help = "generate a synthetic lesion dataset"

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--out", type=Path, required=True, help="output directory")
        parser.add_argument("--train", type=int, default=200, help="training images per class")
        parser.add_argument("--test", type=int, default=100, help="test images per class")
        parser.add_argument("--seed", type=int, default=0)

    @classmethod
    def handle(cls, args: argparse.Namespace) -> int:
        summary = SynthService.synth_dataset(args.out, args.train, args.test, args.seed)
        print(f"train: {summary.train_count} images -> {summary.train_manifest}")
        print(f"test: {summary.test_count} images -> {summary.test_manifest}")
        return ExitStatus.OK
