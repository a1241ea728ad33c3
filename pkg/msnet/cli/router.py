import argparse
import sys
from typing import Sequence

from common.exceptions.custom_exceptions import CustomException
from common.exceptions.exception_handler import custom_exception_handler
from config.settings.base import LOG_LEVEL, configure_logging
from msnet.cli.exceptions import CliExceptionEnum
from msnet.cli.views import EnsembleView, EvaluateView, PredictView, SynthView, TrainView

routes = [
    SynthView,
    TrainView,
    PredictView,
    EnsembleView,
    EvaluateView,
]


class CommandParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CustomException(CliExceptionEnum.USAGE, message=f"{self.prog}: {message}")


def build_parser() -> CommandParser:
    parser = CommandParser(prog="manage.py", description="multi-scale lesion classifier")
    parser.add_argument("--log-level", default=LOG_LEVEL, help="loguru level for stderr")
    commands = parser.add_subparsers(dest="command", required=True, metavar="command")
    for view in routes:
        command = commands.add_parser(view.name, help=view.help, description=view.help)
        view.add_arguments(command)
        command.set_defaults(view=view)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Run one command; returns the process exit code."""
    try:
        args = build_parser().parse_args(argv)
        configure_logging(args.log_level)
        return args.view.handle(args)
    except (CustomException, OSError) as e:
        return custom_exception_handler(e)
