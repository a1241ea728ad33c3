import argparse
from abc import ABC, abstractmethod


class CommandView(ABC):
    """One subcommand: its flags and its handler."""

    name: str
    help: str

    @classmethod
    @abstractmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None: ...

    @classmethod
    @abstractmethod
    def handle(cls, args: argparse.Namespace) -> int: ...
