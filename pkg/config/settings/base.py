import os
import sys
from pathlib import Path

from dotenv import load_dotenv
from loguru import logger

load_dotenv(".env")

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent.parent

PRESETS_DIR = BASE_DIR / "config" / "presets"


# Logging

LOG_LEVEL = os.getenv("MSNET_LOG_LEVEL", "INFO")

LOG_FORMAT = (
    "<green>{time:HH:mm:ss}</green> | <level>{level: <7}</level> | "
    "<cyan>{name}</cyan> - <level>{message}</level>"
)

# running-loss log interval during training (weight updates)
TRAIN_LOG_EVERY = int(os.getenv("MSNET_TRAIN_LOG_EVERY", "50"))


def configure_logging(level: str | None = None) -> None:
    logger.remove()
    logger.add(sys.stderr, level=(level or LOG_LEVEL).upper(), format=LOG_FORMAT)
