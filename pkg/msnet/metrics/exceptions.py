from common.exceptions.exception_enum import CustomExceptionEnum, ExitStatus


class MetricsExceptionEnum(CustomExceptionEnum):
    AUC_UNDEFINED = (
        "AUC undefined: {reason}",
        "MT001",
        ExitStatus.RUNTIME,
    )
    EMPTY_INPUT = (
        "{metric} of an empty input",
        "MT002",
        ExitStatus.RUNTIME,
    )
    LENGTH_MISMATCH = (
        "{scores} scores vs {labels} labels",
        "MT003",
        ExitStatus.RUNTIME,
    )
    BAD_LABELS = (
        "binary labels must be 0 or 1, got {values}",
        "MT004",
        ExitStatus.RUNTIME,
    )
    MISSING_IDS = (
        "no prediction for {count} manifest id(s): {ids}",
        "MT005",
        ExitStatus.RUNTIME,
    )
    UNKNOWN_IDS = (
        "{count} predicted id(s) not in the manifest: {ids}",
        "MT006",
        ExitStatus.RUNTIME,
    )
    OUT_OF_RANGE = (
        "{task} {metric} {value} outside [0, 1]",
        "MT007",
        ExitStatus.RUNTIME,
    )
