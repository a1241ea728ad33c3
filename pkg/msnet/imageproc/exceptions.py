from common.exceptions.exception_enum import CustomExceptionEnum, ExitStatus


class ImageExceptionEnum(CustomExceptionEnum):
    ## PPM parse errors
    BAD_MAGIC = (
        "not a binary PPM: magic {magic!r}, expected 'P6'",
        "IM001",
        ExitStatus.RUNTIME,
    )
    UNSUPPORTED_MAXVAL = (
        "unsupported maxval {maxval}, only 255 is accepted",
        "IM002",
        ExitStatus.RUNTIME,
    )
    TRUNCATED = (
        "truncated PPM payload: expected {expected} bytes, got {actual}",
        "IM003",
        ExitStatus.RUNTIME,
    )
    BAD_HEADER = (
        "malformed PPM header: {reason}",
        "IM004",
        ExitStatus.RUNTIME,
    )

    ## geometry
    CROP_TOO_LARGE = (
        "crop {size} does not fit a {height}x{width} image",
        "IM005",
        ExitStatus.RUNTIME,
    )
    NOT_SQUARE = (
        "{element} needs a square image, got {height}x{width}",
        "IM006",
        ExitStatus.RUNTIME,
    )
    BAD_SIZE = (
        "{what} must be a positive size, got {value}",
        "IM007",
        ExitStatus.RUNTIME,
    )
    BAD_PIXELS = (
        "{what}: {reason}",
        "IM008",
        ExitStatus.RUNTIME,
    )
