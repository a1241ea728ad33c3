import csv
from pathlib import Path

from common.exceptions.custom_exceptions import CustomException
from msnet.model.enums import FreezeStage
from msnet.train.exceptions import TrainExceptionEnum
from msnet.train.models import TrainLog, TrainRecord


class TrainLogSerializer:
    """Per-update loss CSV: ``update,stage,loss``."""

    HEADER = ("update", "stage", "loss")

    @classmethod
    def write(cls, log: TrainLog, path: str | Path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(cls.HEADER)
            for record in log:
                writer.writerow([record.update, record.stage.value, repr(record.loss)])

    @classmethod
    def load(cls, path: str | Path) -> TrainLog:
        path = Path(path)
        log = TrainLog()
        with path.open(newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if header is None or tuple(header) != cls.HEADER:
                raise CustomException(
                    TrainExceptionEnum.BAD_LOG, path=path, line=1, reason=f"bad header {header}"
                )
            for row in reader:
                if not row:
                    continue
                try:
                    update, stage, loss = row
                    log.append(TrainRecord(int(update), FreezeStage(stage), float(loss)))
                except ValueError as e:
                    raise CustomException(
                        TrainExceptionEnum.BAD_LOG, path=path, line=reader.line_num, reason=e
                    ) from None
        return log
