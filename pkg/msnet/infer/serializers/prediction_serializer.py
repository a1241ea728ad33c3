import csv
import math
from pathlib import Path
from typing import Iterable

from loguru import logger

from common.exceptions.custom_exceptions import CustomException
from msnet.infer.exceptions import InferExceptionEnum
from msnet.infer.models import PredictionRecord, Predictions

# rows re-read from 9 significant digits no longer sum to 1 within 1e-9
READ_TOLERANCE = 1e-8


class PredictionSerializer:
    HEADER = ("image_id", "melanoma", "seborrheic_keratosis", "nevus", "melanoma_score", "sk_score")

    @classmethod
    def write(cls, records: Iterable[PredictionRecord], path: str | Path) -> None:
        """Rows sorted by image id, probabilities to 9 significant digits."""
        records = sorted(records, key=lambda record: record.image_id)
        with Path(path).open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(cls.HEADER)
            for record in records:
                values = (*record.probs, record.melanoma_score, record.sk_score)
                writer.writerow([record.image_id, *(f"{value:.9g}" for value in values)])
        logger.info(f"wrote {len(records)} predictions to {path}")

    @classmethod
    def read(cls, path: str | Path) -> Predictions:
        path = Path(path)
        records: Predictions = []
        seen: set[str] = set()
        with path.open(newline="", encoding="utf-8-sig") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if header is None or tuple(field.strip() for field in header) != cls.HEADER:
                raise CustomException(
                    InferExceptionEnum.BAD_HEADER,
                    path=path,
                    expected=",".join(cls.HEADER),
                    actual=",".join(header or []),
                )

            for row in reader:
                line = reader.line_num
                if not row or all(not field.strip() for field in row):
                    continue
                records.append(cls._parse_row(path, line, row, seen))
        return records

    @classmethod
    def _parse_row(cls, path: Path, line: int, row: list[str], seen: set[str]) -> PredictionRecord:
        def fail(reason):
            raise CustomException(InferExceptionEnum.BAD_ROW, path=path, line=line, reason=reason)

        if len(row) != len(cls.HEADER):
            fail(f"expected {len(cls.HEADER)} fields, got {len(row)}")
        image_id = row[0].strip()
        if not image_id:
            fail("empty image_id")
        if image_id in seen:
            fail(f"duplicate image_id {image_id!r}")
        try:
            values = [float(field) for field in row[1:]]
        except ValueError as e:
            fail(str(e))

        probs, scores = values[:3], values[3:]
        try:
            record = PredictionRecord.checked(image_id, probs, tolerance=READ_TOLERANCE)
        except CustomException as e:
            fail(e.message)
        if not all(
            math.isclose(score, prob, rel_tol=0, abs_tol=1e-9)
            for score, prob in zip(scores, (record.melanoma, record.seborrheic_keratosis))
        ):
            fail("task scores disagree with class probabilities")
        seen.add(image_id)
        return record
