import csv
import os
from pathlib import Path
from typing import Iterable

from loguru import logger

from common.exceptions.custom_exceptions import CustomException
from msnet.data.enums import ClassLabel
from msnet.data.exceptions import DataExceptionEnum
from msnet.data.models import Manifest, ManifestEntry


class ManifestSerializer:
    """
    Dataset manifest CSV: ``image_id,path,label``.

    Relative paths are resolved against the manifest's own directory.
    """

    HEADER = ("image_id", "path", "label")

    @classmethod
    def load(cls, path: str | Path, check_files: bool = True) -> Manifest:
        path = Path(path)
        root = path.parent
        entries: Manifest = []
        seen: set[str] = set()

        with path.open(newline="", encoding="utf-8-sig") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if header is None or tuple(field.strip() for field in header) != cls.HEADER:
                raise CustomException(
                    DataExceptionEnum.BAD_HEADER,
                    path=path,
                    expected=",".join(cls.HEADER),
                    actual=",".join(header or []),
                )

            for row in reader:
                line = reader.line_num
                if not row or all(not field.strip() for field in row):
                    continue
                if len(row) != 3:
                    raise CustomException(
                        DataExceptionEnum.MALFORMED_ROW, path=path, line=line, count=len(row)
                    )

                image_id, file, label_text = (field.strip() for field in row)
                label = ClassLabel.parse(label_text)
                if label is None:
                    raise CustomException(
                        DataExceptionEnum.UNKNOWN_LABEL, path=path, line=line, label=label_text
                    )
                if image_id in seen:
                    raise CustomException(
                        DataExceptionEnum.DUPLICATE_ID, path=path, line=line, image_id=image_id
                    )
                image_path = Path(file)
                if not image_path.is_absolute():
                    image_path = root / image_path
                if check_files and not image_path.is_file():
                    raise CustomException(
                        DataExceptionEnum.MISSING_FILE, path=path, line=line, file=file
                    )

                seen.add(image_id)
                entries.append(ManifestEntry(image_id=image_id, path=image_path, label=label))

        logger.debug(f"loaded {len(entries)} manifest entries from {path}")
        return entries

    @classmethod
    def write(cls, entries: Iterable[ManifestEntry], path: str | Path) -> None:
        """Write entries in the given order; paths are stored relative to ``path``'s directory when possible."""
        path = Path(path)
        root = path.parent.resolve()
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(cls.HEADER)
            for entry in entries:
                writer.writerow([entry.image_id, cls._relative(entry.path, root), entry.label.slug])

    @staticmethod
    def _relative(file: Path, root: Path) -> str:
        resolved = Path(file).resolve()
        try:
            return resolved.relative_to(root).as_posix()
        except ValueError:
            return os.fspath(file)
