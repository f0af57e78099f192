"""
JSONL log reading and writing.

Writers emit compact JSON with a fixed key order so that the same entities
always produce byte-identical files. Readers validate every line and report
the file and line number of the first bad record.
"""

import json
from pathlib import Path
from typing import Iterable, List, Union

from pydantic import ValidationError

from dwellrec.core.exceptions import DataFormatError
from dwellrec.core.logging import get_logger
from dwellrec.domain.entities import Impression, NewsItem
from dwellrec.domain.mappers import (
    impression_entity_to_dict,
    impression_record_to_entity,
    news_entity_to_dict,
    news_record_to_entity,
)
from dwellrec.schemas.logs import ImpressionRecord, NewsRecord

logger = get_logger(__name__)

PathLike = Union[str, Path]

NEWS_FILE = "news.jsonl"
TRAIN_FILE = "train.jsonl"
TEST_FILE = "test.jsonl"


def _dumps(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


def _write_lines(path: Path, lines: Iterable[str]) -> int:
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")
            count += 1
    return count


def write_news(news: Iterable[NewsItem], path: PathLike) -> int:
    """Write a news catalog; returns the number of lines."""
    return _write_lines(Path(path), (_dumps(news_entity_to_dict(n)) for n in news))


def write_impressions(impressions: Iterable[Impression], path: PathLike) -> int:
    """Write an impression log; returns the number of lines."""
    return _write_lines(Path(path), (_dumps(impression_entity_to_dict(i)) for i in impressions))


def _read_records(path: Path, schema):
    if not path.exists():
        raise DataFormatError("file not found", path=str(path))
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield lineno, schema.model_validate_json(line)
            except ValidationError as exc:
                first = exc.errors()[0]
                loc = ".".join(str(p) for p in first.get("loc", ()))
                detail = f"{loc}: {first.get('msg')}" if loc else first.get("msg", "invalid record")
                raise DataFormatError(detail, path=str(path), line=lineno) from None


def read_news(path: PathLike) -> List[NewsItem]:
    """
    Read a news catalog.

    Raises:
        DataFormatError: Missing file or a malformed line
    """
    path = Path(path)
    items = []
    for lineno, record in _read_records(path, NewsRecord):
        try:
            items.append(news_record_to_entity(record))
        except ValueError as exc:
            raise DataFormatError(str(exc), path=str(path), line=lineno) from None
    return items


def read_impressions(path: PathLike) -> List[Impression]:
    """
    Read an impression log.

    Raises:
        DataFormatError: Missing file or a malformed line
    """
    path = Path(path)
    impressions = [impression_record_to_entity(rec) for _, rec in _read_records(path, ImpressionRecord)]
    logger.debug(f"Read {len(impressions)} impressions from {path}")
    return impressions


def write_dataset(
    out_dir: PathLike,
    news: List[NewsItem],
    train: List[Impression],
    test: List[Impression],
) -> List[Path]:
    """Write news.jsonl, train.jsonl and test.jsonl into a directory."""
    out = Path(out_dir)
    paths = [out / NEWS_FILE, out / TRAIN_FILE, out / TEST_FILE]
    write_news(news, paths[0])
    write_impressions(train, paths[1])
    write_impressions(test, paths[2])
    logger.info(f"Wrote {len(news)} news, {len(train)} train and {len(test)} test impressions to {out}")
    return paths
