"""
Dataset reading and report writing.

Two dataset layouts are understood:
  wide  stimulus_id,c1,...,cK   one row of category counts per stimulus
  long  stimulus_id,rating      one rating per row, aggregated on load

Reports are written as CSV (floats with six significant digits) or JSON
(full precision, field names as in the CSV header).
"""

import json
import logging
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from config import Config, ReportFormat
from errors import DatasetParseError, DomainError, ReportWriteError
from pmf_core import RatingCounts

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

ID_COLUMN = "stimulus_id"
RATING_COLUMN = "rating"
_COUNT_COLUMN = re.compile(r"^c(\d+)$")
_HEADER_LINES = 1


class DatasetLayout(Enum):
    WIDE = "wide"
    LONG = "long"


@dataclass(frozen=True)
class Dataset:
    """Rating counts per stimulus, in file order"""
    name: str
    stimuli: Tuple[Tuple[str, RatingCounts], ...]
    K: int

    def __post_init__(self):
        object.__setattr__(self, "stimuli", tuple((str(sid), c) for sid, c in self.stimuli))
        seen = set()
        for sid, counts in self.stimuli:
            if sid in seen:
                raise DomainError(f"duplicate stimulus id '{sid}' in {self.name}")
            seen.add(sid)
            if counts.K != self.K:
                raise DomainError(f"stimulus '{sid}' has {counts.K} categories, dataset has K={self.K}")

    def __len__(self) -> int:
        return len(self.stimuli)

    @property
    def ids(self) -> List[str]:
        return [sid for sid, _ in self.stimuli]

    @property
    def counts(self) -> List[RatingCounts]:
        return [c for _, c in self.stimuli]

    @property
    def min_total(self) -> int:
        return min((c.total for c in self.counts), default=0)


def count_columns(K: int) -> List[str]:
    return [f"c{k}" for k in range(1, K + 1)]


def _file_row(index: int) -> int:
    """1-based file line of a data frame row label"""
    return index + _HEADER_LINES + 1


def _read_frame(path: PathLike) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True,
                            skip_blank_lines=False)
    except pd.errors.EmptyDataError:
        raise DatasetParseError("no data rows", path=str(path)) from None
    except OSError as e:
        logger.error(f"Failed to read dataset {path}: {e}")
        raise
    except pd.errors.ParserError as e:
        raise DatasetParseError(f"malformed CSV: {e}", path=str(path)) from None
    # blank lines still count towards file line numbers
    blank = (frame.fillna("").astype(str).map(str.strip) == "").all(axis=1)
    frame = frame[~blank]
    if frame.empty:
        raise DatasetParseError("no data rows", path=str(path))
    frame.columns = [str(c).strip() for c in frame.columns]
    if ID_COLUMN not in frame.columns:
        raise DatasetParseError(f"missing column '{ID_COLUMN}'", path=str(path), row=1)
    return frame


def _parse_int(value: str, what: str, path: PathLike, row: int) -> int:
    text = str(value).strip()
    if not re.fullmatch(r"[+-]?\d+", text):
        raise DatasetParseError(f"{what} '{text}' is not an integer", path=str(path), row=row)
    return int(text)


def _stimulus_id(value: str, path: PathLike, row: int) -> str:
    sid = str(value).strip()
    if not sid:
        raise DatasetParseError("empty stimulus id", path=str(path), row=row)
    return sid


def read_counts_csv(path: PathLike, K: Optional[int] = None) -> Dataset:
    """Wide layout: stimulus_id,c1,...,cK"""
    frame = _read_frame(path)
    found = sorted(int(m.group(1)) for m in map(_COUNT_COLUMN.match, frame.columns) if m)
    K = K if K is not None else len(found)
    missing = [c for c in count_columns(K) if c not in frame.columns]
    if K < 2 or missing:
        raise DatasetParseError(f"missing count column(s) {missing or count_columns(2)}", path=str(path), row=1)

    stimuli = []
    seen = set()
    for index, *record in frame.itertuples():
        row = _file_row(index)
        values = dict(zip(frame.columns, record))
        sid = _stimulus_id(values[ID_COLUMN], path, row)
        if sid in seen:
            raise DatasetParseError(f"duplicate stimulus id '{sid}'", path=str(path), row=row)
        seen.add(sid)
        counts = [_parse_int(values[c], f"count {c}", path, row) for c in count_columns(K)]
        if any(c < 0 for c in counts):
            raise DatasetParseError(f"negative count for '{sid}': {counts}", path=str(path), row=row)
        stimuli.append((sid, RatingCounts(np.array(counts, dtype=np.int64))))

    dataset = Dataset(Path(path).stem, tuple(stimuli), K)
    logger.info(f"Loaded {len(dataset)} stimuli (K={K}) from {path}")
    return dataset


def read_ratings_csv(path: PathLike, K: int = Config.NUM_CATEGORIES) -> Dataset:
    """Long layout: stimulus_id,rating; stimuli keep the order of first appearance"""
    frame = _read_frame(path)
    if RATING_COLUMN not in frame.columns:
        raise DatasetParseError(f"missing column '{RATING_COLUMN}'", path=str(path), row=1)

    ids = []
    ratings = []
    for index, sid, rating in zip(frame.index, frame[ID_COLUMN], frame[RATING_COLUMN]):
        row = _file_row(index)
        ids.append(_stimulus_id(sid, path, row))
        value = _parse_int(rating, "rating", path, row)
        if not 1 <= value <= K:
            raise DatasetParseError(f"rating {value} outside 1..{K}", path=str(path), row=row)
        ratings.append(value)

    parsed = pd.DataFrame({ID_COLUMN: ids, RATING_COLUMN: ratings})
    stimuli = [
        (sid, RatingCounts(np.bincount(group.to_numpy() - 1, minlength=K).astype(np.int64)))
        for sid, group in parsed.groupby(ID_COLUMN, sort=False)[RATING_COLUMN]
    ]
    dataset = Dataset(Path(path).stem, tuple(stimuli), K)
    logger.info(f"Loaded {len(ratings)} ratings of {len(dataset)} stimuli (K={K}) from {path}")
    return dataset


def load_dataset(path: PathLike, layout: DatasetLayout = DatasetLayout.WIDE,
                 K: Optional[int] = None) -> Dataset:
    """Read a dataset in either layout"""
    if layout is DatasetLayout.LONG:
        return read_ratings_csv(path, K if K is not None else Config.NUM_CATEGORIES)
    return read_counts_csv(path, K)


def _write_csv(frame: pd.DataFrame, path: PathLike, float_format: Optional[str] = None):
    try:
        frame.to_csv(path, index=False, float_format=float_format, lineterminator="\n", encoding="utf-8")
    except OSError as e:
        logger.error(f"Failed to write {path}: {e}")
        raise ReportWriteError(f"cannot write {path}: {e}") from e


def write_counts_csv(dataset: Dataset, path: PathLike):
    """Wide layout, readable by read_counts_csv"""
    columns = count_columns(dataset.K)
    frame = pd.DataFrame(
        [[sid, *c.counts.tolist()] for sid, c in dataset.stimuli],
        columns=[ID_COLUMN, *columns],
    )
    _write_csv(frame, path)
    logger.info(f"Wrote {len(dataset)} stimuli to {path}")


def _as_row(record: Any) -> Dict[str, Any]:
    return record.to_row() if hasattr(record, "to_row") else dict(record)


def _json_default(value: Any):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Enum):
        return value.value
    raise TypeError(f"cannot serialize {type(value).__name__}")


def write_report(records: Sequence[Any], path: PathLike, fmt: ReportFormat = ReportFormat.CSV,
                 columns: Optional[Sequence[str]] = None):
    """
    Write report records (objects with to_row() or plain dicts).

    Column order comes from `columns`, else the record type's REPORT_COLUMNS,
    else the first row. An empty record list gives a header-only CSV.
    """
    rows = [_as_row(r) for r in records]
    if columns is None:
        if records and hasattr(records[0], "REPORT_COLUMNS"):
            columns = list(records[0].REPORT_COLUMNS)
        elif rows:
            columns = list(rows[0])
        else:
            columns = []

    if fmt is ReportFormat.JSON:
        try:
            with open(path, "w", encoding="utf-8", newline="\n") as f:
                json.dump({"columns": list(columns), "records": rows}, f, indent=2, default=_json_default)
                f.write("\n")
        except OSError as e:
            logger.error(f"Failed to write {path}: {e}")
            raise ReportWriteError(f"cannot write {path}: {e}") from e
    else:
        _write_csv(pd.DataFrame(rows, columns=list(columns)), path, Config.CSV_FLOAT_FORMAT)
    logger.info(f"Wrote {len(rows)} {fmt.value.upper()} records to {path}")


def read_report_json(path: PathLike) -> List[Dict[str, Any]]:
    """Records of a JSON report, as written by write_report"""
    try:
        with open(path, "r", encoding="utf-8") as f:
            payload = json.load(f)
    except OSError as e:
        logger.error(f"Failed to read report {path}: {e}")
        raise
    except json.JSONDecodeError as e:
        raise DatasetParseError(f"invalid JSON report: {e}", path=str(path), row=e.lineno) from None
    return payload["records"]
