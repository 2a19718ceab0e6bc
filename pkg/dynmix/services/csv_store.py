"""CSV input and output for series, truth records, chains and summaries.

Floats are written with 17 significant digits and parsed with pandas'
round-trip parser, so every value survives a write/read cycle exactly.
Writes go to a temporary file that replaces the target.
"""

from __future__ import annotations

import csv
import hashlib
import re
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd

from dynmix.errors import DataError
from dynmix.models import ChainStore
from dynmix.services.synthdata import SyntheticData

FLOAT_FORMAT = "%.17g"
CHAIN_INDEX_COLUMNS = ("draw", "iteration")


def _schema_error(message: str) -> DataError:
    return DataError(message, code="SCHEMA")


def write_frame(frame: pd.DataFrame, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    temp_path = path.with_suffix(path.suffix + ".tmp")
    frame.to_csv(temp_path, index=False, float_format=FLOAT_FORMAT)
    temp_path.replace(path)
    return path


def read_frame(path: Path, **kwargs) -> pd.DataFrame:
    try:
        return pd.read_csv(path, float_precision="round_trip", **kwargs)
    except FileNotFoundError:
        raise DataError(f"file not found: {path}") from None
    except pd.errors.EmptyDataError:
        raise _schema_error(f"{path} is empty") from None
    except (pd.errors.ParserError, UnicodeDecodeError, ValueError) as exc:
        raise DataError(f"cannot parse {path}: {exc}") from None


def file_checksum(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def _has_header(path: Path) -> bool:
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            first = next(csv.reader(handle), None)
    except FileNotFoundError:
        raise DataError(f"file not found: {path}") from None
    except UnicodeDecodeError as exc:
        raise DataError(f"cannot parse {path}: {exc}") from None
    if not first:
        raise _schema_error(f"{path} is empty")
    return not all(_is_number(field) for field in first)


def read_series(path: Path) -> np.ndarray:
    """Observations from a one-column file or an ``index,value`` two-column file.

    A header row is detected when its first line is not numeric.
    """
    frame = read_frame(path, header=0 if _has_header(path) else None)
    if frame.shape[1] not in (1, 2):
        raise _schema_error(f"{path} must have one column or two (index, value), found {frame.shape[1]}")
    if frame.shape[0] == 0:
        raise _schema_error(f"{path} holds no observations")
    try:
        values = pd.to_numeric(frame.iloc[:, -1], errors="raise").to_numpy(dtype=float)
    except (TypeError, ValueError):
        raise DataError(f"{path} contains non-numeric observations") from None
    if not np.all(np.isfinite(values)):
        raise DataError(f"{path} contains missing or non-finite observations")
    return values


def write_data(path: Path, y: np.ndarray) -> Path:
    y = np.asarray(y, dtype=float)
    return write_frame(pd.DataFrame({"index": np.arange(1, y.size + 1), "y": y}), path)


def write_truth(path: Path, data: SyntheticData) -> Path:
    columns = {"index": np.arange(1, data.T + 1), "alpha": data.alpha}
    if data.z is not None:
        columns["z"] = data.z.astype(int)
    return write_frame(pd.DataFrame(columns), path)


def _draw_index(store: ChainStore) -> Dict[str, np.ndarray]:
    draws = np.arange(1, store.n_kept + 1)
    return {"draw": draws, "iteration": store.burn_in + store.thin * draws}


def write_chain(path: Path, store: ChainStore) -> Path:
    columns = _draw_index(store)
    columns.update(store.scalars)
    return write_frame(pd.DataFrame(columns), path)


def read_chain(path: Path) -> Dict[str, np.ndarray]:
    frame = read_frame(path)
    if "draw" not in frame.columns:
        raise _schema_error(f"{path} is not a chain file (missing 'draw' column)")
    names = [name for name in frame.columns if name not in CHAIN_INDEX_COLUMNS]
    if not names or frame.shape[0] == 0:
        raise _schema_error(f"{path} holds no parameter draws")
    return {name: frame[name].to_numpy(dtype=float) for name in names}


def write_curve_draws(path: Path, store: ChainStore) -> Path:
    columns = _draw_index(store)
    draws = pd.DataFrame(store.alpha, columns=[f"{store.curve_label}_{t}" for t in range(1, store.T + 1)])
    return write_frame(pd.concat([pd.DataFrame(columns), draws], axis=1), path)


_CURVE_COLUMN = re.compile(r"^(?P<label>[A-Za-z]+)_(?P<t>\d+)$")


def read_curve_draws(path: Path) -> Tuple[str, np.ndarray]:
    """Label and (draws, T) matrix from a full curve-draws file."""
    frame = read_frame(path)
    names = [name for name in frame.columns if name not in CHAIN_INDEX_COLUMNS]
    matches = [_CURVE_COLUMN.match(name) for name in names]
    if not names or not all(matches) or frame.shape[0] == 0:
        raise _schema_error(f"{path} is not a curve-draws file")
    labels = {match.group("label") for match in matches}
    times = [int(match.group("t")) for match in matches]
    if len(labels) != 1 or times != list(range(1, len(times) + 1)):
        raise _schema_error(f"{path} must have columns <label>_1 .. <label>_T")
    return labels.pop(), frame[names].to_numpy(dtype=float)


def write_summary(path: Path, frame: pd.DataFrame) -> Path:
    return write_frame(frame, path)


def read_summary(path: Path) -> pd.DataFrame:
    frame = read_frame(path)
    expected = ["quantity", "point", "lower", "upper"]
    if list(frame.columns) != expected:
        raise _schema_error(f"{path} must have columns {', '.join(expected)}")
    return frame


def output_name(stem: str, chain: Optional[int] = None) -> str:
    """File name for an output, suffixed per chain in multi-chain runs."""
    return f"{stem}.csv" if chain is None else f"{stem}_chain{chain}.csv"
