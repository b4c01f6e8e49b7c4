"""
CSV and JSON artifact I/O.

Numbers are written with 17 significant digits so doubles round-trip exactly.
"""
import csv
import hashlib
import json
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from nonloc.errors import DataError
from nonloc.models import Domain, GridFunction


def fmt(value: float) -> str:
    return format(float(value), ".17g")


def decode_text(raw: bytes, path: Path) -> str:
    """
    Decode file contents as UTF-8.

    Raises:
        DataError: Naming the line of the first undecodable byte
    """
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        line = raw.count(b"\n", 0, exc.start) + 1
        raise DataError(f"not valid UTF-8 (byte {raw[exc.start]:#04x})", path=str(path), line=line)


def _read_csv(path: Path) -> Tuple[List[str], List[Tuple[int, List[str]]]]:
    """Read a CSV file into its header and (line number, row) pairs."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read file: {exc.strerror}", path=str(path))
    reader = csv.reader(decode_text(raw, path).splitlines(keepends=True))
    try:
        header = next(reader, None)
        if header is None:
            raise DataError("file is empty", path=str(path), line=1)
        rows = [(reader.line_num, row) for row in reader if row]
    except csv.Error as exc:
        raise DataError(f"malformed CSV: {exc}", path=str(path), line=reader.line_num)
    return [name.strip() for name in header], rows


def _read_rows(path: Path, header: Sequence[str]) -> List[Tuple[int, List[str]]]:
    """Read a CSV file whose header must be exactly `header`."""
    found, rows = _read_csv(path)
    if found != list(header):
        raise DataError(f"expected header {','.join(header)}, got {','.join(found)}",
                        path=str(path), line=1)
    return rows


def _floats(row: List[str], path: Path, line: int, width: int) -> List[float]:
    if len(row) != width:
        raise DataError(f"expected {width} columns, got {len(row)}", path=str(path), line=line)
    try:
        return [float(cell) for cell in row]
    except ValueError:
        raise DataError(f"non-numeric value in row {row}", path=str(path), line=line)


# ==================== Grid functions ====================

def read_grid_function(path: Path, domain: Domain) -> GridFunction:
    """
    Read a grid function CSV with header x,u1[,u2,...].

    Raises:
        DataError: On malformed rows, a node count mismatch or x not matching the grid
    """
    path = Path(path)
    header, rows = _read_csv(path)
    width = len(header)
    expected = ["x"] + [f"u{k}" for k in range(1, width)]
    if width < 2 or header != expected:
        raise DataError(f"expected header x,u1[,u2,...], got {','.join(header)}",
                        path=str(path), line=1)
    data = np.array([_floats(row, path, line, width) for line, row in rows]) if rows else np.zeros((0, width))
    if data.shape[0] != domain.node_count:
        raise DataError(f"expected {domain.node_count} rows, got {data.shape[0]}", path=str(path))
    scale = max(1.0, float(np.max(np.abs(domain.nodes))))
    mismatch = np.abs(data[:, 0] - domain.nodes) > 1e-12 * scale
    if np.any(mismatch):
        first = int(np.argmax(mismatch))
        raise DataError(f"x={data[first, 0]!r} does not match grid node {domain.nodes[first]!r}",
                        path=str(path), line=rows[first][0])
    return GridFunction(domain, data[:, 1:])


def write_grid_function(path: Path, u: GridFunction) -> None:
    """Write x,u1[,u2,...] with 17 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = ["x"] + [f"u{k + 1}" for k in range(u.components)]
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for x, row in zip(u.domain.nodes, u.values):
            writer.writerow([fmt(x)] + [fmt(v) for v in row])


# ==================== Kernel tables ====================

def read_kernel_csv(path: Path) -> Tuple[np.ndarray, np.ndarray]:
    """Read a translation-invariant kernel table z,mu."""
    rows = _read_rows(path, ["z", "mu"])
    data = np.array([_floats(row, path, line, 2) for line, row in rows]) if rows else np.zeros((0, 2))
    return data[:, 0], data[:, 1]


def write_kernel_csv(path: Path, z: np.ndarray, mu: np.ndarray) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["z", "mu"])
        for zk, mk in zip(z, mu):
            writer.writerow([fmt(zk), fmt(mk)])


def read_two_point_csv(path: Path, m: int) -> np.ndarray:
    """Read a two-point kernel table i,j,alpha; every pair must appear exactly once."""
    rows = _read_rows(path, ["i", "j", "alpha"])
    table = np.full((m, m), np.nan)
    for line, row in rows:
        if len(row) != 3:
            raise DataError(f"expected 3 columns, got {len(row)}", path=str(path), line=line)
        try:
            i, j, value = int(row[0]), int(row[1]), float(row[2])
        except ValueError:
            raise DataError(f"bad row {row}", path=str(path), line=line)
        if not (0 <= i < m and 0 <= j < m):
            raise DataError(f"index ({i}, {j}) outside 0..{m - 1}", path=str(path), line=line)
        if not np.isnan(table[i, j]):
            raise DataError(f"duplicate entry ({i}, {j})", path=str(path), line=line)
        table[i, j] = value
    if np.any(np.isnan(table)):
        i, j = np.argwhere(np.isnan(table))[0]
        raise DataError(f"missing entry ({i}, {j})", path=str(path))
    return table


def write_two_point_csv(path: Path, table: np.ndarray) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["i", "j", "alpha"])
        m = table.shape[0]
        for i in range(m):
            for j in range(m):
                writer.writerow([i, j, fmt(table[i, j])])


# ==================== JSON ====================

def to_jsonable(payload: Any) -> Any:
    if isinstance(payload, BaseModel):
        return payload.model_dump(mode="json")
    return payload


def write_json(path: Path, payload: Any) -> None:
    """Write a Pydantic model or plain structure as sorted, indented JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(to_jsonable(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def config_hash(config: Dict[str, Any]) -> str:
    """SHA-256 of the canonical JSON form of a materialized configuration."""
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
