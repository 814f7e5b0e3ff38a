"""MAR samples: the in-memory model, CSV ingestion and complete-case extraction.

A sample is a set of rows ``(u, v, y, delta)`` where ``u`` is an
``m``-vector of linear covariates, ``v`` lies in ``[0, 1]``, ``delta`` is the
response indicator and ``y`` is recorded only when ``delta == 1``.

The CSV layout is::

    u1,...,um,v,y,delta

with ``y`` left empty on unobserved rows.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from os import PathLike
from typing import Iterator, NamedTuple

import numpy as np

from .errors import (
    EmptyFile,
    InconsistentMissingness,
    InputError,
    MalformedHeader,
    NonNumericField,
    VOutOfRange,
)


class MarRow(NamedTuple):
    u: tuple[float, ...]
    v: float
    y: float | None
    delta: int


@dataclass(frozen=True, eq=False)
class MarDataset:
    """Validated MAR sample held column-wise.

    Parameters
    ----------
    u : ndarray, shape (n, m)
    v : ndarray, shape (n,)
        Values in ``[0, 1]``.
    y : ndarray, shape (n,)
        Responses; ``nan`` marks an unobserved response (``delta == 0``).
    delta : ndarray of int, shape (n,)
    """

    u: np.ndarray
    v: np.ndarray
    y: np.ndarray
    delta: np.ndarray

    def __post_init__(self) -> None:
        u = np.asarray(self.u, dtype=float)
        if u.ndim == 1:
            u = u[:, None]
        v = np.asarray(self.v, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        delta = np.asarray(self.delta).ravel()
        n = v.shape[0]
        if n < 1:
            raise EmptyFile("a dataset needs at least one row")
        if u.ndim != 2 or u.shape[0] != n or u.shape[1] < 1 or y.shape[0] != n or delta.shape[0] != n:
            raise InputError("column lengths disagree")
        if not np.all(np.isfinite(u)) or not np.all(np.isfinite(v)):
            raise NonNumericField("covariates must be finite")
        if np.any((v < 0.0) | (v > 1.0)):
            bad = int(np.flatnonzero((v < 0.0) | (v > 1.0))[0])
            raise VOutOfRange(f"row {bad}: v={v[bad]!r} outside [0, 1]")
        if not np.all((delta == 0) | (delta == 1)):
            raise InputError("delta must be 0 or 1")
        delta = delta.astype(np.int8)
        observed = delta == 1
        if np.any(np.isinf(y)):
            raise NonNumericField("responses must be finite")
        if np.any(observed & np.isnan(y)):
            bad = int(np.flatnonzero(observed & np.isnan(y))[0])
            raise InconsistentMissingness(f"row {bad}: delta=1 but y is missing")
        if np.any(~observed & ~np.isnan(y)):
            bad = int(np.flatnonzero(~observed & ~np.isnan(y))[0])
            raise InconsistentMissingness(f"row {bad}: delta=0 but y is present")
        for name, arr in (("u", u), ("v", v), ("y", y), ("delta", delta)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.v.shape[0]

    @property
    def dim_u(self) -> int:
        return self.u.shape[1]

    @property
    def n_observed(self) -> int:
        return int(self.delta.sum())

    def rows(self) -> Iterator[MarRow]:
        for i in range(self.n):
            y = None if self.delta[i] == 0 else float(self.y[i])
            yield MarRow(tuple(float(x) for x in self.u[i]), float(self.v[i]), y, int(self.delta[i]))

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MarDataset):
            return NotImplemented
        return (
            np.array_equal(self.u, other.u)
            and np.array_equal(self.v, other.v)
            and np.array_equal(self.y, other.y, equal_nan=True)
            and np.array_equal(self.delta, other.delta)
        )

    @classmethod
    def from_rows(cls, rows) -> MarDataset:
        """Build from an iterable of ``(u, v, y, delta)`` tuples (``y`` may be None)."""
        rows = list(rows)
        if not rows:
            raise EmptyFile("a dataset needs at least one row")
        u = np.array([np.atleast_1d(np.asarray(r[0], dtype=float)) for r in rows])
        v = np.array([r[1] for r in rows], dtype=float)
        y = np.array([np.nan if r[2] is None else r[2] for r in rows], dtype=float)
        delta = np.array([r[3] for r in rows])
        return cls(u, v, y, delta)


@dataclass(frozen=True, eq=False)
class CompleteCases:
    """The ``delta == 1`` rows of a sample, in their original order.

    ``indices`` are 0-based row positions in the source dataset.
    """

    u: np.ndarray
    v: np.ndarray
    y: np.ndarray
    indices: np.ndarray
    n_total: int

    @property
    def N(self) -> int:
        return self.indices.shape[0]

    @property
    def pairs(self) -> list[tuple[tuple[np.ndarray, float], float]]:
        return [((self.u[i], float(self.v[i])), float(self.y[i])) for i in range(self.N)]

    def as_dataset(self) -> MarDataset:
        """The complete cases as a fully observed dataset."""
        return MarDataset(self.u, self.v, self.y, np.ones(self.N, dtype=np.int8))


def extract_complete_cases(data: MarDataset) -> CompleteCases:
    idx = np.flatnonzero(data.delta == 1)
    return CompleteCases(
        u=data.u[idx],
        v=data.v[idx],
        y=data.y[idx],
        indices=idx,
        n_total=data.n,
    )


def _header(m: int) -> list[str]:
    return [f"u{i + 1}" for i in range(m)] + ["v", "y", "delta"]


def _parse_float(text: str, lineno: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise NonNumericField(f"line {lineno}, column {column}: {text!r} is not a number") from None
    if not math.isfinite(value):
        raise NonNumericField(f"line {lineno}, column {column}: {text!r} is not finite")
    return value


def load_csv(path: str | PathLike) -> MarDataset:
    """Read and validate a ``u1,...,um,v,y,delta`` CSV file."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyFile(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        m = len(header) - 3
        if m < 1 or header != _header(m):
            raise MalformedHeader(f"{path}: expected header u1,...,um,v,y,delta, got {','.join(header)}")
        u_rows, v_col, y_col, d_col = [], [], [], []
        for lineno, record in enumerate(reader, start=2):
            if not record or all(not f.strip() for f in record):
                continue
            if len(record) != m + 3:
                raise MalformedHeader(f"line {lineno}: expected {m + 3} fields, got {len(record)}")
            fields = [f.strip() for f in record]
            u_rows.append([_parse_float(fields[i], lineno, header[i]) for i in range(m)])
            v = _parse_float(fields[m], lineno, "v")
            if not 0.0 <= v <= 1.0:
                raise VOutOfRange(f"line {lineno}: v={fields[m]} outside [0, 1]")
            v_col.append(v)
            if fields[m + 2] not in ("0", "1"):
                raise NonNumericField(f"line {lineno}: delta must be literally 0 or 1, got {fields[m + 2]!r}")
            delta = int(fields[m + 2])
            y_text = fields[m + 1]
            if delta == 0 and y_text != "":
                raise InconsistentMissingness(f"line {lineno}: delta=0 but y={y_text!r} is present")
            if delta == 1 and y_text == "":
                raise InconsistentMissingness(f"line {lineno}: delta=1 but y is empty")
            y_col.append(_parse_float(y_text, lineno, "y") if delta == 1 else math.nan)
            d_col.append(delta)
    if not v_col:
        raise EmptyFile(f"{path}: no data rows")
    return MarDataset(np.array(u_rows), np.array(v_col), np.array(y_col), np.array(d_col))


def write_csv(data: MarDataset, path: str | PathLike) -> None:
    """Write ``data`` so that :func:`load_csv` reproduces it exactly."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_header(data.dim_u))
        for i in range(data.n):
            y = repr(float(data.y[i])) if data.delta[i] == 1 else ""
            writer.writerow([repr(float(x)) for x in data.u[i]] + [repr(float(data.v[i])), y, int(data.delta[i])])
