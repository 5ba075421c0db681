"""Signed differences, midranks and the two signed-rank statistics.

Everything here is deterministic and non-private. Two variants are provided:

* the standard statistic, which drops zero differences before ranking and
  also reports ``n_r``, the number of surviving rows;
* the Pratt statistic, which keeps zero differences (sign 0) so that they
  occupy the lowest ranks and push up the ranks of the other rows.

Ties are exact: two magnitudes are tied iff they compare equal as floats.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .errors import EmptyInputError, ValidationError


@dataclass(frozen=True)
class PairedDataset:
    """n paired measurements ``(u[i], v[i])``.

    Arrays are copied to read-only float64 on construction.
    """

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.array(self.u, dtype=np.float64, copy=True).reshape(-1)
        v = np.array(self.v, dtype=np.float64, copy=True).reshape(-1)
        if u.shape != v.shape:
            raise ValidationError(
                f"u and v must have the same length, got {u.size} and {v.size}"
            )
        if u.size == 0:
            raise EmptyInputError("dataset has no rows")
        bad = ~(np.isfinite(u) & np.isfinite(v))
        if bad.any():
            raise ValidationError("non-finite value", row=int(np.argmax(bad)))
        u.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @classmethod
    def from_pairs(cls, rows: Iterable[tuple[float, float]]) -> "PairedDataset":
        rows = list(rows)
        if not rows:
            raise EmptyInputError("dataset has no rows")
        u, v = zip(*rows)
        return cls(np.asarray(u, dtype=float), np.asarray(v, dtype=float))

    @property
    def n(self) -> int:
        return int(self.u.size)

    def __len__(self):
        return self.n

    def __repr__(self):
        # never echo row-level values
        return f"PairedDataset(n={self.n})"

    def take(self, index) -> "PairedDataset":
        return PairedDataset(self.u[index], self.v[index])


class RankedRow(NamedTuple):
    index: int
    d: float
    s: int
    r: float


@dataclass(frozen=True)
class RankedTable:
    """Rows sorted by nondecreasing magnitude, with sign and midrank.

    ``index`` holds each row's position in the original dataset.
    """

    index: np.ndarray
    d: np.ndarray
    s: np.ndarray
    r: np.ndarray

    @property
    def n(self) -> int:
        return int(self.d.size)

    @property
    def rows(self) -> list[RankedRow]:
        return [
            RankedRow(int(i), float(d), int(s), float(r))
            for i, d, s, r in zip(self.index, self.d, self.s, self.r)
        ]

    @property
    def statistic(self) -> float:
        return float(np.dot(self.s, self.r))


def compute_signed_differences(dataset: PairedDataset) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(d, s)`` with ``d = |v - u|`` and ``s = sign(v - u)`` per row."""
    diff = dataset.v - dataset.u
    bad = ~np.isfinite(diff)
    if bad.any():
        raise ValidationError("difference v - u overflows", row=int(np.argmax(bad)))
    return np.abs(diff), np.sign(diff).astype(np.int8)


def _midranks_2d(values: np.ndarray) -> np.ndarray:
    """Midranks along the last axis of a 2-D array of magnitudes."""
    m, n = values.shape
    order = np.argsort(values, axis=1, kind="stable")
    sv = np.take_along_axis(values, order, axis=1)
    pos = np.broadcast_to(np.arange(n), (m, n))
    starts = np.ones((m, n), dtype=bool)
    starts[:, 1:] = sv[:, 1:] != sv[:, :-1]
    ends = np.ones((m, n), dtype=bool)
    ends[:, :-1] = starts[:, 1:]
    first = np.maximum.accumulate(np.where(starts, pos, 0), axis=1)
    last = np.minimum.accumulate(np.where(ends, pos, n)[:, ::-1], axis=1)[:, ::-1]
    sorted_ranks = (first + last) / 2.0 + 1.0
    ranks = np.empty_like(sorted_ranks)
    np.put_along_axis(ranks, order, sorted_ranks, axis=1)
    return ranks


def assign_midranks(magnitudes) -> np.ndarray:
    """Rank magnitudes from 1 to n, giving tied groups their average position.

    >>> assign_midranks([1, 2, 9, 9]).tolist()
    [1.0, 2.0, 3.5, 3.5]
    """
    x = np.asarray(magnitudes, dtype=np.float64).reshape(-1)
    if x.size == 0:
        raise EmptyInputError("cannot rank an empty list")
    if not np.isfinite(x).all() or (x < 0).any():
        bad = ~np.isfinite(x) | (x < 0)
        raise ValidationError("magnitude must be finite and >= 0", row=int(np.argmax(bad)))
    return _midranks_2d(x[None, :])[0]


def rank_table(dataset: PairedDataset, drop_zeros: bool = False) -> RankedTable:
    """Sorted ranking used by both statistics; handy for inspection."""
    d, s = compute_signed_differences(dataset)
    index = np.arange(dataset.n)
    if drop_zeros:
        keep = s != 0
        d, s, index = d[keep], s[keep], index[keep]
    if d.size == 0:
        empty = np.empty(0)
        return RankedTable(index.astype(int), empty, np.empty(0, np.int8), empty)
    r = assign_midranks(d)
    order = np.argsort(d, kind="stable")
    return RankedTable(index[order], d[order], s[order], r[order])


def wilcoxon_statistic(dataset: PairedDataset) -> tuple[float, int]:
    """Standard signed-rank statistic ``(w, n_r)``; zero differences are dropped.

    If every difference is zero the result is ``(0.0, 0)``.
    """
    table = rank_table(dataset, drop_zeros=True)
    return table.statistic, table.n


def pratt_statistic(dataset: PairedDataset) -> float:
    """Pratt signed-rank statistic: zeros keep their (lowest) ranks but add nothing."""
    d, s = compute_signed_differences(dataset)
    return float(np.dot(s, assign_midranks(d)))


def count_nonzero(dataset: PairedDataset) -> int:
    return int(np.count_nonzero(dataset.u != dataset.v))


class BatchStatistics(NamedTuple):
    pratt: np.ndarray
    standard: np.ndarray
    n_nonzero: np.ndarray


def batch_statistics(diffs) -> BatchStatistics:
    """Both statistics for every row of a ``(trials, n)`` array of ``v - u``.

    The standard statistic uses the fact that the z zero differences take
    ranks 1..z under the Pratt ranking, so each nonzero rank exceeds its
    drop-zeros rank by exactly z.
    """
    diffs = np.atleast_2d(np.asarray(diffs, dtype=np.float64))
    if diffs.shape[1] == 0:
        raise EmptyInputError("cannot rank an empty list")
    if not np.isfinite(diffs).all():
        raise ValidationError("non-finite difference in batch")
    signs = np.sign(diffs)
    pratt = np.einsum("ij,ij->i", signs, _midranks_2d(np.abs(diffs)))
    zeros = np.count_nonzero(signs == 0, axis=1)
    standard = pratt - zeros * signs.sum(axis=1)
    return BatchStatistics(pratt, standard, diffs.shape[1] - zeros)
