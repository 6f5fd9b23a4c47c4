"""Partitions, the decoherence condition and consistent-set enumeration."""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import DecoherenceFunctional, Event, HistorySpace, mask_key, mask_members
from .errors import CapExceededError, InconsistentPartitionError, SpaceMismatchError
from .numerics import Scalar

log = logging.getLogger(__name__)

MEDIUM = "medium"
WEAK = "weak"
PARTITION_CAP = 12
SUBSET_CAP = 24


def _weak(mode: str) -> bool:
    if mode not in (MEDIUM, WEAK):
        raise ValueError(f"mode must be {MEDIUM!r} or {WEAK!r}, got {mode!r}")
    return mode == WEAK


def bell_number(n: int) -> int:
    row = [1]
    for _ in range(n):
        new = [row[-1]]
        for x in row:
            new.append(new[-1] + x)
        row = new
    return row[0]


@dataclass(frozen=True)
class Partition:
    """Disjoint non-empty cells covering the space, sorted by smallest member."""

    space: HistorySpace
    cells: tuple[Event, ...]

    def __post_init__(self) -> None:
        cells = tuple(sorted(self.cells, key=lambda e: e.members[0] if e.mask else -1))
        seen = 0
        for c in cells:
            if c.space != self.space:
                raise SpaceMismatchError("partition cell from another history space")
            if c.is_empty():
                raise ValueError("partition cells must be non-empty")
            if seen & c.mask:
                raise ValueError("partition cells overlap")
            seen |= c.mask
        if seen != self.space.full_mask:
            raise ValueError("partition cells do not cover the history space")
        object.__setattr__(self, "cells", cells)

    @classmethod
    def from_masks(cls, space: HistorySpace, masks: Iterable[int]) -> "Partition":
        return cls(space, tuple(Event(space, m) for m in masks))

    @classmethod
    def of(cls, space: HistorySpace, *cells: Sequence[str]) -> "Partition":
        return cls(space, tuple(space.event(*c) for c in cells))

    @classmethod
    def trivial(cls, space: HistorySpace) -> "Partition":
        return cls(space, (space.full(),))

    @property
    def masks(self) -> tuple[int, ...]:
        return tuple(c.mask for c in self.cells)

    def rgs(self) -> tuple[int, ...]:
        """Restricted growth string: block index of every history."""
        out = [0] * self.space.n
        for k, c in enumerate(self.cells):
            for i in c.members:
                out[i] = k
        return tuple(out)

    def merge(self, i: int, j: int) -> "Partition":
        cells = list(self.cells)
        merged = cells[i] | cells[j]
        rest = [c for k, c in enumerate(cells) if k not in (i, j)]
        return Partition(self.space, tuple(rest + [merged]))

    def __len__(self) -> int:
        return len(self.cells)

    def __iter__(self):
        return iter(self.cells)

    def __str__(self) -> str:
        return "{" + ", ".join(str(c) for c in self.cells) + "}"


@dataclass(frozen=True)
class ConsistentSetRecord:
    partition: Partition
    measures: tuple[Scalar, ...]
    is_consistent: bool = True
    is_pcs: Optional[bool] = None
    is_ocs: Optional[bool] = None

    def with_flags(self, **flags) -> "ConsistentSetRecord":
        return replace(self, **flags)


def _check_partition(d: DecoherenceFunctional, p: Partition) -> None:
    if p.space != d.space:
        raise SpaceMismatchError("partition does not belong to this functional's history space")


def is_consistent(d: DecoherenceFunctional, p: Partition, mode: str = MEDIUM) -> bool:
    """Every pair of distinct cells has ``D(A, B) = 0`` (only the real part in weak mode)."""
    _check_partition(d, p)
    weak = _weak(mode)
    masks = p.masks
    return all(d.pair_is_zero(masks[i], masks[j], weak) for i in range(len(masks)) for j in range(i + 1, len(masks)))


def is_consistent_history(d: DecoherenceFunctional, h: Event, mode: str = MEDIUM) -> bool:
    """``h`` decoheres with its complement; the empty and full events always qualify."""
    if h.space != d.space:
        raise SpaceMismatchError("event does not belong to this functional's history space")
    return d.pair_is_zero(h.mask, h.complement().mask, _weak(mode))


def _consistent_history_flags(d: DecoherenceFunctional, weak: bool, slack: float = 1.0) -> np.ndarray:
    n = d.n
    total = 1 << n
    full = (1 << n) - 1
    flags = np.empty(total, dtype=bool)
    chunk = 1 << 14
    for start in range(0, total, chunk):
        masks = np.arange(start, min(total, start + chunk), dtype=np.int64)
        raw = d.forms(masks, full ^ masks)
        flags[start:start + len(masks)] = d.zero_flags(raw, weak, slack)
    return flags


def enumerate_consistent_histories(
    d: DecoherenceFunctional, mode: str = MEDIUM, cap: int = SUBSET_CAP
) -> list[Event]:
    if d.n > cap:
        raise CapExceededError("consistent-history scan", d.n, cap, 1 << d.n)
    flags = _consistent_history_flags(d, _weak(mode))
    masks = sorted((int(m) for m in np.nonzero(flags)[0]), key=mask_key)
    return [Event(d.space, m) for m in masks]


# -- partition enumeration ---------------------------------------------------

def _search(d, weak, cell_ok, remaining: int, cells: list[int], out: list[tuple[int, ...]]) -> None:
    if remaining == 0:
        out.append(tuple(cells))
        return
    low = remaining & -remaining
    rest = remaining ^ low
    sub = rest
    while True:
        cell = low | sub
        if cell_ok[cell] and all(d.pair_is_zero(cell, c, weak) for c in cells):
            cells.append(cell)
            _search(d, weak, cell_ok, remaining ^ cell, cells, out)
            cells.pop()
        if sub == 0:
            break
        sub = (sub - 1) & rest


def _search_from(args) -> list[tuple[int, ...]]:
    d, weak, cell_ok, first = args
    out: list[tuple[int, ...]] = []
    _search(d, weak, cell_ok, d.space.full_mask ^ first, [first], out)
    return out


def _rgs_of_masks(masks: tuple[int, ...], n: int) -> tuple[int, ...]:
    out = [0] * n
    for k, m in enumerate(sorted(masks, key=lambda x: x & -x)):
        for i in mask_members(m):
            out[i] = k
    return tuple(out)


def consistent_partition_masks(
    d: DecoherenceFunctional, mode: str = MEDIUM, cap: int = PARTITION_CAP, workers: int = 1
) -> list[tuple[int, ...]]:
    """All consistent partitions as mask tuples, sorted by restricted growth string.

    Cells are grown one at a time (each new cell holds the smallest unassigned
    history) and tested only against the cells already placed.  A cell must
    also decohere from its complement, which prunes most of the lattice early.
    """
    n = d.n
    if n > cap:
        raise CapExceededError("consistent-set enumeration", n, cap, bell_number(n))
    weak = _weak(mode)
    cell_ok = _consistent_history_flags(d, weak, slack=float(n))
    full = d.space.full_mask
    rest = full ^ 1
    firsts = []
    sub = rest
    while True:
        if cell_ok[1 | sub]:
            firsts.append(1 | sub)
        if sub == 0:
            break
        sub = (sub - 1) & rest
    tasks = [(d, weak, cell_ok, f) for f in firsts]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_search_from, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        chunks = [_search_from(t) for t in tasks]
    found = [tuple(sorted(p, key=lambda x: x & -x)) for chunk in chunks for p in chunk]
    found.sort(key=lambda p: _rgs_of_masks(p, n))
    log.debug("found %d consistent partitions over n=%d", len(found), n)
    return found


def cell_measures(d: DecoherenceFunctional, p: Partition) -> tuple[Scalar, ...]:
    return tuple(d.mu(c) for c in p.cells)


def enumerate_consistent_sets(
    d: DecoherenceFunctional, mode: str = MEDIUM, cap: int = PARTITION_CAP, workers: int = 1
) -> list[ConsistentSetRecord]:
    records = []
    for masks in consistent_partition_masks(d, mode, cap, workers):
        p = Partition.from_masks(d.space, masks)
        records.append(ConsistentSetRecord(p, cell_measures(d, p)))
    return records


def probabilities(d: DecoherenceFunctional, p: Partition, mode: str = MEDIUM) -> dict[Event, Scalar]:
    if not is_consistent(d, p, mode):
        raise InconsistentPartitionError(f"partition {p} is not a consistent set")
    return {c: d.mu(c) for c in p.cells}


def is_coarse_graining(coarse: Partition, fine: Partition) -> bool:
    """True iff every cell of ``coarse`` is a union of cells of ``fine``."""
    if coarse.space != fine.space:
        raise SpaceMismatchError("partitions over different history spaces")
    return all(any(f.mask & ~c.mask == 0 for c in coarse.cells) for f in fine.cells)
