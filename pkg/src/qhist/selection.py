"""Set-selection criteria (preclusive and ordered consistent sets) and coevents."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .consistency import (
    MEDIUM,
    PARTITION_CAP,
    SUBSET_CAP,
    ConsistentSetRecord,
    Partition,
    enumerate_consistent_histories,
    enumerate_consistent_sets,
    is_consistent,
)
from .core import DecoherenceFunctional, Event, mask_key
from .errors import CapExceededError, InconsistentPartitionError
from .numerics import Scalar, Sign
from .preclusion import NullCatalog, enumerate_null_events

IMPLICATION = "implication"
BICONDITIONAL = "biconditional"


@dataclass(frozen=True)
class Verdict:
    holds: bool
    witness: Optional[tuple[Event, Event]] = None

    def __bool__(self) -> bool:
        return self.holds


def _require_consistent(d: DecoherenceFunctional, p: Partition, mode: str = MEDIUM) -> None:
    if not is_consistent(d, p, mode):
        raise InconsistentPartitionError(f"partition {p} is not a consistent set")


def is_pcs(d: DecoherenceFunctional, p: Partition, catalog: NullCatalog, mode: str = MEDIUM) -> Verdict:
    """Preclusive consistent set: no cell of non-zero measure sits inside a null event.

    On failure the witness is (cell, containing null).
    """
    _require_consistent(d, p, mode)
    return _pcs_verdict(d, p, catalog)


def _pcs_verdict(d: DecoherenceFunctional, p: Partition, catalog: NullCatalog) -> Verdict:
    for cell in p.cells:
        if d.is_zero(d.mu(cell)):
            continue
        z = catalog.containing_null(cell)
        if z is not None:
            return Verdict(False, (cell, z))
    return Verdict(True)


def _ocs_verdict(
    d: DecoherenceFunctional,
    p: Partition,
    ch: Sequence[Event],
    ch_mu: Sequence[Scalar],
    semantics: str,
) -> Verdict:
    for cell in p.cells:
        m = d.mu(cell)
        for h, mh in zip(ch, ch_mu):
            above = cell.mask & ~h.mask == 0
            below = h.mask & ~cell.mask == 0
            s = d.compare(mh, m)
            if semantics == IMPLICATION:
                bad = (above and s is Sign.NEGATIVE) or (below and s is Sign.POSITIVE)
            else:
                bad = above != (s is not Sign.NEGATIVE) or below != (s is not Sign.POSITIVE)
            if bad:
                return Verdict(False, (cell, h))
    return Verdict(True)


def is_ocs(
    d: DecoherenceFunctional,
    p: Partition,
    ch: Sequence[Event],
    semantics: str = IMPLICATION,
    mode: str = MEDIUM,
) -> Verdict:
    """Ordered consistent set: every cell's inclusion order agrees with the measure order on ``ch``.

    ``implication``: a consistent superset never has smaller measure and a
    consistent subset never has larger measure.  ``biconditional`` additionally
    requires the converse of both statements.  The witness is (cell, history).
    """
    if semantics not in (IMPLICATION, BICONDITIONAL):
        raise ValueError(f"unknown OCS semantics {semantics!r}")
    _require_consistent(d, p, mode)
    return _ocs_verdict(d, p, ch, [d.mu(h) for h in ch], semantics)


@dataclass(frozen=True)
class ClassificationRow:
    partition: Partition
    measures: tuple[Scalar, ...]
    pcs: Verdict
    ocs_implication: Verdict
    ocs_biconditional: Verdict
    consistent: bool = True

    def record(self) -> ConsistentSetRecord:
        return ConsistentSetRecord(self.partition, self.measures, True, self.pcs.holds, self.ocs_implication.holds)


@dataclass(frozen=True)
class ClassificationTable:
    rows: tuple[ClassificationRow, ...]
    catalog: NullCatalog
    consistent_histories: tuple[Event, ...]
    mode: str = MEDIUM

    def __len__(self) -> int:
        return len(self.rows)

    def pcs_rows(self) -> list[ClassificationRow]:
        return [r for r in self.rows if r.pcs.holds]

    def ocs_rows(self, semantics: str = IMPLICATION) -> list[ClassificationRow]:
        attr = "ocs_implication" if semantics == IMPLICATION else "ocs_biconditional"
        return [r for r in self.rows if getattr(r, attr).holds]


def classify_all(
    d: DecoherenceFunctional,
    mode: str = MEDIUM,
    *,
    partition_cap: int = PARTITION_CAP,
    subset_cap: int = SUBSET_CAP,
    workers: int = 1,
) -> ClassificationTable:
    catalog = enumerate_null_events(d, subset_cap)
    ch = enumerate_consistent_histories(d, mode, subset_cap)
    ch_mu = [d.mu(h) for h in ch]
    rows = []
    for rec in enumerate_consistent_sets(d, mode, partition_cap, workers):
        p = rec.partition
        rows.append(
            ClassificationRow(
                partition=p,
                measures=rec.measures,
                pcs=_pcs_verdict(d, p, catalog),
                ocs_implication=_ocs_verdict(d, p, ch, ch_mu, IMPLICATION),
                ocs_biconditional=_ocs_verdict(d, p, ch, ch_mu, BICONDITIONAL),
            )
        )
    return ClassificationTable(tuple(rows), catalog, tuple(ch), mode)


# -- coevents ----------------------------------------------------------------

@dataclass(frozen=True)
class Coevent:
    """A minimal preclusive event."""

    support: Event

    def __str__(self) -> str:
        return str(self.support)


def _preclusive_flags(d: DecoherenceFunctional, catalog: NullCatalog) -> np.ndarray:
    masks = np.arange(1 << d.n, dtype=np.int64)
    covered = np.zeros(len(masks), dtype=bool)
    for z in catalog.maximal_nulls:
        covered |= (masks & ~np.int64(z.mask)) == 0
    flags = ~covered
    flags[0] = False
    return flags


def enumerate_coevents(
    d: DecoherenceFunctional, catalog: Optional[NullCatalog] = None, cap: int = SUBSET_CAP
) -> list[Coevent]:
    """All events that are preclusive while none of their proper non-empty subsets is.

    Preclusivity is upward closed, so it suffices to check the subsets obtained
    by removing one history.
    """
    if d.n > cap:
        raise CapExceededError("coevent scan", d.n, cap, 1 << d.n)
    if catalog is None:
        catalog = enumerate_null_events(d, cap)
    prec = _preclusive_flags(d, catalog)
    masks = np.arange(1 << d.n, dtype=np.int64)
    minimal = prec.copy()
    for i in range(d.n):
        bit = np.int64(1 << i)
        has = (masks & bit) != 0
        sub = masks & ~bit
        minimal &= ~(has & (sub != 0) & prec[sub])
    found = sorted((int(m) for m in np.nonzero(minimal)[0]), key=mask_key)
    return [Coevent(Event(d.space, m)) for m in found]


def coevent_valuation(c: Coevent, b: Event) -> bool:
    """Truth value the coevent assigns to ``b``: True iff the support lies inside ``b``."""
    return c.support.issubset(b)


@dataclass(frozen=True)
class CompatibilityReport:
    checked_sets: int
    checked_cells: int
    violations: tuple[tuple[Partition, Event], ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def check_pcs_coevent_compatibility(
    d: DecoherenceFunctional,
    table: Optional[ClassificationTable] = None,
    coevents: Optional[Sequence[Coevent]] = None,
) -> CompatibilityReport:
    """Every non-null cell of every preclusive consistent set must contain a coevent."""
    table = table if table is not None else classify_all(d)
    coevents = coevents if coevents is not None else enumerate_coevents(d, table.catalog)
    supports = [c.support.mask for c in coevents]
    violations = []
    sets = cells = 0
    for row in table.pcs_rows():
        sets += 1
        for cell, m in zip(row.partition.cells, row.measures):
            if d.is_zero(m):
                continue
            cells += 1
            if not any(s & ~cell.mask == 0 for s in supports):
                violations.append((row.partition, cell))
    return CompatibilityReport(sets, cells, tuple(violations))


# -- truth-value audits ------------------------------------------------------

@dataclass(frozen=True)
class Property3Violation:
    """``s`` has measure one in ``cs1`` but its coarsening ``s_prime`` has measure below one in ``cs2``."""

    s: Event
    s_prime: Event
    cs1: Partition
    cs2: Partition
    mu_s_prime: Scalar


def audit_property3(
    d: DecoherenceFunctional, table: ClassificationTable, restrict_to_pcs: bool = False
) -> list[Property3Violation]:
    rows = table.pcs_rows() if restrict_to_pcs else list(table.rows)
    cells = [(c, m, r.partition) for r in rows for c, m in zip(r.partition.cells, r.measures)]
    certain = [(c, p) for c, m, p in cells if d.is_one(m)]
    out = []
    for s, cs1 in certain:
        for s2, m2, cs2 in cells:
            if s.mask & ~s2.mask == 0 and d.compare(m2, 1) is Sign.NEGATIVE:
                out.append(Property3Violation(s, s2, cs1, cs2, m2))
    return out


@dataclass(frozen=True)
class TruthValueViolation:
    event: Event
    context: Partition
    expected: bool


def audit_properties_1_2(d: DecoherenceFunctional, table: ClassificationTable) -> list[TruthValueViolation]:
    """For each certain consistent history S (complement pair {S, not S} consistent, mu(S) = 1):
    every consistent set with S as a cell must give it measure one, and every one
    with not S as a cell must give it measure zero.
    """
    certain = {h.mask for h in table.consistent_histories if not h.is_empty() and d.is_one(d.mu(h))}
    full = d.space.full_mask
    out = []
    for row in table.rows:
        for cell, m in zip(row.partition.cells, row.measures):
            if cell.mask in certain and not d.is_one(m):
                out.append(TruthValueViolation(cell, row.partition, True))
            if (full ^ cell.mask) in certain and not d.is_zero(m):
                out.append(TruthValueViolation(cell, row.partition, False))
    return out
