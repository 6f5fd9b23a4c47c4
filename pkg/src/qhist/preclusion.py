"""Null events, preclusion, zero covers and contrary inferences."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .consistency import SUBSET_CAP, Partition, enumerate_consistent_histories, is_consistent
from .core import DecoherenceFunctional, Event, mask_key
from .errors import CapExceededError


@dataclass(frozen=True)
class NullCatalog:
    """Every non-empty event of measure zero and the inclusion-maximal ones among them.

    ``borderline`` lists events (float backend only) whose measure lies just above
    the zero threshold, between one and ten tolerances.
    """

    nulls: tuple[Event, ...]
    maximal_nulls: tuple[Event, ...]
    borderline: tuple[Event, ...] = ()

    def __len__(self) -> int:
        return len(self.nulls)

    def containing_null(self, a: Event) -> Optional[Event]:
        for z in self.maximal_nulls:
            if a.mask & ~z.mask == 0:
                return z
        return None


def _maximal(masks: list[int]) -> list[int]:
    kept: list[int] = []
    for m in sorted(masks, key=lambda x: (-bin(x).count("1"), mask_key(x))):
        if not any(m & ~k == 0 for k in kept):
            kept.append(m)
    return sorted(kept, key=mask_key)


def enumerate_null_events(d: DecoherenceFunctional, cap: int = SUBSET_CAP) -> NullCatalog:
    n = d.n
    if n > cap:
        raise CapExceededError("null-event scan", n, cap, 1 << n)
    total = 1 << n
    chunk = 1 << 14
    nulls: list[int] = []
    border: list[int] = []
    for start in range(0, total, chunk):
        masks = np.arange(max(start, 1), min(total, start + chunk), dtype=np.int64)
        if not len(masks):
            continue
        raw = d.forms(masks, masks)
        zero = d.zero_flags(raw)
        nulls.extend(int(m) for m in masks[zero])
        if not d.is_exact:
            near = (~zero) & d.zero_flags(raw, slack=10.0)
            border.extend(int(m) for m in masks[near])
    nulls.sort(key=mask_key)
    border.sort(key=mask_key)
    wrap = lambda ms: tuple(Event(d.space, m) for m in ms)
    return NullCatalog(wrap(nulls), wrap(_maximal(nulls)), wrap(border))


def is_preclusive(catalog: NullCatalog, a: Event) -> bool:
    """True iff ``a`` lies inside no null event (checked against the maximal ones)."""
    if a.is_empty():
        raise ValueError("preclusivity is defined for non-empty events only")
    return catalog.containing_null(a) is None


def is_zero_cover(catalog: NullCatalog, family) -> bool:
    """Full-family check: every member null and the union is the whole space."""
    family = list(family)
    if not family:
        return False
    null_masks = {z.mask for z in catalog.nulls}
    union = 0
    for z in family:
        if z.mask not in null_masks:
            return False
        union |= z.mask
    return union == family[0].space.full_mask


def _is_minimal_cover(members: tuple[int, ...]) -> bool:
    for k, m in enumerate(members):
        others = 0
        for j, o in enumerate(members):
            if j != k:
                others |= o
        if m & ~others == 0:
            return False
    return True


def find_zero_covers(catalog: NullCatalog, max_family_size: int) -> list[tuple[Event, ...]]:
    """All inclusion-minimal families of null events (at most ``max_family_size``) covering the space.

    Branches on the lowest uncovered history, so every minimal cover is reached
    through the member that covers that history.
    """
    if max_family_size < 2:
        raise ValueError("zero covers need max_family_size >= 2")
    if not catalog.nulls:
        return []
    space = catalog.nulls[0].space
    full = space.full_mask
    masks = [z.mask for z in catalog.nulls]
    by_bit = {i: [m for m in masks if m >> i & 1] for i in range(space.n)}
    found: set[tuple[int, ...]] = set()

    def grow(chosen: list[int], covered: int) -> None:
        if covered == full:
            fam = tuple(sorted(chosen, key=mask_key))
            if _is_minimal_cover(fam):
                found.add(fam)
            return
        if len(chosen) == max_family_size:
            return
        low = (~covered & full) & -(~covered & full)
        bit = low.bit_length() - 1
        for m in by_bit[bit]:
            if m in chosen:
                continue
            chosen.append(m)
            grow(chosen, covered | m)
            chosen.pop()

    grow([], 0)
    ordered = sorted(found, key=lambda fam: (len(fam), [mask_key(m) for m in fam]))
    return [tuple(Event(space, m) for m in fam) for fam in ordered]


@dataclass(frozen=True)
class ContraryWitness:
    """Two disjoint, non-complementary events, each of measure one in its own consistent set."""

    p: Event
    q: Event
    cs_p: Partition
    cs_q: Partition

    def key(self) -> frozenset[int]:
        return frozenset((self.p.mask, self.q.mask))

    def check(self, d: DecoherenceFunctional) -> bool:
        return (
            self.p.isdisjoint(self.q)
            and not (self.p | self.q).is_full()
            and d.is_one(d.mu(self.p))
            and d.is_one(d.mu(self.q))
            and self.p in self.cs_p.cells
            and self.q in self.cs_q.cells
            and is_consistent(d, self.cs_p)
            and is_consistent(d, self.cs_q)
        )


def is_contradictory(a: Event, b: Event) -> bool:
    return a.isdisjoint(b) and (a | b).is_full()


def is_contrary(a: Event, b: Event) -> bool:
    return a.isdisjoint(b) and not (a | b).is_full()


def _complement_pair(e: Event) -> Partition:
    return Partition(e.space, (e, e.complement()))


def two_cover_witnesses(d: DecoherenceFunctional, catalog: Optional[NullCatalog] = None) -> list[ContraryWitness]:
    """One witness per two-member zero cover {Z1, Z2}: P = not Z1, Q = not Z2."""
    if catalog is None:
        catalog = enumerate_null_events(d)
    out = []
    for z1, z2 in find_zero_covers(catalog, 2):
        p, q = z1.complement(), z2.complement()
        if not is_contrary(p, q):
            continue
        out.append(ContraryWitness(p, q, _complement_pair(z1), _complement_pair(z2)))
    return out


def direct_contrary_search(d: DecoherenceFunctional, ch: Optional[list[Event]] = None) -> list[ContraryWitness]:
    """Pairs of measure-one consistent histories that are disjoint but not complementary."""
    ch = ch if ch is not None else enumerate_consistent_histories(d)
    ones = [h for h in ch if not h.is_empty() and d.is_one(d.mu(h))]
    out = []
    for i, p in enumerate(ones):
        for q in ones[i + 1:]:
            if is_contrary(p, q):
                out.append(ContraryWitness(p, q, _complement_pair(p.complement()), _complement_pair(q.complement())))
    return out


def detect_contrary_inferences(
    d: DecoherenceFunctional,
    catalog: Optional[NullCatalog] = None,
    ch: Optional[list[Event]] = None,
) -> list[ContraryWitness]:
    """Witnesses from two-member zero covers, topped up by the direct search.

    The two routes coincide for strongly positive functionals; anything found
    only by the direct search is appended after the zero-cover witnesses.
    """
    witnesses = two_cover_witnesses(d, catalog)
    seen = {w.key() for w in witnesses}
    for w in direct_contrary_search(d, ch):
        if w.key() not in seen:
            witnesses.append(w)
            seen.add(w.key())
    return witnesses
