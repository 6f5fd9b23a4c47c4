"""JSON-ready report builders shared by the command-line front end.

Events render as label lists, partitions as lists of those, scalars through
:func:`~qhist.numerics.render_scalar`.  Key order is fixed so that equal
inputs give byte-identical output.
"""
from __future__ import annotations

from typing import Optional, Sequence

from .consistency import MEDIUM, ConsistentSetRecord, Partition
from .core import DecoherenceFunctional, Event, ValidationReport
from .numerics import render_scalar
from .preclusion import ContraryWitness, NullCatalog
from .selection import (
    IMPLICATION,
    ClassificationTable,
    Coevent,
    CompatibilityReport,
    Property3Violation,
    TruthValueViolation,
    Verdict,
    coevent_valuation,
)

SCHEMA_VERSION = 1


def event(e: Event) -> list[str]:
    return list(e.labels)


def partition(p: Partition) -> list[list[str]]:
    return [event(c) for c in p.cells]


def header(command: str, d: DecoherenceFunctional, name: Optional[str] = None) -> dict:
    model = {"name": name, "backend": d.backend, "n": d.n, "labels": list(d.labels)}
    if not d.is_exact:
        model["epsilon"] = d.epsilon
    return {"schema_version": SCHEMA_VERSION, "command": command, "model": model}


def validation(r: ValidationReport) -> dict:
    return {"ok": r.ok, **r.as_dict()}


def null_catalog(c: NullCatalog) -> dict:
    return {
        "count": len(c.nulls),
        "nulls": [event(z) for z in c.nulls],
        "maximal_nulls": [event(z) for z in c.maximal_nulls],
        "borderline": [event(z) for z in c.borderline],
    }


def zero_covers(covers: Sequence[tuple[Event, ...]], max_family: int) -> dict:
    return {"max_family": max_family, "count": len(covers), "covers": [[event(z) for z in fam] for fam in covers]}


def consistent_sets(records: Sequence[ConsistentSetRecord], mode: str = MEDIUM) -> dict:
    return {
        "mode": mode,
        "count": len(records),
        "sets": [
            {"cells": partition(r.partition), "measures": [render_scalar(m) for m in r.measures]}
            for r in records
        ],
    }


def _verdict(v: Verdict, names: tuple[str, str]) -> dict:
    out: dict = {"holds": v.holds}
    if not v.holds and v.witness is not None:
        out["witness"] = {names[0]: event(v.witness[0]), names[1]: event(v.witness[1])}
    return out


def contrary(witnesses: Sequence[ContraryWitness]) -> list[dict]:
    return [
        {"p": event(w.p), "q": event(w.q), "cs_p": partition(w.cs_p), "cs_q": partition(w.cs_q)}
        for w in witnesses
    ]


def coevents(cs: Sequence[Coevent], events: Sequence[Event] = ()) -> dict:
    out: dict = {"count": len(cs), "coevents": [event(c.support) for c in cs]}
    if events:
        out["events"] = [event(e) for e in events]
        out["valuation"] = [[coevent_valuation(c, e) for e in events] for c in cs]
    return out


def compatibility(r: CompatibilityReport) -> dict:
    return {
        "ok": r.ok,
        "checked_sets": r.checked_sets,
        "checked_cells": r.checked_cells,
        "violations": [{"set": partition(p), "cell": event(c)} for p, c in r.violations],
    }


def property3(violations: Sequence[Property3Violation]) -> dict:
    return {
        "count": len(violations),
        "violations": [
            {
                "s": event(v.s),
                "s_prime": event(v.s_prime),
                "cs1": partition(v.cs1),
                "cs2": partition(v.cs2),
                "mu_s_prime": render_scalar(v.mu_s_prime),
            }
            for v in violations
        ],
    }


def truth_values(violations: Sequence[TruthValueViolation]) -> dict:
    return {
        "count": len(violations),
        "violations": [
            {"event": event(v.event), "context": partition(v.context), "expected_true": v.expected}
            for v in violations
        ],
    }


def classification(table: ClassificationTable, semantics: str = IMPLICATION) -> dict:
    rows = []
    for r in table.rows:
        chosen = r.ocs_implication if semantics == IMPLICATION else r.ocs_biconditional
        rows.append(
            {
                "cells": partition(r.partition),
                "measures": [render_scalar(m) for m in r.measures],
                "pcs": _verdict(r.pcs, ("cell", "null")),
                "ocs": _verdict(chosen, ("cell", "history")),
                "ocs_implication": _verdict(r.ocs_implication, ("cell", "history")),
                "ocs_biconditional": _verdict(r.ocs_biconditional, ("cell", "history")),
            }
        )
    return {
        "mode": table.mode,
        "ocs_semantics": semantics,
        "count": len(table.rows),
        "pcs_count": len(table.pcs_rows()),
        "ocs_count": len(table.ocs_rows(semantics)),
        "consistent_histories": [event(h) for h in table.consistent_histories],
        "sets": rows,
    }
