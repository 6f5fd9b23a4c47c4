"""Command-line front end.

Exit codes: 0 success, 1 I/O error, 2 schema or validation failure,
3 refusal because a size cap was exceeded.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import reports
from .consistency import MEDIUM, PARTITION_CAP, SUBSET_CAP, WEAK, enumerate_consistent_sets
from .core import DEFAULT_EPSILON, DecoherenceFunctional, compose, parse_event, validate
from .errors import CapExceededError, InconsistentPartitionError, InvalidFunctionalError, QHistError
from .modelfile import dumps, functional_from_document, functional_to_document, load_document
from .preclusion import detect_contrary_inferences, enumerate_null_events, find_zero_covers
from .selection import (
    BICONDITIONAL,
    IMPLICATION,
    audit_properties_1_2,
    audit_property3,
    check_pcs_coevent_compatibility,
    classify_all,
    enumerate_coevents,
)

log = logging.getLogger("qhist")

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_CAP = 0, 1, 2, 3


class _Failed(Exception):
    def __init__(self, code: int, message: str) -> None:
        self.code = code
        super().__init__(message)


def _caps(args) -> tuple[int, int]:
    if args.max_n is None:
        return PARTITION_CAP, SUBSET_CAP
    if args.max_n > PARTITION_CAP and not args.allow_large:
        raise _Failed(EXIT_CAP, f"--max-n {args.max_n} is above the default cap {PARTITION_CAP}; pass --allow-large to proceed")
    return args.max_n, max(SUBSET_CAP, args.max_n) if args.allow_large else SUBSET_CAP


def _load(args, path: str, *, allow_invalid: bool = False) -> tuple[DecoherenceFunctional, dict]:
    doc = load_document(path)
    if args.epsilon is not None and isinstance(doc, dict):
        doc = {**doc, "epsilon": args.epsilon}
    return functional_from_document(doc, allow_invalid=allow_invalid), doc


def _name(doc: dict, path: str) -> str:
    return doc.get("name") or Path(path).stem


# -- commands ----------------------------------------------------------------

def cmd_validate(args) -> tuple[dict, int]:
    d, doc = _load(args, args.model, allow_invalid=True)
    report = validate(d)
    out = reports.header("validate", d, _name(doc, args.model))
    out["validation"] = reports.validation(report)
    return out, EXIT_OK if report.ok else EXIT_INVALID


def cmd_measure(args) -> tuple[dict, int]:
    d, doc = _load(args, args.model)
    out = reports.header("measure", d, _name(doc, args.model))
    results = []
    for expr in args.events:
        e = parse_event(d.space, expr)
        results.append({"expression": expr, "event": reports.event(e), "mu": reports.render_scalar(d.mu(e))})
    out["measures"] = results
    return out, EXIT_OK


def cmd_consistent_sets(args) -> tuple[dict, int]:
    d, doc = _load(args, args.model)
    pcap, _ = _caps(args)
    records = enumerate_consistent_sets(d, args.mode, pcap, args.workers)
    out = reports.header("consistent-sets", d, _name(doc, args.model))
    out["consistent_sets"] = reports.consistent_sets(records, args.mode)
    return out, EXIT_OK


def cmd_nulls(args) -> tuple[dict, int]:
    d, doc = _load(args, args.model)
    _, scap = _caps(args)
    out = reports.header("nulls", d, _name(doc, args.model))
    out["null_catalog"] = reports.null_catalog(enumerate_null_events(d, scap))
    return out, EXIT_OK


def cmd_zero_covers(args) -> tuple[dict, int]:
    d, doc = _load(args, args.model)
    _, scap = _caps(args)
    catalog = enumerate_null_events(d, scap)
    out = reports.header("zero-covers", d, _name(doc, args.model))
    out["zero_covers"] = reports.zero_covers(find_zero_covers(catalog, args.max_family), args.max_family)
    return out, EXIT_OK


def cmd_classify(args) -> tuple[dict, int]:
    d, doc = _load(args, args.model)
    pcap, scap = _caps(args)
    table = classify_all(d, args.mode, partition_cap=pcap, subset_cap=scap, workers=args.workers)
    coev = enumerate_coevents(d, table.catalog, scap)
    out = reports.header("classify", d, _name(doc, args.model))
    out["validation"] = reports.validation(validate(d))
    out["null_catalog"] = reports.null_catalog(table.catalog)
    out["zero_covers"] = reports.zero_covers(find_zero_covers(table.catalog, args.max_family), args.max_family)
    out["classification"] = reports.classification(table, args.ocs_semantics)
    out["contrary_witnesses"] = reports.contrary(
        detect_contrary_inferences(d, table.catalog, list(table.consistent_histories))
    )
    out["coevents"] = reports.coevents(coev)
    out["pcs_coevent_compatibility"] = reports.compatibility(check_pcs_coevent_compatibility(d, table, coev))
    out["property3"] = {
        "all_sets": reports.property3(audit_property3(d, table)),
        "pcs_only": reports.property3(audit_property3(d, table, restrict_to_pcs=True)),
    }
    out["certain_history_audit"] = reports.truth_values(audit_properties_1_2(d, table))
    return out, EXIT_OK


def cmd_coevents(args) -> tuple[dict, int]:
    d, doc = _load(args, args.model)
    _, scap = _caps(args)
    events = [parse_event(d.space, e) for e in args.events]
    out = reports.header("coevents", d, _name(doc, args.model))
    out["coevents"] = reports.coevents(enumerate_coevents(d, None, scap), events)
    return out, EXIT_OK


def cmd_contrary(args) -> tuple[dict, int]:
    d, doc = _load(args, args.model)
    _, scap = _caps(args)
    catalog = enumerate_null_events(d, scap)
    out = reports.header("contrary", d, _name(doc, args.model))
    out["contrary_witnesses"] = reports.contrary(detect_contrary_inferences(d, catalog))
    return out, EXIT_OK


def cmd_compose(args) -> tuple[dict, int]:
    d1, doc1 = _load(args, args.model)
    d2, doc2 = _load(args, args.model2)
    d = compose(d1, d2)
    name = f"{_name(doc1, args.model)} x {_name(doc2, args.model2)}"
    Path(args.out).write_text(dumps(functional_to_document(d, name)), encoding="utf-8")
    out = reports.header("compose", d, name)
    out["written"] = str(args.out)
    out["validation"] = reports.validation(validate(d))
    return out, EXIT_OK if d.report is None or d.report.ok else EXIT_INVALID


# -- text rendering ----------------------------------------------------------

def _fmt_leaf(v) -> str:
    if isinstance(v, list) and all(isinstance(x, str) for x in v):
        return "{" + ", ".join(v) + "}"
    if isinstance(v, list) and all(isinstance(x, list) and all(isinstance(y, str) for y in x) for x in v) and v:
        return "{" + ", ".join(_fmt_leaf(x) for x in v) + "}"
    if v is None:
        return "-"
    return str(v).lower() if isinstance(v, bool) else str(v)


def to_text(doc, indent: int = 0) -> str:
    """Indented plain-text view of a report."""
    pad = "  " * indent
    lines = []
    if isinstance(doc, dict):
        for k, v in doc.items():
            if isinstance(v, (dict, list)) and not _is_leafy(v):
                lines.append(f"{pad}{k}:")
                lines.append(to_text(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {_fmt_leaf(v)}")
    elif isinstance(doc, list):
        if not doc:
            lines.append(f"{pad}(none)")
        for item in doc:
            if isinstance(item, dict):
                body = to_text(item, indent + 1).lstrip()
                lines.append(f"{pad}- {body}")
            else:
                lines.append(f"{pad}- {_fmt_leaf(item)}")
    return "\n".join(l for l in lines if l)


def _is_leafy(v) -> bool:
    if isinstance(v, dict):
        return False
    if all(isinstance(x, (str, int, float, bool)) or x is None for x in v):
        return True
    return all(isinstance(x, list) and all(isinstance(y, str) for y in x) for x in v) and len(v) <= 1


# -- argument parsing --------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--epsilon", type=float, default=None, help=f"float-backend relative tolerance (default {DEFAULT_EPSILON:g})")
    common.add_argument("--workers", type=int, default=1, help="worker processes for consistent-set enumeration")
    common.add_argument("--max-n", type=int, default=None, help=f"history-count cap (default {PARTITION_CAP} for partitions)")
    common.add_argument("--allow-large", action="store_true", help="acknowledge a cap above the defaults")
    common.add_argument("--mode", choices=(MEDIUM, WEAK), default=MEDIUM, help="decoherence condition")
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("-o", "--output", default=None, help="write the report here instead of stdout")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="qhist", description="Consistent-histories and quantum-measure analyses of finite models.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("model", help="model JSON file, or a shipped fixture name")
        p.set_defaults(func=func)
        return p

    add("validate", cmd_validate, "check Hermiticity, normalization and positivity")
    p = add("measure", cmd_measure, "quantum measure of events such as h1+h2")
    p.add_argument("events", nargs="+")
    add("consistent-sets", cmd_consistent_sets, "enumerate all consistent partitions")
    add("nulls", cmd_nulls, "list every null event")
    p = add("zero-covers", cmd_zero_covers, "minimal families of null events covering the space")
    p.add_argument("--max-family", type=int, default=2)
    p = add("classify", cmd_classify, "full report: consistent sets, PCS and OCS flags, coevents, audits")
    p.add_argument("--ocs-semantics", choices=(IMPLICATION, BICONDITIONAL), default=IMPLICATION)
    p.add_argument("--max-family", type=int, default=2)
    p = add("coevents", cmd_coevents, "minimal preclusive events and their valuations")
    p.add_argument("--events", nargs="*", default=[], help="events to evaluate each coevent on")
    add("contrary", cmd_contrary, "pairs of contrary events each certain in some consistent set")
    p = add("compose", cmd_compose, "write the product of two models as a matrix model")
    p.add_argument("model2")
    p.add_argument("out")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        doc, code = args.func(args)
    except _Failed as exc:
        print(f"qhist: {exc}", file=sys.stderr)
        return exc.code
    except CapExceededError as exc:
        print(f"qhist: refused: {exc}; raise --max-n with --allow-large to proceed", file=sys.stderr)
        return EXIT_CAP
    except InvalidFunctionalError as exc:
        print(f"qhist: invalid functional: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (QHistError, InconsistentPartitionError, ValueError) as exc:
        print(f"qhist: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"qhist: {exc}", file=sys.stderr)
        return EXIT_IO
    text = dumps(doc) if args.format == "json" else to_text(doc) + "\n"
    try:
        if args.output:
            Path(args.output).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"qhist: {exc}", file=sys.stderr)
        return EXIT_IO
    return code


if __name__ == "__main__":
    sys.exit(main())
