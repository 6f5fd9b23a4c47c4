"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or directly as a script.
"""
import time
from fractions import Fraction

import numpy as np
import pytest

from qhist import (
    IMPLICATION,
    Partition,
    build_from_amplitudes,
    build_from_operators,
    check_pcs_coevent_compatibility,
    classify_all,
    detect_contrary_inferences,
    enumerate_coevents,
    enumerate_consistent_histories,
    enumerate_consistent_sets,
    enumerate_null_events,
    find_zero_covers,
    is_zero_cover,
    make_appendix_b,
    make_hopper,
    make_three_slit,
    parse_event,
    probabilities,
    validate,
)
from qhist.cli import main
from qhist.core import DEFAULT_EPSILON
from qhist.models import HopperSpec, hopper_operator_model
from qhist.modelfile import FIXTURES
from qhist.numerics import parse_amplitude

import invariants as inv
from conftest import HOPPER_AMPLITUDES, HOPPER_COEVENTS, HOPPER_NULLS, HOPPER_SIX_PAIR_COVER

HOPPER_REFERENCE_CS_COUNT = 43


class Gate:
    """Collects named sub-checks and a runtime for one criterion."""

    def __init__(self, number, title, limit=None):
        self.number, self.title, self.limit = number, title, limit
        self.failures = []
        self.elapsed = 0.0

    def check(self, ok, what):
        if not ok:
            self.failures.append(what)

    def timed(self, fn):
        start = time.perf_counter()
        result = fn()
        self.elapsed += time.perf_counter() - start
        return result

    def finish(self):
        if self.limit is not None:
            self.check(self.elapsed < self.limit, f"runtime {self.elapsed:.3f}s >= {self.limit}s")
        status = "PASS" if not self.failures else "FAIL"
        line = f"[acceptance {self.number}] {status}  {self.title}  ({self.elapsed:.3f}s)"
        for f in self.failures:
            line += f"\n    - {f}"
        return line


@pytest.fixture
def report(capsys):
    gates = []

    def make(*args, **kwargs):
        gates.append(Gate(*args, **kwargs))
        return gates[-1]

    yield make
    with capsys.disabled():
        for g in gates:
            print("\n" + g.finish())


def _labels(events):
    return [e.labels for e in events]


def test_criterion_1_three_slit(report):
    g = report(1, "three-slit golden suite", limit=0.1)

    def run():
        d = build_from_amplitudes(make_three_slit())
        table = classify_all(d)
        return d, table, detect_contrary_inferences(d, table.catalog), enumerate_coevents(d, table.catalog)

    d, table, witnesses, coevents = g.timed(run)
    s = d.space
    cells = [_labels(r.partition.cells) for r in table.rows]
    expected = [
        [("h_AP", "h_BP"), ("h_CP",)],
        [("h_AP",), ("h_BP", "h_CP")],
        [("h_AP", "h_BP", "h_CP")],
    ]
    g.check(len(cells) == 3 and sorted(cells) == sorted(expected), f"consistent sets {cells}")
    for label in s.labels:
        g.check(d.mu(s.event(label)) == 1, f"mu({label}) != 1")
    g.check(d.mu(s.event("h_AP", "h_BP")) == 0, "mu({h_AP,h_BP}) != 0")
    g.check(d.mu(s.event("h_BP", "h_CP")) == 0, "mu({h_BP,h_CP}) != 0")
    pcs = [_labels(r.partition.cells) for r in table.pcs_rows()]
    g.check(pcs == [[("h_AP", "h_BP", "h_CP")]], f"PCS rows {pcs}")
    g.check(
        [(w.p.labels, w.q.labels) for w in witnesses] == [(("h_CP",), ("h_AP",))],
        f"contrary witnesses {[(w.p.labels, w.q.labels) for w in witnesses]}",
    )
    g.check(_labels(c.support for c in coevents) == [("h_AP", "h_CP")], "coevents")
    assert not g.failures, g.finish()


def test_criterion_2_hopper(report):
    g = report(2, "hopper golden suite", limit=10.0)

    def run():
        model = make_hopper()
        d = build_from_amplitudes(model)
        table = classify_all(d)
        coevents = enumerate_coevents(d, table.catalog)
        covers2 = find_zero_covers(table.catalog, 2)
        compat = check_pcs_coevent_compatibility(d, table, coevents)
        return model, d, table, coevents, covers2, compat

    model, d, table, coevents, covers2, compat = g.timed(run)
    ev = lambda e: parse_event(d.space, e)
    amps = dict(zip(model.labels, model.amplitudes))
    g.check(all(amps[k] == parse_amplitude(v) for k, v in HOPPER_AMPLITUDES.items()), "amplitudes")
    g.check({z.mask for z in table.catalog.nulls} == {ev(e).mask for e in HOPPER_NULLS}, "null catalog")
    g.check(len(table.catalog.nulls) == 15, f"{len(table.catalog.nulls)} nulls")
    g.check(covers2 == [], "a two-member zero cover exists")
    g.check(is_zero_cover(table.catalog, [ev(e) for e in HOPPER_SIX_PAIR_COVER]), "six-pair family is not a zero cover")
    g.check({c.support.mask for c in coevents} == {ev(e).mask for e in HOPPER_COEVENTS}, "coevents")
    g.check(compat.ok, f"coevent compatibility violations {compat.violations}")
    g.check(len(table.pcs_rows()) == len(table.rows), "some consistent set is not PCS")
    count = len(table.rows)
    nontrivial = sum(1 for r in table.rows if len(r.partition) > 1)
    g.check(
        count == HOPPER_REFERENCE_CS_COUNT,
        f"consistent-set count {count} (without the trivial partition: {nontrivial}); expected {HOPPER_REFERENCE_CS_COUNT}",
    )
    assert not g.failures, g.finish()


def test_criterion_3_appendix_b(report):
    g = report(3, "preclusive-not-ordered example", limit=0.1)

    def run():
        d = make_appendix_b()
        return d, validate(d), enumerate_consistent_histories(d), classify_all(d)

    d, r, ch, table = g.timed(run)
    g.check(r.hermitian and r.normalized and r.strongly_positive, f"validation {r.diagnostics}")
    g.check(
        _labels(ch) == [(), ("h1",), ("h3",), ("h1", "h2"), ("h2", "h3"), ("h1", "h2", "h3")],
        f"consistent histories {_labels(ch)}",
    )
    c1 = Partition.of(d.space, ["h1"], ["h2", "h3"])
    c2 = Partition.of(d.space, ["h1", "h2"], ["h3"])
    g.check(list(probabilities(d, c1).values()) == [Fraction(1, 3), Fraction(2, 3)], "C1 probabilities")
    g.check(list(probabilities(d, c2).values()) == [Fraction(1, 4), Fraction(3, 4)], "C2 probabilities")
    rows = {r.partition.masks: r for r in table.rows}
    pair = {("h1",), ("h1", "h2")}
    for name, p in (("C1", c1), ("C2", c2)):
        row = rows.get(p.masks)
        g.check(row is not None, f"{name} not enumerated")
        if row is None:
            continue
        g.check(row.pcs.holds, f"{name} not PCS")
        g.check(not row.ocs_implication.holds, f"{name} is OCS")
        w = row.ocs_implication.witness
        g.check(w is not None and {e.labels for e in w} == pair, f"{name} witness {w}")
    ocs = [r.partition for r in table.ocs_rows(IMPLICATION)]
    g.check(len(ocs) == 1 and len(ocs[0]) == 1, f"OCS rows {[str(p) for p in ocs]}")
    assert not g.failures, g.finish()


def test_criterion_4_properties(report):
    g = report(4, "property suite (100 random + fixtures)", limit=60.0)

    def run():
        randoms = [inv.random_functional(s) for s in inv.SEEDS]
        fixtures = inv.shipped_fixtures()
        problems = {k: [] for k in "abcdefg"}
        for d in randoms + list(fixtures.values()):
            table = classify_all(d)
            records = enumerate_consistent_sets(d)
            problems["a"] += inv.nulls_have_certain_complements(d)
            problems["b"] += inv.null_rows_vanish(d)
            problems["c"] += inv.ocs_subset_of_pcs(d, table)
            problems["d"] += inv.two_covers_give_witnesses(d)
            problems["f"] += inv.coarse_graining_closed(d, records)
            problems["g"] += inv.probabilities_sum_to_one(d, records)
        # composition pairs stay within one backend
        pairs = [(d, randoms[(k + 1) % len(randoms)]) for k, d in enumerate(randoms)]
        pairs += [
            (fixtures["three_slit"], fixtures["appendix_b"]),
            (fixtures["appendix_b"], fixtures["appendix_b"]),
            (fixtures["hopper"], fixtures["three_slit"]),
        ]
        for d1, d2 in pairs:
            problems["e"] += inv.compose_stays_strongly_positive(d1, d2)
        return problems

    problems = g.timed(run)
    for key, found in problems.items():
        g.check(not found, f"({key}) {len(found)} failures, first: {found[:1]}")
    assert not g.failures, g.finish()


def test_criterion_5_cross_route(report):
    g = report(5, "amplitude route equals operator route", limit=0.1)

    def run():
        exact = (build_from_amplitudes(make_hopper()), build_from_operators(hopper_operator_model()))
        u = ((2 ** -0.5, 1j * 2 ** -0.5), (1j * 2 ** -0.5, 2 ** -0.5))
        spec = HopperSpec(unitary=u)
        floats = (build_from_amplitudes(make_hopper(spec)), build_from_operators(hopper_operator_model(spec)))
        return exact, floats

    (a, b), (fa, fb) = g.timed(run)
    g.check(a.entries == b.entries, "exact entries differ")
    diff = float(np.max(np.abs(fa.as_numpy() - fb.as_numpy())))
    g.check(diff <= DEFAULT_EPSILON, f"float entries differ by {diff:.3e}")
    assert not g.failures, g.finish()


def test_criterion_6_cli_determinism(report, tmp_path):
    g = report(6, "classify reports byte-identical across 1/2/8 workers")

    def run():
        outputs = {}
        for name in FIXTURES:
            for w in (1, 2, 8):
                path = tmp_path / f"{name}.{w}.json"
                code = main(["classify", name, "--workers", str(w), "-o", str(path)])
                outputs[name, w] = (code, path.read_bytes())
        return outputs

    outputs = g.timed(run)
    for name in FIXTURES:
        codes = {outputs[name, w][0] for w in (1, 2, 8)}
        g.check(codes == {0}, f"{name}: exit codes {codes}")
        blobs = {outputs[name, w][1] for w in (1, 2, 8)}
        g.check(len(blobs) == 1, f"{name}: {len(blobs)} distinct reports")
    assert not g.failures, g.finish()


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-rN"]))
