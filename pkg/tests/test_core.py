from fractions import Fraction

import numpy as np
import pytest

from qhist import (
    BranchVectorModel,
    HistorySpace,
    OperatorModel,
    Step,
    build_from_amplitudes,
    build_from_matrix,
    build_from_operators,
    compose,
    evaluate,
    make_hopper,
    make_three_slit,
    mu,
    parse_event,
    product_event,
    validate,
)
from qhist.core import DEFAULT_EPSILON
from qhist.errors import (
    BackendMismatchError,
    InvalidFunctionalError,
    InvalidModelError,
    NormalizationError,
    SpaceMismatchError,
)
from qhist.models import hopper_operator_model
from qhist.numerics import ONE, ZERO, ExactScalar, parse_amplitude

from conftest import HOPPER_AMPLITUDES


def q(x):
    return ExactScalar(Fraction(x))


# -- history spaces and events -------------------------------------------------

def test_space_rejects_duplicate_and_empty_labels():
    with pytest.raises(ValueError):
        HistorySpace(("a", "a"))
    with pytest.raises(ValueError):
        HistorySpace(())
    with pytest.raises(ValueError):
        HistorySpace(("a", ""))


def test_event_algebra():
    s = HistorySpace.numbered(4)
    a, b = s.event("h1", "h2"), s.event("h2", "h3")
    assert (a | b).labels == ("h1", "h2", "h3")
    assert (a & b).labels == ("h2",)
    assert (a - b).labels == ("h1",)
    assert a.complement().labels == ("h3", "h4")
    assert s.empty().is_empty() and s.full().is_full()
    assert a.issubset(s.full()) and not a.isdisjoint(b)
    assert len(s.all_events()) == 16
    assert str(a) == "{h1, h2}"


def test_events_from_different_spaces_do_not_mix():
    with pytest.raises(SpaceMismatchError):
        HistorySpace.numbered(2).full() | HistorySpace.numbered(3).full()


def test_parse_event_labels_and_indices(hopper):
    assert parse_event(hopper.space, "h1+h2").labels == ("000", "001")
    assert parse_event(hopper.space, "000+111").labels == ("000", "111")
    assert parse_event(hopper.space, "Omega").is_full()
    assert parse_event(hopper.space, "empty").is_empty()
    with pytest.raises(ValueError):
        parse_event(hopper.space, "h9")
    with pytest.raises(ValueError):
        parse_event(hopper.space, "h1++h2")


# -- construction ------------------------------------------------------------

def test_three_slit_matrix(three_slit):
    a = [1, -1, 1]
    for i in range(3):
        for j in range(3):
            assert three_slit.entry(i, j) == a[i] * a[j]
    assert three_slit.total() == ONE


def test_single_history():
    d = build_from_amplitudes(BranchVectorModel(("only",), (ONE,), (0,)))
    assert d.entries == ((ONE,),)


def test_hopper_amplitudes_and_entry(hopper):
    model = make_hopper()
    for label, amp in zip(model.labels, model.amplitudes):
        assert amp == parse_amplitude(HOPPER_AMPLITUDES[label])
    assert hopper.entry(0, 1) == q(Fraction(-1, 8))
    # float recomputation of the same product
    h = 1 / (2 * 2 ** 0.5)
    assert abs(complex(hopper.entry(0, 1)) - h * (-h)) < 1e-15


def test_different_final_classes_decohere(hopper):
    finals = make_hopper().final_classes
    for i in range(8):
        for j in range(8):
            if finals[i] != finals[j]:
                assert hopper.entry(i, j) == ZERO


def test_final_class_partition_offdiagonals_vanish(hopper):
    s = hopper.space
    left = s.from_indices(i for i in range(8) if make_hopper().final_classes[i] == 0)
    assert evaluate(hopper, left, left.complement()) == ZERO


def test_operator_route_matches_amplitudes(hopper):
    d = build_from_operators(hopper_operator_model())
    assert d.labels == hopper.labels
    assert d.entries == hopper.entries


def test_operator_trivial_and_mixed():
    one = build_from_operators(OperatorModel(1, [[ONE]], (Step([[ONE]], ([[ONE]],)),)))
    assert one.entries == ((ONE,),)
    half = Fraction(1, 2)
    rho = [[q(half), ZERO], [ZERO, q(half)]]
    ident = [[ONE, ZERO], [ZERO, ONE]]
    p0 = [[ONE, ZERO], [ZERO, ZERO]]
    p1 = [[ZERO, ZERO], [ZERO, ONE]]
    d = build_from_operators(OperatorModel(2, rho, (Step(ident, (p0, p1)),)))
    assert d.entries == ((q(half), ZERO), (ZERO, q(half)))


def test_operator_model_rejects_bad_projectors():
    ident = [[ONE, ZERO], [ZERO, ONE]]
    p0 = [[ONE, ZERO], [ZERO, ZERO]]
    rho = [[ONE, ZERO], [ZERO, ZERO]]
    with pytest.raises(InvalidModelError):
        OperatorModel(2, rho, (Step(ident, (p0,)),))
    with pytest.raises(InvalidModelError):
        OperatorModel(2, rho, (Step([[ONE, ONE], [ZERO, ONE]], (p0, ident)),))


def test_operator_float_matches_exact(hopper):
    u = np.array([[1, 1j], [1j, 1]]) / np.sqrt(2)
    rho = np.diag([1.0 + 0j, 0])
    ps = (np.diag([1.0 + 0j, 0]), np.diag([0j, 1.0]))
    d = build_from_operators(OperatorModel(2, rho, tuple(Step(u, ps) for _ in range(3))))
    assert np.allclose(d.as_numpy(), hopper.as_numpy(), atol=DEFAULT_EPSILON)


def test_appendix_b_validates(appendix_b):
    r = validate(appendix_b)
    assert r.ok and r.hermitian and r.normalized and r.strongly_positive and r.weakly_positive


def test_uniform_classical_accepted():
    n = 4
    d = build_from_matrix([[q(Fraction(1, n)) if i == j else ZERO for j in range(n)] for i in range(n)])
    assert validate(d).ok


def test_normalization_failure():
    with pytest.raises(NormalizationError) as info:
        build_from_matrix([[q(1), ZERO], [ZERO, q(1)]])
    assert info.value.report.hermitian and not info.value.report.normalized


def test_negative_diagonal_fails_strong_positivity():
    d = build_from_matrix([[q(2), ZERO], [ZERO, q(-1)]], allow_invalid=True)
    r = validate(d)
    assert r.normalized and not r.strongly_positive and not r.ok
    with pytest.raises(InvalidFunctionalError):
        build_from_matrix([[q(2), ZERO], [ZERO, q(-1)]])


def test_non_hermitian_rejected():
    with pytest.raises(InvalidFunctionalError):
        build_from_matrix([[q(Fraction(1, 2)), q(Fraction(1, 4))], [q(Fraction(-1, 4)), q(Fraction(1, 2))]])


def test_hopper_validates_with_weak_positivity(hopper):
    r = validate(hopper)
    assert r.ok and r.weakly_positive


def test_mixed_backends_rejected():
    with pytest.raises(BackendMismatchError):
        build_from_matrix([[ONE, 0.0], [0.0, ZERO]])


# -- evaluation --------------------------------------------------------------

def test_evaluate_examples(three_slit, appendix_b):
    s = three_slit.space
    assert evaluate(three_slit, s.event("h_CP"), s.event("h_AP", "h_BP")) == ZERO
    assert evaluate(three_slit, s.empty(), s.full()) == ZERO
    b = appendix_b.space
    assert evaluate(appendix_b, b.event("h1"), b.event("h2", "h3")) == ZERO


def test_mu_examples(three_slit, hopper):
    s = three_slit.space
    assert mu(three_slit, s.event("h_AP", "h_BP")) == 0
    assert mu(three_slit, s.empty()) == 0 and mu(three_slit, s.full()) == 1
    assert mu(hopper, parse_event(hopper.space, "h1+h2+h3+h4")) == Fraction(1, 2)


def test_additivity_fails(three_slit):
    s = three_slit.space
    a, b = s.event("h_AP"), s.event("h_BP")
    assert mu(three_slit, a | b) == 0
    assert mu(three_slit, a) + mu(three_slit, b) == 2


def test_bilinearity_identity(hopper):
    for a in hopper.space.all_events():
        c = a.complement()
        lhs = mu(hopper, a) + mu(hopper, c) + 2 * evaluate(hopper, a, c).real
        assert lhs == ONE


def test_mu_float_returns_float():
    d = build_from_matrix([[0.5, 0.0], [0.0, 0.5]])
    assert isinstance(mu(d, d.space.full()), float)


# -- composition -------------------------------------------------------------

def test_compose_with_trivial_is_identity(three_slit):
    trivial = build_from_matrix([[ONE]], ["*"])
    c = compose(three_slit, trivial)
    assert c.entries == three_slit.entries


def test_compose_strong_positivity(three_slit, appendix_b):
    assert validate(compose(three_slit, appendix_b)).strongly_positive


def test_compose_three_slit_square(three_slit):
    c = compose(three_slit, three_slit)
    assert c.n == 9
    z1 = three_slit.space.event("h_AP", "h_BP")
    z2 = three_slit.space.event("h_BP", "h_CP")
    assert mu(c, product_event(c, z1, z2)) == 0
    assert mu(c, product_event(c, z1, three_slit.space.full())) == 0


def test_compose_backend_mismatch(three_slit):
    with pytest.raises(BackendMismatchError):
        compose(three_slit, build_from_matrix([[1.0]]))
