"""Constructors for the example systems and random test instances."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import linalg
from .core import (
    DEFAULT_EPSILON,
    EXACT,
    BranchVectorModel,
    DecoherenceFunctional,
    HistorySpace,
    OperatorModel,
    Step,
    _finish,
    build_from_matrix,
    detect_backend,
    history_choices,
    history_label,
)
from .errors import InvalidModelError
from .numerics import I, ONE, SQRT2, ZERO, ExactScalar, Scalar

THREE_SLIT_LABELS = ("h_AP", "h_BP", "h_CP")

# (1/sqrt2) [[1, i], [i, 1]]: stay with amplitude 1/sqrt2, hop with i/sqrt2
HOPPER_UNITARY = (
    (SQRT2 / 2, I * SQRT2 / 2),
    (I * SQRT2 / 2, SQRT2 / 2),
)


@dataclass(frozen=True)
class SlitSpec:
    amplitudes: tuple[Scalar, ...]
    labels: Optional[tuple[str, ...]] = None

    def __post_init__(self) -> None:
        if len(self.amplitudes) < 2:
            raise InvalidModelError("a slit experiment needs at least two slits")


def make_slits(spec: SlitSpec | Sequence[Scalar]) -> BranchVectorModel:
    """All post-selected paths end at the same screen point: a single final class."""
    if not isinstance(spec, SlitSpec):
        spec = SlitSpec(tuple(spec))
    n = len(spec.amplitudes)
    labels = spec.labels or tuple(f"h_{chr(ord('A') + k)}P" for k in range(n))
    return BranchVectorModel(tuple(labels), tuple(spec.amplitudes), (0,) * n)


def make_three_slit() -> BranchVectorModel:
    return make_slits(SlitSpec((ONE, -ONE, ONE), THREE_SLIT_LABELS))


@dataclass(frozen=True, eq=False)
class HopperSpec:
    num_sites: int = 2
    num_steps: int = 3
    unitary: tuple = HOPPER_UNITARY
    initial_site: int = 0

    def __post_init__(self) -> None:
        if self.num_sites < 1 or self.num_steps < 1:
            raise InvalidModelError("hopper needs at least one site and one step")
        if not 0 <= self.initial_site < self.num_sites:
            raise InvalidModelError(f"initial site {self.initial_site} out of range")
        u = [list(r) for r in self.unitary]
        if len(u) != self.num_sites or any(len(r) != self.num_sites for r in u):
            raise InvalidModelError(f"unitary must be {self.num_sites}x{self.num_sites}")
        backend = detect_backend(v for r in u for v in r)
        if backend == EXACT:
            m = [[ExactScalar.coerce(v) for v in r] for r in u]
            ok = linalg.equal(linalg.matmul(m, linalg.dagger(m)), linalg.identity(self.num_sites))
        else:
            a = np.array(u, dtype=complex)
            ok = bool(np.allclose(a @ a.conj().T, np.eye(self.num_sites), atol=DEFAULT_EPSILON))
        if not ok:
            raise InvalidModelError("hopper step operator is not unitary")

    @property
    def backend(self) -> str:
        return detect_backend(v for r in self.unitary for v in r)


def make_hopper(spec: Optional[HopperSpec] = None) -> BranchVectorModel:
    """Amplitude of a path = ordered product of one-step amplitudes ``U[to][from]``.

    Labels list the sites right to left (first step rightmost); the final
    class is the last site, i.e. the leftmost digit.
    """
    spec = spec or HopperSpec()
    backend = spec.backend
    u = [[ExactScalar.coerce(v) if backend == EXACT else complex(v) for v in r] for r in spec.unitary]
    radices = [spec.num_sites] * spec.num_steps
    labels, amps, finals = [], [], []
    for path in history_choices(radices):
        amp = ONE if backend == EXACT else 1 + 0j
        here = spec.initial_site
        for site in path:
            amp = amp * u[site][here]
            here = site
        labels.append(history_label(path, radices))
        amps.append(amp)
        finals.append(here)
    return BranchVectorModel(tuple(labels), tuple(amps), tuple(finals))


def hopper_operator_model(spec: Optional[HopperSpec] = None) -> OperatorModel:
    """The same hopper as a projector-string model: evolve, then project on site."""
    spec = spec or HopperSpec()
    d = spec.num_sites
    if spec.backend == EXACT:
        u = [[ExactScalar.coerce(v) for v in r] for r in spec.unitary]
        rho = linalg.zeros(d, d)
        rho[spec.initial_site][spec.initial_site] = ONE
        projectors = tuple([[ONE if i == j == k else ZERO for j in range(d)] for i in range(d)] for k in range(d))
    else:
        u = np.array(spec.unitary, dtype=complex)
        rho = np.zeros((d, d), dtype=complex)
        rho[spec.initial_site, spec.initial_site] = 1
        projectors = tuple(np.diag([1.0 + 0j if i == k else 0j for i in range(d)]) for k in range(d))
    return OperatorModel(d, rho, tuple(Step(u, projectors) for _ in range(spec.num_steps)))


APPENDIX_B_ENTRIES = (
    (Fraction(1, 3), Fraction(-7, 24), Fraction(7, 24)),
    (Fraction(-7, 24), Fraction(1, 2), Fraction(-7, 24)),
    (Fraction(7, 24), Fraction(-7, 24), Fraction(3, 4)),
)


def make_appendix_b() -> DecoherenceFunctional:
    """Three-history functional whose two non-trivial consistent sets are preclusive but not ordered."""
    return build_from_matrix(APPENDIX_B_ENTRIES, ("h1", "h2", "h3"))


def random_strongly_positive(
    n: int,
    rank: int,
    seed: int,
    *,
    lattice: bool = False,
    max_retries: int = 100,
    epsilon: float = DEFAULT_EPSILON,
) -> DecoherenceFunctional:
    """Gram matrix of random branch vectors, rescaled so the entries sum to one.

    With ``lattice=True`` the branch-vector components are drawn from the
    Gaussian integers {-1, 0, 1} + i{-1, 0, 1}, so exact cancellations (null
    events, zero covers) occur with positive probability.
    """
    if n < 1 or rank < 1:
        raise ValueError("n and rank must be positive")
    rng = np.random.default_rng(seed)
    for _ in range(max_retries):
        if lattice:
            v = rng.integers(-1, 2, size=(n, rank)) + 1j * rng.integers(-1, 2, size=(n, rank))
        else:
            v = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
        norm2 = float(np.vdot(v.sum(axis=0), v.sum(axis=0)).real)
        if norm2 > 1e-9:
            break
    else:
        raise RuntimeError(f"{max_retries} degenerate branch-vector draws in a row")
    gram = v.conj() @ v.T / norm2
    space = HistorySpace.numbered(n)
    return _finish(space, [[complex(x) for x in row] for row in gram], "float", epsilon, allow_invalid=False)
