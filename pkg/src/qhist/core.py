"""History spaces, events and decoherence functionals.

A :class:`DecoherenceFunctional` stores the fine-grained matrix ``D[i][j]`` and
extends it bi-additively to events: ``D(A, B) = sum_{i in A, j in B} D[i][j]``.
Exact functionals additionally keep an integer "kernel" (all entries scaled to a
common denominator and split into the four Q(i, sqrt2) coordinates) so that the
exponential subset scans done elsewhere are vectorised and still exact.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from . import linalg
from .errors import (
    BackendMismatchError,
    InvalidFunctionalError,
    InvalidModelError,
    NormalizationError,
    SpaceMismatchError,
)
from .numerics import ONE, ZERO, ExactScalar, Scalar, Sign, real_sign, render_scalar

EXACT = "exact"
FLOAT = "float"
DEFAULT_EPSILON = 1e-9
WEAK_POSITIVITY_CAP = 20


# -- history space and events ------------------------------------------------

@dataclass(frozen=True)
class HistorySpace:
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        if not labels:
            raise ValueError("a history space needs at least one history")
        if any(not isinstance(l, str) or not l for l in labels):
            raise ValueError("history labels must be non-empty strings")
        if len(set(labels)) != len(labels):
            raise ValueError("history labels must be unique")

    @classmethod
    def numbered(cls, n: int, prefix: str = "h") -> "HistorySpace":
        return cls(tuple(f"{prefix}{k + 1}" for k in range(n)))

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def full_mask(self) -> int:
        return (1 << self.n) - 1

    def index(self, label: str) -> int:
        try:
            return self._index_map()[label]
        except KeyError:
            raise KeyError(f"unknown history label {label!r}") from None

    def _index_map(self) -> dict[str, int]:
        return _label_index(self.labels)

    def event(self, *labels: str) -> "Event":
        mask = 0
        for label in labels:
            mask |= 1 << self.index(label)
        return Event(self, mask)

    def from_indices(self, indices: Iterable[int]) -> "Event":
        mask = 0
        for i in indices:
            if not 0 <= i < self.n:
                raise IndexError(f"history index {i} out of range for n={self.n}")
            mask |= 1 << i
        return Event(self, mask)

    def full(self) -> "Event":
        return Event(self, self.full_mask)

    def empty(self) -> "Event":
        return Event(self, 0)

    def all_events(self) -> list["Event"]:
        masks = sorted(range(1 << self.n), key=mask_key)
        return [Event(self, m) for m in masks]


@lru_cache(maxsize=None)
def _label_index(labels: tuple[str, ...]) -> dict[str, int]:
    return {l: i for i, l in enumerate(labels)}


def mask_members(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def mask_key(mask: int) -> tuple[int, tuple[int, ...]]:
    """Canonical subset order: by size, then lexicographically by members."""
    members = mask_members(mask)
    return (len(members), members)


@lru_cache(maxsize=1 << 16)
def _mask_indices(mask: int) -> np.ndarray:
    return np.array(mask_members(mask), dtype=np.intp)


@dataclass(frozen=True)
class Event:
    """A coarse-grained history: a subset of the history space (bitset)."""

    space: HistorySpace
    mask: int

    def __post_init__(self) -> None:
        if self.mask < 0 or self.mask >> self.space.n:
            raise ValueError(f"event mask {self.mask:#x} has bits outside a space of {self.space.n}")

    @property
    def members(self) -> tuple[int, ...]:
        return mask_members(self.mask)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self.space.labels[i] for i in self.members)

    def __iter__(self) -> Iterator[int]:
        return iter(self.members)

    def __len__(self) -> int:
        return bin(self.mask).count("1")

    def __contains__(self, item) -> bool:
        i = self.space.index(item) if isinstance(item, str) else item
        return bool(self.mask >> i & 1)

    def _check(self, other: "Event") -> None:
        if other.space != self.space:
            raise SpaceMismatchError("events belong to different history spaces")

    def __or__(self, other: "Event") -> "Event":
        self._check(other)
        return Event(self.space, self.mask | other.mask)

    def __and__(self, other: "Event") -> "Event":
        self._check(other)
        return Event(self.space, self.mask & other.mask)

    def __sub__(self, other: "Event") -> "Event":
        self._check(other)
        return Event(self.space, self.mask & ~other.mask)

    def complement(self) -> "Event":
        return Event(self.space, self.space.full_mask & ~self.mask)

    def issubset(self, other: "Event") -> bool:
        self._check(other)
        return self.mask & ~other.mask == 0

    def issuperset(self, other: "Event") -> bool:
        return other.issubset(self)

    def isdisjoint(self, other: "Event") -> bool:
        self._check(other)
        return self.mask & other.mask == 0

    def is_empty(self) -> bool:
        return self.mask == 0

    def is_full(self) -> bool:
        return self.mask == self.space.full_mask

    def sort_key(self) -> tuple:
        return mask_key(self.mask)

    def __lt__(self, other: "Event") -> bool:
        return self.sort_key() < other.sort_key()

    def __str__(self) -> str:
        return "{" + ", ".join(self.labels) + "}"

    def __repr__(self) -> str:
        return f"Event({str(self)})"


def parse_event(space: HistorySpace, expression: str) -> Event:
    """Parse ``"h1+h2+h7"`` style label lists.

    A token is matched against the labels first; failing that, ``h<k>`` is read
    as the k-th history (1-based).  ``Omega`` and ``empty`` name the full and
    empty events.
    """
    text = expression.strip()
    if text.lower() in ("omega", "all", "full"):
        return space.full()
    if text.lower() in ("empty", "{}", "none"):
        return space.empty()
    mask = 0
    for token in text.split("+"):
        token = token.strip()
        if not token:
            raise ValueError(f"empty label in event expression {expression!r}")
        if token in space.labels:
            mask |= 1 << space.index(token)
        elif token[:1] == "h" and token[1:].isdigit() and 1 <= int(token[1:]) <= space.n:
            mask |= 1 << (int(token[1:]) - 1)
        else:
            raise ValueError(f"unknown history {token!r} in event expression {expression!r}")
    return Event(space, mask)


# -- scalar coercion ---------------------------------------------------------

def _is_float_value(x) -> bool:
    return isinstance(x, (float, complex, np.floating, np.complexfloating))


def detect_backend(values: Iterable) -> str:
    has_exact = has_float = False
    for v in values:
        if isinstance(v, ExactScalar):
            has_exact = True
        elif _is_float_value(v):
            has_float = True
        elif isinstance(v, (int, Fraction, np.integer)):
            pass
        else:
            raise TypeError(f"unsupported scalar type {type(v).__name__}")
    if has_exact and has_float:
        raise BackendMismatchError("mixed exact and floating-point scalars")
    return FLOAT if has_float else EXACT


def coerce_scalar(v, backend: str) -> Scalar:
    if backend == EXACT:
        return ExactScalar.coerce(int(v) if isinstance(v, np.integer) else v)
    if isinstance(v, ExactScalar):
        raise BackendMismatchError("exact scalar in a float-backend object")
    return complex(v)


# -- validation report -------------------------------------------------------

@dataclass(frozen=True)
class ValidationReport:
    hermitian: bool
    normalized: bool
    strongly_positive: bool
    diagonal_nonnegative: bool
    total: Scalar
    weakly_positive: Optional[bool] = None
    min_eigenvalue: Optional[float] = None
    diagnostics: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.hermitian and self.normalized and self.strongly_positive and self.diagonal_nonnegative

    def as_dict(self) -> dict:
        return {
            "hermitian": self.hermitian,
            "normalized": self.normalized,
            "strongly_positive": self.strongly_positive,
            "weakly_positive": self.weakly_positive,
            "diagonal_nonnegative": self.diagonal_nonnegative,
            "total": render_scalar(self.total),
            "min_eigenvalue": None if self.min_eigenvalue is None else f"{self.min_eigenvalue:.11e}",
            "diagnostics": list(self.diagnostics),
        }


# -- vectorised kernel -------------------------------------------------------

class _Kernel:
    """Fast block sums over the fine-grained matrix.

    Exact: ``planes[p]`` holds coordinate p (1, sqrt2, i, i*sqrt2) of every entry
    times the common denominator ``den``; sums of integers decide zero exactly.
    Float: a single complex matrix.
    """

    def __init__(self, entries: Sequence[Sequence[Scalar]], backend: str) -> None:
        n = len(entries)
        self.backend = backend
        self._rows: dict[int, np.ndarray] = {}
        if backend == EXACT:
            den = 1
            for row in entries:
                for v in row:
                    for c in v.coefficients:
                        den = den * c.denominator // math.gcd(den, c.denominator)
            ints = [[[int(c * den) for c in v.coefficients] for v in row] for row in entries]
            planes = np.array(ints, dtype=object).reshape(n, n, 4).transpose(2, 0, 1)
            biggest = max((abs(x) for x in planes.flat), default=0)
            if biggest * n * n < 2**62:
                planes = planes.astype(np.int64)
            self.planes = np.ascontiguousarray(planes)
            self.den = den
            self.scale = max((abs(complex(v)) for row in entries for v in row), default=0.0)
        else:
            self.matrix = np.array(entries, dtype=complex).reshape(n, n)
            self.scale = float(np.abs(self.matrix).max()) if n else 0.0

    def __getstate__(self):
        state = self.__dict__.copy()
        state["_rows"] = {}
        return state

    def row_sum(self, mask: int) -> np.ndarray:
        r = self._rows.get(mask)
        if r is None:
            ia = _mask_indices(mask)
            if self.backend == EXACT:
                r = self.planes[:, ia, :].sum(axis=1)
            else:
                r = self.matrix[ia, :].sum(axis=0)
            self._rows[mask] = r
        return r

    def block(self, a: int, b: int):
        ib = _mask_indices(b)
        r = self.row_sum(a)
        if self.backend == EXACT:
            return r[:, ib].sum(axis=1)
        return complex(r[ib].sum())

    def to_scalar(self, raw) -> Scalar:
        if self.backend == EXACT:
            return ExactScalar(*(Fraction(int(x), self.den) for x in raw))
        return complex(raw)

    def forms(self, left: np.ndarray, right: np.ndarray) -> np.ndarray:
        """Row-wise ``x^T D y`` for 0/1 indicator rows; exact -> (m, 4) ints, float -> (m,)."""
        if self.backend == EXACT:
            return np.stack([((left @ self.planes[p]) * right).sum(axis=1) for p in range(4)], axis=1)
        return ((left @ self.matrix) * right).sum(axis=1)


def indicator_rows(masks: np.ndarray, n: int) -> np.ndarray:
    return ((masks[:, None] >> np.arange(n, dtype=np.int64)) & 1).astype(np.int64)


def signs_q_sqrt2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Exact sign of ``a + b*sqrt2`` for integer arrays."""
    sa = np.sign(a).astype(np.int64)
    sb = np.sign(b).astype(np.int64)
    out = np.where(sb == 0, sa, np.where(sa == 0, sb, np.where(sa == sb, sa, 0)))
    mixed = np.nonzero((sa != 0) & (sb != 0) & (sa != sb))[0]
    for k in mixed:
        x, y = int(a[k]), int(b[k])
        if x > 0:
            out[k] = 1 if x * x > 2 * y * y else -1
        else:
            out[k] = 1 if 2 * y * y > x * x else -1
    return out


# -- the functional ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DecoherenceFunctional:
    space: HistorySpace
    entries: tuple[tuple[Scalar, ...], ...]
    backend: str
    epsilon: float = DEFAULT_EPSILON
    report: Optional[ValidationReport] = None
    _kernel: _Kernel = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        n = self.space.n
        if len(self.entries) != n or any(len(r) != n for r in self.entries):
            raise ValueError(f"entries must be a {n}x{n} matrix")
        object.__setattr__(self, "_kernel", _Kernel(self.entries, self.backend))

    @property
    def n(self) -> int:
        return self.space.n

    @property
    def labels(self) -> tuple[str, ...]:
        return self.space.labels

    @property
    def is_exact(self) -> bool:
        return self.backend == EXACT

    @property
    def tolerance(self) -> float:
        """Absolute zero threshold for the float backend (0 when exact)."""
        if self.is_exact:
            return 0.0
        scale = self._kernel.scale
        return self.epsilon * (scale if scale > 0 else 1.0)

    def event(self, *labels: str) -> Event:
        return self.space.event(*labels)

    def _check_event(self, a: Event) -> None:
        if a.space != self.space:
            raise SpaceMismatchError("event does not belong to this functional's history space")

    # scalar predicates -------------------------------------------------

    def is_zero(self, x: Scalar, weak: bool = False) -> bool:
        if isinstance(x, ExactScalar):
            return x.real.is_zero() if weak else x.is_zero()
        x = complex(x)
        return (abs(x.real) if weak else abs(x)) <= self.tolerance

    def compare(self, x: Scalar, y: Scalar) -> Sign:
        """Sign of ``x - y`` for real values, with tolerance on the float backend."""
        if isinstance(x, ExactScalar) or isinstance(y, ExactScalar):
            return real_sign(ExactScalar.coerce(x) - ExactScalar.coerce(y))
        d = complex(x).real - complex(y).real
        if abs(d) <= self.tolerance:
            return Sign.ZERO
        return Sign.POSITIVE if d > 0 else Sign.NEGATIVE

    def is_one(self, x: Scalar) -> bool:
        return self.compare(x, ONE if self.is_exact else 1.0) is Sign.ZERO

    # mask-level fast paths ---------------------------------------------

    def evaluate_masks(self, a: int, b: int) -> Scalar:
        if a == 0 or b == 0:
            return ZERO if self.is_exact else 0j
        return self._kernel.to_scalar(self._kernel.block(a, b))

    def pair_is_zero(self, a: int, b: int, weak: bool = False) -> bool:
        if a == 0 or b == 0:
            return True
        raw = self._kernel.block(a, b)
        if self.is_exact:
            return not (raw[0] or raw[1]) if weak else not raw.any()
        return (abs(raw.real) if weak else abs(raw)) <= self.tolerance

    def mu_mask(self, a: int) -> Scalar:
        v = self.evaluate_masks(a, a)
        return v.real if self.is_exact else float(v.real)

    def forms(self, left_masks: np.ndarray, right_masks: np.ndarray) -> np.ndarray:
        left = indicator_rows(left_masks, self.n)
        right = indicator_rows(right_masks, self.n)
        return self._kernel.forms(left, right)

    def zero_flags(self, raw: np.ndarray, weak: bool = False, slack: float = 1.0) -> np.ndarray:
        """Vectorised zero test; ``slack`` widens the float tolerance for sums of many terms."""
        if self.is_exact:
            cols = raw[:, :2] if weak else raw
            return ~(cols != 0).any(axis=1)
        vals = np.abs(raw.real) if weak else np.abs(raw)
        return vals <= self.tolerance * slack

    def real_signs(self, raw: np.ndarray) -> np.ndarray:
        """Per-row sign of the real part of ``forms`` output."""
        if self.is_exact:
            return signs_q_sqrt2(raw[:, 0], raw[:, 1])
        re = raw.real
        return np.where(np.abs(re) <= self.tolerance, 0, np.sign(re)).astype(np.int64)

    # event-level API ---------------------------------------------------

    def evaluate(self, a: Event, b: Event) -> Scalar:
        self._check_event(a)
        self._check_event(b)
        return self.evaluate_masks(a.mask, b.mask)

    def mu(self, a: Event) -> Scalar:
        self._check_event(a)
        value = self.evaluate_masks(a.mask, a.mask)
        if self.is_exact:
            if not value.is_real() or real_sign(value) is Sign.NEGATIVE:
                raise InvalidFunctionalError(f"quantum measure of {a} is {value}, not real non-negative")
            return value
        return value.real

    def total(self) -> Scalar:
        full = self.space.full_mask
        return self.evaluate_masks(full, full)

    def as_numpy(self) -> np.ndarray:
        return np.array([[complex(v) for v in row] for row in self.entries], dtype=complex)

    def entry(self, i: int, j: int) -> Scalar:
        return self.entries[i][j]


def evaluate(d: DecoherenceFunctional, a: Event, b: Event) -> Scalar:
    return d.evaluate(a, b)


def mu(d: DecoherenceFunctional, a: Event) -> Scalar:
    return d.mu(a)


# -- validation --------------------------------------------------------------

def _weak_positivity(d: DecoherenceFunctional) -> bool:
    n = d.n
    total = 1 << n
    chunk = 1 << 14
    for start in range(0, total, chunk):
        masks = np.arange(start, min(total, start + chunk), dtype=np.int64)
        raw = d.forms(masks, masks)
        if (d.real_signs(raw) < 0).any():
            return False
    return True


def _basic_report(d: DecoherenceFunctional, weak_cap: Optional[int]) -> ValidationReport:
    n = d.n
    notes: list[str] = []
    total = d.total()
    min_eig = None
    if d.is_exact:
        m = [list(r) for r in d.entries]
        hermitian = linalg.is_hermitian(m)
        normalized = total == 1
        diag_ok = all(v.is_real() and real_sign(v) is not Sign.NEGATIVE for v in (m[i][i] for i in range(n)))
        strong = hermitian and linalg.psd_exact(m)
    else:
        m = d.as_numpy()
        tol = d.tolerance
        hermitian = bool(np.all(np.abs(m - m.conj().T) <= tol))
        normalized = abs(complex(total) - 1) <= max(d.epsilon, tol * n * n)
        diag = np.diag(m)
        diag_ok = bool(np.all(diag.real >= -tol) and np.all(np.abs(diag.imag) <= tol))
        strong, min_eig = linalg.psd_float(m, tol)
        strong = hermitian and strong
    if not hermitian:
        notes.append("not Hermitian: D(A,B) != conj(D(B,A)) for some fine-grained pair")
    if not normalized:
        notes.append(f"not normalized: sum of entries is {render_scalar(total)}")
    if not diag_ok:
        notes.append("a diagonal entry is negative or non-real")
    if not strong:
        notes.append("not strongly positive: matrix is not positive semidefinite")
    weak = None
    if weak_cap is not None and n <= weak_cap and hermitian:
        weak = _weak_positivity(d)
        if not weak:
            notes.append("not weakly positive: some event has negative quantum measure")
    return ValidationReport(
        hermitian=hermitian,
        normalized=normalized,
        strongly_positive=bool(strong),
        diagonal_nonnegative=diag_ok,
        total=total,
        weakly_positive=weak,
        min_eigenvalue=min_eig,
        diagnostics=tuple(notes),
    )


def validate(d: DecoherenceFunctional, weak_cap: int = WEAK_POSITIVITY_CAP) -> ValidationReport:
    """Full check of Hermiticity, normalization, strong and (when n <= weak_cap) weak positivity."""
    return _basic_report(d, weak_cap)


def _finish(
    space: HistorySpace,
    entries,
    backend: str,
    epsilon: float,
    allow_invalid: bool,
) -> DecoherenceFunctional:
    entries = tuple(tuple(r) for r in entries)
    d = DecoherenceFunctional(space, entries, backend, epsilon)
    report = _basic_report(d, weak_cap=None)
    d = DecoherenceFunctional(space, entries, backend, epsilon, report)
    if not report.ok and not allow_invalid:
        if not report.normalized and report.hermitian and report.strongly_positive:
            raise NormalizationError(render_scalar(report.total), report)
        raise InvalidFunctionalError("; ".join(report.diagnostics), report)
    return d


def build_from_matrix(
    entries: Sequence[Sequence],
    labels: Optional[Sequence[str]] = None,
    *,
    epsilon: float = DEFAULT_EPSILON,
    allow_invalid: bool = False,
) -> DecoherenceFunctional:
    rows = [list(r) for r in entries]
    n = len(rows)
    if n == 0 or any(len(r) != n for r in rows):
        raise ValueError("decoherence matrix must be square and non-empty")
    backend = detect_backend(v for r in rows for v in r)
    space = HistorySpace(tuple(labels)) if labels is not None else HistorySpace.numbered(n)
    if space.n != n:
        raise ValueError(f"{space.n} labels for a {n}x{n} matrix")
    coerced = [[coerce_scalar(v, backend) for v in r] for r in rows]
    return _finish(space, coerced, backend, epsilon, allow_invalid)


# -- branch-vector (path) models ----------------------------------------------

@dataclass(frozen=True)
class BranchVectorModel:
    """Per fine-grained history: an amplitude and the id of its final class.

    Histories in different final classes end in orthogonal final states and so
    never interfere.
    """

    labels: tuple[str, ...]
    amplitudes: tuple[Scalar, ...]
    final_classes: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "final_classes", tuple(int(c) for c in self.final_classes))
        n = len(self.labels)
        if len(self.amplitudes) != n or len(self.final_classes) != n:
            raise InvalidModelError("labels, amplitudes and final_classes must have equal length")
        if n == 0:
            raise InvalidModelError("a model needs at least one history")
        backend = detect_backend(self.amplitudes)
        object.__setattr__(self, "amplitudes", tuple(coerce_scalar(a, backend) for a in self.amplitudes))

    @property
    def backend(self) -> str:
        return detect_backend(self.amplitudes)


def build_from_amplitudes(
    model: BranchVectorModel,
    *,
    epsilon: float = DEFAULT_EPSILON,
    allow_invalid: bool = False,
) -> DecoherenceFunctional:
    """``D[i][j] = conj(a_i) * a_j`` when histories i and j share a final class, else 0."""
    amps, classes = model.amplitudes, model.final_classes
    backend = model.backend
    zero = ZERO if backend == EXACT else 0j
    n = len(amps)
    entries = [
        [amps[i].conjugate() * amps[j] if classes[i] == classes[j] else zero for j in range(n)]
        for i in range(n)
    ]
    return _finish(HistorySpace(model.labels), entries, backend, epsilon, allow_invalid)


# -- operator models ---------------------------------------------------------

def _as_matrix(m, backend: str):
    if backend == EXACT:
        return [[ExactScalar.coerce(v) for v in row] for row in m]
    if isinstance(m, np.ndarray):
        return m.astype(complex)
    return np.array([[complex(v) for v in row] for row in m], dtype=complex)


def _matrix_values(m):
    if isinstance(m, np.ndarray):
        return [complex(v) for v in m.flat]
    return [v for row in m for v in row]


@dataclass(frozen=True, eq=False)
class Step:
    unitary: object
    projectors: tuple


@dataclass(frozen=True, eq=False)
class OperatorModel:
    """Density matrix plus time-ordered (unitary, projector family) steps.

    At each step the state is first evolved by the step's unitary and then
    projected; a step whose unitary is the identity reproduces a projection
    directly on the initial state.
    """

    dimension: int
    rho: object
    steps: tuple[Step, ...]
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self) -> None:
        steps = tuple(s if isinstance(s, Step) else Step(s[0], tuple(s[1])) for s in self.steps)
        if not steps:
            raise InvalidModelError("an operator model needs at least one step")
        values = list(_matrix_values(self.rho))
        for s in steps:
            values += _matrix_values(s.unitary)
            for p in s.projectors:
                values += _matrix_values(p)
        backend = detect_backend(values)
        object.__setattr__(self, "rho", _as_matrix(self.rho, backend))
        object.__setattr__(
            self,
            "steps",
            tuple(Step(_as_matrix(s.unitary, backend), tuple(_as_matrix(p, backend) for p in s.projectors)) for s in steps),
        )
        object.__setattr__(self, "_backend", backend)
        self._validate()

    @property
    def backend(self) -> str:
        return self._backend

    def _validate(self) -> None:
        d = self.dimension
        exact = self.backend == EXACT
        tol = self.epsilon

        def shape_ok(m) -> bool:
            return len(m) == d and all(len(r) == d for r in m)

        def close(x, y) -> bool:
            return linalg.equal(x, y) if exact else bool(np.all(np.abs(x - y) <= tol))

        def mul(x, y):
            return linalg.matmul(x, y) if exact else x @ y

        def dag(x):
            return linalg.dagger(x) if exact else x.conj().T

        ident = linalg.identity(d) if exact else np.eye(d, dtype=complex)
        zero = linalg.zeros(d, d) if exact else np.zeros((d, d), dtype=complex)
        if not shape_ok(self.rho):
            raise InvalidModelError(f"rho must be {d}x{d}")
        if not close(self.rho, dag(self.rho)):
            raise InvalidModelError("rho is not Hermitian")
        tr = linalg.trace(self.rho) if exact else complex(np.trace(self.rho))
        if (tr != 1) if exact else abs(tr - 1) > tol:
            raise InvalidModelError(f"rho has trace {render_scalar(tr)}, expected 1")
        psd = linalg.psd_exact(self.rho) if exact else linalg.psd_float(self.rho, tol)[0]
        if not psd:
            raise InvalidModelError("rho is not positive semidefinite")
        for t, step in enumerate(self.steps, 1):
            u = step.unitary
            if not shape_ok(u) or not close(mul(u, dag(u)), ident):
                raise InvalidModelError(f"step {t}: operator is not a {d}x{d} unitary")
            if not step.projectors:
                raise InvalidModelError(f"step {t}: empty projector family")
            total = zero
            for a, p in enumerate(step.projectors):
                if not shape_ok(p):
                    raise InvalidModelError(f"step {t}: projector {a} is not {d}x{d}")
                if not close(p, dag(p)) or not close(mul(p, p), p):
                    raise InvalidModelError(f"step {t}: projector {a} is not an orthogonal projector")
                for b in range(a):
                    if not close(mul(p, step.projectors[b]), zero):
                        raise InvalidModelError(f"step {t}: projectors {b} and {a} are not orthogonal")
                total = linalg.add(total, p) if exact else total + p
            if not close(total, ident):
                raise InvalidModelError(f"step {t}: projectors do not sum to the identity")


def history_label(choices: Sequence[int], radices: Sequence[int]) -> str:
    """Outcome string read right to left: the last time is the leftmost digit."""
    sep = "" if max(radices) <= 10 else "-"
    return sep.join(str(c) for c in reversed(choices))


def history_choices(radices: Sequence[int]) -> list[tuple[int, ...]]:
    """All outcome sequences, the first time step varying fastest."""
    out = []
    for rev in itertools.product(*(range(r) for r in reversed(radices))):
        out.append(tuple(reversed(rev)))
    return out


def build_from_operators(
    model: OperatorModel,
    *,
    epsilon: Optional[float] = None,
    allow_invalid: bool = False,
) -> DecoherenceFunctional:
    """``D(i, j) = Tr(C_j rho C_i^dagger)`` with ``C = P_{c_T} U_T ... P_{c_1} U_1``.

    The first argument is the conjugated one, matching ``conj(a_i) a_j`` of the
    amplitude route.
    """
    epsilon = model.epsilon if epsilon is None else epsilon
    exact = model.backend == EXACT
    radices = [len(s.projectors) for s in model.steps]
    choices = history_choices(radices)
    classes = []
    for seq in choices:
        c = linalg.identity(model.dimension) if exact else np.eye(model.dimension, dtype=complex)
        for step, k in zip(model.steps, seq):
            if exact:
                c = linalg.matmul(step.projectors[k], linalg.matmul(step.unitary, c))
            else:
                c = step.projectors[k] @ (step.unitary @ c)
        classes.append(c)
    n = len(choices)
    if exact:
        rho_cdag = [linalg.matmul(model.rho, linalg.dagger(c)) for c in classes]
        d = model.dimension
        entries = []
        for i in range(n):
            x = rho_cdag[i]
            row = []
            for j in range(n):
                cj = classes[j]
                acc = ZERO
                for a in range(d):
                    for b in range(d):
                        if cj[a][b] and x[b][a]:
                            acc = acc + cj[a][b] * x[b][a]
                row.append(acc)
            entries.append(row)
    else:
        entries = [[complex(np.trace(classes[j] @ model.rho @ classes[i].conj().T)) for j in range(n)] for i in range(n)]
    space = HistorySpace(tuple(history_label(s, radices) for s in choices))
    return _finish(space, entries, model.backend, epsilon, allow_invalid)


# -- composition -------------------------------------------------------------

def compose(d1: DecoherenceFunctional, d2: DecoherenceFunctional) -> DecoherenceFunctional:
    """Product functional ``D((a, a'), (b, b')) = D1(a, b) * D2(a', b')`` on the product space."""
    if d1.backend != d2.backend:
        raise BackendMismatchError(f"cannot compose {d1.backend} with {d2.backend} functionals")
    n1, n2 = d1.n, d2.n
    labels = tuple(f"({x},{y})" for x in d1.labels for y in d2.labels)
    entries = [
        [d1.entries[a][b] * d2.entries[a2][b2] for b in range(n1) for b2 in range(n2)]
        for a in range(n1)
        for a2 in range(n2)
    ]
    return _finish(HistorySpace(labels), entries, d1.backend, max(d1.epsilon, d2.epsilon), allow_invalid=True)


def product_event(d: DecoherenceFunctional, a: Event, b: Event) -> Event:
    """The event ``a x b`` inside a composed space ``d`` built from a's and b's spaces."""
    n2 = b.space.n
    return d.space.from_indices(i * n2 + j for i in a.members for j in b.members)
