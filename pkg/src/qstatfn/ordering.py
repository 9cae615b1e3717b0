"""Generalized operator ordering.

An ordering is a repetition count ``N`` together with complex weights over
permutations of the observables. It evaluates to

    [ sum_sigma w(sigma) prod_j exp(z theta_sigma(j) A_sigma(j) / N) ]^N

with ``z = 1`` for the moment-generating form and ``z = i`` for the unitary
(characteristic) form. ``WIGNER_LIMIT`` stands for ``N -> infinity`` and is
evaluated in closed form as ``exp(z sum_j theta_j A_j)``.

Permutations are 1-based tuples; ``(2, 1)`` puts ``A_2`` leftmost.
"""

from __future__ import annotations

import dataclasses
import enum
import itertools
from typing import Mapping, Sequence

import numpy as np

from . import errors
from .operators import SpectralDecomposition, expm_scaled, hermitian, spectral_decompose


class _Limit(enum.Enum):
    WIGNER = "WignerLimit"

    def __repr__(self) -> str:
        return "WIGNER_LIMIT"


WIGNER_LIMIT = _Limit.WIGNER

KINDS = ("KD", "MH", "Wigner")


@dataclasses.dataclass(frozen=True)
class OrderingSpec:
    n_vars: int
    repetitions: int | _Limit
    weights: Mapping[tuple[int, ...], complex]

    def __post_init__(self):
        if self.n_vars < 1:
            raise errors.InvalidOrdering("n_vars must be positive")
        if self.repetitions is not WIGNER_LIMIT:
            if not isinstance(self.repetitions, (int, np.integer)) or self.repetitions < 1:
                raise errors.InvalidOrdering("repetitions must be a positive integer or WIGNER_LIMIT")
        ident = set(range(1, self.n_vars + 1))
        for perm in self.weights:
            if len(perm) != self.n_vars or set(perm) != ident:
                raise errors.InvalidOrdering(f"{perm} is not a permutation of 1..{self.n_vars}")
        if self.repetitions is not WIGNER_LIMIT:
            total = sum(complex(w) for w in self.weights.values())
            if abs(total - 1.0) > 1e-12:
                raise errors.InvalidOrdering(f"weights sum to {total}, not 1")
        object.__setattr__(self, "weights", {tuple(p): complex(w) for p, w in self.weights.items()})

    @property
    def is_wigner(self) -> bool:
        return self.repetitions is WIGNER_LIMIT

    def with_repetitions(self, n: int | _Limit) -> "OrderingSpec":
        return dataclasses.replace(self, repetitions=n)


def preset(kind: str, n_vars: int) -> OrderingSpec:
    """Named orderings.

    ``KD`` is the forward product, ``MH`` averages the forward and fully
    reversed products, ``Wigner`` is the ``N -> infinity`` limit. Names are
    case-insensitive.
    """
    key = kind.strip().lower()
    ident = tuple(range(1, n_vars + 1))
    if key == "kd":
        return OrderingSpec(n_vars, 1, {ident: 1.0})
    if key == "mh":
        if n_vars < 2:
            raise errors.UnsupportedArity("MH ordering needs at least two observables")
        return OrderingSpec(n_vars, 1, {ident: 0.5, ident[::-1]: 0.5})
    if key == "wigner":
        return OrderingSpec(n_vars, WIGNER_LIMIT, {ident: 1.0})
    raise errors.InvalidOrdering(f"unknown ordering preset {kind!r}; expected one of {KINDS}")


def symmetric_ordering(n_vars: int, repetitions: int = 1) -> OrderingSpec:
    """Uniform weight over all ``n!`` permutations."""
    perms = list(itertools.permutations(range(1, n_vars + 1)))
    return OrderingSpec(n_vars, repetitions, {p: 1.0 / len(perms) for p in perms})


class OrderedExponential:
    """Evaluator for one ordering and one observable tuple.

    Decomposes every observable once so repeated evaluation over a grid only
    costs the products.
    """

    def __init__(self, spec: OrderingSpec, observables: Sequence):
        if len(observables) != spec.n_vars:
            raise errors.ArityMismatch(
                f"ordering expects {spec.n_vars} observables, got {len(observables)}")
        ops = [hermitian(a).matrix for a in observables]
        dims = {a.shape[0] for a in ops}
        if len(dims) != 1:
            raise errors.DimensionMismatch(f"observable dimensions differ: {sorted(dims)}")
        self.spec = spec
        self.dim = dims.pop()
        self._ops = ops
        self._decs: list[SpectralDecomposition] = [spectral_decompose(a) for a in ops]

    def __call__(self, theta: Sequence[float], z: complex = 1.0) -> np.ndarray:
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if theta.size != self.spec.n_vars:
            raise errors.ArityMismatch(f"expected {self.spec.n_vars} parameters, got {theta.size}")
        if self.spec.is_wigner:
            gen = sum(t * a for t, a in zip(theta, self._ops))
            return expm_scaled(spectral_decompose(gen), z)
        n = int(self.spec.repetitions)
        factors = [expm_scaled(dec, z * t / n) for dec, t in zip(self._decs, theta)]
        inner = np.zeros((self.dim, self.dim), dtype=complex)
        for perm, w in self.spec.weights.items():
            if w == 0:
                continue
            prod = np.eye(self.dim, dtype=complex)
            for j in perm:
                prod = prod @ factors[j - 1]
            inner += w * prod
        return inner if n == 1 else np.linalg.matrix_power(inner, n)


def ordering_function(spec: OrderingSpec, observables: Sequence, theta: Sequence[float]) -> np.ndarray:
    """Ordered exponential with real parameters."""
    return OrderedExponential(spec, observables)(theta, 1.0)


def unitary_ordering_function(spec: OrderingSpec, observables: Sequence,
                              theta: Sequence[float]) -> np.ndarray:
    """Ordered exponential built from the unitaries ``exp(i theta_j A_j / N)``."""
    return OrderedExponential(spec, observables)(theta, 1j)
