"""Quantum moment-generating, characteristic and cumulant functions.

Every generating function is an expectation ``Tr(X rho)``; the purified
vector is never built. The single-variable functions share one evaluator,
``Tr(exp(z A) rho)`` for complex ``z``, so the characteristic function is
literally the moment-generating function at ``z = i theta``.
"""

from __future__ import annotations

import dataclasses
from typing import Callable, Sequence

import numpy as np

from . import config, errors
from .config import Tolerances
from .operators import (
    as_density,
    as_matrix,
    expectation,
    hermitian,
    povm_element,
    spectral_decompose,
)
from .ordering import OrderedExponential, OrderingSpec

FD_STEP_1 = 1e-5
FD_STEP_2 = 1e-4


@dataclasses.dataclass(frozen=True)
class MomentReport:
    expectation: float
    variance: float
    covariance: float | None = None


def _checked(rho, *ops, tol=None):
    rho = as_density(rho, tol)
    mats = [hermitian(a, tol).matrix for a in ops]
    for m in mats:
        if m.shape != rho.matrix.shape:
            raise errors.DimensionMismatch(
                f"operator dim {m.shape[0]} does not match state dim {rho.dim}")
    return rho, mats


def _state_weights(rho: np.ndarray, a: np.ndarray):
    """Eigenvalues of ``a`` and the diagonal of ``rho`` in that eigenbasis.

    ``Tr(exp(zA) rho) = sum_k exp(z a_k) <k|rho|k>``.
    """
    dec = spectral_decompose(a)
    u = dec.eigenvectors
    diag = np.einsum("ik,ij,jk->k", u.conj(), rho, u)
    return dec.eigenvalues, diag


def mgf_complex(rho, a, z: complex, tol: Tolerances | None = None) -> complex:
    """``Tr(exp(z A) rho)`` for complex ``z``."""
    rho, (a,) = _checked(rho, a, tol=tol)
    lam, diag = _state_weights(rho.matrix, a)
    return complex(np.sum(np.exp(z * lam) * diag))


def qmgf(rho, a, theta: float, tol: Tolerances | None = None) -> float:
    """Quantum moment-generating function ``Tr(exp(theta A) rho)``; always > 0."""
    return mgf_complex(rho, a, float(theta), tol).real


def qcf(rho, a, theta: float, tol: Tolerances | None = None) -> complex:
    """Quantum characteristic function ``Tr(exp(i theta A) rho)``."""
    return mgf_complex(rho, a, 1j * float(theta), tol)


def qcgf(rho, a, theta: float, tol: Tolerances | None = None) -> float:
    """Cumulant-generating function, ``log qmgf``."""
    return float(np.log(qmgf(rho, a, theta, tol)))


def unwrap_log(values: Sequence[complex], path: Sequence[float], zero_tol: float) -> np.ndarray:
    """Continuous complex logarithm of ``values`` along an increasing path through 0.

    The branch is pinned to the principal one at ``path == 0`` and continued
    outwards in both directions by nearest-branch phase tracking.
    """
    path = np.asarray(path, dtype=float)
    values = np.asarray(values, dtype=complex)
    if path.ndim != 1 or path.size == 0 or not np.all(np.isfinite(path)):
        raise errors.MalformedInput("path must be a finite 1-D sequence")
    if np.any(np.diff(path) <= 0):
        raise errors.MalformedInput("path must be strictly increasing")
    zeros = np.flatnonzero(path == 0.0)
    if zeros.size != 1:
        raise errors.MalformedInput("path must contain 0")
    mags = np.abs(values)
    bad = np.flatnonzero(mags < zero_tol)
    if bad.size:
        raise errors.BranchAmbiguity(
            f"|C| = {mags[bad[0]]:.3e} below zero_tol at theta = {path[bad[0]]:g}; phase undefined")
    k0 = int(zeros[0])
    phase = np.empty(values.size)
    phase[k0] = np.angle(values[k0])
    for k in range(k0 + 1, values.size):
        phase[k] = phase[k - 1] + np.angle(values[k] / values[k - 1])
    for k in range(k0 - 1, -1, -1):
        phase[k] = phase[k + 1] + np.angle(values[k] / values[k + 1])
    return np.log(mags) + 1j * phase


def qscf(rho, a, path: Sequence[float], tol: Tolerances | None = None) -> np.ndarray:
    """Second characteristic function ``log qcf`` along ``path``.

    Raises:
        BranchAmbiguity: ``|qcf|`` drops below ``zero_tol`` somewhere on the path.
    """
    tol = config.resolve(tol)
    rho, (a,) = _checked(rho, a, tol=tol)
    lam, diag = _state_weights(rho.matrix, a)
    vals = [np.sum(np.exp(1j * t * lam) * diag) for t in np.asarray(path, dtype=float)]
    return unwrap_log(vals, path, tol.zero_tol)


class MultivariateGenerator:
    """``theta -> Tr(f(theta) rho)`` for a fixed state, ordering and observables."""

    def __init__(self, rho, observables: Sequence, spec: OrderingSpec,
                 tol: Tolerances | None = None):
        self.rho, _ = _checked(rho, *observables, tol=tol)
        self._f = OrderedExponential(spec, observables)

    def mgf(self, theta: Sequence[float]) -> complex:
        return expectation(self._f(theta, 1.0), self.rho.matrix)

    def cf(self, theta: Sequence[float]) -> complex:
        return expectation(self._f(theta, 1j), self.rho.matrix)


def multivariable_qmgf(rho, observables: Sequence, theta: Sequence[float],
                       spec: OrderingSpec, tol: Tolerances | None = None) -> complex:
    """``Tr(f(theta) rho)`` for the ordered exponential ``f`` of ``spec``."""
    return MultivariateGenerator(rho, observables, spec, tol).mgf(theta)


def multivariable_qcf(rho, observables: Sequence, theta: Sequence[float],
                      spec: OrderingSpec, tol: Tolerances | None = None) -> complex:
    """Characteristic counterpart of :func:`multivariable_qmgf`."""
    return MultivariateGenerator(rho, observables, spec, tol).cf(theta)


def _postselection(rho, pi, tol: Tolerances) -> tuple[np.ndarray, float]:
    pi = povm_element(pi, tol).matrix
    p = expectation(pi, rho.matrix).real
    if p <= tol.postselect_tol:
        raise errors.ZeroPostSelection(f"Tr(Pi rho) = {p:.3e} is below postselect_tol")
    return pi, p


def conditional_mgf_complex(rho, pi, a, z: complex, tol: Tolerances | None = None) -> complex:
    """``Tr(Pi exp(z A) rho) / Tr(Pi rho)`` for complex ``z``."""
    tol = config.resolve(tol)
    rho, (a,) = _checked(rho, a, tol=tol)
    pi, p = _postselection(rho, pi, tol)
    dec = spectral_decompose(a)
    return expectation(pi @ dec.apply(np.exp(z * dec.eigenvalues)), rho.matrix) / p


def conditional_qmgf(rho, pi, a, theta: float, tol: Tolerances | None = None) -> complex:
    """Post-selected moment-generating function; complex in general."""
    return conditional_mgf_complex(rho, pi, a, float(theta), tol)


def conditional_qcf(rho, pi, a, theta: float, tol: Tolerances | None = None) -> complex:
    return conditional_mgf_complex(rho, pi, a, 1j * float(theta), tol)


def _is_pure(rho, tol: Tolerances) -> bool:
    lam = spectral_decompose(rho.matrix).eigenvalues
    return bool(np.all(np.abs(lam[:-1]) <= tol.psd_tol) and abs(lam[-1] - 1.0) <= tol.psd_tol)


def modular_value(psi, phi, a, theta: float, tol: Tolerances | None = None) -> complex:
    """``<phi|exp(-i theta A)|psi> / <phi|psi>`` for pure pre/post-selected states.

    Raises:
        NotPure: either state has rank above one.
        OrthogonalSelection: ``<phi|psi>`` vanishes.
    """
    tol = config.resolve(tol)
    psi, (a,) = _checked(psi, a, tol=tol)
    phi = as_density(phi, tol)
    if phi.dim != psi.dim:
        raise errors.DimensionMismatch("pre- and post-selected states differ in dimension")
    if not (_is_pure(psi, tol) and _is_pure(phi, tol)):
        raise errors.NotPure("modular value needs rank-one states")
    overlap = expectation(phi.matrix, psi.matrix).real
    if overlap <= tol.postselect_tol:
        raise errors.OrthogonalSelection(f"|<phi|psi>|^2 = {overlap:.3e}")
    dec = spectral_decompose(a)
    u = dec.apply(np.exp(-1j * float(theta) * dec.eigenvalues))
    return expectation(phi.matrix @ u, psi.matrix) / overlap


def moments(rho, a, tol: Tolerances | None = None) -> MomentReport:
    """Expectation and variance of ``A`` in ``rho``."""
    rho, (a,) = _checked(rho, a, tol=tol)
    ex = expectation(a, rho.matrix).real
    a0 = a - ex * np.eye(rho.dim)
    return MomentReport(ex, expectation(a0 @ a0, rho.matrix).real)


def covariance(rho, a, b, tol: Tolerances | None = None) -> float:
    """Symmetrized covariance ``Tr({A,B} rho)/2 - Tr(A rho) Tr(B rho)``."""
    rho, (a, b) = _checked(rho, a, b, tol=tol)
    r = rho.matrix
    return (0.5 * expectation(a @ b + b @ a, r) - expectation(a, r) * expectation(b, r)).real


def finite_difference(fn: Callable[[float], complex], order: int, at: float = 0.0,
                      step: float | None = None):
    """Central finite difference of order 1 or 2."""
    if order not in (1, 2):
        raise errors.MalformedInput("order must be 1 or 2")
    h = (FD_STEP_1 if order == 1 else FD_STEP_2) if step is None else step
    if h <= 0:
        raise errors.MalformedInput("step must be positive")
    if order == 1:
        return (fn(at + h) - fn(at - h)) / (2 * h)
    return (fn(at + h) - 2 * fn(at) + fn(at - h)) / (h * h)


def forward_difference(fn: Callable[[float], complex], order: int, at: float = 0.0,
                       step: float = FD_STEP_2):
    """One-sided difference of order 1 or 2, second-order accurate.

    For functions only defined to the right of ``at`` (e.g. on [0, 1]).
    """
    h = step
    f0, f1, f2 = fn(at), fn(at + h), fn(at + 2 * h)
    if order == 1:
        return (-3 * f0 + 4 * f1 - f2) / (2 * h)
    if order == 2:
        return (2 * f0 - 5 * f1 + 4 * f2 - fn(at + 3 * h)) / (h * h)
    raise errors.MalformedInput("order must be 1 or 2")


def mixed_difference(fn: Callable[[float, float], complex], at: tuple[float, float] = (0.0, 0.0),
                     step: float = FD_STEP_2):
    """Central estimate of the mixed partial ``d^2 f / dx dy``."""
    x, y = at
    h = step
    return (fn(x + h, y + h) - fn(x + h, y - h) - fn(x - h, y + h) + fn(x - h, y - h)) / (4 * h * h)


def centered(rho, a) -> np.ndarray:
    """``A - Tr(A rho)``."""
    a = as_matrix(a)
    return a - expectation(a, as_matrix(rho)).real * np.eye(a.shape[0])
