"""Geometric-mean and information-spectrum functionals.

Matrix geometric mean, fidelity, the geometric-mean moment-generating
function and its closed-form derivatives, the Golden-Thompson trace
comparison and the Chernoff functional with relative entropy and relative
entropy variance.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from . import config, errors
from .config import Tolerances
from .operators import (
    as_density,
    expm_scaled,
    hermitian,
    positive_operator,
    spectral_decompose,
)


def _pd(m, tol):
    return positive_operator(m, tol).matrix


def _herm(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def _same_dim(*mats):
    if len({m.shape for m in mats}) != 1:
        raise errors.DimensionMismatch("operator dimensions differ")


def geometric_mean(a, b, u: float = 0.5, tol: Tolerances | None = None) -> np.ndarray:
    """Weighted geometric mean ``A^(1/2) (A^(-1/2) B A^(-1/2))^u A^(1/2)``.

    ``u = 0`` gives ``A``, ``u = 1`` gives ``B`` and ``u = 1/2`` the
    symmetric mean ``A # B``.
    """
    tol = config.resolve(tol)
    a, b = _pd(a, tol), _pd(b, tol)
    _same_dim(a, b)
    if not 0.0 <= u <= 1.0:
        raise errors.MalformedInput("weight u must lie in [0, 1]")
    da = spectral_decompose(a)
    ah = da.apply(np.sqrt(da.eigenvalues))
    aih = da.apply(1.0 / np.sqrt(da.eigenvalues))
    inner = spectral_decompose(_herm(aih @ b @ aih))
    mid = inner.apply(np.clip(inner.eigenvalues, 0.0, None) ** u)
    return _herm(ah @ mid @ ah)


def fidelity(rho, sigma, tol: Tolerances | None = None) -> float:
    """Root fidelity ``Tr|sqrt(rho) sqrt(sigma)|`` (not squared)."""
    rho, sigma = as_density(rho, tol).matrix, as_density(sigma, tol).matrix
    _same_dim(rho, sigma)
    return float(np.sum(np.linalg.svd(_psd_sqrt(rho) @ _psd_sqrt(sigma), compute_uv=False)))


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    dec = spectral_decompose(m)
    return dec.apply(np.sqrt(np.clip(dec.eigenvalues, 0.0, None)))


@dataclasses.dataclass(frozen=True)
class TraceBound:
    tr_geo: float
    fid: float


def geo_mean_trace_bound(rho, sigma, tol: Tolerances | None = None) -> TraceBound:
    """``Tr(rho # sigma)`` next to the fidelity; the former never exceeds the latter."""
    g = geometric_mean(rho, sigma, 0.5, tol)
    return TraceBound(float(np.trace(g).real), fidelity(rho, sigma, tol))


def geo_mgf(rho, v, theta: float, tol: Tolerances | None = None) -> float:
    """``Tr(rho # exp(theta V))`` for a full-rank state."""
    tol = config.resolve(tol)
    rho = _pd(as_density(rho, tol), tol)
    v = hermitian(v, tol).matrix
    _same_dim(rho, v)
    sigma = expm_scaled(spectral_decompose(v), float(theta))
    return float(np.trace(geometric_mean(rho, _herm(sigma), 0.5, tol)).real)


@dataclasses.dataclass(frozen=True)
class GeoDerivatives:
    first: float
    second: float


def geo_mgf_derivatives(rho, v, tol: Tolerances | None = None) -> GeoDerivatives:
    """First and second theta-derivatives of :func:`geo_mgf` at zero, in closed form.

    With ``rho = sum_k p_k |k><k|``::

        first  = Tr(sqrt(rho) V) / 2
        second = Tr(sqrt(rho) V^2) / 2
                 - sum_{k,j} p_k^(3/2) |<k|V|j>|^2 / (sqrt(p_k) + sqrt(p_j))^2

    Raises:
        NotPositiveDefinite: ``rho`` is rank deficient.
    """
    tol = config.resolve(tol)
    rho = _pd(as_density(rho, tol), tol)
    v = hermitian(v, tol).matrix
    _same_dim(rho, v)
    dec = spectral_decompose(rho)
    p = dec.eigenvalues
    s = np.sqrt(p)
    u = dec.eigenvectors
    vk = u.conj().T @ v @ u
    first = 0.5 * np.sum(s * np.diag(vk).real)
    half_sq = 0.5 * np.sum(s * np.diag(vk @ vk).real)
    corr = np.sum((p ** 1.5)[:, None] * np.abs(vk) ** 2 / (s[:, None] + s[None, :]) ** 2)
    return GeoDerivatives(float(first), float(half_sq - corr))


@dataclasses.dataclass(frozen=True)
class GoldenThompson:
    lhs: float
    rhs: float

    @property
    def gap(self) -> float:
        return self.rhs - self.lhs


def golden_thompson_gap(a, b, tol: Tolerances | None = None) -> GoldenThompson:
    """``Tr exp(A + B)`` against ``Tr(exp(A) exp(B))``."""
    a, b = hermitian(a, tol).matrix, hermitian(b, tol).matrix
    _same_dim(a, b)
    lhs = np.sum(np.exp(spectral_decompose(_herm(a + b)).eigenvalues))
    ea = expm_scaled(spectral_decompose(a), 1.0)
    eb = expm_scaled(spectral_decompose(b), 1.0)
    return GoldenThompson(float(lhs), float(np.einsum("ij,ji->", ea, eb).real))


def _log_pair(rho, sigma, tol):
    tol = config.resolve(tol)
    rho = _pd(as_density(rho, tol), tol)
    sigma = _pd(as_density(sigma, tol), tol)
    _same_dim(rho, sigma)
    return rho, sigma


def chernoff(rho, sigma, theta: float, tol: Tolerances | None = None) -> float:
    """Chernoff functional ``psi(theta) = log Tr(rho^(1-theta) sigma^theta)`` on [0, 1]."""
    rho, sigma = _log_pair(rho, sigma, tol)
    theta = float(theta)
    if not 0.0 <= theta <= 1.0:
        raise errors.MalformedInput("theta must lie in [0, 1]")
    dr, ds = spectral_decompose(rho), spectral_decompose(sigma)
    a = dr.apply(dr.eigenvalues ** (1.0 - theta))
    b = ds.apply(ds.eigenvalues ** theta)
    return float(np.log(np.einsum("ij,ji->", a, b).real))


def _log_ratio(rho: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    dr, ds = spectral_decompose(rho), spectral_decompose(sigma)
    return ds.apply(np.log(ds.eigenvalues)) - dr.apply(np.log(dr.eigenvalues))


def relative_entropy(rho, sigma, tol: Tolerances | None = None) -> float:
    """``D(rho||sigma) = Tr[rho (log rho - log sigma)]`` in nats."""
    rho, sigma = _log_pair(rho, sigma, tol)
    return float(-np.einsum("ij,ji->", rho, _log_ratio(rho, sigma)).real)


def relative_entropy_variance(rho, sigma, tol: Tolerances | None = None) -> float:
    """``Tr[rho (log sigma - log rho)^2] - D(rho||sigma)^2``."""
    rho, sigma = _log_pair(rho, sigma, tol)
    l = _log_ratio(rho, sigma)
    m1 = np.einsum("ij,ji->", rho, l).real
    m2 = np.einsum("ij,ji->", rho, l @ l).real
    return float(m2 - m1 * m1)
