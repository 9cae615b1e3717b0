"""Dense complex operator foundation.

Validated operator types, spectral decomposition, spectral matrix functions
and eigenprojector families. Every matrix held by these types is a private,
read-only copy, so values can be shared freely between threads.
"""

from __future__ import annotations

import dataclasses
from typing import Callable, Sequence

import numpy as np

from . import config, errors
from .config import Tolerances


def _frozen(m: np.ndarray) -> np.ndarray:
    out = np.array(m, dtype=complex, copy=True)
    out.flags.writeable = False
    return out


def as_matrix(m) -> np.ndarray:
    """Coerce ``m`` (an operator wrapper or array-like) to a square complex array."""
    if isinstance(m, _OperatorBase):
        return m.matrix
    try:
        arr = np.asarray(m, dtype=complex)
    except (TypeError, ValueError) as exc:
        raise errors.MalformedInput(f"not a numeric matrix: {exc}") from None
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise errors.MalformedInput(f"expected a non-empty square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise errors.MalformedInput("matrix has non-finite entries")
    return arr


@dataclasses.dataclass(frozen=True, eq=False)
class _OperatorBase:
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.array(self.matrix, dtype=dtype)


class HermitianOperator(_OperatorBase):
    """Self-adjoint matrix (observables, Hamiltonians)."""


class DensityOperator(HermitianOperator):
    """Positive semi-definite, unit-trace matrix."""


class POVMElement(HermitianOperator):
    """Effect operator with spectrum inside [0, 1]."""


class PositiveOperator(HermitianOperator):
    """Strictly positive definite matrix."""


@dataclasses.dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Return ``U diag(values) U^dagger``."""
        u = self.eigenvectors
        return (u * values) @ u.conj().T

    def reconstruct(self) -> np.ndarray:
        return self.apply(self.eigenvalues)


@dataclasses.dataclass(frozen=True, eq=False)
class ProjectorFamily:
    """Eigenprojectors with their cluster centres, centres ascending."""

    entries: tuple[tuple[float, np.ndarray], ...]

    @property
    def values(self) -> np.ndarray:
        return np.array([c for c, _ in self.entries])

    @property
    def projectors(self) -> list[np.ndarray]:
        return [p for _, p in self.entries]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def hermitian(m, tol: Tolerances | None = None) -> HermitianOperator:
    """Validate ``m`` as Hermitian and return it symmetrized."""
    if isinstance(m, HermitianOperator):
        return m
    tol = config.resolve(tol)
    arr = as_matrix(m)
    err = np.max(np.abs(arr - arr.conj().T))
    if err > tol.hermitian_tol:
        raise errors.NotHermitian(f"max |M - M^dagger| = {err:.3e} exceeds {tol.hermitian_tol:g}")
    return HermitianOperator(_frozen(0.5 * (arr + arr.conj().T)))


def _eigh(arr: np.ndarray, tol: Tolerances) -> SpectralDecomposition:
    try:
        w, v = np.linalg.eigh(arr)
    except np.linalg.LinAlgError as exc:
        raise errors.EigensolverFailure(str(exc)) from None
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(v))):
        raise errors.EigensolverFailure("eigensolver returned non-finite values")
    scale = max(1.0, float(np.max(np.abs(arr))))
    recon = np.max(np.abs((v * w) @ v.conj().T - arr))
    if recon > tol.recon_tol * scale:
        raise errors.EigensolverFailure(f"reconstruction error {recon:.3e}")
    v.flags.writeable = False
    w.flags.writeable = False
    return SpectralDecomposition(w, v)


def spectral_decompose(h, tol: Tolerances | None = None) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian operator, eigenvalues ascending."""
    tol = config.resolve(tol)
    return _eigh(hermitian(h, tol).matrix, tol)


_FUNCS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
}


def matrix_function(h, f: str, u: float | None = None, tol: Tolerances | None = None) -> np.ndarray:
    """Apply a scalar function to a Hermitian operator through its spectrum.

    Args:
        h: Hermitian operator.
        f: one of ``"exp"``, ``"log"``, ``"sqrt"``, ``"power"``.
        u: exponent, required for ``"power"``.

    Raises:
        NonPositiveSpectrum: log, sqrt or a non-integer power of an operator
            with an eigenvalue <= 0.
    """
    tol = config.resolve(tol)
    dec = spectral_decompose(h, tol)
    lam = dec.eigenvalues
    if f == "power":
        if u is None:
            raise errors.MalformedInput("power requires an exponent")
        u = float(u)
        if u.is_integer() and (u >= 0 or np.all(lam != 0)):
            return dec.apply(lam ** int(u))
        if np.any(lam <= 0):
            _nonpos(f)
        return dec.apply(lam ** u)
    if f not in _FUNCS:
        raise errors.MalformedInput(f"unknown matrix function {f!r}")
    if f != "exp" and np.any(lam <= 0):
        _nonpos(f)
    return dec.apply(_FUNCS[f](lam))


def _nonpos(f: str):
    raise errors.NonPositiveSpectrum(f"{f} needs a strictly positive spectrum")


def expm_scaled(dec: SpectralDecomposition, z: complex) -> np.ndarray:
    """``exp(z H)`` for the decomposed Hermitian ``H`` and any complex scalar ``z``."""
    return dec.apply(np.exp(z * dec.eigenvalues))


def cluster_eigenvalues(w: np.ndarray, cluster_tol: float) -> list[np.ndarray]:
    """Group ascending eigenvalue indices by single-linkage gaps <= ``cluster_tol``."""
    groups = [[0]]
    for k in range(1, len(w)):
        if w[k] - w[k - 1] <= cluster_tol:
            groups[-1].append(k)
        else:
            groups.append([k])
    return [np.array(g) for g in groups]


def spectral_projectors(h, cluster_tol: float | None = None,
                        tol: Tolerances | None = None) -> ProjectorFamily:
    """Orthogonal eigenprojectors of ``h``, merging eigenvalues closer than ``cluster_tol``."""
    tol = config.resolve(tol)
    if cluster_tol is None:
        cluster_tol = tol.cluster_tol
    dec = spectral_decompose(h, tol)
    entries = []
    for idx in cluster_eigenvalues(dec.eigenvalues, cluster_tol):
        v = dec.eigenvectors[:, idx]
        p = v @ v.conj().T
        entries.append((float(np.mean(dec.eigenvalues[idx])), _frozen(0.5 * (p + p.conj().T))))
    return ProjectorFamily(tuple(entries))


def make_density(m, tol: Tolerances | None = None) -> DensityOperator:
    """Validate ``m`` as a quantum state.

    Eigenvalues in ``[-psd_tol, 0)`` are clamped to zero and the state is
    renormalized; anything more negative is rejected.
    """
    if isinstance(m, DensityOperator):
        return m
    tol = config.resolve(tol)
    h = hermitian(m, tol).matrix
    tr = np.trace(h).real
    if abs(tr - 1.0) > tol.trace_tol:
        raise errors.TraceNotOne(f"trace {tr:.12g} differs from 1")
    dec = _eigh(h, tol)
    lam = dec.eigenvalues
    if lam[0] < -tol.psd_tol:
        raise errors.NotPositive(f"eigenvalue {lam[0]:.3e} is negative")
    if lam[0] < 0:
        lam = np.clip(lam, 0.0, None)
        h = dec.apply(lam / lam.sum())
        h = 0.5 * (h + h.conj().T)
    return DensityOperator(_frozen(h))


def as_density(m, tol: Tolerances | None = None) -> DensityOperator:
    return m if isinstance(m, DensityOperator) else make_density(m, tol)


def povm_element(m, tol: Tolerances | None = None) -> POVMElement:
    """Validate ``m`` as an effect, ``0 <= m <= 1``."""
    if isinstance(m, POVMElement):
        return m
    tol = config.resolve(tol)
    h = hermitian(m, tol).matrix
    lam = _eigh(h, tol).eigenvalues
    if lam[0] < -tol.psd_tol or lam[-1] > 1.0 + tol.psd_tol:
        raise errors.NotPositive(f"effect spectrum [{lam[0]:.3e}, {lam[-1]:.3e}] leaves [0, 1]")
    return POVMElement(_frozen(h))


def positive_operator(m, tol: Tolerances | None = None) -> PositiveOperator:
    """Validate ``m`` as strictly positive definite (eigenvalues >= ``pd_floor``)."""
    if isinstance(m, PositiveOperator):
        return m
    tol = config.resolve(tol)
    h = hermitian(m, tol).matrix
    lam = _eigh(h, tol).eigenvalues
    if lam[0] < tol.pd_floor:
        raise errors.NotPositiveDefinite(f"smallest eigenvalue {lam[0]:.3e} below {tol.pd_floor:g}")
    return PositiveOperator(_frozen(h))


def canonical_amplitude(rho, tol: Tolerances | None = None) -> np.ndarray:
    """The canonical amplitude ``rho**(1/2)``, so that ``W W^dagger = rho``.

    The positive square root is taken on the support; a rank-deficient state
    is fine here since zero eigenvalues map to zero.
    """
    tol = config.resolve(tol)
    dec = _eigh(as_density(rho, tol).matrix, tol)
    return dec.apply(np.sqrt(np.clip(dec.eigenvalues, 0.0, None)))


def check_same_dim(*ops) -> int:
    dims = {as_matrix(o).shape[0] for o in ops}
    if len(dims) != 1:
        raise errors.DimensionMismatch(f"operator dimensions differ: {sorted(dims)}")
    return dims.pop()


def expectation(op, rho) -> complex:
    """``Tr(op rho)`` without forming the product."""
    return complex(np.einsum("ij,ji->", as_matrix(op), as_matrix(rho)))


# standard operators and seeded samplers

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
for _m in (SIGMA_X, SIGMA_Y, SIGMA_Z):
    _m.flags.writeable = False


def ket_projector(psi: Sequence[complex]) -> np.ndarray:
    """``|psi><psi|`` for a (normalized on the fly) state vector."""
    v = np.asarray(psi, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * 0.5 * (g + g.conj().T)


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random state from a Ginibre matrix of the given rank (full rank by default)."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_pure(dim: int, rng: np.random.Generator) -> np.ndarray:
    return ket_projector(rng.normal(size=dim) + 1j * rng.normal(size=dim))
