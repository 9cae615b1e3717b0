"""Quasiprobability tables, weak values and classicality witnesses.

Table convention: outcome tuples follow measurement order. The first listed
observable is measured first, so its projector sits rightmost, next to the
state:

    KD(a_1, ..., a_n) = Tr[P_n(a_n) ... P_1(a_1) rho].

Summing the KD table against ``exp(sum_j theta_j a_j)`` therefore reproduces
the KD-ordered moment-generating function of the *reversed* observable list,
``Tr(exp(theta_n A_n) ... exp(theta_1 A_1) rho)``.
"""

from __future__ import annotations

import dataclasses
import enum
import itertools
from typing import Callable, Sequence

import numpy as np

from . import config, errors, io
from .config import Tolerances
from .operators import (
    ProjectorFamily,
    as_density,
    expectation,
    hermitian,
    povm_element,
    spectral_decompose,
    spectral_projectors,
)


@dataclasses.dataclass(frozen=True, eq=False)
class QuasiProbTable:
    """Complex weights over joint outcomes.

    ``array[i_1, ..., i_n]`` is the weight of outcome tuple
    ``(axes[0][1][i_1], ..., axes[n-1][1][i_n])``.
    """

    axes: tuple[tuple[str, np.ndarray], ...]
    array: np.ndarray

    @property
    def labels(self) -> list[str]:
        return [lab for lab, _ in self.axes]

    @property
    def outcomes(self) -> list[np.ndarray]:
        return [vals for _, vals in self.axes]

    @property
    def values(self) -> dict[tuple[int, ...], complex]:
        return {idx: complex(v) for idx, v in np.ndenumerate(self.array)}

    def total(self) -> complex:
        return complex(self.array.sum())

    def marginal(self, keep: Sequence[int]) -> np.ndarray:
        drop = tuple(k for k in range(self.array.ndim) if k not in keep)
        return self.array.sum(axis=drop)

    def rows(self):
        """``(outcome values..., value)`` in outcome-ascending lexicographic order."""
        for idx in itertools.product(*(range(len(v)) for v in self.outcomes)):
            yield tuple(float(self.axes[k][1][i]) for k, i in enumerate(idx)), complex(self.array[idx])

    def to_csv(self) -> str:
        header = [f"outcome_{k + 1}" for k in range(len(self.axes))] + ["re", "im"]
        return io.csv_text(header, (list(o) + [v.real, v.imag] for o, v in self.rows()))

    @classmethod
    def from_csv(cls, text: str) -> "QuasiProbTable":
        header, rows = io.read_csv(text)
        n = len(header) - 2
        if n < 1 or header[-2:] != ["re", "im"]:
            raise errors.MalformedInput("quasiprobability CSV needs outcome columns then re,im")
        data = np.array(rows, dtype=float).reshape(-1, n + 2)
        axes = tuple((header[k], np.unique(data[:, k])) for k in range(n))
        arr = np.zeros(tuple(len(v) for _, v in axes), dtype=complex)
        for row in data:
            idx = tuple(int(np.searchsorted(axes[k][1], row[k])) for k in range(n))
            arr[idx] = row[n] + 1j * row[n + 1]
        return cls(axes, arr)


def _families(rho, observables, cluster_tol, tol) -> tuple:
    if len(observables) < 1:
        raise errors.ArityMismatch("need at least one observable")
    rho = as_density(rho, tol)
    fams = []
    for a in observables:
        a = hermitian(a, tol).matrix
        if a.shape != rho.matrix.shape:
            raise errors.DimensionMismatch(f"observable dim {a.shape[0]} != state dim {rho.dim}")
        fams.append(spectral_projectors(a, cluster_tol, tol))
    return rho, fams


def _sequential_traces(rho: np.ndarray, fams: list[ProjectorFamily]) -> np.ndarray:
    """``out[i_1..i_n] = Tr(P_n ... P_1 rho)``, sharing partial products depth-first."""
    out = np.zeros(tuple(len(f) for f in fams), dtype=complex)

    def walk(depth: int, m: np.ndarray, idx: tuple[int, ...]):
        if depth == len(fams):
            out[idx] = np.trace(m)
            return
        for k, p in enumerate(fams[depth].projectors):
            walk(depth + 1, p @ m, idx + (k,))

    walk(0, rho, ())
    return out


def kd_distribution(rho, observables: Sequence, cluster_tol: float | None = None,
                    labels: Sequence[str] | None = None,
                    tol: Tolerances | None = None) -> QuasiProbTable:
    """Kirkwood-Dirac table for measuring ``observables`` in the listed order."""
    if len(observables) < 2:
        raise errors.ArityMismatch("a joint quasiprobability needs at least two observables")
    rho, fams = _families(rho, observables, cluster_tol, tol)
    labels = list(labels) if labels is not None else [f"A{k + 1}" for k in range(len(fams))]
    axes = tuple((lab, f.values) for lab, f in zip(labels, fams))
    return QuasiProbTable(axes, _sequential_traces(rho.matrix, fams))


def mh_distribution(rho, observables: Sequence, cluster_tol: float | None = None,
                    labels: Sequence[str] | None = None,
                    tol: Tolerances | None = None) -> QuasiProbTable:
    """Margenau-Hill table: the real part of the KD table.

    The reversed product trace is the complex conjugate of the forward one,
    so this equals the forward/reversed average for any number of observables.
    """
    kd = kd_distribution(rho, observables, cluster_tol, labels, tol)
    return QuasiProbTable(kd.axes, kd.array.real.astype(complex))


def _match_outcome(fam: ProjectorFamily, value: float) -> int:
    centres = fam.values
    k = int(np.argmin(np.abs(centres - value)))
    if abs(centres[k] - value) > 1e-6 * max(1.0, abs(value)):
        raise errors.MalformedInput(f"{value} is not an eigenvalue; spectrum is {centres.tolist()}")
    return k


def conditional_kd(psi, a, b, b_value: float, cluster_tol: float | None = None,
                   tol: Tolerances | None = None) -> dict[float, complex]:
    """KD distribution of ``A`` conditioned on the later outcome ``B = b``.

    For a pure ``psi`` and rank-one ``P_B(b)`` each entry is
    ``<b|a><a|psi> / <b|psi>``.
    """
    tol = config.resolve(tol)
    rho, (fa, fb) = _families(psi, [a, b], cluster_tol, tol)
    lam = spectral_decompose(rho.matrix).eigenvalues
    if np.any(np.abs(lam[:-1]) > tol.psd_tol):
        raise errors.NotPure("conditional KD distribution needs a pure state")
    pb = fb.projectors[_match_outcome(fb, b_value)]
    norm = expectation(pb, rho.matrix).real
    if norm <= tol.postselect_tol:
        raise errors.ZeroPostSelection(f"Pr(B = {b_value}) = {norm:.3e}")
    return {float(av): expectation(pb @ pa, rho.matrix) / norm for av, pa in fa}


def _weak_ratio(rho, pi, op, tol: Tolerances) -> complex:
    p = expectation(pi, rho).real
    if p <= tol.postselect_tol:
        raise errors.ZeroPostSelection(f"Tr(Pi rho) = {p:.3e} is below postselect_tol")
    return expectation(pi @ op, rho) / p


def _weak_inputs(rho, pi, a, tol):
    rho = as_density(rho, tol)
    pi = povm_element(pi, tol).matrix
    a = hermitian(a, tol).matrix
    if not (pi.shape == a.shape == rho.matrix.shape):
        raise errors.DimensionMismatch("state, effect and observable dimensions differ")
    return rho.matrix, pi, a


def weak_value(rho, pi, a, tol: Tolerances | None = None) -> complex:
    """``Tr(Pi A rho) / Tr(Pi rho)``; may fall outside the spectrum of ``A``."""
    tol = config.resolve(tol)
    rho, pi, a = _weak_inputs(rho, pi, a, tol)
    return _weak_ratio(rho, pi, a, tol)


def weak_variance(rho, pi, a, tol: Tolerances | None = None) -> complex:
    """``Ex(A^2 | Pi) - Ex(A | Pi)^2``; complex or negative in general."""
    tol = config.resolve(tol)
    rho, pi, a = _weak_inputs(rho, pi, a, tol)
    return _weak_ratio(rho, pi, a @ a, tol) - _weak_ratio(rho, pi, a, tol) ** 2


@dataclasses.dataclass(frozen=True)
class NPointResult:
    direct: complex
    chain: complex
    skipped: int


def npoint_correlation(rho, observables: Sequence, cluster_tol: float | None = None,
                       tol: Tolerances | None = None) -> NPointResult:
    """``Tr(A_1 ... A_n rho)`` evaluated directly and as a chain of weak values.

    The chain runs over the eigenbasis ``{lambda_i, |alpha_i>}`` of ``rho`` and
    every outcome tuple:

        sum a_1...a_n lambda_i Pr(A_1 = a_1 | alpha_i)
            prod_k Ex_alpha_i[P_{k+1}(a_{k+1}) | P_k(a_k)]

    where the conditional factors are weak values post-selected on the
    previous projector. The chain telescopes to the direct value when the
    projectors are rank one; branches whose amplitude ``|<a_k|alpha_i>|`` is
    below ``amplitude_tol`` are skipped and counted.
    """
    tol = config.resolve(tol)
    if len(observables) < 2:
        raise errors.ArityMismatch("n-point correlation needs n >= 2")
    rho, fams = _families(rho, observables, cluster_tol, tol)
    r = rho.matrix
    prod = np.eye(rho.dim, dtype=complex)
    for a in observables:
        prod = prod @ hermitian(a, tol).matrix
    direct = expectation(prod, r)

    dec = spectral_decompose(r)
    chain = 0j
    skipped = 0
    floor = tol.amplitude_tol ** 2
    n = len(fams)
    for lam_i, alpha in zip(dec.eigenvalues, dec.eigenvectors.T):
        # <alpha| X |alpha> for every projector and consecutive projector pair
        born = [np.array([np.vdot(alpha, p @ alpha) for p in f.projectors]) for f in fams]
        pair = [
            np.array([[np.vdot(alpha, p @ q @ alpha) for q in fams[k + 1].projectors]
                      for p in fams[k].projectors])
            for k in range(n - 1)
        ]
        for idx in itertools.product(*(range(len(f)) for f in fams)):
            if any(abs(born[k][idx[k]]) < floor for k in range(n - 1)):
                skipped += 1
                continue
            term = lam_i * born[0][idx[0]]
            for k in range(n - 1):
                term *= pair[k][idx[k], idx[k + 1]] / born[k][idx[k]]
            for k in range(n):
                term *= fams[k].values[idx[k]]
            chain += term
    return NPointResult(complex(direct), complex(chain), skipped)


class Verdict(str, enum.Enum):
    CLASSICAL_CANDIDATE = "ClassicalCandidate"
    COMPLEX_VALUED = "ComplexValued"
    NEGATIVE_OR_NON_PD = "NegativeOrNonPD"

    def __str__(self) -> str:
        return self.value


@dataclasses.dataclass(frozen=True)
class BochnerReport:
    hermitian_symmetry_violation: float
    min_gram_eigenvalue: float
    grid: tuple[tuple[float, ...], ...]
    verdict: Verdict

    def to_dict(self) -> dict:
        return {
            "hermitian_symmetry_violation": io.round_sig(self.hermitian_symmetry_violation),
            "min_gram_eigenvalue": io.round_sig(self.min_gram_eigenvalue),
            "grid_size": len(self.grid),
            "verdict": self.verdict.value,
        }


def _sample(sampler, t: np.ndarray) -> complex:
    try:
        v = complex(sampler(t if t.size > 1 else float(t[0])))
    except errors.QStatError:
        raise
    except Exception as exc:
        raise errors.SamplerFailure(f"sampler failed at {t.tolist()}: {exc}") from exc
    if not np.isfinite(v):
        raise errors.SamplerFailure(f"sampler returned {v} at {t.tolist()}")
    return v


def bochner_check(sampler: Callable, grid: Sequence, sym_tol: float | None = None,
                  pd_tol: float | None = None) -> BochnerReport:
    """Finite-grid witness of the classical characteristic-function conditions.

    Builds ``G[j, k] = C(t_j - t_k)``. A classical characteristic function
    gives a Hermitian, positive semi-definite ``G`` on every grid, so either
    failure is a conclusive witness of non-classicality; passing is only a
    candidate verdict.

    Args:
        sampler: ``theta -> C(theta)``; receives a float for one-variable
            grids and an array otherwise.
        grid: points ``t_j`` (scalars or equal-length vectors).
    """
    sym_tol = config.DEFAULT.sym_tol if sym_tol is None else sym_tol
    pd_tol = config.DEFAULT.pd_tol if pd_tol is None else pd_tol
    pts = np.asarray(grid, dtype=float)
    if pts.size == 0:
        raise errors.MalformedInput("grid must be non-empty")
    if pts.ndim == 1:
        pts = pts[:, None]
    m = pts.shape[0]
    cache: dict[bytes, complex] = {}

    def c(t: np.ndarray) -> complex:
        t = np.round(t, 12) + 0.0
        key = t.tobytes()
        if key not in cache:
            cache[key] = _sample(sampler, t)
        return cache[key]

    gram = np.empty((m, m), dtype=complex)
    for j in range(m):
        for k in range(m):
            gram[j, k] = c(pts[j] - pts[k])
    sym = float(np.max(np.abs(gram - gram.conj().T)))
    for t in pts:
        sym = max(sym, abs(c(-t) - np.conj(c(t))))
    min_eig = float(np.linalg.eigvalsh(0.5 * (gram + gram.conj().T))[0])
    if sym > sym_tol:
        verdict = Verdict.COMPLEX_VALUED
    elif min_eig < -pd_tol:
        verdict = Verdict.NEGATIVE_OR_NON_PD
    else:
        verdict = Verdict.CLASSICAL_CANDIDATE
    return BochnerReport(sym, min_eig, tuple(map(tuple, pts.tolist())), verdict)


def product_grid(lo: float, hi: float, n_per_axis: int, n_vars: int) -> list[tuple[float, ...]]:
    axis = np.linspace(lo, hi, n_per_axis)
    return [tuple(p) for p in itertools.product(axis, repeat=n_vars)]
