"""Discrete phase space for odd dimension ``d``.

Clock and shift operators, displacement operators ``D_u = tau^(-qp) Z^q X^p``
with ``tau = exp((d+1) pi i / d)``, the discrete characteristic function
``chi(u) = Tr(rho D_u)`` and its symplectic Fourier transform, the Wigner
table. Phases are computed from exact integer exponents of
``omega = exp(2 pi i / d)`` to avoid drift at larger ``d``.

Normalization: phase-point operators
``A_x = (1/d) sum_u omega^{x,u} D_u`` are Hermitian with unit trace and
``Tr(A_x A_y) = d delta_xy``. The Wigner table is ``W(x) = Tr(rho A_x) / d``,
which sums to one, and the state is recovered as ``rho = sum_x W(x) A_x``.
"""

from __future__ import annotations

import dataclasses
from functools import lru_cache

import numpy as np

from . import config, errors, io
from .config import Tolerances
from .operators import as_density, as_matrix, make_density


@dataclasses.dataclass(frozen=True, order=True)
class PhasePoint:
    q: int
    p: int

    def __post_init__(self):
        if self.q < 0 or self.p < 0:
            raise errors.MalformedInput("phase-point coordinates must be reduced mod d")


@dataclasses.dataclass(frozen=True, eq=False)
class WignerTable:
    """``values[q, p]`` is the quasiprobability at phase point ``(q, p)``."""

    d: int
    values: np.ndarray

    def __post_init__(self):
        _check_odd(self.d)
        if self.values.shape != (self.d, self.d):
            raise errors.MalformedInput(f"Wigner table must be {self.d}x{self.d}")

    def __getitem__(self, u: PhasePoint) -> float:
        return float(self.values[u.q % self.d, u.p % self.d])

    def total(self) -> float:
        return float(self.values.sum())

    def to_csv(self) -> str:
        rows = ((q, p, float(self.values[q, p])) for q in range(self.d) for p in range(self.d))
        return io.csv_text(["q", "p", "w"], rows)

    @classmethod
    def from_csv(cls, text: str) -> "WignerTable":
        header, rows = io.read_csv(text)
        if header != ["q", "p", "w"]:
            raise errors.MalformedInput('Wigner CSV header must be "q,p,w"')
        d = int(round(np.sqrt(len(rows))))
        if d * d != len(rows):
            raise errors.MalformedInput("Wigner CSV must have d^2 rows")
        vals = np.full((d, d), np.nan)
        for q, p, w in rows:
            if not (q.is_integer() and p.is_integer() and 0 <= q < d and 0 <= p < d):
                raise errors.MalformedInput(f"bad phase point ({q}, {p}) for d = {d}")
            vals[int(q), int(p)] = w
        if np.any(np.isnan(vals)):
            raise errors.MalformedInput("Wigner CSV is missing phase points")
        return cls(d, vals)


def _check_odd(d: int) -> None:
    if d < 2:
        raise errors.MalformedInput("dimension must be at least 2")
    if d % 2 == 0:
        raise errors.EvenDimension(f"d = {d}: only odd dimensions are supported")


def _omega_power(d: int, k) -> np.ndarray:
    """``omega**k`` with the exponent reduced mod ``d`` before exponentiating."""
    return np.exp(2j * np.pi * (np.mod(k, d) / d))


def _tau_exponent(d: int, k: int) -> int:
    """``tau**k == omega**_tau_exponent(d, k)`` since ``tau = omega**((d+1)/2)``."""
    return (k * (d + 1) // 2) % d


def clock_shift(d: int) -> tuple[np.ndarray, np.ndarray]:
    """Shift ``X|k> = |k+1>`` and clock ``Z|k> = omega^k |k>``."""
    _check_odd(d)
    x = np.roll(np.eye(d, dtype=complex), 1, axis=0)
    z = np.diag(_omega_power(d, np.arange(d)))
    return x, z


@lru_cache(maxsize=32)
def _displacements(d: int) -> np.ndarray:
    x, z = clock_shift(d)
    out = np.empty((d, d, d, d), dtype=complex)
    zq = np.eye(d, dtype=complex)
    for q in range(d):
        xp = np.eye(d, dtype=complex)
        for p in range(d):
            out[q, p] = _omega_power(d, -_tau_exponent(d, q * p)) * (zq @ xp)
            xp = xp @ x
        zq = zq @ z
    out.flags.writeable = False
    return out


def displacement(d: int, u: PhasePoint | tuple[int, int]) -> np.ndarray:
    """Displacement operator ``D_(q,p) = tau^(-qp) Z^q X^p``."""
    _check_odd(d)
    q, p = (u.q, u.p) if isinstance(u, PhasePoint) else u
    return _displacements(d)[q % d, p % d].copy()


def _symplectic_phases(d: int) -> np.ndarray:
    """``S[x1, x2, u1, u2] = omega^(x1 u2 - x2 u1)``."""
    r = np.arange(d)
    k = r[:, None, None, None] * r[None, None, None, :] - r[None, :, None, None] * r[None, None, :, None]
    return _omega_power(d, k)


def _state_dim(rho) -> int:
    d = as_matrix(rho).shape[0]
    _check_odd(d)
    return d


def discrete_qcf(rho, u: PhasePoint | tuple[int, int], tol: Tolerances | None = None) -> complex:
    """``chi(u) = Tr(rho D_u)``."""
    rho = as_density(rho, tol).matrix
    d = _state_dim(rho)
    q, p = (u.q, u.p) if isinstance(u, PhasePoint) else u
    return complex(np.einsum("ij,ji->", rho, _displacements(d)[q % d, p % d]))


def characteristic_table(rho, tol: Tolerances | None = None) -> np.ndarray:
    """``chi[q, p]`` over the whole grid."""
    rho = as_density(rho, tol).matrix
    d = _state_dim(rho)
    return np.einsum("ij,qpji->qp", rho, _displacements(d))


@lru_cache(maxsize=32)
def _phase_points(d: int) -> np.ndarray:
    ops = np.einsum("abuv,uvij->abij", _symplectic_phases(d), _displacements(d)) / d
    ops.flags.writeable = False
    return ops


def phase_point_operators(d: int) -> np.ndarray:
    """Fano operators ``A[x1, x2]`` (array of shape ``(d, d, d, d)``)."""
    _check_odd(d)
    return _phase_points(d).copy()


def wigner_function(rho, tol: Tolerances | None = None) -> WignerTable:
    """Discrete Wigner table ``W(x) = (1/d^2) sum_u omega^{x,u} chi(u)``."""
    chi = characteristic_table(rho, tol)
    d = chi.shape[0]
    w = np.einsum("abuv,uv->ab", _symplectic_phases(d), chi) / d**2
    return WignerTable(d, w.real.copy())


def reconstruct_state(table: WignerTable, tol: Tolerances | None = None):
    """Invert :func:`wigner_function`: ``rho = sum_x W(x) A_x``.

    Raises:
        NotAState: the result fails density-operator validation.
    """
    tol = config.resolve(tol)
    rho = np.einsum("ab,abij->ij", table.values, _phase_points(table.d))
    try:
        return make_density(rho, tol)
    except errors.ValidationError as exc:
        raise errors.NotAState(f"table does not describe a state: {exc}") from None
