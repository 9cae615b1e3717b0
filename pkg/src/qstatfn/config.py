"""Numerical tolerances shared across modules."""

from __future__ import annotations

import dataclasses


@dataclasses.dataclass(frozen=True)
class Tolerances:
    hermitian_tol: float = 1e-9
    trace_tol: float = 1e-9
    psd_tol: float = 1e-10
    recon_tol: float = 1e-9
    cluster_tol: float = 1e-8
    postselect_tol: float = 1e-12
    zero_tol: float = 1e-12
    amplitude_tol: float = 1e-12
    pd_floor: float = 1e-12
    sym_tol: float = 1e-8
    pd_tol: float = 1e-8

    def replace(self, **changes) -> "Tolerances":
        return dataclasses.replace(self, **changes)


DEFAULT = Tolerances()


def resolve(tol: Tolerances | None) -> Tolerances:
    return DEFAULT if tol is None else tol
