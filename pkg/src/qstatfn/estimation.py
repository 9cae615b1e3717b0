"""Method-of-moments estimation of Hamiltonian parameters.

A :class:`ParameterizedModel` maps parameters ``phi`` to a state and to the
expectations ``mu(phi)`` of a fixed list of observables. ``qmm_solve``
matches ``mu(phi)`` to the empirical means exactly (as many observables as
parameters); ``qgmm_estimate`` handles the over-identified case by a
two-step weighted least squares whose second-step weighting is the inverse
quantum covariance matrix of the observables.

The transverse-field Ising model ships as the worked example, with exact
moments from dense diagonalization and a tagged high-temperature variant.
"""

from __future__ import annotations

import dataclasses
import functools
from typing import Callable, Sequence

import numpy as np

from . import errors
from .operators import (
    DensityOperator,
    SIGMA_X,
    SIGMA_Z,
    as_density,
    expectation,
    hermitian,
    spectral_decompose,
    spectral_projectors,
)

MAX_SPINS = 10
_STEP_TOL = 1e-12
OBSERVABLE_NAMES = ("O1", "O2", "O3")


def _site_operator(n: int, ops: dict[int, np.ndarray]) -> np.ndarray:
    """Kronecker product with ``ops[i]`` on site ``i`` and identity elsewhere."""
    out = np.ones((1, 1), dtype=complex)
    for i in range(n):
        out = np.kron(out, ops.get(i, np.eye(2)))
    return out


def _check_spins(n_spins: int) -> None:
    if n_spins < 2:
        raise errors.MalformedInput("need at least two spins")
    if n_spins > MAX_SPINS:
        raise errors.TooLarge(f"{n_spins} spins exceeds the dense limit of {MAX_SPINS}")


def _zz_sum(n: int, distance: int, periodic: bool) -> np.ndarray:
    last = n if periodic else n - distance
    out = np.zeros((2**n, 2**n), dtype=complex)
    for i in range(max(last, 0)):
        j = (i + distance) % n
        out += _site_operator(n, {i: SIGMA_Z, j: SIGMA_Z}) if i != j else np.eye(2**n)
    return out


def _x_sum(n: int) -> np.ndarray:
    return sum(_site_operator(n, {i: SIGMA_X}) for i in range(n))


@functools.lru_cache(maxsize=16)
def _tfim_terms(n_spins: int, periodic: bool) -> tuple[np.ndarray, np.ndarray]:
    zz, x = -_zz_sum(n_spins, 1, periodic), -_x_sum(n_spins)
    zz.flags.writeable = False
    x.flags.writeable = False
    return zz, x


def tfim_hamiltonian(n_spins: int, J: float, h: float, periodic: bool = True) -> np.ndarray:
    """``H = -J sum_i Z_i Z_{i+1} - h sum_i X_i`` as a dense ``2^n`` matrix."""
    _check_spins(n_spins)
    zz, x = _tfim_terms(n_spins, periodic)
    return J * zz + h * x


def tfim_observables(n_spins: int, periodic: bool = True) -> dict[str, np.ndarray]:
    """Nearest-neighbour ZZ (O1), transverse magnetization (O2), next-nearest ZZ (O3).

    Each is normalized by ``1 / n_spins``.
    """
    _check_spins(n_spins)
    return {
        "O1": _zz_sum(n_spins, 1, periodic) / n_spins,
        "O2": _x_sum(n_spins) / n_spins,
        "O3": _zz_sum(n_spins, 2, periodic) / n_spins,
    }


def thermal_state(h, beta: float) -> DensityOperator:
    """Gibbs state ``exp(-beta H) / Z``."""
    if beta < 0:
        raise errors.MalformedInput("beta must be non-negative")
    dec = spectral_decompose(h)
    e = dec.eigenvalues
    w = np.exp(-beta * (e - e[0]))
    return as_density(dec.apply(w / w.sum()))


def high_temp_moments(J: float, h: float, beta: float) -> np.ndarray:
    """Leading high-temperature expectations of (O1, O2, O3)."""
    return np.array([beta * J, beta * h, 0.5 * (beta * J) ** 2])


def _high_temp_jacobian(J: float, h: float, beta: float) -> np.ndarray:
    return np.array([[beta, 0.0], [0.0, beta], [beta**2 * J, 0.0]])


@dataclasses.dataclass(frozen=True)
class MeasurementSummary:
    mean: float
    stderr: float


def simulate_measurements(rho, o, shots: int, rng_seed) -> MeasurementSummary:
    """Projective measurement of ``o`` on ``shots`` fresh copies of ``rho``.

    Outcomes are drawn from the spectral distribution ``Tr(P(a) rho)``.
    ``rng_seed`` is an int, a ``SeedSequence`` or a ``Generator``.
    """
    if shots < 1:
        raise errors.MalformedInput("shots must be at least 1")
    rho = as_density(rho)
    fam = spectral_projectors(o)
    probs = np.array([expectation(p, rho.matrix).real for p in fam.projectors])
    probs = np.clip(probs, 0.0, None)
    probs /= probs.sum()
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    counts = rng.multinomial(shots, probs)
    vals = fam.values
    mean = float(counts @ vals / shots)
    if shots == 1:
        return MeasurementSummary(mean, 0.0)
    var = float(counts @ (vals - mean) ** 2 / (shots - 1))
    return MeasurementSummary(mean, float(np.sqrt(var / shots)))


def quantum_covariance_matrix(rho, observables: Sequence) -> np.ndarray:
    """``Sigma_jk = Tr({O_j, O_k} rho) / 2 - Tr(O_j rho) Tr(O_k rho)``."""
    rho = as_density(rho).matrix
    ops = [hermitian(o).matrix for o in observables]
    for o in ops:
        if o.shape != rho.shape:
            raise errors.DimensionMismatch("observable and state dimensions differ")
    means = np.array([expectation(o, rho).real for o in ops])
    k = len(ops)
    sigma = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            sigma[i, j] = sigma[j, i] = 0.5 * expectation(ops[i] @ ops[j] + ops[j] @ ops[i], rho).real
    return sigma - np.outer(means, means)


@dataclasses.dataclass(frozen=True, eq=False)
class ParameterizedModel:
    """Parameterized state plus the moment conditions used to fit it.

    ``moment_fn`` defaults to exact expectations in ``state_builder(phi)``;
    ``covariance_fn`` defaults to :func:`quantum_covariance_matrix` of that
    state. ``jacobian_fn`` is optional; central differences are used without it.
    """

    param_names: tuple[str, ...]
    state_builder: Callable[[np.ndarray], DensityOperator]
    observables: tuple[np.ndarray, ...]
    observable_names: tuple[str, ...] = ()
    moment_fn: Callable[[np.ndarray], np.ndarray] | None = None
    covariance_fn: Callable[[np.ndarray], np.ndarray] | None = None
    jacobian_fn: Callable[[np.ndarray], np.ndarray] | None = None
    variant: str = "exact"

    def __post_init__(self):
        if len(self.observables) < len(self.param_names):
            raise errors.ArityMismatch("need at least as many observables as parameters")
        if len({o.shape for o in self.observables}) != 1:
            raise errors.DimensionMismatch("observables differ in dimension")
        if not self.observable_names:
            names = tuple(f"O{k + 1}" for k in range(len(self.observables)))
            object.__setattr__(self, "observable_names", names)

    @property
    def n_params(self) -> int:
        return len(self.param_names)

    @property
    def n_moments(self) -> int:
        return len(self.observables)

    def moments(self, phi) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        if self.moment_fn is not None:
            return np.asarray(self.moment_fn(phi), dtype=float)
        rho = self.state_builder(phi).matrix
        return np.array([expectation(o, rho).real for o in self.observables])

    def covariance(self, phi) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        if self.covariance_fn is not None:
            return np.asarray(self.covariance_fn(phi), dtype=float)
        return quantum_covariance_matrix(self.state_builder(phi), self.observables)

    def jacobian(self, phi, step: float = 1e-6) -> np.ndarray:
        """``D[k, j] = d mu_k / d phi_j``."""
        phi = np.asarray(phi, dtype=float)
        if self.jacobian_fn is not None:
            return np.asarray(self.jacobian_fn(phi), dtype=float)
        cols = []
        for j in range(phi.size):
            h = step * max(1.0, abs(phi[j]))
            e = np.zeros_like(phi)
            e[j] = h
            cols.append((self.moments(phi + e) - self.moments(phi - e)) / (2 * h))
        return np.column_stack(cols)

    def subset(self, indices: Sequence[int]) -> "ParameterizedModel":
        """The same model restricted to the selected moment conditions."""
        idx = list(indices)
        pick = lambda fn: None if fn is None else (lambda phi: np.asarray(fn(phi))[idx])
        cov = None if self.covariance_fn is None else (
            lambda phi: np.asarray(self.covariance_fn(phi))[np.ix_(idx, idx)])
        return dataclasses.replace(
            self,
            observables=tuple(self.observables[k] for k in idx),
            observable_names=tuple(self.observable_names[k] for k in idx),
            moment_fn=pick(self.moment_fn),
            covariance_fn=cov,
            jacobian_fn=pick(self.jacobian_fn),
        )


def tfim_model(n_spins: int, beta: float, observables: Sequence[str] = OBSERVABLE_NAMES,
               variant: str = "exact", periodic: bool = True) -> ParameterizedModel:
    """TFIM thermal-state model with parameters ``(J, h)``.

    ``variant="exact"`` evaluates moments and covariances in the thermal state
    by diagonalization. ``variant="high_temp"`` uses the leading
    high-temperature expressions ``mu = (beta J, beta h, (beta J)^2 / 2)``
    and ``Sigma = 1 / n_spins`` times identity.
    """
    _check_spins(n_spins)
    ops = tfim_observables(n_spins, periodic)
    names = tuple(observables)
    unknown = [o for o in names if o not in ops]
    if unknown or not names:
        raise errors.MalformedInput(f"unknown observables {unknown}; choose from {OBSERVABLE_NAMES}")
    zz, x = _tfim_terms(n_spins, periodic)

    def state(phi):
        return thermal_state(phi[0] * zz + phi[1] * x, beta)

    idx = [OBSERVABLE_NAMES.index(o) for o in names]
    kw = {}
    if variant == "high_temp":
        kw = dict(
            moment_fn=lambda phi: high_temp_moments(phi[0], phi[1], beta)[idx],
            covariance_fn=lambda phi: np.eye(len(idx)) / n_spins,
            jacobian_fn=lambda phi: _high_temp_jacobian(phi[0], phi[1], beta)[idx],
        )
    elif variant != "exact":
        raise errors.MalformedInput(f"unknown moment variant {variant!r}")
    return ParameterizedModel(("J", "h"), state, tuple(ops[o] for o in names), names,
                              variant=variant, **kw)


def simulate_empirical(model: ParameterizedModel, phi, shots: int, seed) -> np.ndarray:
    """Empirical means of every model observable, each from its own fresh copies."""
    rho = model.state_builder(np.asarray(phi, dtype=float))
    streams = np.random.SeedSequence(seed).spawn(model.n_moments)
    return np.array([simulate_measurements(rho, o, shots, np.random.default_rng(s)).mean
                     for o, s in zip(model.observables, streams)])


@dataclasses.dataclass(frozen=True)
class EstimationOptions:
    max_iter: int = 100
    newton_tol: float = 1e-10
    grad_tol: float = 1e-8
    max_halvings: int = 30
    jac_step: float = 1e-6
    shots: int | None = None


@dataclasses.dataclass(frozen=True, eq=False)
class EstimationResult:
    phi_hat: np.ndarray
    objective_value: float
    weighting: np.ndarray
    iterations: int
    std_errors: np.ndarray
    param_names: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        from .io import round_sig

        se = [None if not np.isfinite(s) else round_sig(s) for s in self.std_errors]
        return {
            "phi_hat": {k: round_sig(v) for k, v in zip(self.param_names, self.phi_hat)},
            "std_errors": dict(zip(self.param_names, se)),
            "objective": round_sig(self.objective_value),
            "iterations": int(self.iterations),
        }


def asymptotic_covariance(model: ParameterizedModel, phi, weighting_cov: np.ndarray | None = None,
                          step: float = 1e-6) -> np.ndarray:
    """Per-shot asymptotic covariance ``(D^T Sigma^-1 D)^-1`` at ``phi``."""
    d = model.jacobian(phi, step)
    sigma = model.covariance(phi) if weighting_cov is None else weighting_cov
    w = _inverse_weighting(sigma)
    return np.linalg.inv(d.T @ w @ d)


def _inverse_weighting(sigma: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(sigma)) or np.linalg.cond(sigma) > 1e12:
        raise errors.SingularWeighting("covariance matrix is singular")
    w = np.linalg.inv(sigma)
    return 0.5 * (w + w.T)


def _std_errors(model, phi, shots, step) -> np.ndarray:
    if not shots:
        return np.full(model.n_params, np.nan)
    try:
        cov = asymptotic_covariance(model, phi, step=step)
    except (errors.SingularWeighting, np.linalg.LinAlgError):
        return np.full(model.n_params, np.nan)
    return np.sqrt(np.clip(np.diag(cov), 0.0, None) / shots)


def qmm_solve(model: ParameterizedModel, empirical, init, opts: EstimationOptions | None = None
              ) -> EstimationResult:
    """Solve ``mu(phi) = empirical`` by damped Newton iteration.

    Raises:
        SingularJacobian: the moment Jacobian cannot be inverted.
        MaxIterations: no convergence within ``opts.max_iter`` steps.
    """
    opts = opts or EstimationOptions()
    if model.n_moments != model.n_params:
        raise errors.ArityMismatch(
            f"method of moments needs {model.n_params} observables, model has {model.n_moments}")
    target = np.asarray(empirical, dtype=float)
    phi = np.asarray(init, dtype=float).copy()
    if target.shape != (model.n_moments,) or phi.shape != (model.n_params,):
        raise errors.ArityMismatch("empirical/init lengths do not match the model")

    res = model.moments(phi) - target
    for it in range(opts.max_iter + 1):
        if np.max(np.abs(res)) <= opts.newton_tol:
            return EstimationResult(
                phi, float(res @ res), np.eye(model.n_moments), it,
                _std_errors(model, phi, opts.shots, opts.jac_step), model.param_names)
        if it == opts.max_iter:
            break
        jac = model.jacobian(phi, opts.jac_step)
        if not np.all(np.isfinite(jac)) or np.linalg.cond(jac) > 1e13:
            raise errors.SingularJacobian(f"moment Jacobian is singular at {phi.tolist()}")
        step = np.linalg.solve(jac, -res)
        norm0 = np.linalg.norm(res)
        t = 1.0
        for _ in range(opts.max_halvings + 1):
            trial = phi + t * step
            trial_res = model.moments(trial) - target
            if np.linalg.norm(trial_res) < norm0:
                break
            t *= 0.5
        phi, res = trial, trial_res
    raise errors.MaxIterations(f"Newton did not converge in {opts.max_iter} iterations")


def _objective(model, target, w):
    def j(phi):
        g = target - model.moments(phi)
        return float(g @ w @ g), g
    return j


def _gauss_newton(model, target, w, phi, opts) -> tuple[np.ndarray, float, int]:
    obj = _objective(model, target, w)
    val, g = obj(phi)
    for it in range(opts.max_iter):
        d = model.jacobian(phi, opts.jac_step)
        grad = -2.0 * d.T @ w @ g
        normal = d.T @ w @ d
        if np.linalg.cond(normal) > 1e13:
            raise errors.SingularJacobian(f"normal equations are singular at {phi.tolist()}")
        step = np.linalg.solve(normal, d.T @ w @ g)
        small_grad = np.linalg.norm(grad) <= opts.grad_tol
        if small_grad and np.linalg.norm(step) <= _STEP_TOL * (1.0 + np.linalg.norm(phi)):
            return phi, val, it
        t = 1.0
        for _ in range(opts.max_halvings + 1):
            trial = phi + t * step
            tval, tg = obj(trial)
            if tval < val:
                break
            t *= 0.5
        else:
            if small_grad:
                # no further decrease at working precision
                return phi, val, it + 1
            raise errors.MaxIterations("line search failed away from a stationary point")
        phi, val, g = trial, tval, tg
    raise errors.MaxIterations(f"Gauss-Newton did not converge in {opts.max_iter} iterations")


def qgmm_estimate(model: ParameterizedModel, empirical, init,
                  opts: EstimationOptions | None = None) -> EstimationResult:
    """Two-step generalized method of moments.

    Step one minimizes ``g^T g`` from ``init``; step two re-minimizes with the
    optimal weighting ``Sigma(phi_bar)^-1`` evaluated at the step-one estimate.
    """
    opts = opts or EstimationOptions()
    target = np.asarray(empirical, dtype=float)
    phi0 = np.asarray(init, dtype=float).copy()
    if target.shape != (model.n_moments,) or phi0.shape != (model.n_params,):
        raise errors.ArityMismatch("empirical/init lengths do not match the model")
    phi_bar, _, it1 = _gauss_newton(model, target, np.eye(model.n_moments), phi0, opts)
    w = _inverse_weighting(model.covariance(phi_bar))
    phi_hat, val, it2 = _gauss_newton(model, target, w, phi_bar, opts)
    return EstimationResult(phi_hat, max(val, 0.0), w, it1 + it2,
                            _std_errors(model, phi_hat, opts.shots, opts.jac_step),
                            model.param_names)


def qgmm_onestep_update(model: ParameterizedModel, phi_bar, empirical,
                        step: float = 1e-6) -> np.ndarray:
    """Linearized update ``phi_bar + (D^T W D)^-1 D^T W (mu_hat - mu(phi_bar))``, ``W = Sigma^-1``."""
    phi_bar = np.asarray(phi_bar, dtype=float)
    d = model.jacobian(phi_bar, step)
    w = _inverse_weighting(model.covariance(phi_bar))
    resid = np.asarray(empirical, dtype=float) - model.moments(phi_bar)
    return phi_bar + np.linalg.solve(d.T @ w @ d, d.T @ w @ resid)


def objective(model: ParameterizedModel, phi, empirical, weighting) -> float:
    """``J(phi) = g^T W g`` with ``g = empirical - mu(phi)``."""
    return _objective(model, np.asarray(empirical, dtype=float), np.asarray(weighting))(
        np.asarray(phi, dtype=float))[0]
