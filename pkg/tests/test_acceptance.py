"""Acceptance criteria, one test per criterion.

Every test prints a single ``ACCEPTANCE <n> PASS|FAIL`` line (bypassing
output capture) before asserting, so a plain ``pytest`` run shows the full
scorecard. Run directly with ``python3 tests/test_acceptance.py``.
"""

import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from oracles import PLUS, SX, SZ
from qstatfn import estimation as est
from qstatfn import geometry as geo
from qstatfn import io, wigner
from qstatfn import operators as op
from qstatfn import ordering as o
from qstatfn import quasiprob as qp
from qstatfn import statfuncs as sf

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def report(capsys):
    def emit(n: int, title: str, checks: dict[str, tuple[bool, str]]):
        ok = all(c[0] for c in checks.values())
        detail = "; ".join(f"{k}: {v[1]}" for k, v in checks.items())
        with capsys.disabled():
            print(f"\nACCEPTANCE {n} {'PASS' if ok else 'FAIL'} {title} | {detail}")
        failed = [k for k, v in checks.items() if not v[0]]
        assert ok, f"failed checks: {failed}"
    return emit


def test_1_moment_identities(report):
    worst = np.zeros(3)
    for seed in range(50):
        rng = np.random.default_rng(1000 + seed)
        rho = op.random_density(3, rng)
        a, b = op.random_hermitian(3, rng), op.random_hermitian(3, rng)
        m = sf.moments(rho, a)
        d1 = sf.finite_difference(lambda t: sf.qmgf(rho, a, t), 1)
        a0, b0 = sf.centered(rho, a), sf.centered(rho, b)
        d2 = sf.finite_difference(lambda t: sf.qmgf(rho, a0, t), 2)
        gen = sf.MultivariateGenerator(rho, [a0, b0], o.preset("mh", 2))
        mixed = sf.mixed_difference(lambda x, y: gen.mgf([x, y]).real)
        errs = [abs(d1 - m.expectation), abs(d2 - m.variance), abs(mixed - sf.covariance(rho, a, b))]
        worst = np.maximum(worst, errs)
    report(1, "moment identities (50 qutrit instances)", {
        "mean": (worst[0] < 1e-5, f"{worst[0]:.1e}"),
        "variance": (worst[1] < 1e-5, f"{worst[1]:.1e}"),
        "covariance": (worst[2] < 1e-5, f"{worst[2]:.1e}"),
    })


def test_2_weak_values(report):
    worst = 0.0
    for seed in range(50):
        rng = np.random.default_rng(2000 + seed)
        rho, a = op.random_density(3, rng), op.random_hermitian(3, rng)
        pi = op.random_density(3, rng)
        pi = pi / np.linalg.eigvalsh(pi)[-1]
        fd = sf.finite_difference(lambda t: sf.conditional_qmgf(rho, pi, a, t), 1)
        direct = np.trace(pi @ a @ rho) / np.trace(pi @ rho)
        worst = max(worst, abs(fd - direct))
    alpha = np.pi / 8
    psi = op.ket_projector([np.cos(alpha), np.sin(alpha)])
    post = np.diag([0.0, 1.0])
    wv = qp.weak_value(psi, post, SX)
    wvar = qp.weak_variance(psi, post, SX)
    report(2, "weak-value suite", {
        "derivative": (worst < 1e-6, f"{worst:.1e}"),
        "anomalous": (abs(wv - 1 / np.tan(alpha)) < 1e-9 and wv.real > 1, f"{wv.real:.9f}"),
        "negative variance": (wvar.real < 0 and abs(wvar.imag) < 1e-12, f"{wvar.real:.6f}"),
    })


def test_3_npoint_chain(report):
    worst, skipped = 0.0, 0
    for seed in range(50):
        rng = np.random.default_rng(3000 + seed)
        rho = op.random_density(3, rng)
        obs = [op.random_hermitian(3, rng) for _ in range(3)]
        r = qp.npoint_correlation(rho, obs)
        worst = max(worst, abs(r.direct - r.chain))
        skipped += r.skipped
    report(3, "n-point chain vs direct (50 instances, d=3, n=3)", {
        "max error": (worst < 1e-8, f"{worst:.1e}"),
        "skipped branches": (True, str(skipped)),
    })


def test_4_bochner(report):
    grid = np.linspace(-2, 2, 11)
    min_eig = np.inf
    verdicts = set()
    for seed in range(50):
        rng = np.random.default_rng(4000 + seed)
        rho, a = op.random_density(3, rng), op.random_hermitian(3, rng)
        rep = qp.bochner_check(lambda t: sf.qcf(rho, a, t), grid)
        min_eig = min(min_eig, rep.min_gram_eigenvalue)
        verdicts.add(rep.verdict.value)
    psi = np.array([1, np.exp(1j * np.pi / 4)]) / np.sqrt(2)
    kd = sf.MultivariateGenerator(np.outer(psi, psi.conj()), [SX, SZ], o.preset("kd", 2))
    pts = qp.product_grid(-2, 2, 7, 2)
    kd_rep = qp.bochner_check(kd.cf, pts)
    wig = sf.MultivariateGenerator(PLUS, [SZ, np.diag([2.0, -1.0])], o.preset("wigner", 2))
    wig_rep = qp.bochner_check(wig.cf, pts)
    report(4, "extended Bochner checks", {
        "single-variable PSD": (min_eig >= -1e-8 and verdicts == {"ClassicalCandidate"},
                                f"min eig {min_eig:.1e}"),
        "complex KD symmetry": (kd_rep.hermitian_symmetry_violation > 1e-2 and kd_rep.verdict.value == "ComplexValued",
                                f"{kd_rep.hermitian_symmetry_violation:.3f} {kd_rep.verdict.value}"),
        "commuting Wigner": (wig_rep.verdict.value == "ClassicalCandidate", wig_rep.verdict.value),
    })


def test_5_discrete_wigner(report):
    weyl = basis = total = recon = 0.0
    for d in (3, 5, 7):
        x, z = wigner.clock_shift(d)
        weyl = max(weyl, np.abs(z @ x - np.exp(2j * np.pi / d) * x @ z).max())
        ds = np.array([wigner.displacement(d, (q, p)) for q in range(d) for p in range(d)])
        gram = np.einsum("aji,bji->ab", ds.conj(), ds)
        basis = max(basis, np.abs(gram - d * np.eye(d * d)).max())
        rng = np.random.default_rng(5000 + d)
        for _ in range(20):
            rho = op.random_density(d, rng)
            t = wigner.wigner_function(rho)
            total = max(total, abs(t.total() - 1))
            recon = max(recon, np.abs(wigner.reconstruct_state(t).matrix - rho).max())
    report(5, "discrete Wigner, d in {3,5,7}", {
        "ZX = wXZ": (weyl < 1e-12, f"{weyl:.1e}"),
        "Tr(Du* Dv) = d delta": (basis < 1e-10, f"{basis:.1e}"),
        "sum W = 1": (total < 1e-10, f"{total:.1e}"),
        "round trip": (recon < 1e-9, f"{recon:.1e}"),
    })


def test_6_geometric_mean_and_chernoff(report):
    min_gap, der_err, psi_err = np.inf, 0.0, 0.0
    for seed in range(20):
        rng = np.random.default_rng(6000 + seed)
        rho, sigma = op.random_density(3, rng), op.random_density(3, rng)
        tb = geo.geo_mean_trace_bound(rho, sigma)
        min_gap = min(min_gap, tb.fid - tb.tr_geo)
        v = op.random_hermitian(3, rng)
        der = geo.geo_mgf_derivatives(rho, v)
        f = lambda t: geo.geo_mgf(rho, v, t)  # noqa: E731
        der_err = max(der_err, abs(sf.finite_difference(f, 1) - der.first),
                      abs(sf.finite_difference(f, 2) - der.second))
        psi = lambda t: geo.chernoff(rho, sigma, t)  # noqa: E731
        psi_err = max(psi_err,
                      abs(sf.forward_difference(psi, 1) + geo.relative_entropy(rho, sigma)),
                      abs(sf.forward_difference(psi, 2) - geo.relative_entropy_variance(rho, sigma)))
    d = geo.relative_entropy(np.diag([0.5, 0.5]), np.diag([0.75, 0.25]))
    d_err = abs(d - 0.5 * np.log(4 / 3))
    report(6, "geometric mean and Chernoff", {
        "Tr(A#B) < F strictly": (min_gap > 0, f"min gap {min_gap:.2e}"),
        "geo-MGF derivatives": (der_err < 1e-5, f"{der_err:.1e}"),
        "psi'(0), psi''(0)": (psi_err < 1e-5, f"{psi_err:.1e}"),
        "classical D": (d_err < 1e-10, f"{d_err:.1e}"),
    })


def test_7_golden_thompson(report):
    rng = np.random.default_rng(7000)
    worst = -np.inf
    for _ in range(100):
        gt = geo.golden_thompson_gap(op.random_hermitian(3, rng), op.random_hermitian(3, rng))
        worst = max(worst, gt.lhs - gt.rhs)
    eq = 0.0
    for _ in range(20):
        u = op.spectral_decompose(op.random_hermitian(3, rng)).eigenvectors
        a = u @ np.diag(rng.normal(size=3)) @ u.conj().T
        b = u @ np.diag(rng.normal(size=3)) @ u.conj().T
        eq = max(eq, abs(geo.golden_thompson_gap(a, b).gap))
    theta = [1.0, 1.0]
    exact = o.ordering_function(o.preset("wigner", 2), [SX, SZ], theta)
    mh = o.preset("mh", 2)
    ns = np.arange(1, 129)
    errs = np.array([np.abs(o.ordering_function(mh.with_repetitions(int(n)), [SX, SZ], theta) - exact).max()
                     for n in ns])
    monotone = bool(np.all(np.diff(errs) < 0))
    rate = float((errs * ns).max() / errs[0])
    report(7, "Golden-Thompson and Trotter", {
        "inequality (100 pairs)": (worst <= 1e-10, f"max lhs-rhs {worst:.2e}"),
        "commuting equality": (eq < 1e-10, f"{eq:.1e}"),
        "Trotter monotone O(1/N)": (monotone and rate <= 1.0,
                                    f"err(128)={errs[-1]:.2e}, max N*err/err(1)={rate:.2f}"),
    })


def test_8_tfim_estimation(report):
    n, beta, truth = 6, 0.05, np.array([1.0, 0.5])
    exact = est.tfim_model(n, beta)
    qmm_model = exact.subset([0, 1])
    res = est.qmm_solve(qmm_model, qmm_model.moments(truth), [0.8, 0.4])
    self_err = np.abs(res.phi_hat - truth).max()

    ht_err = np.abs(exact.moments(truth) - est.high_temp_moments(*truth, beta)).max()

    b, m1, m2, m3 = 0.1, 0.12, 0.05, 0.005
    ht = est.tfim_model(n, b, variant="high_temp")
    phi_bar = np.array([m1 / b, m2 / b])
    update = est.qgmm_onestep_update(ht, phi_bar, [m1, m2, m3])[0]
    closed = m1 / b + m1 / (b * (1 + m1**2)) * (m3 - m1**2 / 2)
    ratio = est.asymptotic_covariance(ht, phi_bar)[0, 0] / est.asymptotic_covariance(ht.subset([0, 1]), phi_bar)[0, 0]
    ratio_err = abs(ratio - 1 / (1 + m1**2))

    shots, inside, estimates = 10_000, 0, []
    opts = est.EstimationOptions(shots=shots)
    for seed in range(200):
        emp = est.simulate_empirical(qmm_model, truth, shots, seed)
        r = est.qmm_solve(qmm_model, emp, emp / beta, opts)
        estimates.append(r.phi_hat[0])
        inside += abs(r.phi_hat[0] - truth[0]) <= 3 * r.std_errors[0]
    spread = np.std(estimates, ddof=1) * beta * np.sqrt(n * shots)
    report(8, "TFIM estimation", {
        "QMM self-consistency": (self_err < 1e-8, f"{self_err:.1e}"),
        "high-temp moments": (ht_err < 5 * beta**2, f"{ht_err:.2e} < {5 * beta**2:.2e}"),
        "one-step update": (abs(update - closed) < 2e-3, f"{update:.6f} vs {closed:.6f}"),
        "variance ratio": (ratio_err < 1e-6, f"{ratio:.8f}, err {ratio_err:.1e}"),
        "Monte-Carlo coverage": (inside >= 198, f"{inside}/200 within 3 sigma"),
        "spread vs 1/(beta sqrt(n M))": (1 / 1.5 <= spread <= 1.5, f"ratio {spread:.3f}"),
    })


CLI_CASES = {
    "statefn_qmgf.csv": ["statefn", "--state", "{half}", "--obs", "{sz}", "--grid", "0:0.5:2"],
    "quasiprob_kd.csv": ["quasiprob", "--state", "{plus}", "--obs", "{sz}", "--obs", "{sx}"],
    "wigner_identity3.csv": ["wigner", "--state", "{third}"],
}


def test_9_cli_determinism(report, tmp_path):
    paths = {}
    for name, m in {"half": np.eye(2) / 2, "sz": SZ, "sx": SX, "plus": PLUS, "third": np.eye(3) / 3}.items():
        paths[name] = str(tmp_path / f"{name}.json")
        io.write_matrix(paths[name], m)
    checks = {}
    for golden, args in CLI_CASES.items():
        argv = [sys.executable, "-m", "qstatfn", "--seed", "1234"] + [a.format(**paths) for a in args]
        runs = [subprocess.run(argv, capture_output=True, check=False) for _ in range(2)]
        want = (GOLDEN / golden).read_bytes()
        ok = all(r.returncode == 0 and r.stdout == want for r in runs)
        checks[golden] = (ok, "identical" if ok else "differs")
    report(9, "CLI golden-file determinism", checks)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
