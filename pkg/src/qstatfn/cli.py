"""Command-line interface: ``qstatfn <command> ...``.

Commands read matrices as JSON, write tables as CSV and reports as JSON.
Exit status is 0 on success, 2 for invalid input and 3 for numerical
failure; errors are reported as a single ``error: ...`` line on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import config, errors, estimation, geometry, io, ordering, quasiprob, statfuncs, wigner

THREADS_ENV = "QSTATFN_THREADS"
SINGLE_FUNCTIONS = ("qmgf", "qcf", "qcgf", "qscf")
MULTI_FUNCTIONS = ("mqmgf", "mqcf")
GEO_OPS = ("mean", "fidelity", "chernoff", "relent", "golden-thompson", "geo-mgf")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise errors.MalformedInput(message)


def parse_grid(text: str) -> np.ndarray:
    """``a:b:n`` -> ``n`` evenly spaced points; a bare number is a one-point grid."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return np.array([float(parts[0])])
        if len(parts) != 3:
            raise ValueError
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise errors.MalformedInput(f"bad grid {text!r}; expected a:b:n") from None
    if n < 1 or not (np.isfinite(a) and np.isfinite(b)):
        raise errors.MalformedInput(f"bad grid {text!r}; need finite ends and n >= 1")
    return np.linspace(a, b, n)


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise errors.MalformedInput(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n < 0:
        raise errors.MalformedInput(f"{THREADS_ENV} must be >= 0")
    return n or min(8, os.cpu_count() or 1)


def _map(fn: Callable, items: Sequence) -> list:
    """Order-preserving map, threaded when the environment allows it."""
    n = min(thread_count(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _tolerances(args) -> config.Tolerances:
    if args.tol is None:
        return config.DEFAULT
    if not args.tol > 0:
        raise errors.MalformedInput("--tol must be positive")
    return config.DEFAULT.replace(hermitian_tol=args.tol, trace_tol=args.tol)


def _emit(args, text: str) -> None:
    if args.output:
        try:
            Path(args.output).write_text(text)
        except OSError as exc:
            raise errors.MalformedInput(f"cannot write {args.output}: {exc.strerror}") from None
    else:
        sys.stdout.write(text)


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _complex_rows(points, values):
    for t, v in zip(points, values):
        yield [float(x) for x in np.atleast_1d(t)] + [float(v.real), float(v.imag)]


def cmd_statefn(args) -> str:
    tol = _tolerances(args)
    rho = io.read_matrix(args.state)
    obs = [io.read_matrix(p) for p in args.obs]
    grid = parse_grid(args.grid)
    fn = args.function
    if fn in SINGLE_FUNCTIONS:
        if len(obs) != 1:
            raise errors.ArityMismatch(f"{fn} takes exactly one observable")
        a = obs[0]
        statfuncs.mgf_complex(rho, a, 0.0, tol)  # validate once up front
        if fn == "qscf":
            path = np.union1d(grid, [0.0])
            logs = statfuncs.qscf(rho, a, path, tol)
            vals = [logs[np.searchsorted(path, t)] for t in grid]
        else:
            single = {
                "qmgf": lambda t: complex(statfuncs.qmgf(rho, a, t, tol)),
                "qcf": lambda t: statfuncs.qcf(rho, a, t, tol),
                "qcgf": lambda t: complex(statfuncs.qcgf(rho, a, t, tol)),
            }[fn]
            vals = _map(single, list(grid))
        return io.csv_text(["theta", "re", "im"], _complex_rows(grid, vals))
    spec = ordering.preset(args.ordering, len(obs))
    gen = statfuncs.MultivariateGenerator(rho, obs, spec, tol)
    points = quasiprob.product_grid(grid[0], grid[-1], grid.size, len(obs))
    vals = _map(gen.mgf if fn == "mqmgf" else gen.cf, points)
    header = [f"theta_{k + 1}" for k in range(len(obs))] + ["re", "im"]
    return io.csv_text(header, _complex_rows(points, vals))


def cmd_quasiprob(args) -> str:
    tol = _tolerances(args)
    rho = io.read_matrix(args.state)
    obs = [io.read_matrix(p) for p in args.obs]
    build = quasiprob.kd_distribution if args.kind == "kd" else quasiprob.mh_distribution
    table = build(rho, obs, tol=tol)
    if args.bochner:
        # generating function of the table: ordered product of the reversed list
        gen = statfuncs.MultivariateGenerator(rho, obs[::-1], ordering.preset(args.kind, len(obs)), tol)
        g = parse_grid(args.grid)
        pts = quasiprob.product_grid(g[0], g[-1], g.size, len(obs))
        report = quasiprob.bochner_check(lambda t: gen.cf(np.asarray(t)[::-1]), pts,
                                         tol.sym_tol, tol.pd_tol)
        if args.report:
            try:
                Path(args.report).write_text(_json_text(report.to_dict()))
            except OSError as exc:
                raise errors.MalformedInput(f"cannot write {args.report}: {exc.strerror}") from None
        sys.stderr.write(f"verdict: {report.verdict.value}\n")
    return table.to_csv()


def cmd_wigner(args) -> str:
    tol = _tolerances(args)
    if args.reconstruct:
        try:
            text = Path(args.reconstruct).read_text()
        except OSError as exc:
            raise errors.MalformedInput(f"cannot read {args.reconstruct}: {exc.strerror}") from None
        table = wigner.WignerTable.from_csv(text)
        # each CSV entry carries up to 5e-11 rounding error
        slack = table.d ** 2 * 1e-10
        tol = tol.replace(trace_tol=max(tol.trace_tol, slack),
                          hermitian_tol=max(tol.hermitian_tol, slack))
        rho = wigner.reconstruct_state(table, tol)
        return io.dumps_matrix(rho.matrix) + "\n"
    if not args.state:
        raise errors.MalformedInput("wigner needs --state or --reconstruct")
    return wigner.wigner_function(io.read_matrix(args.state), tol).to_csv()


def cmd_geo(args) -> str:
    tol = _tolerances(args)
    a = io.read_matrix(args.a)
    b = io.read_matrix(args.b)
    op = args.op
    if op == "mean":
        return io.dumps_matrix(geometry.geometric_mean(a, b, args.u, tol)) + "\n"
    if op == "fidelity":
        tb = geometry.geo_mean_trace_bound(a, b, tol)
        return io.csv_text(["tr_geo", "fidelity"], [[tb.tr_geo, tb.fid]])
    if op == "relent":
        d = geometry.relative_entropy(a, b, tol)
        v = geometry.relative_entropy_variance(a, b, tol)
        return io.csv_text(["relative_entropy", "variance"], [[d, v]])
    if op == "golden-thompson":
        gt = geometry.golden_thompson_gap(a, b, tol)
        return io.csv_text(["lhs", "rhs", "gap"], [[gt.lhs, gt.rhs, gt.gap]])
    if op == "chernoff":
        grid = parse_grid(args.grid or "0:1:11")
        vals = _map(lambda t: geometry.chernoff(a, b, t, tol), list(grid))
        return io.csv_text(["theta", "psi"], ([float(t), v] for t, v in zip(grid, vals)))
    grid = parse_grid(args.grid or "-1:1:11")
    vals = _map(lambda t: geometry.geo_mgf(a, b, t, tol), list(grid))
    return io.csv_text(["theta", "value"], ([float(t), v] for t, v in zip(grid, vals)))


def _load_config(path: str) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except OSError as exc:
        raise errors.MalformedInput(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise errors.MalformedInput(f"{path}: invalid JSON ({exc.msg})") from None
    if not isinstance(cfg, dict):
        raise errors.MalformedInput("estimation config must be a JSON object")
    return cfg


def run_estimation(cfg: dict, seed: int | None = None) -> estimation.EstimationResult:
    """Run one estimation described by a config mapping."""
    try:
        if cfg.get("model", "tfim") != "tfim":
            raise errors.MalformedInput(f"unknown model {cfg['model']!r}")
        n = int(cfg["n_spins"])
        beta = float(cfg["beta"])
        truth = np.array([float(cfg["true_params"]["J"]), float(cfg["true_params"]["h"])])
        names = list(cfg.get("observables", estimation.OBSERVABLE_NAMES))
        shots = int(cfg.get("shots", 0))
        seed = int(cfg.get("seed", 0)) if seed is None else seed
        method = cfg.get("method", "qgmm")
        variant = cfg.get("moment_variant", "exact")
        periodic = bool(cfg.get("periodic", True))
    except (KeyError, TypeError, ValueError) as exc:
        raise errors.MalformedInput(f"bad estimation config: {exc!r}") from None
    if not beta > 0:
        raise errors.MalformedInput("beta must be positive")
    if shots < 0:
        raise errors.MalformedInput("shots must be >= 0 (0 means noiseless)")
    if method not in ("qmm", "qgmm"):
        raise errors.MalformedInput(f"unknown method {method!r}")
    if method == "qmm":
        if not {"O1", "O2"} <= set(names):
            raise errors.MalformedInput("qmm needs observables O1 and O2")
        names = ["O1", "O2"]
    model = estimation.tfim_model(n, beta, names, variant, periodic)
    if shots:
        emp = estimation.simulate_empirical(model, truth, shots, seed)
    else:
        emp = model.moments(truth)
    init = np.array([emp[names.index("O1")] / beta if "O1" in names else 1.0,
                     emp[names.index("O2")] / beta if "O2" in names else 1.0])
    opts = estimation.EstimationOptions(shots=shots or None)
    solve = estimation.qmm_solve if method == "qmm" else estimation.qgmm_estimate
    return solve(model, emp, init, opts)


def cmd_estimate(args) -> str:
    return _json_text(run_estimation(_load_config(args.config), args.seed).to_dict())


def build_parser() -> argparse.ArgumentParser:
    # shared flags are accepted before or after the command name
    common = _Parser(add_help=False)
    common.add_argument("--tol", type=float, default=argparse.SUPPRESS,
                        help="Hermiticity/trace tolerance for inputs")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="override the seed of randomized commands")
    common.add_argument("--output", "-o", default=argparse.SUPPRESS,
                        help="write the result here instead of stdout")
    p = _Parser(prog="qstatfn", description="Quantum statistical functions toolkit.",
                parents=[common])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("statefn", parents=[common], help="generating functions on a theta grid")
    s.add_argument("--state", required=True)
    s.add_argument("--obs", action="append", required=True, help="observable JSON (repeatable)")
    s.add_argument("--function", choices=SINGLE_FUNCTIONS + MULTI_FUNCTIONS, default="qmgf")
    s.add_argument("--ordering", choices=("kd", "mh", "wigner"), default="kd")
    s.add_argument("--grid", default="0")
    s.set_defaults(run=cmd_statefn)

    q = sub.add_parser("quasiprob", parents=[common], help="KD / MH quasiprobability table")
    q.add_argument("--state", required=True)
    q.add_argument("--obs", action="append", required=True)
    q.add_argument("--kind", choices=("kd", "mh"), default="kd")
    q.add_argument("--bochner", action="store_true", help="run the characteristic-function test")
    q.add_argument("--grid", default="-2:2:7", help="per-axis grid for --bochner")
    q.add_argument("--report", help="write the Bochner report JSON here")
    q.set_defaults(run=cmd_quasiprob)

    w = sub.add_parser("wigner", parents=[common], help="discrete Wigner table or its inverse")
    w.add_argument("--state")
    w.add_argument("--reconstruct", metavar="TABLE_CSV")
    w.set_defaults(run=cmd_wigner)

    g = sub.add_parser("geo", parents=[common], help="geometric-mean and Chernoff quantities")
    g.add_argument("op", choices=GEO_OPS)
    g.add_argument("--a", required=True, help="first state/operator")
    g.add_argument("--b", required=True, help="second state/operator")
    g.add_argument("--u", type=float, default=0.5, help="weight for 'mean'")
    g.add_argument("--grid")
    g.set_defaults(run=cmd_geo)

    e = sub.add_parser("estimate", parents=[common], help="QMM / QGMM estimation from a JSON config")
    e.add_argument("config")
    e.set_defaults(run=cmd_estimate)
    return p


def _attach_values(argv: Sequence[str]) -> list[str]:
    """Join ``--grid -1:1:5`` into ``--grid=-1:1:5`` so negative values parse."""
    out, it = [], iter(argv)
    for tok in it:
        if tok in ("--grid", "--tol", "--u"):
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = build_parser().parse_args(_attach_values(argv))
        for name in ("tol", "seed", "output"):
            if not hasattr(args, name):
                setattr(args, name, None)
        _emit(args, args.run(args))
    except errors.ValidationError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {_one_line(exc)}\n")
        return 2
    except errors.NumericalError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {_one_line(exc)}\n")
        return 3
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {_one_line(exc)}\n")
        return 3
    return 0


def _one_line(exc: Exception) -> str:
    return " ".join(str(exc).split())


if __name__ == "__main__":
    sys.exit(main())
