"""Command-line interface.

Subcommands:

  converge   sweep the (theta, tau=2h) ladder, write the study CSV, a
             human-readable table, and error-vs-tau figures
  run        one simulation; per-step diagnostics CSV plus a figure
  check      invariant audit on small grids (nonzero exit on violation)
  oracle     dense-vs-iterative Stokes comparison report

Configuration precedence: built-in defaults < `--config` file (UTF-8
``key = value`` lines, ``#`` comments) < explicit flags.  Exit codes:
0 success, 1 runtime/solver failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import audit, plots, study
from .grid import make_grid
from .manufactured import exact_velocity, make_forcing
from .stepper import RunConfig, SimulationAborted, run_simulation
from .stokes import StokesOperator, dense_oracle_solve
from .grid import VelocityField

__all__ = ["cli_main", "main"]

_DIAG_HEADER = "step,time,q,energy_residual,qdyn_residual,div_inf"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drlmns",
        description="Regularized-multiplier Navier-Stokes solver and verification harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--theta", action="append", type=float, help="regularization parameter (repeatable)")
        p.add_argument("--tau", type=float, help="time step")
        p.add_argument("--h", type=float, dest="h", help="mesh size")
        p.add_argument("--nu", type=float, help="viscosity (default 0.1)")
        p.add_argument("--T", type=float, dest="T", help="final time (default 1.0)")
        p.add_argument("--tol", type=float, help="solver tolerance (default 1e-10)")
        p.add_argument("--out", type=str, help="output path")
        p.add_argument("--config", type=str, help="key = value configuration file")

    pc = sub.add_parser("converge", help="run the convergence study")
    add_common(pc)
    pc.add_argument("--rungs", type=int, help="ladder length (default 5, halving from --tau)")
    pc.add_argument("--jobs", type=int, help="parallel workers (default 1)")
    pc.add_argument("--no-plot", action="store_true", help="skip figure rendering")

    pr = sub.add_parser("run", help="run a single simulation")
    add_common(pr)
    pr.add_argument("--no-plot", action="store_true", help="skip figure rendering")

    pk = sub.add_parser("check", help="run the invariant audit")
    add_common(pk)

    po = sub.add_parser("oracle", help="compare iterative and dense Stokes solves")
    add_common(po)
    po.add_argument("--n", type=int, help="grid cells per side (default 8, max 16)")
    po.add_argument("--trials", type=int, help="number of random right-hand sides (default 20)")
    return parser


def _read_config_file(path: str) -> dict:
    values: dict = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ValueError(f"cannot read config file {path!r}: {e}") from e
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip().replace("-", "_"), val.strip()
        if key == "theta":
            values[key] = [float(v) for v in val.replace(",", " ").split()]
        elif key in ("tau", "h", "nu", "T", "tol"):
            values[key] = float(val)
        elif key in ("rungs", "jobs", "n", "trials"):
            values[key] = int(val)
        elif key in ("out", "no_plot"):
            values[key] = val if key == "out" else val.lower() in ("1", "true", "yes")
        else:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
    return values


_DEFAULTS = {
    "theta": None,
    "tau": None,
    "h": None,
    "nu": 0.1,
    "T": 1.0,
    "tol": 1e-10,
    "out": None,
    "rungs": 5,
    "jobs": 1,
    "n": 8,
    "trials": 20,
    "no_plot": False,
}


def _merge(args: argparse.Namespace) -> dict:
    merged = dict(_DEFAULTS)
    if getattr(args, "config", None):
        merged.update(_read_config_file(args.config))
    for key in merged:
        cli_val = getattr(args, key, None)
        if cli_val not in (None, False):
            merged[key] = cli_val
    return merged


def _cmd_converge(opt: dict) -> int:
    tau0 = opt["tau"] if opt["tau"] is not None else 1 / 8
    taus = tuple(tau0 / 2**k for k in range(opt["rungs"]))
    thetas = tuple(opt["theta"]) if opt["theta"] else study.DEFAULT_THETAS
    cfg = study.StudyConfig(thetas=thetas, taus=taus, nu=opt["nu"], T=opt["T"], tol=opt["tol"])
    out = Path(opt["out"] or "convergence.csv")

    def progress(rec):
        status = "failed" if rec.failed else "ok"
        print(f"  theta={rec.theta:g} tau={rec.tau:g} h={rec.h:g}: {status}", flush=True)

    records = study.run_study(cfg, jobs=opt["jobs"], progress=progress)
    study.write_csv(records, out)
    print(study.format_table(records))
    print(f"\nwrote {out}")
    if not opt["no_plot"]:
        fig_path = out.with_name(out.stem + "_errors.png")
        plots.render_convergence_figure(records, fig_path)
        print(f"wrote {fig_path}")
    return 1 if any(r.failed for r in records) else 0


def _cmd_run(opt: dict) -> int:
    theta = opt["theta"][0] if opt["theta"] else 1.0
    tau = opt["tau"] if opt["tau"] is not None else 1 / 8
    h = opt["h"] if opt["h"] is not None else tau / 2.0
    n = round(1.0 / h)
    if n < 2 or abs(n * h - 1.0) > 1e-12:
        print(f"error: h={h} does not evenly divide the unit square", file=sys.stderr)
        return 2
    grid = make_grid(n, n)
    cfg = RunConfig(
        grid=grid,
        theta=theta,
        nu=opt["nu"],
        tau=tau,
        T=opt["T"],
        tol=opt["tol"],
        forcing=make_forcing(opt["nu"]),
        initial_velocity=lambda x, y: exact_velocity(x, y, 0.0),
    )
    out = Path(opt["out"] or "diagnostics.csv")
    try:
        _, diags = run_simulation(cfg)
    except SimulationAborted as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    lines = [_DIAG_HEADER]
    for d in diags:
        lines.append(
            f"{d.step},{d.time:.5e},{d.q:.5e},{d.energy_residual:.5e},"
            f"{d.qdyn_residual:.5e},{d.div_inf:.5e}"
        )
    with open(out, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"{len(diags)} steps, final q = {diags[-1].q:.6f}")
    print(f"wrote {out}")
    if not opt["no_plot"]:
        fig_path = out.with_name(out.stem + "_diagnostics.png")
        plots.render_diagnostics_figure(diags, fig_path)
        print(f"wrote {fig_path}")
    return 0


def _cmd_check(opt: dict) -> int:
    results = audit.run_audit(tol=opt["tol"])
    failures = 0
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        failures += not r.passed
        print(f"[{mark}] {r.name}: {r.detail}")
    return 1 if failures else 0


def _cmd_oracle(opt: dict) -> int:
    n = opt["n"]
    grid = make_grid(n, n)
    tau = opt["tau"] if opt["tau"] is not None else 1 / 16
    op = StokesOperator(grid=grid, alpha=1.0 / tau, nu=opt["nu"], tol=opt["tol"])
    rng = np.random.default_rng(7)
    worst = 0.0
    for k in range(opt["trials"]):
        g = VelocityField.zeros(grid)
        g.u[2:-2, 1:-1] = rng.standard_normal((grid.nx - 1, grid.ny))
        g.v[1:-1, 2:-2] = rng.standard_normal((grid.nx, grid.ny - 1))
        it = op.solve(g)
        dn = dense_oracle_solve(op, g)
        diff = max(
            float(np.max(np.abs(it.velocity.u - dn.velocity.u))),
            float(np.max(np.abs(it.velocity.v - dn.velocity.v))),
            float(np.max(np.abs(it.pressure.values - dn.pressure.values))),
        )
        worst = max(worst, diff)
        print(f"  rhs {k + 1:2d}: max |iterative - dense| = {diff:.3e}  ({it.iterations} iters)")
    ok = worst <= 1e-8
    print(f"{'PASS' if ok else 'FAIL'}: worst deviation {worst:.3e} on {n}x{n} over {opt['trials']} trials")
    return 0 if ok else 1


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        opt = _merge(args)
        if args.command == "converge":
            return _cmd_converge(opt)
        if args.command == "run":
            return _cmd_run(opt)
        if args.command == "check":
            return _cmd_check(opt)
        if args.command == "oracle":
            return _cmd_oracle(opt)
        parser.print_usage(sys.stderr)
        return 2
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # solver and I/O failures
        print(f"error: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
