"""Convergence-study orchestration: sweeps, rates, CSV emission.

A study runs the manufactured-solution problem over a ladder of time
steps coupled to the mesh by tau = 2h (so spatial errors stay negligible
against temporal ones) for each regularization parameter, measures the
final-time errors, and attaches log2 error ratios between consecutive
rungs.  Runs are independent and may execute in parallel; records are
sorted deterministically before any output is written.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .grid import VelocityField, apply_velocity_bc, make_grid
from .manufactured import error_norms, exact_velocity, forcing_sup_l2, make_forcing
from .operators import l2_norm_sq
from .stepper import RunConfig, SimulationAborted, multiplier_bound_c0, run_simulation

__all__ = [
    "RunAudit",
    "ConvergenceRecord",
    "StudyConfig",
    "compute_rate",
    "run_single",
    "run_study",
    "write_csv",
    "read_csv",
    "format_table",
    "CSV_HEADER",
]

DEFAULT_THETAS = (0.1, 1.0, 10.0, 100.0)
DEFAULT_TAUS = (1 / 8, 1 / 16, 1 / 32, 1 / 64, 1 / 128)

CSV_HEADER = (
    "theta,tau,h,err_u_l2,rate_u_l2,err_u_h1,rate_u_h1,err_p_l2,rate_p_l2,err_q,rate_q"
)

_ERR_FIELDS = ("err_u_l2", "err_u_h1", "err_p_l2", "err_q")
_RATE_FIELDS = ("rate_u_l2", "rate_u_h1", "rate_p_l2", "rate_q")


@dataclass(frozen=True)
class RunAudit:
    """Per-run invariant summary collected alongside the error record."""

    steps: int
    q_min: float
    q_max: float
    max_energy_residual: float
    max_qdyn_residual: float
    max_quad_residual: float
    max_div_inf: float
    u0_l2: float
    forcing_sup: float
    c0: float | None  # multiplier bound, asserted only for theta >= 1


@dataclass
class ConvergenceRecord:
    """One (theta, tau, h) row of the study table."""

    theta: float
    tau: float
    h: float
    err_u_l2: float | None = None
    err_u_h1: float | None = None
    err_p_l2: float | None = None
    err_q: float | None = None
    rate_u_l2: float | None = None
    rate_u_h1: float | None = None
    rate_p_l2: float | None = None
    rate_q: float | None = None
    failed: bool = False
    message: str = ""
    audit: RunAudit | None = field(default=None, compare=False)


@dataclass(frozen=True)
class StudyConfig:
    """Sweep definition: theta list and a tau ladder with tau = 2h.

    The ladder must be sorted descending with each tau exactly half the
    previous, and every h = tau/2 must divide the unit square evenly.
    """

    thetas: tuple[float, ...] = DEFAULT_THETAS
    taus: tuple[float, ...] = DEFAULT_TAUS
    nu: float = 0.1
    T: float = 1.0
    tol: float = 1e-10
    out: str | None = None

    def __post_init__(self):
        if not self.thetas or not self.taus:
            raise ValueError("need at least one theta and one tau")
        for t0, t1 in zip(self.taus, self.taus[1:]):
            if t1 * 2.0 != t0:
                raise ValueError(f"ladder not halving: {t0} -> {t1}")
        for tau in self.taus:
            n = round(2.0 / tau)
            if n < 2 or n * tau != 2.0:
                raise ValueError(f"tau={tau} gives no integer cell count for h=tau/2")


def compute_rate(err_coarse: float, err_fine: float) -> float | None:
    """log2 error ratio between consecutive rungs; None when undefined."""
    if err_coarse is None or err_fine is None or err_coarse <= 0 or err_fine <= 0:
        return None
    return math.log2(err_coarse / err_fine)


def run_single(
    theta: float,
    tau: float,
    nu: float = 0.1,
    T: float = 1.0,
    tol: float = 1e-10,
    forcing_sup: float | None = None,
) -> ConvergenceRecord:
    """Run one (theta, tau) case with h = tau/2 and measure final errors.

    ``forcing_sup`` is the study-wide estimate of sup_t ||f(t)||; when
    omitted it is estimated on this run's grid.
    """
    h = tau / 2.0
    n = round(1.0 / h)
    record = ConvergenceRecord(theta=theta, tau=tau, h=h)
    grid = make_grid(n, n)
    if forcing_sup is None:
        forcing_sup = forcing_sup_l2(nu, grid, T)
    cfg = RunConfig(
        grid=grid,
        theta=theta,
        nu=nu,
        tau=tau,
        T=T,
        tol=tol,
        forcing=make_forcing(nu),
        initial_velocity=lambda x, y: exact_velocity(x, y, 0.0),
    )
    try:
        state, diags = run_simulation(cfg)
    except SimulationAborted as e:
        record.failed = True
        record.message = str(e)
        return record
    nrm, e_q = error_norms(state, state.t, grid)
    record.err_u_l2 = nrm.l2_u
    record.err_u_h1 = nrm.h1_u
    record.err_p_l2 = nrm.l2_p
    record.err_q = abs(e_q)
    vel0 = apply_velocity_bc(VelocityField.sample(grid, cfg.initial_velocity))
    u0_l2 = math.sqrt(l2_norm_sq(vel0, grid))
    record.audit = RunAudit(
        steps=len(diags),
        q_min=min(d.q for d in diags),
        q_max=max(d.q for d in diags),
        max_energy_residual=max(d.energy_residual for d in diags),
        max_qdyn_residual=max(d.qdyn_residual for d in diags),
        max_quad_residual=max(d.quad_residual for d in diags),
        max_div_inf=max(d.div_inf for d in diags),
        u0_l2=u0_l2,
        forcing_sup=forcing_sup,
        c0=multiplier_bound_c0(u0_l2, forcing_sup, T) if theta >= 1.0 else None,
    )
    return record


def _run_task(args) -> ConvergenceRecord:
    theta, tau, nu, T, tol, forcing_sup = args
    try:
        return run_single(theta, tau, nu=nu, T=T, tol=tol, forcing_sup=forcing_sup)
    except Exception as e:  # defensive: a worker must always report back
        h = tau / 2.0
        return ConvergenceRecord(theta=theta, tau=tau, h=h, failed=True, message=repr(e))


def run_study(cfg: StudyConfig, jobs: int = 1, progress=None) -> list[ConvergenceRecord]:
    """Run the full sweep and return rate-annotated records.

    Records are sorted by (theta ascending, tau descending); a failed
    run keeps its slot with empty error fields so one bad rung cannot
    take down the sweep.
    """
    finest = make_grid(round(2.0 / cfg.taus[-1]), round(2.0 / cfg.taus[-1]))
    forcing_sup = forcing_sup_l2(cfg.nu, finest, cfg.T)
    tasks = [
        (theta, tau, cfg.nu, cfg.T, cfg.tol, forcing_sup)
        for theta in cfg.thetas
        for tau in cfg.taus
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_task, tasks))
    else:
        records = []
        for task in tasks:
            rec = _run_task(task)
            records.append(rec)
            if progress is not None:
                progress(rec)
    records.sort(key=lambda r: (r.theta, -r.tau))
    _attach_rates(records)
    return records


def _attach_rates(records: list[ConvergenceRecord]) -> None:
    by_theta: dict[float, list[ConvergenceRecord]] = {}
    for rec in records:
        by_theta.setdefault(rec.theta, []).append(rec)
    for group in by_theta.values():
        for coarse, fine in zip(group, group[1:]):
            if coarse.tau != 2.0 * fine.tau or coarse.failed or fine.failed:
                continue
            for err, rate in zip(_ERR_FIELDS, _RATE_FIELDS):
                setattr(fine, rate, compute_rate(getattr(coarse, err), getattr(fine, err)))


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.5e}"


def write_csv(records, path) -> None:
    """Write records with 6-significant-digit scientific notation.

    Undefined rates (and error fields of failed runs) are emitted as
    empty strings; the file is newline-terminated.
    """
    lines = [CSV_HEADER]
    for r in records:
        lines.append(
            ",".join(
                [
                    _fmt(r.theta),
                    _fmt(r.tau),
                    _fmt(r.h),
                    _fmt(r.err_u_l2),
                    _fmt(r.rate_u_l2),
                    _fmt(r.err_u_h1),
                    _fmt(r.rate_u_h1),
                    _fmt(r.err_p_l2),
                    _fmt(r.rate_p_l2),
                    _fmt(r.err_q),
                    _fmt(r.rate_q),
                ]
            )
        )
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as e:
        raise OSError(f"cannot write study table to {path!r}: {e}") from e


def read_csv(path) -> list[ConvergenceRecord]:
    """Parse a file written by :func:`write_csv` back into records."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"{path!r} does not carry the expected header")
    cols = CSV_HEADER.split(",")
    records = []
    for ln in lines[1:]:
        parts = ln.split(",")
        kw = {k: (float(v) if v else None) for k, v in zip(cols, parts)}
        records.append(ConvergenceRecord(**kw))
    return records


def format_table(records) -> str:
    """Aligned human-readable table with rates bracketed to 2 decimals."""

    def cell(err, rate):
        if err is None:
            return "failed"
        s = f"{err:.2e}"
        return f"{s} [{rate:.2f}]" if rate is not None else s

    rows = [["theta", "tau", "h", "err_u_l2", "err_u_h1", "err_p_l2", "err_q"]]
    for r in records:
        rows.append(
            [
                f"{r.theta:g}",
                f"1/{round(1 / r.tau):d}" if (1 / r.tau).is_integer() else f"{r.tau:g}",
                f"1/{round(1 / r.h):d}" if (1 / r.h).is_integer() else f"{r.h:g}",
                cell(r.err_u_l2, r.rate_u_l2),
                cell(r.err_u_h1, r.rate_u_h1),
                cell(r.err_p_l2, r.rate_p_l2),
                cell(r.err_q, r.rate_q),
            ]
        )
    widths = [max(len(row[k]) for row in rows) for k in range(len(rows[0]))]
    out = []
    for i, row in enumerate(rows):
        out.append("  ".join(c.rjust(w) for c, w in zip(row, widths)))
        if i == 0:
            out.append("  ".join("-" * w for w in widths))
    return "\n".join(out)
