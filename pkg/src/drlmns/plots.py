"""Figure rendering for study and run reports.

Figures are written next to the delimited output; the CSV stays the
machine-readable contract.  Uses the Agg backend so rendering works in
headless environments.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["render_convergence_figure", "render_diagnostics_figure"]

_ERROR_PANELS = (
    ("err_u_l2", r"velocity $L^2$ error"),
    ("err_u_h1", r"velocity $H^1$ error"),
    ("err_p_l2", r"pressure $L^2$ error"),
    ("err_q", "multiplier error"),
)


def render_convergence_figure(records, path) -> None:
    """Log-log final-time errors vs. time step, one line per theta."""
    thetas = sorted({r.theta for r in records})
    fig, axes = plt.subplots(2, 2, figsize=(9.5, 7.5), sharex=True)
    for ax, (attr, label) in zip(axes.ravel(), _ERROR_PANELS):
        last = None
        for theta in thetas:
            pts = [(r.tau, getattr(r, attr)) for r in records if r.theta == theta and not r.failed]
            pts = [(t, e) for t, e in pts if e is not None and e > 0]
            if not pts:
                continue
            taus, errs = zip(*sorted(pts))
            ax.loglog(taus, errs, "o-", label=rf"$\theta={theta:g}$")
            last = (taus, errs)
        if last is not None and len(last[0]) > 1:
            taus, errs = last
            ref = [errs[0] * t / taus[0] for t in taus]
            ax.loglog(taus, ref, "k--", linewidth=0.8, label="slope 1")
        ax.set_title(label)
        ax.grid(True, which="both", alpha=0.3)
    for ax in axes[1]:
        ax.set_xlabel(r"$\tau$")
    axes[0, 0].legend(fontsize=8)
    fig.suptitle("Final-time errors, time step coupled to mesh by $\\tau = 2h$")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_diagnostics_figure(diags, path) -> None:
    """Multiplier trace and per-step identity residuals of one run."""
    steps = [d.step for d in diags]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.5, 3.8))
    ax1.plot([d.time for d in diags], [d.q for d in diags], "o-")
    ax1.set_xlabel("time")
    ax1.set_ylabel("multiplier q")
    ax1.grid(alpha=0.3)
    ax2.semilogy(steps, [max(d.energy_residual, 1e-18) for d in diags], "o-", label="energy identity")
    ax2.semilogy(steps, [max(d.qdyn_residual, 1e-18) for d in diags], "s-", label="multiplier identity")
    ax2.semilogy(steps, [max(d.div_inf, 1e-18) for d in diags], "^-", label=r"$\|\nabla\cdot u\|_\infty$")
    ax2.set_xlabel("step")
    ax2.set_ylabel("residual")
    ax2.grid(alpha=0.3)
    ax2.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
