"""Figure rendering for rate experiments (written next to the CSV/JSON output)."""

from __future__ import annotations

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .rates import RateResult

__all__ = ["save_rate_figure"]


def save_rate_figure(result: RateResult, path) -> None:
    """Two-panel summary: split-error rates on a log-log grid, and consistency."""
    ns = np.asarray(sorted(result.per_n), dtype=np.float64)
    q = result.config["quantile"]
    fig, (ax_rates, ax_rho) = plt.subplots(1, 2, figsize=(9.0, 3.6))

    def _fitline(slope, values):
        anchor = values[0]
        return anchor * (ns / ns[0]) ** slope

    if result.fitted_fast:
        vals = np.asarray([result.per_n[int(n)]["e_fast"] for n in ns])
        ax_rates.loglog(ns, vals, "o-", color="tab:blue", label="fast component")
        ax_rates.loglog(
            ns,
            _fitline(result.slope_fast, vals),
            "--",
            color="tab:blue",
            alpha=0.6,
            label=f"slope {result.slope_fast:.3f}",
        )
    if result.fitted_slow:
        vals = np.asarray([result.per_n[int(n)]["e_slow"] for n in ns])
        ax_rates.loglog(ns, vals, "s-", color="tab:red", label="slow component")
        ax_rates.loglog(
            ns,
            _fitline(result.slope_slow, vals),
            "--",
            color="tab:red",
            alpha=0.6,
            label=f"slope {result.slope_slow:.3f}",
        )
    ax_rates.set_xlabel("sample size n")
    ax_rates.set_ylabel(f"error quantile (q={q})")
    ax_rates.set_title("component-wise error rates")
    ax_rates.legend(fontsize=8)

    rho = np.asarray(result.rho_quantiles())
    ax_rho.loglog(ns, rho, "d-", color="tab:green")
    ax_rho.set_xlabel("sample size n")
    ax_rho.set_ylabel(f"orbit distance quantile (q={q})")
    ax_rho.set_title("consistency")

    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
