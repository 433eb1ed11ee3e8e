"""Tables and figures summarizing a Monte Carlo experiment."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy import stats

from . import io, mvn, stattest


def limit_pdf_scaled(support, Sigma, scale, tol=mvn.DEFAULT_TOL, seed=0):
    """Density of ``scale * D`` at ``support`` for ``D`` the range of ``N(0, Sigma)``.

    Central differences of the range distribution function; near zero the
    difference is taken one-sided on ``[0, 2h]``.
    """
    h = mvn.default_pdf_step(tol)
    out = []
    for j in support:
        q = float(j) / scale
        if q > h:
            f = mvn.range_pdf(q, Sigma, h=h, tol=tol, seed=seed)
        else:
            f = mvn.range_cdf(q + h, Sigma, tol=tol, seed=seed) / (q + h)
        out.append(f / scale)
    return np.array(out)


def limit_support_end(Sigma, scale, tol=mvn.DEFAULT_TOL, mass=0.9999, seed=0):
    """Smallest integer ``j`` with ``F(j / scale) >= mass``.

    The search stops at the union bound ``m * P(|U_i| > q / 2) <= 1 - mass``,
    since the numerical ``F`` may level off a little below one.
    """
    sd = np.sqrt(np.max(np.diag(Sigma)))
    m = len(Sigma)
    q_cap = 2 * sd * stats.norm.isf((1 - mass) / (2 * m))
    j_cap = max(1, int(np.ceil(q_cap * scale)))
    j = min(j_cap, max(1, int(np.ceil(2 * sd * scale))))
    while j < j_cap and mvn.range_cdf(j / scale, Sigma, tol=tol, seed=seed) < mass:
        j = min(j_cap, j + max(1, j // 4))
    return j


def null_pmf_table(scaled, Sigma, scale, tol=mvn.DEFAULT_TOL):
    """Rows ``(value, pmf, limit_pdf)`` over ``0..J`` covering data and limit mass."""
    scaled = np.asarray(scaled, dtype=np.int64)
    J = max(int(scaled.max()), limit_support_end(Sigma, scale, tol))
    support = np.arange(J + 1)
    pmf = np.bincount(scaled, minlength=J + 1)[: J + 1] / len(scaled)
    pdf = limit_pdf_scaled(support, Sigma, scale, tol)
    return support, pmf, pdf


def pp_table(p_values):
    p = np.sort(np.asarray(p_values, dtype=float))
    return np.arange(1, len(p) + 1) / (len(p) + 1), p


def write_experiment(result, out_dir, plots=True, pdf_tol=mvn.DEFAULT_TOL):
    """Write CSV/JSON tables (and PNG figures) for an experiment; return paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = {}
    s = result.settings
    io.write_csv(out / "size_power.csv", ["theta", "alpha", "reject_rate", "se"],
                 result.summary_rows())
    written["size_power"] = out / "size_power.csv"
    io.write_json(out / "experiment.json", result.as_dict())
    written["experiment"] = out / "experiment.json"

    null = 0.0 if 0.0 in result.p_values else None
    if null is not None:
        Sigma = stattest.theoretical_VN_covariance(result.model, s["N"], s["Delta"])
        scale = 2 * s["Delta"] * np.sqrt(s["k"])
        support, pmf, pdf = null_pmf_table(result.scaled[null], Sigma, scale, pdf_tol)
        io.write_csv(out / "null_pmf.csv", ["value", "pmf", "limit_pdf"],
                     zip(support, pmf, pdf))
        written["null_pmf"] = out / "null_pmf.csv"
        expected, observed = pp_table(result.p_values[null])
        io.write_csv(out / "pvalues_pp.csv", ["uniform_quantile", "p_value"],
                     zip(expected, observed))
        written["pvalues_pp"] = out / "pvalues_pp.csv"
    if plots:
        from . import plotting

        label = f"{result.model}, n={s['n']}, k={s['k']}, N={s['N']}, Delta={s['Delta']}"
        if null is not None:
            written["fig_null"] = plotting.plot_null_distribution(
                support, pmf, pdf, out / "null_distribution.png", label)
            written["fig_pp"] = plotting.plot_pp(result.p_values[null], out / "pp_plot.png",
                                                 label)
        alpha = 0.05 if 0.05 in result.alphas else result.alphas[0]
        rows = [r for r in result.summary_rows() if r[1] == alpha]
        written["fig_power"] = plotting.plot_power([r[0] for r in rows], [r[2] for r in rows],
                                                   [r[3] for r in rows], alpha,
                                                   out / "power.png", label)
    return written
