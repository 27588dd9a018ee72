"""Plain-text and CSV renderings of fitted models and Vuong comparisons."""

from __future__ import annotations

import csv

from .vuong import VuongResult
from .zinb import ZinbFit


def stars(p: float) -> str:
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


def _labelled(fit: ZinbFit):
    """(label, estimate, se, z, p) in display order: zero part, count part, dispersion."""
    params, se, z, p = fit.params, fit.bse, fit.zvalues, fit.pvalues
    nb, nz = len(fit.beta), len(fit.gamma)
    rows = []
    for j, name in enumerate(fit.zero_names):
        k = nb + j
        rows.append((f"Zero model: {name}", params[k], se[k], z[k], p[k]))
    for j, name in enumerate(fit.count_names):
        rows.append((name, params[j], se[j], z[j], p[j]))
    k = nb + nz
    rows.append(("Log(theta)", params[k], se[k], z[k], p[k]))
    return rows


def format_fit_report(fit: ZinbFit) -> str:
    rows = _labelled(fit)
    width = max(len(r[0]) for r in rows) + 2
    lines = [
        f"Zero-inflated negative binomial: {fit.name}",
        f"errors clustered at {fit.cluster_variable} ({fit.n_clusters} classes)",
        "",
        f"{'':<{width}}{'coef':>10}{'se':>10}{'z':>9}  sig",
    ]
    for label, est, se, z, p in rows:
        lines.append(f"{label:<{width}}{est:>10.4f}{se:>10.4f}{z:>9.2f}  {stars(p)}")
    lines += [
        "",
        f"{'AIC':<{width}}{fit.aic:>10.2f}",
        f"{'Log Likelihood':<{width}}{fit.loglik:>10.2f}",
        f"{'Num. obs.':<{width}}{fit.n_obs:>10d}",
        f"{'Converged':<{width}}{str(fit.converged):>10}",
        "",
        "***p<0.001, **p<0.01, *p<0.05",
    ]
    return "\n".join(lines) + "\n"


def format_comparison(fits: list[ZinbFit]) -> str:
    """Side-by-side table, one column per model, cells ``coef (se)stars``."""
    order: list[str] = []
    cells: list[dict[str, str]] = []
    for fit in fits:
        col = {}
        for label, est, se, _, p in _labelled(fit):
            if label not in order:
                order.append(label)
            col[label] = f"{est:.2f} ({se:.2f}){stars(p)}"
        col["AIC"] = f"{fit.aic:.2f}"
        col["Log Likelihood"] = f"{fit.loglik:.2f}"
        col["Num. obs."] = str(fit.n_obs)
        cells.append(col)
    order += ["AIC", "Log Likelihood", "Num. obs."]
    w0 = max(len(x) for x in order) + 2
    w = max(18, *(len(v) + 2 for c in cells for v in c.values()))
    lines = [" " * w0 + "".join(f"{f.name:>{w}}" for f in fits)]
    for label in order:
        lines.append(f"{label:<{w0}}" + "".join(f"{c.get(label, ''):>{w}}" for c in cells))
    lines.append("***p<0.001, **p<0.01, *p<0.05")
    return "\n".join(lines) + "\n"


def write_coefficients(path, fits: list[ZinbFit]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "term", "estimate", "se", "z", "p", "ci_low", "ci_high"])
        for fit in fits:
            for label, est, se, z, p in _labelled(fit):
                w.writerow([fit.name, label, repr(float(est)), repr(float(se)), repr(float(z)),
                            repr(float(p)), repr(float(est - 1.96 * se)),
                            repr(float(est + 1.96 * se))])


def format_vuong(results: list[VuongResult]) -> str:
    lines = [f"{'':<15}{'z-statistic':>14}  {'H_A':<24}{'p-value':>12}"]
    for r in results:
        for label, z, a, rel, b, p in r.rows():
            lines.append(f"{label:<15}{z:>14.6f}  {f'{a} {rel} {b}':<24}{p:>12.6g}")
        lines.append("")
    return "\n".join(lines)


def write_vuong(path, results: list[VuongResult]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model_a", "model_b", "correction", "z", "p", "favored"])
        for r in results:
            for label, z, a, rel, b, p in r.rows():
                w.writerow([a, b, label, repr(float(z)), repr(float(p)), a if rel == ">" else b])

