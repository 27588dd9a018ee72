"""Zero-inflated negative binomial likelihood, scores, fitting and simulation.

Parameter vector layout is ``[beta (count part), gamma (zero part), log_theta]``.
The count part is NB2 with mean ``mu = exp(X beta)`` and variance
``mu + mu**2 / theta``; the structural-zero probability is
``pi = logistic(Z gamma)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special, stats


class IdentificationError(ValueError):
    """Design is rank deficient or the outcome carries no count signal."""


class NonFiniteLikelihood(FloatingPointError):
    def __init__(self, row: int, value: float):
        super().__init__(f"log-likelihood is {value} at observation {row}")
        self.row = row


def _pieces(beta, gamma, log_theta, X_count, X_zero):
    eta_c = X_count @ beta
    eta_z = X_zero @ gamma
    theta = np.exp(log_theta)
    # log(1 + mu/theta), computed without forming mu/theta
    a = np.logaddexp(0.0, eta_c - log_theta)
    log_pi = -np.logaddexp(0.0, -eta_z)
    log_1mpi = -np.logaddexp(0.0, eta_z)
    return eta_c, eta_z, theta, a, log_pi, log_1mpi


def _log_nb(y, eta_c, log_theta, theta, a):
    pos = y > 0
    lg_ratio = np.zeros_like(eta_c)
    # lgamma(y + theta) - lgamma(theta) via the beta function stays accurate for large theta
    yp = y[pos]
    lg_ratio[pos] = special.gammaln(yp) - special.betaln(theta, yp)
    return lg_ratio - special.gammaln(y + 1.0) - theta * a + y * (eta_c - log_theta - a)


def zinb_loglik_obs(beta, gamma, log_theta, X_count, X_zero, y) -> np.ndarray:
    """Per-observation log-likelihood contributions."""
    y = np.asarray(y, dtype=np.float64)
    eta_c, _, theta, a, log_pi, log_1mpi = _pieces(beta, gamma, log_theta, X_count, X_zero)
    lnb = _log_nb(y, eta_c, log_theta, theta, a)
    return np.where(y == 0, np.logaddexp(log_pi, log_1mpi + lnb), log_1mpi + lnb)


def zinb_loglik(beta, gamma, log_theta, X_count, X_zero, y) -> float:
    # bad rows are reported through NonFiniteLikelihood rather than warnings
    with np.errstate(invalid="ignore", over="ignore"):
        ll = zinb_loglik_obs(beta, gamma, log_theta, X_count, X_zero, y)
    bad = ~np.isfinite(ll)
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        raise NonFiniteLikelihood(row, float(ll[row]))
    return float(ll.sum())


def zinb_score_obs(beta, gamma, log_theta, X_count, X_zero, y) -> np.ndarray:
    """Per-observation gradient of the log-likelihood, shape ``(n, p + q + 1)``."""
    y = np.asarray(y, dtype=np.float64)
    eta_c, eta_z, theta, a, log_pi, log_1mpi = _pieces(beta, gamma, log_theta, X_count, X_zero)
    pi = special.expit(eta_z)
    theta_share = special.expit(log_theta - eta_c)      # theta / (theta + mu)
    mu_share = special.expit(eta_c - log_theta)         # mu / (theta + mu)
    mu = np.exp(eta_c)

    d_eta = (y - mu) * theta_share
    d_lt = theta * (special.digamma(y + theta) - special.digamma(theta) - a) + (mu - y) * theta_share
    d_zero = -pi

    zero = y == 0
    if zero.any():
        lnb0 = -theta * a[zero]
        b = log_1mpi[zero] + lnb0
        w = np.exp(b - np.logaddexp(log_pi[zero], b))   # posterior weight of the NB branch
        d_eta[zero] = -w * theta * mu_share[zero]
        d_lt[zero] = w * theta * (mu_share[zero] - a[zero])
        d_zero[zero] = 1.0 - pi[zero] - w
    return np.hstack([X_count * d_eta[:, None], X_zero * d_zero[:, None], d_lt[:, None]])


def zinb_gradient(beta, gamma, log_theta, X_count, X_zero, y) -> np.ndarray:
    return zinb_score_obs(beta, gamma, log_theta, X_count, X_zero, y).sum(axis=0)


def simulate_zinb(X_count, X_zero, beta, gamma, log_theta, seed) -> np.ndarray:
    """Draw outcomes: Bernoulli structural zeros, otherwise a Gamma-Poisson mixture."""
    rng = np.random.default_rng(seed)
    n = X_count.shape[0]
    pi = special.expit(X_zero @ gamma)
    mu = np.exp(X_count @ beta)
    theta = float(np.exp(log_theta))
    structural = rng.random(n) < pi
    lam = rng.gamma(shape=theta, scale=mu / theta)
    y = rng.poisson(lam)
    y[structural] = 0
    return y.astype(np.int64)


@dataclass(eq=False)
class ZinbFit:
    count_names: list[str]
    zero_names: list[str]
    beta: np.ndarray
    gamma: np.ndarray
    log_theta: float
    loglik: float
    cov_clustered: np.ndarray
    cluster_variable: str
    n_obs: int
    n_clusters: int
    converged: bool
    gradient_norm: float
    iterations: int
    name: str = ""
    message: str = ""
    loglik_obs: np.ndarray = field(default=None, repr=False)
    y: np.ndarray = field(default=None, repr=False)

    @property
    def params(self) -> np.ndarray:
        return np.concatenate([self.beta, self.gamma, [self.log_theta]])

    @property
    def param_names(self) -> list[str]:
        return ([f"count:{n}" for n in self.count_names]
                + [f"zero:{n}" for n in self.zero_names] + ["log_theta"])

    @property
    def k(self) -> int:
        return len(self.beta) + len(self.gamma) + 1

    @property
    def aic(self) -> float:
        return 2.0 * self.k - 2.0 * self.loglik

    @property
    def bse(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.cov_clustered), 0.0, None))

    @property
    def zvalues(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.params / self.bse

    @property
    def pvalues(self) -> np.ndarray:
        return 2.0 * stats.norm.sf(np.abs(self.zvalues))

    def coef(self, name: str, part: str = "count") -> tuple[float, float]:
        """(estimate, clustered SE) of one coefficient."""
        idx = self.param_names.index(f"{part}:{name}" if part != "theta" else "log_theta")
        return float(self.params[idx]), float(self.bse[idx])

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "count_names": list(self.count_names),
            "zero_names": list(self.zero_names),
            "beta": [float(v) for v in self.beta],
            "gamma": [float(v) for v in self.gamma],
            "log_theta": float(self.log_theta),
            "loglik": float(self.loglik),
            "aic": float(self.aic),
            "k": self.k,
            "cov_clustered": [[float(v) for v in row] for row in self.cov_clustered],
            "cluster_variable": self.cluster_variable,
            "n_clusters": self.n_clusters,
            "n_obs": self.n_obs,
            "converged": bool(self.converged),
            "gradient_norm": float(self.gradient_norm),
            "iterations": self.iterations,
            "message": self.message,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def collinear_columns(X: np.ndarray, names, tol: float = 1e-9) -> list[str]:
    """Names of columns that add nothing to the span of the columns before them."""
    bad = []
    kept = np.zeros((X.shape[0], 0))
    scale = max(1.0, float(np.abs(X).max())) if X.size else 1.0
    for j, name in enumerate(names):
        col = X[:, j:j + 1]
        if kept.shape[1]:
            coef, *_ = np.linalg.lstsq(kept, col, rcond=None)
            resid = col - kept @ coef
        else:
            resid = col
        if np.linalg.norm(resid) <= tol * scale * np.sqrt(X.shape[0]):
            bad.append(name)
        else:
            kept = np.hstack([kept, col])
    return bad


def _numeric_hessian(grad, params: np.ndarray) -> np.ndarray:
    k = len(params)
    H = np.empty((k, k))
    for j in range(k):
        h = 1e-5 * max(1.0, abs(params[j]))
        up, dn = params.copy(), params.copy()
        up[j] += h
        dn[j] -= h
        H[:, j] = (grad(up) - grad(dn)) / (2.0 * h)
    return 0.5 * (H + H.T)


def _start_values(X_count, X_zero, y, kind: str) -> np.ndarray:
    p, q = X_count.shape[1], X_zero.shape[1]
    start = np.zeros(p + q + 1)
    if kind == "zeros":
        return start
    ones_c = np.flatnonzero(np.all(X_count == 1.0, axis=0))
    ones_z = np.flatnonzero(np.all(X_zero == 1.0, axis=0))
    pos = y[y > 0]
    m, v = y.mean(), y.var()
    mean_pos = pos.mean() if len(pos) else 1.0
    theta_mm = m * m / (v - m) if v > m else 10.0
    theta_mm = float(np.clip(theta_mm, 0.05, 1e3))
    # zeros beyond what an NB with the moment-matched theta would produce
    nb_zero = (theta_mm / (theta_mm + mean_pos)) ** theta_mm
    excess = float(np.clip(((y == 0).mean() - nb_zero) / (1.0 - nb_zero), 0.05, 0.95))
    if kind == "ols":
        coef, *_ = np.linalg.lstsq(X_count, np.log(y + 0.5), rcond=None)
        start[:p] = coef
    elif len(ones_c):
        start[ones_c[0]] = np.log(mean_pos)
    if len(ones_z):
        start[p + ones_z[0]] = special.logit(excess)
    start[-1] = np.log(theta_mm)
    return start


def fit_zinb_arrays(
    X_count: np.ndarray,
    X_zero: np.ndarray,
    y,
    clusters=None,
    count_names=None,
    zero_names=None,
    cluster_variable: str = "",
    gtol: float = 1e-6,
    maxiter: int = 500,
    restarts: int = 3,
    name: str = "",
) -> ZinbFit:
    """Maximum-likelihood ZINB fit with cluster-robust sandwich covariance.

    ``gtol`` bounds the infinity norm of the mean score at the returned optimum.
    Starting points are tried in order (moment-matched, OLS on log counts,
    zeros) until one converges; the best log-likelihood among them is kept.
    """
    X_count = np.asarray(X_count, dtype=np.float64)
    X_zero = np.asarray(X_zero, dtype=np.float64)
    y = np.asarray(y)
    n, p = X_count.shape
    q = X_zero.shape[1]
    count_names = list(count_names or [f"x{j}" for j in range(p)])
    zero_names = list(zero_names or [f"z{j}" for j in range(q)])
    if np.any(y < 0) or np.any(y != np.round(y)):
        raise ValueError("outcome must be non-negative integers")
    if not np.any(y > 0):
        raise IdentificationError("count part is not identified: every outcome is zero")
    for X, names, part in ((X_count, count_names, "count"), (X_zero, zero_names, "zero")):
        bad = collinear_columns(X, names)
        if bad:
            raise IdentificationError(f"{part} design is rank deficient; collinear columns: {bad}")
    if clusters is None:
        clusters = np.arange(n)
    labels, cluster_idx = np.unique(np.asarray(clusters), return_inverse=True)
    n_clusters = len(labels)
    if n_clusters < 2:
        raise IdentificationError("clustered covariance needs at least 2 clusters")
    yf = y.astype(np.float64)

    def split(theta):
        return theta[:p], theta[p:p + q], theta[-1]

    def negll(theta):
        ll = zinb_loglik_obs(*split(theta), X_count, X_zero, yf).sum()
        return -ll / n if np.isfinite(ll) else np.inf

    def neggrad(theta):
        return -zinb_score_obs(*split(theta), X_count, X_zero, yf).sum(axis=0) / n

    def fun(theta):
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            f = negll(theta)
            g = neggrad(theta) if np.isfinite(f) else np.full_like(theta, np.nan)
        return f, g

    best = None
    iterations = 0
    for kind in ("moments", "ols", "zeros")[:max(1, restarts)]:
        x0 = _start_values(X_count, X_zero, yf, kind)
        res = optimize.minimize(fun, x0, jac=True, method="BFGS",
                                options={"gtol": gtol * 0.1, "maxiter": maxiter})
        theta, its = _newton_polish(fun, neggrad, res.x, gtol)
        iterations += res.nit + its
        f, g = fun(theta)
        gnorm = float(np.max(np.abs(g))) if np.all(np.isfinite(g)) else np.inf
        cand = (f, theta, gnorm, res.message)
        if best is None or (np.isfinite(f) and f < best[0]):
            best = cand
        if gnorm <= gtol:
            break

    f, theta, gnorm, message = best
    converged = bool(np.isfinite(f) and gnorm <= gtol)
    beta, gamma, log_theta = split(theta)
    ll_obs = zinb_loglik_obs(beta, gamma, log_theta, X_count, X_zero, yf)
    cov = clustered_covariance(theta, cluster_idx, n_clusters, split, X_count, X_zero, yf)
    return ZinbFit(
        count_names=count_names, zero_names=zero_names,
        beta=beta.copy(), gamma=gamma.copy(), log_theta=float(log_theta),
        loglik=float(ll_obs.sum()), cov_clustered=cov,
        cluster_variable=cluster_variable, n_obs=n, n_clusters=n_clusters,
        converged=converged, gradient_norm=gnorm, iterations=iterations,
        name=name, message=str(message), loglik_obs=ll_obs, y=y,
    )


def _newton_polish(fun, neggrad, theta, gtol, max_steps: int = 25):
    """Newton steps on the mean negative log-likelihood with step halving."""
    steps = 0
    f, g = fun(theta)
    for steps in range(1, max_steps + 1):
        if not np.all(np.isfinite(g)) or np.max(np.abs(g)) <= gtol * 1e-2:
            break
        H = _numeric_hessian(neggrad, theta)
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(step)) or step @ g <= 0:
            step = g
        t = 1.0
        while t > 1e-8:
            cand = theta - t * step
            fc, gc = fun(cand)
            if np.isfinite(fc) and fc <= f + 1e-4 * t * (-(step @ g)):
                break
            t *= 0.5
        else:
            break
        theta, f, g = cand, fc, gc
    return theta, steps


def clustered_covariance(theta, cluster_idx, n_clusters, split, X_count, X_zero, y):
    """``C/(C-1) * A^-1 B A^-1`` with A the observed information, B the outer
    product of per-cluster score sums."""
    scores = zinb_score_obs(*split(theta), X_count, X_zero, y)

    def grad(t):
        return zinb_score_obs(*split(t), X_count, X_zero, y).sum(axis=0)

    info = -_numeric_hessian(grad, np.asarray(theta, dtype=np.float64))
    g = np.zeros((n_clusters, scores.shape[1]))
    np.add.at(g, cluster_idx, scores)
    meat = g.T @ g
    bread = np.linalg.pinv(info)
    cov = bread @ meat @ bread * (n_clusters / (n_clusters - 1.0))
    return 0.5 * (cov + cov.T)
