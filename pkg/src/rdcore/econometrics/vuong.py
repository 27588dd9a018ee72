from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from .zinb import ZinbFit


class IndistinguishableModels(ValueError):
    pass


@dataclass(frozen=True)
class VuongResult:
    model_a: str
    model_b: str
    n: int
    z_raw: float
    z_aic: float
    z_bic: float
    p_raw: float
    p_aic: float
    p_bic: float

    @staticmethod
    def _direction(z: float) -> str:
        return ">" if z > 0 else "<"

    @property
    def direction(self) -> str:
        """Model favored by the raw statistic."""
        return self.model_a if self.z_raw > 0 else self.model_b

    def rows(self):
        for label, z, p in (("Raw", self.z_raw, self.p_raw),
                            ("AIC-corrected", self.z_aic, self.p_aic),
                            ("BIC-corrected", self.z_bic, self.p_bic)):
            yield label, z, self.model_a, self._direction(z), self.model_b, p

    def to_dict(self) -> dict:
        out = asdict(self)
        out["direction"] = self.direction
        return out


def vuong_from_contributions(ll_a, ll_b, k_a: int, k_b: int, name_a="a", name_b="b") -> VuongResult:
    """Vuong closeness test on per-observation log-likelihoods.

    Positive z favors model a.  p-values are one-sided in the direction of z.
    """
    m = np.asarray(ll_a, dtype=np.float64) - np.asarray(ll_b, dtype=np.float64)
    n = len(m)
    sd = m.std(ddof=1) if n > 1 else 0.0
    if not sd > 0:
        raise IndistinguishableModels("models indistinguishable pointwise (sd of differences is 0)")
    mean = m.mean()
    scale = np.sqrt(n) / sd
    z_raw = scale * mean
    z_aic = scale * (mean - (k_a - k_b) / n)
    z_bic = scale * (mean - (k_a - k_b) * np.log(n) / (2.0 * n))
    p = [float(stats.norm.sf(abs(z))) for z in (z_raw, z_aic, z_bic)]
    return VuongResult(name_a, name_b, n, float(z_raw), float(z_aic), float(z_bic), *p)


def vuong_test(fit_a: ZinbFit, fit_b: ZinbFit, y=None) -> VuongResult:
    if fit_a.n_obs != fit_b.n_obs:
        raise ValueError("fits were estimated on different numbers of observations")
    if y is not None:
        y = np.asarray(y)
        for fit in (fit_a, fit_b):
            if fit.y is not None and not np.array_equal(fit.y, y):
                raise ValueError(f"fit {fit.name or '?'} was estimated on different outcomes")
    return vuong_from_contributions(
        fit_a.loglik_obs, fit_b.loglik_obs, fit_a.k, fit_b.k,
        fit_a.name or "a", fit_b.name or "b",
    )
