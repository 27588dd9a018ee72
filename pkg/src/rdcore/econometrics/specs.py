"""Model presets and design-matrix assembly from a panel table."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .zinb import ZinbFit, fit_zinb_arrays

INTERCEPT = "(Intercept)"
PRE_SAMPLE = "log_pat_pre"
CENTRALITY_COLUMNS = ("CORE", "DEGREE", "BETWEENNESS_NORM", "LOCAL_CLUSTERING", "LOCAL_REACH", "EFF")

DISPLAY_NAMES = {PRE_SAMPLE: "log(PAT + 1)"}


@dataclass(frozen=True)
class ModelSpec:
    name: str
    count_covariates: tuple[str, ...]
    zero_covariates: tuple[str, ...] = (PRE_SAMPLE,)
    sector_dummies: bool = True
    year_dummies: bool = True


_M1 = (PRE_SAMPLE, "EFF", "BETWEENNESS_NORM")
_M2 = _M1 + ("DEGREE", "LOCAL_REACH", "LOCAL_CLUSTERING")
_M3 = _M2 + ("CORE",)

PRESETS = {
    "Model1": ModelSpec("Model1", _M1),
    "Model2": ModelSpec("Model2", _M2),
    "Model3": ModelSpec("Model3", _M3),
    "Model4": ModelSpec("Model4", tuple(c for c in _M3 if c != "EFF")),
    "Model5": ModelSpec("Model5", (PRE_SAMPLE, "CORE")),
}

# pairs (a, b) compared with the Vuong test
VUONG_PAIRS = (("Model3", "Model2"), ("Model4", "Model2"), ("Model3", "Model4"))


def resolve_spec(name_or_spec) -> ModelSpec:
    if isinstance(name_or_spec, ModelSpec):
        return name_or_spec
    key = str(name_or_spec).replace(" ", "")
    key = key[0].upper() + key[1:] if key else key
    if key not in PRESETS:
        raise KeyError(f"unknown model preset {name_or_spec!r}; choose from {sorted(PRESETS)}")
    return PRESETS[key]


def reference_levels(panel: pd.DataFrame) -> dict[str, object]:
    """Omitted dummy categories: most frequent sector (ties alphabetical), earliest year."""
    counts = panel["sector"].value_counts()
    top = counts.max()
    sector_ref = sorted(s for s, c in counts.items() if c == top)[0]
    return {"sector": sector_ref, "year": int(panel["year"].min())}


@dataclass
class Design:
    X_count: np.ndarray
    X_zero: np.ndarray
    y: np.ndarray
    count_names: list[str]
    zero_names: list[str]
    references: dict = field(default_factory=dict)


def _dummies(values: pd.Series, reference, fmt) -> tuple[list[str], np.ndarray]:
    levels = sorted(set(values) - {reference})
    cols = [fmt(v) for v in levels]
    mat = np.column_stack([(values.to_numpy() == v).astype(np.float64) for v in levels]) \
        if levels else np.zeros((len(values), 0))
    return cols, mat


def build_design(panel: pd.DataFrame, spec: ModelSpec, dependent: str = "P_next") -> Design:
    n = len(panel)
    refs = reference_levels(panel) if n else {}
    count_names = [INTERCEPT] + [DISPLAY_NAMES.get(c, c) for c in spec.count_covariates]
    blocks = [np.ones((n, 1)), panel[list(spec.count_covariates)].to_numpy(dtype=np.float64)]
    if spec.sector_dummies:
        names, mat = _dummies(panel["sector"], refs["sector"], lambda s: f"I_{s}")
        count_names += names
        blocks.append(mat)
    if spec.year_dummies:
        names, mat = _dummies(panel["year"].astype(int), refs["year"], str)
        count_names += names
        blocks.append(mat)
    zero_names = [INTERCEPT] + [DISPLAY_NAMES.get(c, c) for c in spec.zero_covariates]
    X_zero = np.column_stack(
        [np.ones(n), panel[list(spec.zero_covariates)].to_numpy(dtype=np.float64)]
    )
    y = panel[dependent].to_numpy()
    return Design(np.hstack(blocks), X_zero, y, count_names, zero_names, refs)


def zinb_fit(panel: pd.DataFrame, spec, cluster_variable: str = "CORE", **kwargs) -> ZinbFit:
    """Fit one model specification on a (standardized) panel."""
    spec = resolve_spec(spec)
    if cluster_variable not in panel.columns:
        raise KeyError(f"cluster variable {cluster_variable!r} not in panel")
    design = build_design(panel, spec)
    return fit_zinb_arrays(
        design.X_count, design.X_zero, design.y,
        clusters=panel[cluster_variable].to_numpy(),
        count_names=design.count_names, zero_names=design.zero_names,
        cluster_variable=cluster_variable, name=spec.name, **kwargs,
    )
