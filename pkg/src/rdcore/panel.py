"""Firm-window regression panel: network measures at t, patents at t+1."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .centrality import compute_centralities
from .graph import cumulative_snapshot, window_ends, window_snapshot
from .ingest import OTHER_SECTOR, AllianceEvent, FirmRecord, PatentRecord
from .kcore import WEIGHTED, CoreMode, kcore_decompose

PANEL_COLUMNS = (
    "firm", "t", "P_next", "log_pat_pre", "CORE", "DEGREE", "BETWEENNESS_NORM",
    "LOCAL_CLUSTERING", "LOCAL_REACH", "EFF", "sector", "year",
)
STANDARDIZED_COLUMNS = ("CORE", "DEGREE", "BETWEENNESS_NORM", "LOCAL_CLUSTERING", "LOCAL_REACH", "EFF")
NEVER_STANDARDIZE = ("firm", "t", "P_next", "sector", "year")
_DTYPES = {
    "firm": np.int64, "t": np.int64, "P_next": np.int64, "log_pat_pre": np.float64,
    "CORE": np.int64, "DEGREE": np.int64, "BETWEENNESS_NORM": np.float64,
    "LOCAL_CLUSTERING": np.float64, "LOCAL_REACH": np.float64, "EFF": np.float64,
    "sector": object, "year": np.int64,
}


class ZeroVarianceError(ValueError):
    pass


@dataclass(frozen=True)
class PanelConfig:
    window_width: int = 3
    stride: int = 1
    presample: int = 5
    first_window: int | None = None
    last_window: int | None = None
    core_mode: CoreMode = WEIGHTED
    core_network: str = "window"          # or "cumulative"
    weighted_paths: bool = False
    normalized_efficiency: bool = False
    last_outcome_year: int | None = None  # drop rows whose t+1 is beyond patent coverage

    def __post_init__(self):
        if self.window_width < 1 or self.stride < 1 or self.presample < 0:
            raise ValueError("window_width and stride must be >= 1, presample >= 0")
        if self.core_network not in ("window", "cumulative"):
            raise ValueError("core_network must be 'window' or 'cumulative'")


@dataclass
class PanelResult:
    frame: pd.DataFrame
    coverage: dict = field(default_factory=dict)


def _patent_lookup(patents):
    table: dict[int, dict[int, int]] = defaultdict(dict)
    for rec in patents:
        table[rec.firm][rec.year] = table[rec.firm].get(rec.year, 0) + rec.count
    return table


def window_grid(events, config: PanelConfig) -> list[int]:
    years = [ev.year for ev in events]
    if not years:
        return []
    first = config.first_window if config.first_window is not None else min(years)
    last = config.last_window if config.last_window is not None else max(years)
    grid = window_ends(first, last, config.stride)
    if config.last_outcome_year is not None:
        grid = [t for t in grid if t + 1 <= config.last_outcome_year]
    return grid


def build_panel(
    events: list[AllianceEvent],
    patents: list[PatentRecord],
    firms: list[FirmRecord] | dict[int, FirmRecord] = (),
    config: PanelConfig = PanelConfig(),
) -> PanelResult:
    """One row per (firm, window end t) for firms with an alliance in the window.

    Everything on the right-hand side uses alliances and patents dated at or
    before t; ``P_next`` counts patents in year t+1 and ``log_pat_pre`` is
    ``log(1 + patents in [t - presample, t])``.
    """
    events = sorted(events, key=lambda e: (e.year, e.alliance_id))
    sector = {f.canonical_id: f.sector for f in (firms.values() if isinstance(firms, dict) else firms)}
    pats = _patent_lookup(patents)
    rows = []
    for t in window_grid(events, config):
        g = window_snapshot(events, t, config.window_width)
        if g.n_nodes == 0:
            continue
        cent = compute_centralities(g, config.weighted_paths, config.normalized_efficiency)
        if config.core_network == "window":
            core = kcore_decompose(g, config.core_mode).coreness
        else:
            cum = kcore_decompose(cumulative_snapshot(events, t), config.core_mode)
            lookup = dict(zip(cum.node_ids.tolist(), cum.coreness.tolist()))
            core = np.array([lookup[int(f)] for f in g.node_ids])
        for k, firm in enumerate(g.node_ids.tolist()):
            fp = pats.get(firm, {})
            pre = sum(fp.get(y, 0) for y in range(t - config.presample, t + 1))
            rows.append((
                firm, t, fp.get(t + 1, 0), float(np.log1p(pre)), int(core[k]),
                int(cent.degree[k]), float(cent.betweenness_norm[k]),
                float(cent.local_clustering[k]), float(cent.local_reach[k]),
                float(cent.local_efficiency[k]), sector.get(firm, OTHER_SECTOR), t,
            ))
    frame = pd.DataFrame(rows, columns=list(PANEL_COLUMNS))
    frame = frame.astype(_DTYPES)
    in_panel = set(frame["firm"].tolist())
    patenting = {f for f, by_year in pats.items() if any(by_year.values())}
    coverage = {
        "rows": len(frame),
        "firms_in_panel": len(in_panel),
        "windows": sorted(set(frame["t"].tolist())),
        "firms_with_patents_but_no_rows": len(patenting - in_panel),
    }
    return PanelResult(frame, coverage)


@dataclass(frozen=True)
class StandardizationReport:
    mean: dict[str, float]
    sd: dict[str, float]

    def to_dict(self) -> dict:
        return {c: {"mean": self.mean[c], "sd": self.sd[c]} for c in self.mean}


def standardize(panel: pd.DataFrame, columns=STANDARDIZED_COLUMNS) -> tuple[pd.DataFrame, StandardizationReport]:
    """z-score ``columns`` with the sample standard deviation."""
    out = panel.copy()
    means, sds = {}, {}
    for col in columns:
        if col in NEVER_STANDARDIZE:
            raise ValueError(f"column {col!r} is not standardized")
        values = panel[col].to_numpy(dtype=np.float64)
        mu = float(values.mean())
        sd = float(values.std(ddof=1)) if len(values) > 1 else 0.0
        if not sd > 0:
            raise ZeroVarianceError(f"column {col!r} has zero variance")
        out[col] = (values - mu) / sd
        means[col], sds[col] = mu, sd
    return out, StandardizationReport(means, sds)


def summary_stats(panel: pd.DataFrame) -> dict:
    y = panel["P_next"].to_numpy(dtype=np.float64)
    return {
        "n_obs": int(len(y)),
        "zero_fraction": float((y == 0).mean()) if len(y) else float("nan"),
        "mean_P_next": float(y.mean()) if len(y) else float("nan"),
        "sd_P_next": float(y.std(ddof=1)) if len(y) > 1 else float("nan"),
    }


def write_panel(panel: pd.DataFrame, path) -> None:
    panel.to_csv(path, index=False, columns=list(PANEL_COLUMNS), lineterminator="\n")


def read_panel(path) -> pd.DataFrame:
    return pd.read_csv(path, dtype={"sector": str}, float_precision="round_trip")
