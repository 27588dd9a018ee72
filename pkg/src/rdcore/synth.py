"""Synthetic alliance / firm / patent tables with a planted coreness effect.

The alliance stream grows year by year.  A small set of core firms ally with
each other repeatedly, everyone else attaches preferentially, so the window
networks have a clear core-periphery layout.  Patents are then drawn
sequentially from a zero-inflated negative binomial whose count mean depends
on the previous patent stock and, for firms active in the window ending the
year before, on their standardized window coreness.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy import special

from .graph import window_ends, window_snapshot
from .ingest import AllianceEvent
from .kcore import CoreMode, kcore_decompose

# one representative SIC code per sector label, plus two "other" codes
SIC_CODES = (2834, 2821, 2911, 3571, 3651, 3663, 3714, 3721, 3823, 3841, 7372, 8731)
SUFFIXES = ("Inc", "Inc.", "Ltd", "Corp", "Co", "")


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    n_firms: int = 4000
    first_year: int = 1990
    last_year: int = 2005
    alliances_first_year: int = 300
    growth: float = 1.06
    core_fraction: float = 0.06
    core_partner_prob: float = 0.3
    consortium_prob: float = 0.12
    pa_exponent: float = 0.5
    window_width: int = 3
    alpha: float = 1.0
    beta: float = 1.0
    presample: int = 5
    core_effect: float = -0.1
    count_intercept: float = 0.0
    count_presample: float = 0.6
    zero_intercept: float = 0.5
    zero_presample: float = -1.0
    log_theta: float = 1.2

    def to_dict(self) -> dict:
        return asdict(self)


def _firm_name(i: int, rng) -> str:
    suffix = SUFFIXES[rng.integers(len(SUFFIXES))]
    return f"Firm {i:04d} {suffix}".strip()


def generate_alliances(config: SynthConfig, rng) -> list[AllianceEvent]:
    n = config.n_firms
    n_core = max(3, int(round(config.core_fraction * n)))
    activity = rng.lognormal(0.0, 0.6, size=n)
    activity[:n_core] *= 4.0
    entry = rng.integers(config.first_year, config.last_year + 1, size=n)
    entry[:n_core] = config.first_year
    degree = np.zeros(n)
    events = []
    aid = 0
    for k, year in enumerate(range(config.first_year, config.last_year + 1)):
        active = np.flatnonzero(entry <= year)
        core_active = active[active < n_core]
        n_alliances = int(round(config.alliances_first_year * config.growth ** k))
        for _ in range(n_alliances):
            size = 2
            if rng.random() < config.consortium_prob:
                size = int(rng.integers(3, 5))
            w = activity[active] * (1.0 + degree[active]) ** config.pa_exponent
            first = int(rng.choice(active, p=w / w.sum()))
            members = {first}
            while len(members) < size:
                if rng.random() < config.core_partner_prob and len(core_active) > 1:
                    pool = core_active
                    pw = activity[pool]
                else:
                    pool = active
                    pw = activity[pool] * (1.0 + degree[pool]) ** config.pa_exponent
                members.add(int(rng.choice(pool, p=pw / pw.sum())))
            for m in members:
                degree[m] += size - 1
            aid += 1
            events.append(AllianceEvent(aid, year, frozenset(members)))
    return events


def window_coreness(events, config: SynthConfig) -> dict[int, dict[int, int]]:
    """{window end t: {firm: coreness}} on the same grid the panel uses."""
    mode = CoreMode(weighted=True, alpha=config.alpha, beta=config.beta)
    out = {}
    for t in window_ends(config.first_year, config.last_year):
        g = window_snapshot(events, t, config.window_width)
        if g.n_nodes:
            a = kcore_decompose(g, mode)
            out[t] = dict(zip(a.node_ids.tolist(), a.coreness.tolist()))
    return out


def generate_patents(config: SynthConfig, core_by_window, rng) -> tuple[np.ndarray, dict]:
    """Patent counts, shape ``(n_firms, n_years)`` covering presample..last_year+1."""
    pooled = np.array([c for by_firm in core_by_window.values() for c in by_firm.values()],
                      dtype=np.float64)
    core_mean = float(pooled.mean()) if len(pooled) else 0.0
    core_sd = float(pooled.std(ddof=1)) if len(pooled) > 1 else 1.0
    core_sd = core_sd if core_sd > 0 else 1.0
    y0 = config.first_year - config.presample
    years = list(range(y0, config.last_year + 2))
    n = config.n_firms
    theta = float(np.exp(config.log_theta))
    counts = np.zeros((n, len(years)), dtype=np.int64)
    for col, year in enumerate(years):
        lo = max(0, col - 1 - config.presample)
        pre = counts[:, lo:col].sum(axis=1) if col > 0 else np.zeros(n)
        lp = np.log1p(pre)
        eta = config.count_intercept + config.count_presample * lp
        window = core_by_window.get(year - 1, {})
        if window:
            firms = np.fromiter(window.keys(), dtype=np.int64)
            z = (np.fromiter(window.values(), dtype=np.float64) - core_mean) / core_sd
            eta[firms] += config.core_effect * z
        pi = special.expit(config.zero_intercept + config.zero_presample * lp)
        structural = rng.random(n) < pi
        lam = rng.gamma(theta, np.exp(eta) / theta)
        draw = rng.poisson(lam)
        draw[structural] = 0
        counts[:, col] = draw
    return counts, {"core_mean": core_mean, "core_sd": core_sd, "years": [years[0], years[-1]]}


def synthesize(config: SynthConfig, out_dir) -> dict:
    """Write alliances.csv, firms.csv, patents.csv and truth.json into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(config.seed)
    names = [_firm_name(i, rng) for i in range(config.n_firms)]
    sics = rng.choice(SIC_CODES, size=config.n_firms)
    events = generate_alliances(config, rng)
    core = window_coreness(events, config)
    counts, stats = generate_patents(config, core, rng)

    with open(out / "firms.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["firm_name", "sic_code"])
        for name, sic in zip(names, sics):
            w.writerow([name, int(sic)])
    with open(out / "alliances.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["alliance_id", "year", "participants"])
        for ev in events:
            month, day = rng.integers(1, 13), rng.integers(1, 29)
            # alternate spellings exercise name normalization
            parts = [names[m].upper() if rng.random() < 0.2 else names[m]
                     for m in sorted(ev.participants)]
            w.writerow([ev.alliance_id, f"{ev.year}-{month:02d}-{day:02d}", ";".join(parts)])
    y0 = stats["years"][0]
    with open(out / "patents.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["firm_name", "year", "patent_count"])
        for i in range(config.n_firms):
            for col in np.flatnonzero(counts[i]):
                w.writerow([names[i], y0 + int(col), int(counts[i, col])])
    truth = {"config": config.to_dict(), **stats, "n_alliances": len(events)}
    (out / "truth.json").write_text(json.dumps(truth, indent=2, sort_keys=True) + "\n")
    return truth
