"""Command-line entry point: ``rdcore {synth,build,panel,fit}``.

Exit codes: 0 success, 1 input error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import centrality, graph, kcore
from .config import ConfigError, RunConfig
from .econometrics import (
    VUONG_PAIRS,
    IdentificationError,
    NonFiniteLikelihood,
    format_comparison,
    format_fit_report,
    format_vuong,
    vuong_test,
    zinb_fit,
)
from .econometrics.report import write_coefficients, write_vuong
from .ingest import IngestError, NormalizationConfig, load_events
from .panel import (
    ZeroVarianceError,
    build_panel,
    read_panel,
    standardize,
    summary_stats,
    write_panel,
)
from .synth import SynthConfig, synthesize

log = logging.getLogger("rdcore")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2


class InputError(Exception):
    pass


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _out_dir(config: RunConfig) -> Path:
    out = Path(config.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _ingest(config: RunConfig):
    if not config.alliances or not config.firms:
        raise InputError("both --alliances and --firms are required")
    rules = NormalizationConfig.from_files(config.suffix_file, config.alias_file)
    result = load_events(
        config.alliances, config.firms, config.patents, rules,
        year_range=config.year_range, max_error_fraction=config.max_error_fraction,
    )
    if not result.events:
        raise InputError(f"no events: {config.alliances} contains no usable alliances")
    return result


def cmd_synth(config: RunConfig) -> int:
    out = _out_dir(config)
    params = {"seed": config.seed, "window_width": config.window_width,
              "alpha": config.alpha, "beta": config.beta, "presample": config.presample}
    params.update(config.synth)
    known = {f.name for f in fields(SynthConfig)}
    unknown = sorted(set(params) - known)
    if unknown:
        raise InputError(f"unknown synth parameters: {unknown}")
    truth = synthesize(SynthConfig(**params), out)
    config.dump(out)
    log.info("wrote %d alliances to %s", truth["n_alliances"], out)
    return EXIT_OK


def _patents_by_coreness(assignment, patents):
    total: dict[int, int] = {}
    for rec in patents:
        total[rec.firm] = total.get(rec.firm, 0) + rec.count
    by_class: dict[int, list[int]] = {}
    for firm, c in zip(assignment.node_ids.tolist(), assignment.coreness.tolist()):
        by_class.setdefault(c, []).append(total.get(firm, 0))
    rows = [(c, len(v), float(np.mean(v)), float(np.median(v))) for c, v in sorted(by_class.items())]
    corr = None
    if len(rows) > 2:
        cs = np.array([r[0] for r in rows], dtype=float)
        means = np.array([r[2] for r in rows])
        if means.std() > 0:
            corr = float(np.corrcoef(cs, means)[0, 1])
    return rows, corr


def cmd_build(config: RunConfig) -> int:
    result = _ingest(config)
    out = _out_dir(config)
    events = result.events
    years = list(range(events[0].year, events[-1].year + 1))
    final_year = years[-1]
    shells, cents, hist_rows = [], [], []
    final_snapshot = final_shells = None
    for year, snap in graph.cumulative_series(events, years):
        a = kcore.kcore_decompose(snap, config.core_mode)
        shells.append((year, a))
        hist_rows.append((year, kcore.coreness_distribution(a)))
        if config.centrality_years == "all" or year == final_year:
            cents.append((year, centrality.compute_centralities(
                snap, config.weighted_paths, config.normalized_efficiency)))
        final_snapshot, final_shells = snap, a

    window_shells = []
    for t in graph.window_ends(years[0], final_year, config.stride):
        snap = graph.window_snapshot(events, t, config.window_width)
        if snap.n_nodes:
            window_shells.append((t, kcore.kcore_decompose(snap, config.core_mode)))

    kcore.write_shells(out / "coreness_trajectories.csv", shells)
    kcore.write_shells(out / "window_coreness.csv", window_shells)
    kcore.write_histogram(out / "coreness_histogram.csv", hist_rows[-1][1])
    with open(out / "coreness_histogram_by_year.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["year", "coreness", "count"])
        for year, hist in hist_rows:
            for c in sorted(hist):
                w.writerow([year, c, hist[c]])
    centrality.write_centralities(out / "centrality.csv", cents)
    graph.write_edge_list(final_snapshot, out / "edges.csv")
    graph.write_node_attributes(final_snapshot, out / "nodes.csv")
    with open(out / "firms_canonical.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["firm", "canonical_name", "sic_code", "sector"])
        for f in result.firms:
            w.writerow([f.canonical_id, f.canonical_name, f.sic_code or "", f.sector])

    summary = {
        "ingest": result.report.to_dict(),
        "years": [years[0], final_year],
        "final": {
            "n_nodes": final_snapshot.n_nodes,
            "n_edges": final_snapshot.n_edges,
            "k_s_max": final_shells.k_s_max,
            "coreness_classes": final_shells.coreness_max + 1,
        },
    }
    if result.patents:
        rows, corr = _patents_by_coreness(final_shells, result.patents)
        with open(out / "patents_by_coreness.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["coreness", "n_firms", "mean_patents", "median_patents"])
            for c, n, mean, med in rows:
                w.writerow([c, n, repr(mean), repr(med)])
        summary["pearson_mean_patents_vs_coreness"] = corr
    _write_json(out / "build_summary.json", summary)
    config.dump(out)
    log.info("build: %d years, final network %d nodes / %d edges",
             len(years), final_snapshot.n_nodes, final_snapshot.n_edges)
    return EXIT_OK


def cmd_panel(config: RunConfig) -> int:
    result = _ingest(config)
    out = _out_dir(config)
    built = build_panel(result.events, result.patents, result.firms, config.panel_config())
    frame = built.frame
    if frame.empty:
        raise InputError("panel is empty: no firm has an alliance in any window")
    _, report = standardize(frame)
    write_panel(frame, out / "panel.csv")
    _write_json(out / "standardization.json", report.to_dict())
    _write_json(out / "panel_summary.json", {**summary_stats(frame), "coverage": built.coverage})
    config.dump(out)
    log.info("panel: %d rows, %d firms", len(frame), built.coverage["firms_in_panel"])
    return EXIT_OK


def cmd_fit(config: RunConfig) -> int:
    out = _out_dir(config)
    panel_path = Path(config.panel) if config.panel else out / "panel.csv"
    if not panel_path.exists():
        raise InputError(f"panel file not found: {panel_path}")
    raw = read_panel(panel_path)
    if config.cluster not in raw.columns:
        raise InputError(f"cluster column {config.cluster!r} not in panel")
    panel, _ = standardize(raw)
    # cluster on raw labels; standardizing does not change the partition
    panel[config.cluster] = raw[config.cluster]
    fits, failures = {}, []
    for name in config.models:
        try:
            fit = zinb_fit(panel, name, cluster_variable=config.cluster)
        except (IdentificationError, NonFiniteLikelihood, np.linalg.LinAlgError) as exc:
            failures.append(f"{name}: {exc}")
            log.error("%s failed: %s", name, exc)
            continue
        fits[name] = fit
        (out / f"fit_{name}.txt").write_text(format_fit_report(fit), encoding="utf-8")
        _write_json(out / f"fit_{name}.json", fit.to_dict())
        if not fit.converged:
            failures.append(f"{name}: did not converge (gradient norm {fit.gradient_norm:.2e})")
    ordered = [fits[m] for m in config.models if m in fits]
    if ordered:
        (out / "models_table.txt").write_text(format_comparison(ordered), encoding="utf-8")
        write_coefficients(out / "coefficients.csv", ordered)
    results = []
    for a, b in VUONG_PAIRS:
        if a in fits and b in fits:
            try:
                results.append(vuong_test(fits[a], fits[b], fits[a].y))
            except ValueError as exc:
                failures.append(f"Vuong {a} vs {b}: {exc}")
    if results:
        write_vuong(out / "vuong.csv", results)
        (out / "vuong.txt").write_text(format_vuong(results), encoding="utf-8")
    _write_json(out / "fit_status.json", {"fitted": list(fits), "failures": failures})
    config.dump(out)
    if failures:
        for f in failures:
            log.error("%s", f)
        return EXIT_NUMERIC
    return EXIT_OK


COMMANDS = {"synth": cmd_synth, "build": cmd_build, "panel": cmd_panel, "fit": cmd_fit}


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rdcore", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with RunConfig fields")
    common.add_argument("--out", dest="out_dir")
    common.add_argument("--seed", type=int)
    common.add_argument("--window-width", type=int)
    common.add_argument("--stride", type=int)
    common.add_argument("--presample", type=int)
    common.add_argument("--alpha", type=float)
    common.add_argument("--beta", type=float)
    inputs = argparse.ArgumentParser(add_help=False)
    inputs.add_argument("--alliances")
    inputs.add_argument("--firms")
    inputs.add_argument("--patents")
    inputs.add_argument("--suffix-file")
    inputs.add_argument("--alias-file")
    inputs.add_argument("--year-start", type=int)
    inputs.add_argument("--year-end", type=int)
    inputs.add_argument("--max-error-fraction", type=float)
    inputs.add_argument("--core-network", choices=("window", "cumulative"))
    inputs.add_argument("--weighted-paths", action="store_true", default=None)
    inputs.add_argument("--normalized-efficiency", action="store_true", default=None)

    p = sub.add_parser("synth", parents=[common], help="write synthetic input tables")
    p.add_argument("--n-firms", type=int)
    p.add_argument("--effect", type=float, help="planted standardized CORE effect")
    p.add_argument("--first-year", type=int)
    p.add_argument("--last-year", type=int)
    p = sub.add_parser("build", parents=[common, inputs], help="networks, shells, centralities")
    p.add_argument("--centrality-years", choices=("all", "final"))
    sub.add_parser("panel", parents=[common, inputs], help="firm-window regression panel")
    p = sub.add_parser("fit", parents=[common], help="ZINB models 1-5 and Vuong tests")
    p.add_argument("--panel")
    p.add_argument("--models", nargs="+")
    p.add_argument("--cluster")
    return parser


def config_from_args(args) -> RunConfig:
    config = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    names = {f.name for f in fields(RunConfig)}
    overrides = {k: v for k, v in vars(args).items() if k in names and v is not None}
    synth = dict(config.synth)
    for flag, key in (("n_firms", "n_firms"), ("effect", "core_effect"),
                      ("first_year", "first_year"), ("last_year", "last_year")):
        if getattr(args, flag, None) is not None:
            synth[key] = getattr(args, flag)
    overrides["synth"] = synth
    return config.merged(overrides).validate()


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = config_from_args(args)
        return COMMANDS[args.command](config)
    except (ConfigError, InputError, IngestError, ZeroVarianceError, FileNotFoundError,
            KeyError) as exc:
        print(f"rdcore {args.command}: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (IdentificationError, NonFiniteLikelihood,
            kcore.KatzConvergenceError, FloatingPointError) as exc:
        print(f"rdcore {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"rdcore {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
