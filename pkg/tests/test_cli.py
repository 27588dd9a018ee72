import csv
import hashlib
import json
from pathlib import Path

import pandas as pd
import pytest

from rdcore.cli import EXIT_INPUT, EXIT_NUMERIC, EXIT_OK, main
from rdcore.config import ConfigError, RunConfig
from rdcore.econometrics import reference_levels
from rdcore.graph import window_snapshot
from rdcore.ingest import load_events
from rdcore.kcore import kcore_decompose
from rdcore.synth import SynthConfig, synthesize

TOY = Path(__file__).parent / "data" / "toy"
GOLDEN = json.loads((TOY / "golden_sha256.json").read_text())


def toy_args(out):
    return ["--alliances", str(TOY / "alliances.csv"), "--firms", str(TOY / "firms.csv"),
            "--patents", str(TOY / "patents.csv"), "--out", str(out)]


def digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def toy_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("toy")
    codes = [main(["build", *toy_args(out)]), main(["panel", *toy_args(out)]),
             main(["fit", "--out", str(out)])]
    return out, codes


def test_toy_pipeline_exit_codes(toy_run):
    _, codes = toy_run
    assert codes == [EXIT_OK, EXIT_OK, EXIT_OK]


def test_toy_golden_hashes(toy_run):
    out, _ = toy_run
    for name, expected in GOLDEN.items():
        assert digest(out / name) == expected, name


def test_toy_hand_audited_values(toy_run):
    out, _ = toy_run
    summary = json.loads((out / "build_summary.json").read_text())
    assert summary["final"] == {"n_nodes": 21, "n_edges": 41, "k_s_max": 4, "coreness_classes": 4}
    assert (out / "coreness_histogram.csv").read_text() == "coreness,count\n0,7\n1,3\n2,5\n3,6\n"
    edges = pd.read_csv(out / "edges.csv")
    assert edges.weight.sum() == 56
    # one panel row per firm present in each rolling window
    res = load_events(TOY / "alliances.csv", TOY / "firms.csv")
    expected = sum(window_snapshot(res.events, t, 3).n_nodes for t in range(1995, 2002))
    panel = pd.read_csv(out / "panel.csv")
    assert len(panel) == expected == 93
    assert not panel.duplicated(["firm", "t"]).any()


def test_toy_fit_outputs(toy_run):
    out, _ = toy_run
    refs = reference_levels(pd.read_csv(out / "panel.csv"))
    for m in ("Model1", "Model2", "Model3", "Model4", "Model5"):
        report = (out / f"fit_{m}.txt").read_text()
        assert "Zero model: log(PAT + 1)" in report
        assert f"I_{refs['sector']}" not in report
        assert f"\n{refs['year']} " not in report
    report = (out / "fit_Model3.txt").read_text()
    assert "I_chemicals" in report and "1996" in report and "CORE" in report
    vuong = pd.read_csv(out / "vuong.csv")
    assert set(zip(vuong.model_a, vuong.model_b)) == {
        ("Model3", "Model2"), ("Model4", "Model2"), ("Model3", "Model4")}
    status = json.loads((out / "fit_status.json").read_text())
    assert status["fitted"] == ["Model1", "Model2", "Model3", "Model4", "Model5"]
    cfg = json.loads((out / "run_config.json").read_text())
    assert cfg["cluster"] == "CORE" and cfg["window_width"] == 3


def test_rerun_is_byte_identical(toy_run):
    out, _ = toy_run
    before = {p.name: digest(p) for p in out.iterdir()}
    assert main(["build", *toy_args(out)]) == EXIT_OK
    assert main(["panel", *toy_args(out)]) == EXIT_OK
    assert main(["fit", "--out", str(out)]) == EXIT_OK
    assert {p.name: digest(p) for p in out.iterdir()} == before


def test_empty_alliance_file(tmp_path, capsys):
    (tmp_path / "a.csv").write_text("alliance_id,year,participants\n")
    code = main(["build", "--alliances", str(tmp_path / "a.csv"),
                 "--firms", str(TOY / "firms.csv"), "--out", str(tmp_path / "o")])
    assert code == EXIT_INPUT
    assert "no events" in capsys.readouterr().err


def test_missing_inputs(tmp_path):
    assert main(["build", "--out", str(tmp_path)]) == EXIT_INPUT
    assert main(["fit", "--out", str(tmp_path)]) == EXIT_INPUT
    assert main(["build", "--alliances", str(tmp_path / "nope.csv"), "--firms",
                 str(TOY / "firms.csv"), "--out", str(tmp_path)]) == EXIT_INPUT


def test_bad_config_values(tmp_path):
    assert main(["panel", *toy_args(tmp_path), "--window-width", "0"]) == EXIT_INPUT
    with pytest.raises(ConfigError):
        RunConfig(models=("Model7",)).validate()
    with pytest.raises(ConfigError, match="unknown config keys"):
        RunConfig().merged({"colour": 1})


def test_config_file(tmp_path):
    cfg = {"alliances": str(TOY / "alliances.csv"), "firms": str(TOY / "firms.csv"),
           "patents": str(TOY / "patents.csv"), "window_width": 1, "out_dir": str(tmp_path / "w1")}
    (tmp_path / "run.json").write_text(json.dumps(cfg))
    assert main(["panel", "--config", str(tmp_path / "run.json")]) == EXIT_OK
    dumped = json.loads((tmp_path / "w1" / "run_config.json").read_text())
    assert dumped["window_width"] == 1
    # flags override the file
    assert main(["panel", "--config", str(tmp_path / "run.json"), "--window-width", "3",
                 "--out", str(tmp_path / "w3")]) == EXIT_OK
    narrow = pd.read_csv(tmp_path / "w1" / "panel.csv")
    wide = pd.read_csv(tmp_path / "w3" / "panel.csv")
    assert set(zip(narrow.firm, narrow.t)) < set(zip(wide.firm, wide.t))
    # shared rows share everything that does not depend on the window network
    merged = narrow.merge(wide, on=["firm", "t"], suffixes=("_1", "_3"))
    for col in ("P_next", "log_pat_pre", "sector", "year"):
        assert (merged[f"{col}_1"] == merged[f"{col}_3"]).all()


def test_fit_subset_and_cluster(tmp_path, toy_run):
    out, _ = toy_run
    code = main(["fit", "--panel", str(out / "panel.csv"), "--out", str(tmp_path),
                 "--models", "Model5", "--cluster", "firm"])
    assert code == EXIT_OK
    fit = json.loads((tmp_path / "fit_Model5.json").read_text())
    assert fit["cluster_variable"] == "firm" and fit["n_clusters"] == 21
    assert not (tmp_path / "vuong.csv").exists()
    assert main(["fit", "--panel", str(out / "panel.csv"), "--out", str(tmp_path),
                 "--cluster", "nope"]) == EXIT_INPUT


def test_fit_numerical_failure_exit(tmp_path, toy_run):
    out, _ = toy_run
    panel = pd.read_csv(out / "panel.csv")
    panel["P_next"] = 0
    panel.to_csv(tmp_path / "zero.csv", index=False)
    code = main(["fit", "--panel", str(tmp_path / "zero.csv"), "--out", str(tmp_path),
                 "--models", "Model5"])
    assert code == EXIT_NUMERIC
    status = json.loads((tmp_path / "fit_status.json").read_text())
    assert "every outcome is zero" in status["failures"][0]


def test_synth_command(tmp_path):
    args = ["synth", "--out", str(tmp_path / "s"), "--seed", "3", "--n-firms", "150",
            "--first-year", "1995", "--last-year", "1999"]
    assert main(args) == EXIT_OK
    first = {p.name: digest(p) for p in (tmp_path / "s").iterdir()}
    assert main(args) == EXIT_OK
    assert {p.name: digest(p) for p in (tmp_path / "s").iterdir()} == first
    truth = json.loads((tmp_path / "s" / "truth.json").read_text())
    assert truth["config"]["n_firms"] == 150 and truth["config"]["seed"] == 3
    with open(tmp_path / "s" / "alliances.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["alliance_id", "year", "participants"]
    assert all(len(r[2].split(";")) >= 2 for r in rows[1:])


def test_synth_plants_core_periphery(tmp_path):
    synthesize(SynthConfig(seed=1, n_firms=400, alliances_first_year=60), tmp_path)
    res = load_events(tmp_path / "alliances.csv", tmp_path / "firms.csv", tmp_path / "patents.csv")
    assert res.report.rejects == []
    assert res.report.merged_names > 0            # spelling variants were merged back
    g = window_snapshot(res.events, 2005, 3)
    a = kcore_decompose(g)
    assert a.coreness_max >= 5
