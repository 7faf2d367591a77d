import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from gsobs import cli

LATTICE = {"dim": 1, "structure": "periodic_1d", "period": 1.0, "kept": [0.0, 0.5]}

CONFIGS = {
    "seq-analyze": {"sequence": {"family": "power_factorial", "params": {"A": 1, "s": 1}},
                    "P": 20, "t_grid": [1.0, 0.5], "r_grid": [2.0, 3.0]},
    "thickness": {"region": LATTICE, "probe": {"method": "mc", "count": 5, "samples": 2000}},
    "cover": {"density": {"kind": "constant", "params": {"m": 1.0}}, "domain": {"lo": [0], "hi": [10]}},
    "classify-balls": {"expansion": {"d": 1, "N": 6}, "domain": {"lo": [-3], "hi": [3]},
                       "N_seq": {"kind": "gevrey", "params": {"A": 2, "nu": 1, "mu": 1}}, "P": 3},
    "constants": {"constants": [{"name": "shubin", "m": 1, "k": 2, "s": 1},
                                {"name": "specific_up", "params": {"mu": 0.5, "nu": 0.5}, "eps": 0.5},
                                {"name": "lebeau_robbiano", "T": 1, "q": 0.9, "r1": 0.25, "s": 0.5},
                                {"name": "general_up", "N_seq": {"kind": "constant"}, "eps": 1.0}]},
    "spectral-constant": {"region": LATTICE, "N_values": [4, 8, 12]},
    "obs-sweep": {"m": 1, "k": 1, "s": 1, "d": 1, "N": 12, "region": LATTICE,
                  "T_grid": [0.25, 0.5, 1.0], "nt": 16},
    "dissipation-fit": {"N": 12},
}


def run(tmp_path: Path, command: str, config, out="out", seed=None):
    cfg_path = tmp_path / f"{command}-{out}.json"
    cfg_path.write_text(config if isinstance(config, str) else json.dumps(config))
    argv = [command, "--config", str(cfg_path), "--out", str(tmp_path / out)]
    if seed is not None:
        argv += ["--seed", str(seed)]
    return cli.run(argv), tmp_path / out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def snapshot(directory: Path) -> dict:
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())}


@pytest.mark.parametrize("command", sorted(CONFIGS))
def test_every_subcommand_runs_and_is_deterministic(tmp_path, command):
    code, out1 = run(tmp_path, command, CONFIGS[command], "a", seed=5)
    assert code == 0
    code, out2 = run(tmp_path, command, CONFIGS[command], "b", seed=5)
    assert code == 0
    assert snapshot(out1) == snapshot(out2)
    meta = json.loads((out1 / "run.json").read_text())
    assert meta["seed"] == 5 and meta["config"]["seed"] == 5


@pytest.mark.parametrize("command", sorted(CONFIGS))
def test_emitted_config_reruns_identically(tmp_path, command):
    code, out1 = run(tmp_path, command, CONFIGS[command], "a", seed=9)
    assert code == 0
    emitted = json.loads((out1 / "run.json").read_text())["config"]
    code, out2 = run(tmp_path, command, emitted, "b")
    assert code == 0
    assert snapshot(out1) == snapshot(out2)


def test_seq_analyze_examples(tmp_path):
    cfg = {"sequence": {"family": "power_factorial", "params": {"A": 1, "s": 1}}, "t_grid": [1], "r_grid": [2]}
    code, out = run(tmp_path, "seq-analyze", cfg, "fact")
    assert code == 0 and read_csv(out / "bang.csv")[0]["bang"] == "3"
    cfg = {"sequence": {"family": "constant"}, "t_grid": [1], "r_grid": [3.5]}
    code, out = run(tmp_path, "seq-analyze", cfg, "one")
    assert read_csv(out / "bang.csv")[0]["bang"] == "3"
    cfg = {"sequence": {"family": "power_factorial", "params": {"s": 2}}, "t_grid": [1], "r_grid": [2]}
    code, out = run(tmp_path, "seq-analyze", cfg, "sq")
    assert read_csv(out / "bang.csv")[0]["bang"] == "INF"


def test_seq_analyze_weight(tmp_path):
    cfg = {"weight": {"kind": "bertrand", "params": {"k": 1, "s": 1}}, "s": 1, "P": 30}
    code, out = run(tmp_path, "seq-analyze", cfg)
    rep = json.loads((out / "qa_report.json").read_text())["qa_report"]
    assert code == 0 and rep["verdict"] == "quasi_analytic" and rep["h2_status"] == "certified"


@pytest.mark.parametrize("structure,expected", [("all_space", 1.0), ("empty", 0.0)])
def test_thickness_trivial(tmp_path, structure, expected):
    code, out = run(tmp_path, "thickness", {"region": {"dim": 1, "structure": structure}})
    assert code == 0
    assert json.loads((out / "thickness.json").read_text())["gamma_hat"] == expected


def test_thickness_lattice(tmp_path):
    code, out = run(tmp_path, "thickness", {"region": LATTICE, "probe": {"method": "mc"}})
    summary = json.loads((out / "thickness.json").read_text())
    assert abs(summary["gamma_hat"] - 0.5) <= 0.02 and summary["std_error"] > 0
    assert list(read_csv(out / "thickness.csv")[0]) == ["x1", "ratio", "std_error"]


def test_obs_sweep_columns_and_margins(tmp_path):
    cfg = dict(CONFIGS["obs-sweep"], region={"dim": 1, "structure": "all_space"})
    code, out = run(tmp_path, "obs-sweep", cfg)
    assert code == 0
    rows = read_csv(out / "sweep.csv")
    assert list(rows[0]) == ["T", "N", "nt", "C_T_empirical", "C_T_stability_delta",
                             "log_bound_fitted", "K_fitted", "margin"]
    assert all(float(r["margin"]) >= 0 for r in rows)
    summary = json.loads((out / "sweep.json").read_text())
    assert "K" in summary["fitted_constants"] and summary["citations"]


def test_floats_have_17_digits(tmp_path):
    code, out = run(tmp_path, "obs-sweep", CONFIGS["obs-sweep"])
    row = read_csv(out / "sweep.csv")[0]
    assert float(row["C_T_empirical"]).hex() == float(f"{float(row['C_T_empirical']):.17g}").hex()
    assert len(row["C_T_empirical"].replace(".", "").lstrip("0")) >= 15


def test_exit_2_dimension_mismatch(tmp_path):
    cfg = dict(CONFIGS["obs-sweep"], d=2)
    code, out = run(tmp_path, "obs-sweep", cfg)
    assert code == 2
    err = json.loads((out / "error.json").read_text())
    assert err["exit_code"] == 2 and err["error"] == "DomainError"


@pytest.mark.parametrize("text", ["{not json", "[1, 2]", json.dumps({"sequence": {"family": "nope"}})])
def test_exit_2_malformed_config(tmp_path, text):
    code, out = run(tmp_path, "seq-analyze", text)
    assert code == 2 and (out / "error.json").exists()


def test_exit_2_missing_key(tmp_path):
    code, _ = run(tmp_path, "obs-sweep", {"m": 1})
    assert code == 2


def test_exit_3_singular_gramian(tmp_path):
    cfg = dict(CONFIGS["obs-sweep"], region={"dim": 1, "structure": "empty"})
    code, out = run(tmp_path, "obs-sweep", cfg)
    assert code == 3
    assert json.loads((out / "error.json").read_text())["error"] == "SingularGramianError"


def test_exit_4_truncation_unreliable(tmp_path):
    cfg = {"region": {"dim": 1, "structure": "box_union", "boxes": [[[10.0], [11.0]]]}, "N_values": [2]}
    code, _ = run(tmp_path, "spectral-constant", cfg)
    assert code == 4


def test_exit_5_internal(tmp_path, monkeypatch):
    def boom(cfg, out, seed):
        raise RuntimeError("unexpected")
    monkeypatch.setitem(cli.COMMANDS, "cover", boom)
    code, out = run(tmp_path, "cover", CONFIGS["cover"])
    assert code == 5
    assert json.loads((out / "error.json").read_text())["exit_code"] == 5


def test_cover_overlap_violation_is_reported(tmp_path):
    code, out = run(tmp_path, "cover", CONFIGS["cover"])
    summary = json.loads((out / "cover.json").read_text())
    assert code == 0 and summary["coverage_fraction"] == 1.0 and summary["max_multiplicity"] <= 5


def test_module_entry_point(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(CONFIGS["constants"]))
    proc = subprocess.run([sys.executable, "-m", "gsobs", "constants", "--config", str(cfg),
                           "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "o" / "constants.json").exists()
