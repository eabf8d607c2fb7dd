import csv
import json
import subprocess
import sys

from geonet.cli import main


def write_config(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


def sweep_payload(**overrides):
    payload = {
        "domain": {"dimension": 2, "side": 10.0},
        "models": [
            {"model": "rayleigh", "beta": 1.0, "eta": 2.0},
            {"model": "rayleigh", "beta": 1.0, "eta": "inf"},
        ],
        "densities": [1.0, 2.0],
        "k_max": 2,
        "trials": 120,
        "master_seed": 7,
        "observables": ["fc", "md", "edge_fc", "delta", "mean_degree", "isolated_pair"],
    }
    payload.update(overrides)
    return payload


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_simulate_minimal_config(tmp_path):
    cfg = write_config(
        tmp_path / "c.json",
        sweep_payload(models=[{"model": "disk", "r0": 1.0}], densities=[1.0], k_max=1, trials=100),
    )
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "out")]) == 0
    rows = read_rows(tmp_path / "out" / "sweep.csv")
    assert len(rows) == 1
    assert rows[0]["trials"] == "100"
    assert (tmp_path / "out" / "manifest.json").exists()


def test_simulate_grid_row_count_arithmetic(tmp_path):
    # 2 models x 29 densities x 4 k-rows
    densities = [1.0 + 0.25 * i for i in range(29)]
    cfg = write_config(
        tmp_path / "c.json",
        sweep_payload(densities=densities, k_max=4, trials=2, observables=["fc", "md"]),
    )
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "out")]) == 0
    rows = read_rows(tmp_path / "out" / "sweep.csv")
    assert len(rows) == 2 * 29 * 4


def test_simulate_rerun_is_byte_identical(tmp_path):
    cfg = write_config(tmp_path / "c.json", sweep_payload(trials=150))
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "sweep.csv").read_bytes() == (tmp_path / "b" / "sweep.csv").read_bytes()
    assert (tmp_path / "a" / "sweep.json").read_bytes() == (tmp_path / "b" / "sweep.json").read_bytes()
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert set(manifest["outputs"]) == {"sweep.csv", "sweep.json"}


def test_simulate_parallelism_flag_and_env_agree(tmp_path, monkeypatch):
    cfg = write_config(tmp_path / "c.json", sweep_payload(trials=150))
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "a"), "--parallelism", "1"]) == 0
    monkeypatch.setenv("GEONET_PARALLELISM", "2")
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "sweep.csv").read_bytes() == (tmp_path / "b" / "sweep.csv").read_bytes()


def test_simulate_trials_and_seed_overrides(tmp_path):
    cfg = write_config(tmp_path / "c.json", sweep_payload())
    out = tmp_path / "out"
    assert main(["simulate", "--config", cfg, "--out", str(out), "--trials", "110", "--seed", "123"]) == 0
    rows = read_rows(out / "sweep.csv")
    assert rows[0]["trials"] == "110"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["master_seed"] == 123


def test_config_errors_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"domain": {"dimension": 2, "side": 10.0}, "models": [], "densities": [1.0]}))
    assert main(["simulate", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    missing = tmp_path / "missing.json"
    assert main(["simulate", "--config", str(missing), "--out", str(tmp_path / "o")]) == 2
    tiny = tmp_path / "tiny.json"
    tiny.write_text(json.dumps(sweep_payload(densities=[1e-9])))
    assert main(["simulate", "--config", str(tiny), "--out", str(tmp_path / "o")]) == 2


def test_resource_abort_exits_3(tmp_path):
    cfg = write_config(tmp_path / "big.json", sweep_payload(densities=[600.0]))
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == 3


def test_analytic_curves_and_minimum(tmp_path):
    etas = [1.5 + 0.25 * i for i in range(75)]
    payload = {
        "formula": "mean_degree",
        "domain": {"dimension": 2, "side": 10.0},
        "models": [{"model": "rayleigh", "beta": 1.0, "eta": e} for e in etas],
        "densities": [1.0],
    }
    cfg = write_config(tmp_path / "a.json", payload)
    assert main(["analytic", "--config", cfg, "--out", str(tmp_path / "out")]) == 0
    rows = read_rows(tmp_path / "out" / "analytic.csv")
    assert len(rows) == len(etas)
    values = [(float(r["eta"]), float(r["value"])) for r in rows]
    eta_min = min(values, key=lambda t: t[1])[0]
    assert abs(eta_min - 4.33) <= 0.25  # grid resolution


def test_analytic_pi1_curves_decreasing(tmp_path):
    payload = {
        "formula": "pi1",
        "domain": {"dimension": 2, "side": 10.0},
        "models": [
            {"model": "rayleigh", "beta": 1.0, "eta": 2.0},
            {"model": "rayleigh", "beta": 1.0, "eta": 4.0},
            {"model": "rayleigh", "beta": 1.0, "eta": 6.0},
            {"model": "rayleigh", "beta": 1.0, "eta": "inf"},
        ],
        "densities": [1.0 + 0.5 * i for i in range(15)],
    }
    cfg = write_config(tmp_path / "a.json", payload)
    assert main(["analytic", "--config", cfg, "--out", str(tmp_path / "out")]) == 0
    rows = read_rows(tmp_path / "out" / "analytic.csv")
    assert len(rows) == 60
    by_eta = {}
    for r in rows:
        by_eta.setdefault(r["eta"], []).append((float(r["rho"]), float(r["value"])))
    for eta, pts in by_eta.items():
        vals = [v for _, v in sorted(pts)]
        assert all(b < a for a, b in zip(vals, vals[1:])), eta
    # low-density rows are flagged out of range rather than clamped
    assert any(r["out_of_range"] == "true" for r in rows)


def test_analytic_unknown_formula_exit_2(tmp_path):
    payload = {
        "formula": "nope",
        "domain": {"dimension": 2, "side": 10.0},
        "models": [{"model": "disk", "r0": 1.0}],
        "densities": [1.0],
    }
    cfg = write_config(tmp_path / "a.json", payload)
    assert main(["analytic", "--config", cfg, "--out", str(tmp_path / "out")]) == 2


def test_analytic_empty_grid_exit_2(tmp_path):
    payload = {
        "formula": "pi1",
        "domain": {"dimension": 2, "side": 10.0},
        "models": [{"model": "rayleigh", "beta": 1.0, "eta": 2.0}],
        "densities": [],
    }
    cfg = write_config(tmp_path / "a.json", payload)
    assert main(["analytic", "--config", cfg, "--out", str(tmp_path / "out")]) == 2


def test_compare_flow_and_self_comparison(tmp_path):
    sim_cfg = write_config(
        tmp_path / "sim.json",
        sweep_payload(models=[{"model": "disk", "r0": 1.0}], densities=[4.0, 6.0], k_max=1, trials=400),
    )
    assert main(["simulate", "--config", sim_cfg, "--out", str(tmp_path / "sim")]) == 0
    ana_payload = {
        "formula": "p_md",
        "domain": {"dimension": 2, "side": 10.0},
        "models": [{"model": "rayleigh", "beta": 1.0, "eta": "inf"}],
        "densities": [4.0, 6.0],
        "k": 1,
    }
    ana_cfg = write_config(tmp_path / "ana.json", ana_payload)
    assert main(["analytic", "--config", ana_cfg, "--out", str(tmp_path / "ana")]) == 0
    assert (
        main(
            [
                "compare",
                "--sim", str(tmp_path / "sim" / "sweep.csv"),
                "--analytic", str(tmp_path / "ana" / "analytic.csv"),
                "--out", str(tmp_path / "cmp"),
            ]
        )
        == 0
    )
    summary = json.loads((tmp_path / "cmp" / "compare.json").read_text())["summary"]
    assert summary["points"] == 2
    rows = read_rows(tmp_path / "cmp" / "compare.csv")
    assert {r["covered"] for r in rows} <= {"true", "false"}
    # analytic against itself covers everything with zero residual
    assert (
        main(
            [
                "compare",
                "--sim", str(tmp_path / "ana" / "analytic.csv"),
                "--analytic", str(tmp_path / "ana" / "analytic.csv"),
                "--out", str(tmp_path / "cmpself"),
            ]
        )
        == 0
    )
    self_summary = json.loads((tmp_path / "cmpself" / "compare.json").read_text())["summary"]
    assert self_summary["coverage"] == 1.0


def test_compare_grid_mismatch_exit_2(tmp_path):
    sim_cfg = write_config(
        tmp_path / "sim.json",
        sweep_payload(models=[{"model": "disk", "r0": 1.0}], densities=[4.0], k_max=1, trials=150),
    )
    assert main(["simulate", "--config", sim_cfg, "--out", str(tmp_path / "sim")]) == 0
    ana_payload = {
        "formula": "p_md",
        "domain": {"dimension": 2, "side": 10.0},
        "models": [{"model": "rayleigh", "beta": 1.0, "eta": "inf"}],
        "densities": [5.0],
    }
    ana_cfg = write_config(tmp_path / "ana.json", ana_payload)
    assert main(["analytic", "--config", ana_cfg, "--out", str(tmp_path / "ana")]) == 0
    assert (
        main(
            [
                "compare",
                "--sim", str(tmp_path / "sim" / "sweep.csv"),
                "--analytic", str(tmp_path / "ana" / "analytic.csv"),
                "--out", str(tmp_path / "cmp"),
            ]
        )
        == 2
    )


def test_render_sample(tmp_path):
    cfg = write_config(
        tmp_path / "r.json",
        sweep_payload(
            models=[{"model": "rayleigh", "beta": 1.0, "eta": 2.0}],
            densities=[1.5],
            master_seed=42,
        ),
    )
    out = tmp_path / "out"
    assert main(["render-sample", "--config", cfg, "--out", str(out)]) == 0
    rows = read_rows(out / "positions.csv")
    assert len(rows) == 150
    components = sorted({int(r["component"]) for r in rows})
    assert components[0] == 0
    assert components == list(range(len(components)))
    edges = (out / "edges.txt").read_text().splitlines()
    assert all(len(line.split()) == 2 for line in edges)


def test_render_sample_positions_independent_of_model(tmp_path):
    base = sweep_payload(densities=[1.5], master_seed=42)
    soft = write_config(tmp_path / "soft.json", dict(base, models=[{"model": "rayleigh", "beta": 1.0, "eta": 2.0}]))
    hard = write_config(tmp_path / "hard.json", dict(base, models=[{"model": "rayleigh", "beta": 1.0, "eta": "inf"}]))
    assert main(["render-sample", "--config", soft, "--out", str(tmp_path / "a")]) == 0
    assert main(["render-sample", "--config", hard, "--out", str(tmp_path / "b")]) == 0
    rows_a = read_rows(tmp_path / "a" / "positions.csv")
    rows_b = read_rows(tmp_path / "b" / "positions.csv")
    for ra, rb in zip(rows_a, rows_b):
        assert (ra["x"], ra["y"]) == (rb["x"], rb["y"])


def test_render_sample_single_node(tmp_path):
    cfg = write_config(
        tmp_path / "r.json",
        {
            "domain": {"dimension": 2, "side": 1.0},
            "models": [{"model": "disk", "r0": 0.1}],
            "densities": [1.0],
            "master_seed": 1,
        },
    )
    out = tmp_path / "out"
    assert main(["render-sample", "--config", cfg, "--out", str(out)]) == 0
    rows = read_rows(out / "positions.csv")
    assert len(rows) == 1
    assert rows[0]["component"] == "0"
    assert (out / "edges.txt").read_text() == ""


def test_render_sample_3d_has_z_column(tmp_path):
    cfg = write_config(
        tmp_path / "r.json",
        {
            "domain": {"dimension": 3, "side": 5.0},
            "models": [{"model": "disk", "r0": 1.0}],
            "densities": [0.2],
            "master_seed": 3,
        },
    )
    out = tmp_path / "out"
    assert main(["render-sample", "--config", cfg, "--out", str(out)]) == 0
    rows = read_rows(out / "positions.csv")
    assert len(rows) == 25
    assert set(rows[0]) == {"id", "x", "y", "z", "component"}


def test_render_sample_rejects_multi_cell(tmp_path):
    cfg = write_config(tmp_path / "r.json", sweep_payload())
    assert main(["render-sample", "--config", cfg, "--out", str(tmp_path / "out")]) == 2


def test_module_entrypoint_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "geonet.cli", "--version"], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert "geonet" in proc.stdout
