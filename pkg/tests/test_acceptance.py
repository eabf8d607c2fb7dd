"""Acceptance suite: every target criterion runs at its stated tolerance and
prints one PASS/FAIL line.

Two checks are known to fail against their published target values and are
left red on purpose; the accompanying diagnostics quantify why (see
README.md, "Reproduction notes"):

* criterion 3: the boundary-free mean-degree formula overshoots a finite
  10 x 10 box with unit connection range by 8-12%, far beyond the 3%
  target tolerance (the simulator itself matches the exact finite-box
  expectation to Monte Carlo precision).
* criterion 5b/5c: the measured minimum-degree/full-connectivity gap for
  the hard-disk model peaks near 0.27 (target: 0.10 +- 0.03), and the
  corner-pair closed form overestimates the measured gap by a factor of
  1.8-2.7 on densities 5..8, outside any 95% interval at 10^4 trials.

Set GEONET_FULL_ACCEPTANCE=1 to run the full-scale grid of criterion 5
(tens of minutes); the default run uses the sanctioned reduced grid.
"""
import math
import os

import numpy as np
import pytest

from geonet.analytic import (
    AnalyticParams,
    QuadratureSpec,
    argmin_mean_degree,
    m_h,
    mean_degree_disk,
    mean_degree_soft,
    pi1_asymptotic,
    pi1_closed_form,
)
from geonet.channel import Disk, Rayleigh
from geonet.geometry import Domain
from geonet.montecarlo import ExperimentConfig, estimate_mean_degree, run_sweep
from geonet.network import build_graph, build_report
from geonet.runs import run_simulate
from geonet.config import SweepConfig

from test_flows import brute_edge_connectivity, brute_vertex_connectivity, capped

D2 = Domain(2, 10.0)
WORKERS = max(1, min(8, os.cpu_count() or 1))
FULL = os.environ.get("GEONET_FULL_ACCEPTANCE") == "1"


def check(name: str, ok: bool, detail: str = ""):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f": {detail}" if detail else ""))
    assert ok, f"{name}: {detail}"


def eta_label(model):
    return "inf" if isinstance(model, Disk) else f"{model.eta:g}"


# ----------------------------------------------------------------- 1

def test_c1_mean_degree_crossover_identity():
    worst = 0.0
    for d in (2, 3):
        domain = Domain(d, 10.0)
        for beta in (0.5, 1.0, 2.0):
            soft = mean_degree_soft(AnalyticParams(1.0, Rayleigh(beta, float(d)), domain))
            disk = mean_degree_disk(
                AnalyticParams(1.0, Disk(beta ** (-1.0 / d)), domain)
            )
            worst = max(worst, abs(soft - disk) / disk)
    check("criterion 1 (mean-degree crossover identity)", worst < 1e-12, f"worst rel dev {worst:.2e}")


# ----------------------------------------------------------------- 2

def test_c2_mean_degree_minima():
    eta2, _ = argmin_mean_degree(2, 1.0)
    eta3, _ = argmin_mean_degree(3, 1.0)
    ok = abs(eta2 - 4.333) <= 0.05 and abs(eta3 - 6.50) <= 0.05
    check("criterion 2 (mean-degree minima)", ok, f"eta*={eta2:.4f} (2-D), {eta3:.4f} (3-D)")


# ----------------------------------------------------------------- 3

def test_c3_mean_degree_reproduction():
    """KNOWN RED: boundary losses exceed the 3% target at L/r0 = 10."""
    rho_eff = 0.99  # (n-1)/V for n = 100
    lines = []
    all_ok = True
    upper_ok = True
    for eta in (2.0, 3.0, 4.0, 5.0, 6.0, 8.0, None):
        model = Disk(1.0) if eta is None else Rayleigh(1.0, eta)
        mu_hat, se = estimate_mean_degree(
            D2, model, 1.0, trials=1000, master_seed=301, parallelism=WORKERS
        )
        params = AnalyticParams(rho_eff, model, D2)
        mu_an = mean_degree_disk(params) if eta is None else mean_degree_soft(params)
        tol = max(3 * se, 0.03 * mu_an)
        point_ok = abs(mu_hat - mu_an) <= tol
        all_ok &= point_ok
        upper_ok &= mu_hat <= mu_an + se
        lines.append(
            f"eta={eta_label(model):>4}: sim {mu_hat:.4f} (se {se:.4f}) vs analytic {mu_an:.4f}"
            f" | dev {mu_hat - mu_an:+.4f} tol {tol:.4f} {'ok' if point_ok else 'MISS'}"
        )
    print("\n".join(lines))
    check(
        "criterion 3 (mean-degree curve, sim below analytic)",
        upper_ok,
        "simulation never exceeds analytic + 1 SE",
    )
    check(
        "criterion 3 (mean-degree curve within max(3 SE, 3%))",
        all_ok,
        "finite-box boundary deficit is 8-12% at L/r0=10; 3% is unattainable "
        "(simulation matches the exact finite-box expectation, see test_montecarlo)",
    )


# ----------------------------------------------------------------- 4

def test_c4_pi1_limit_consistency():
    worst = 0.0
    for rho in (2.0, 4.0, 8.0):
        closed = pi1_closed_form(AnalyticParams(rho, Rayleigh(1.0, 1e6), D2))
        lead = 32.0 * math.exp(-rho * math.pi / 4.0) / rho**2
        worst = max(worst, abs(closed - lead) / lead)
    check("criterion 4 (closed form -> asymptotic limit)", worst < 1e-4, f"worst rel dev {worst:.2e}")


# ----------------------------------------------------------------- 5

def _delta_sweep(densities, trials, seed):
    config = ExperimentConfig(
        domain=D2,
        models=(Rayleigh(1.0, 2.0), Rayleigh(1.0, 4.0), Rayleigh(1.0, 6.0), Disk(1.0)),
        densities=densities,
        k_max=1,
        trials=trials,
        master_seed=seed,
        observables=frozenset({"fc", "md", "delta", "isolated_pair"}),
    )
    return config, run_sweep(config, parallelism=WORKERS)


@pytest.fixture(scope="module")
def reduced_delta_sweep():
    return _delta_sweep((2.0, 3.0, 5.0, 7.0), 3000, 501)


def test_c5a_reduced_delta_nonnegative(reduced_delta_sweep):
    config, sweep = reduced_delta_sweep
    ok = all(
        cell.md_count[0] >= cell.fc_count[0] and cell.delta(1) >= 0.0
        for cell in sweep.cells
    )
    check("criterion 5a (delta(1) >= 0 in every cell, count level)", ok)


def test_c5b_reduced_disk_peak(reduced_delta_sweep):
    """KNOWN RED on height: the measured disk-model peak is ~0.25-0.28."""
    config, sweep = reduced_delta_sweep
    disk_index = 3
    cells = [sweep.cell(disk_index, di) for di in range(len(config.densities))]
    deltas = [c.delta(1) for c in cells]
    peak_i = int(np.argmax(deltas))
    peak_rho = config.densities[peak_i]
    peak = deltas[peak_i]
    print(
        "disk delta(1) by rho: "
        + ", ".join(f"{r}:{d:.4f}" for r, d in zip(config.densities, deltas))
    )
    check(
        "criterion 5b (disk peak located in rho [2,3])",
        peak_rho in (2.0, 3.0),
        f"peak at rho={peak_rho}",
    )
    check(
        "criterion 5b (disk peak height 0.10 +- 0.03)",
        abs(peak - 0.10) <= 0.03,
        f"measured peak {peak:.4f}; the hard-disk gap at L=10 genuinely peaks near 0.27",
    )


def test_c5d_reduced_fading_suppresses_gap(reduced_delta_sweep):
    config, sweep = reduced_delta_sweep
    lines, ok = [], True
    for di, rho in enumerate(config.densities):
        if rho < 4.0:
            continue
        soft = sweep.cell(0, di).delta(1)
        hard = sweep.cell(3, di).delta(1)
        ok &= soft < hard
        lines.append(f"rho={rho}: delta_eta2={soft:.5f} < delta_disk={hard:.5f}")
    check("criterion 5d (eta=2 gap below disk gap for rho >= 4)", ok, "; ".join(lines))


@pytest.mark.skipif(not FULL, reason="full-scale grid: set GEONET_FULL_ACCEPTANCE=1")
def test_c5_full_grid():
    densities = tuple(1.0 + 0.5 * i for i in range(15))
    config, sweep = _delta_sweep(densities, 10_000, 502)
    failures = []

    def record(name, ok, detail=""):
        print(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f": {detail}" if detail else ""))
        if not ok:
            failures.append(f"{name}: {detail}")

    # (a) nonnegative everywhere
    record("criterion 5a full (delta >= 0)", all(c.delta(1) >= 0.0 for c in sweep.cells))
    # (b) disk peak
    disk_cells = [sweep.cell(3, di) for di in range(len(densities))]
    deltas = [c.delta(1) for c in disk_cells]
    peak_i = int(np.argmax(deltas))
    record(
        "criterion 5b full (peak in [2,3])",
        2.0 <= densities[peak_i] <= 3.0,
        f"peak at rho={densities[peak_i]}",
    )
    record(
        "criterion 5b full (peak height 0.10 +- 0.03)",
        abs(deltas[peak_i] - 0.10) <= 0.03,
        f"measured {deltas[peak_i]:.4f}",
    )
    # (c) KNOWN RED: corner-pair formula inside the Wilson CI on the tail
    for mi, model in enumerate(config.models):
        covered = total = 0
        details = []
        for di, rho in enumerate(densities):
            if rho < 5.0:
                continue
            cell = sweep.cell(mi, di)
            rho_eff = (cell.n - 1) / 100.0
            params = AnalyticParams(rho_eff, model, D2)
            theory = (
                pi1_asymptotic(params)
                if isinstance(model, Disk)
                else pi1_closed_form(params)
            )
            lo, hi = cell.delta_interval(1)
            covered += lo <= theory <= hi
            total += 1
            details.append(f"rho={rho}: delta={cell.delta(1):.5f} CI[{lo:.5f},{hi:.5f}] theory={theory:.5f}")
        print(f"eta={eta_label(model)}\n  " + "\n  ".join(details))
        record(
            f"criterion 5c full (eta={eta_label(model)}: theory inside CI at >= 75% of tail points)",
            covered >= math.ceil(0.75 * total),
            f"{covered}/{total} covered; the leading-order corner expansion "
            "overestimates the measured gap by ~1.8-2.7x on this density range",
        )
    # (d) ordering on the tail
    ok_d = all(
        sweep.cell(0, di).delta(1) <= sweep.cell(3, di).delta(1) + 1e-12
        for di, rho in enumerate(densities)
        if rho >= 4.0
    )
    record("criterion 5d full (fading suppresses the gap for rho >= 4)", ok_d)
    assert not failures, "; ".join(failures)


# ----------------------------------------------------------------- 6

def test_c6_nesting_of_connectivity_counts():
    config = ExperimentConfig(
        domain=D2,
        models=(Rayleigh(1.0, 2.0), Disk(1.0)),
        densities=(2.0, 4.0, 6.0),
        k_max=4,
        trials=1000,
        master_seed=601,
        observables=frozenset({"fc", "md", "edge_fc"}),
    )
    sweep = run_sweep(config, parallelism=WORKERS)
    ok = True
    for cell in sweep.cells:
        fc, ed, md = cell.fc_count, cell.edge_fc_count, cell.md_count
        ok &= bool((fc <= ed).all() and (ed <= md).all())
        ok &= all(arr[i] >= arr[i + 1] for arr in (fc, ed, md) for i in range(3))
    check("criterion 6 (count-level nesting fc <= edge-fc <= md, monotone in k)", ok)


# ----------------------------------------------------------------- 7

def test_c7_graph_algorithm_oracles():
    rng = np.random.default_rng(701)
    mismatches = 0
    for _ in range(500):
        n = int(rng.integers(2, 11))
        p = rng.random() * 0.75 + 0.1
        edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
        bk = brute_vertex_connectivity(n, edges)
        bl = brute_edge_connectivity(n, edges)
        kappa, lam = capped(n, edges, 5)
        mismatches += (kappa != min(bk, 5)) + (lam != min(bl, 5))
    check("criterion 7 (500 brute-force connectivity oracles)", mismatches == 0, f"{mismatches} mismatches")

    whitney_ok = True
    domain = Domain(2, 5.0)
    for t in range(10_000):
        n = int(rng.integers(2, 26))
        pts = rng.random((n, 2)) * 5.0
        model = Disk(0.9) if t % 2 else Rayleigh(1.0, float(rng.uniform(1.5, 6.0)))
        link_rng = np.random.default_rng(int(rng.integers(0, 2**63))) if isinstance(model, Rayleigh) else None
        sample = build_graph(domain, pts, model, link_rng)
        report = build_report(sample, k_max=5)
        whitney_ok &= (
            report.vertex_connectivity
            <= report.edge_connectivity
            <= min(report.min_degree, 5)
        )
    check("criterion 7 (Whitney chain on 10^4 random samples)", whitney_ok)


# ----------------------------------------------------------------- 8

def test_c8_quadrature_oracles():
    model = Rayleigh(1.0, 2.0)
    rng = np.random.default_rng(801)
    worst = 0.0
    for spec in (QuadratureSpec(method="adaptive"), QuadratureSpec(method="tensor-grid")):
        for _ in range(50):
            p = rng.random(2) * 10.0
            exact = m_h(p, D2, model)
            quad_val = m_h(p, D2, model, spec, use_closed_forms=False)
            worst = max(worst, abs(quad_val - exact) / exact)
    check(
        "criterion 8 (quadrature vs error-function closed form, 100 points)",
        worst < 1e-8,
        f"worst rel dev {worst:.2e}",
    )
    exact_center = m_h((5.0, 5.0), D2, Disk(1.0)) == math.pi
    exact_corner = m_h((0.0, 0.0), D2, Disk(1.0)) == math.pi / 4
    check("criterion 8 (disk mass exact at center/corner)", exact_center and exact_corner)


# ----------------------------------------------------------------- 9

def test_c9_parallelism_determinism(tmp_path):
    cfg = SweepConfig(
        domain={"dimension": 2, "side": 10.0},
        models=[
            {"model": "rayleigh", "beta": 1.0, "eta": 2.0},
            {"model": "rayleigh", "beta": 1.0, "eta": "inf"},
        ],
        densities=[1.0, 2.0],
        k_max=2,
        trials=300,
        master_seed=901,
    )
    run_simulate(cfg, tmp_path / "seq", parallelism=1)
    run_simulate(cfg, tmp_path / "par", parallelism=8)
    same_csv = (tmp_path / "seq" / "sweep.csv").read_bytes() == (tmp_path / "par" / "sweep.csv").read_bytes()
    same_json = (tmp_path / "seq" / "sweep.json").read_bytes() == (tmp_path / "par" / "sweep.json").read_bytes()
    check("criterion 9 (parallelism 1 vs 8 byte-identical outputs)", same_csv and same_json)
