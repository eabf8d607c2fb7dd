"""Shared run handlers behind both the CLI and the HTTP service.

Each handler consumes a validated config, produces result files in an
output directory, and records a manifest referencing every file written.
"""
from __future__ import annotations

import math
from pathlib import Path

from . import analytic, montecarlo, results
from .analytic import AnalyticParams, QuadratureSpec
from .channel import Disk
from .config import AnalyticConfig, ConfigError, SweepConfig
from .geometry import Domain, sample_points
from .montecarlo import nodes_for_density
from .network import build_graph, components
from .stats import Z95, wilson_interval


def run_simulate(
    cfg: SweepConfig,
    out_dir,
    parallelism: int = 1,
    trials_override: int | None = None,
    seed_override: int | None = None,
) -> dict:
    """Run the sweep and write sweep.csv, sweep.json and manifest.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = results.utc_now()
    experiment = cfg.to_experiment(trials=trials_override, master_seed=seed_override)
    sweep = montecarlo.run_sweep(experiment, parallelism=parallelism)
    csv_path = out / "sweep.csv"
    json_path = out / "sweep.json"
    results.write_csv(csv_path, results.SWEEP_CSV_COLUMNS, results.sweep_rows(sweep))
    results.write_json(json_path, results.sweep_json_payload(sweep))
    manifest = results.write_manifest(
        out / "manifest.json",
        command="simulate",
        config_echo=results.config_jsonable(experiment),
        outputs=[csv_path, json_path],
        started_utc=started,
        finished_utc=results.utc_now(),
        cell_wall_times=[cell.wall_time for cell in sweep.cells],
        extra={"rng": sweep.rng_name, "parallelism": parallelism},
    )
    return {"sweep_csv": str(csv_path), "sweep_json": str(json_path), "manifest": manifest}


def _effective_density(rho: float, domain: Domain) -> tuple[int, float]:
    """Node count and the matching (n-1)/V density used by analytic formulas."""
    n = nodes_for_density(rho, domain)
    return n, (n - 1) / domain.volume


def analytic_grid_rows(cfg: AnalyticConfig) -> list[dict]:
    """One row per (model, density) grid point for the configured formula.

    Densities are mapped to the (n-1)/V convention of a simulation with
    n = round(rho V) nodes so rows are directly comparable against sweeps
    on the same grid.  Values are raw (unclamped); out_of_range flags a
    probability formula evaluated outside [0, 1].
    """
    domain = cfg.domain.to_core()
    quad = QuadratureSpec(
        method=cfg.quadrature.method,
        rel_tol=cfg.quadrature.rel_tol,
        max_evals=cfg.quadrature.max_evals,
    )
    rows = []
    for mc in cfg.models:
        model = mc.to_core()
        eta_s, beta_s, r0_s = results.model_columns(model)
        for rho in cfg.densities:
            n, rho_eff = _effective_density(rho, domain)
            params = AnalyticParams(rho_eff, model, domain, k=cfg.k)
            if cfg.formula == "mean_degree":
                value = (
                    analytic.mean_degree_disk(params)
                    if isinstance(model, Disk)
                    else analytic.mean_degree_soft(params)
                )
            elif cfg.formula == "p_md":
                value = analytic.p_md_analytic(params, n, quad)
            elif cfg.formula == "p_fc1":
                value = analytic.p_fc_isolated_node(params, quad)
            elif cfg.formula == "pi1":
                value = (
                    analytic.pi1_asymptotic(params)
                    if isinstance(model, Disk)
                    else analytic.pi1_closed_form(params)
                )
            elif cfg.formula == "pi1_asym":
                value = analytic.pi1_asymptotic(params)
            else:
                value = analytic.p_isolated_node_square(params)
            out_of_range = cfg.formula != "mean_degree" and not (0.0 <= value <= 1.0)
            rows.append(
                {
                    "formula": cfg.formula,
                    "eta": eta_s,
                    "beta": beta_s,
                    "r0": r0_s,
                    "rho": results.fmt(rho),
                    "k": str(cfg.k),
                    "value": results.fmt(value),
                    "out_of_range": "true" if out_of_range else "false",
                }
            )
    return rows


def run_analytic(cfg: AnalyticConfig, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = results.utc_now()
    rows = analytic_grid_rows(cfg)
    csv_path = out / "analytic.csv"
    results.write_csv(csv_path, results.ANALYTIC_CSV_COLUMNS, rows)
    results.write_manifest(
        out / "manifest.json",
        command="analytic",
        config_echo=cfg.model_dump(),
        outputs=[csv_path],
        started_utc=started,
        finished_utc=results.utc_now(),
    )
    return {"analytic_csv": str(csv_path), "rows": rows}


def _norm_eta(eta: str) -> str:
    return "inf" if eta == "inf" else results.fmt(float(eta))


def _norm_key(eta: str, rho: str, k: str) -> tuple[str, str, int]:
    return _norm_eta(eta), results.fmt(float(rho)), int(k)


def _sim_estimate(formula: str, row: dict) -> tuple[float, float, float]:
    """(estimate, lo, hi) of the sweep column matching an analytic formula."""

    def f(col):
        text = row.get(col, "")
        if text == "":
            raise ConfigError(f"simulation results lack column {col!r} needed for {formula}")
        return float(text)

    if formula == "mean_degree":
        mean, se = f("mean_degree"), f("mean_degree_se")
        return mean, mean - Z95 * se, mean + Z95 * se
    if formula == "p_md":
        return f("p_md"), f("p_md_lo"), f("p_md_hi")
    if formula == "p_fc1":
        return f("p_fc"), f("p_fc_lo"), f("p_fc_hi")
    if formula in ("pi1", "pi1_asym"):
        trials = int(row["trials"])
        count = round(f("delta") * trials)
        lo, hi = wilson_interval(int(count), trials)
        return f("delta"), lo, hi
    if formula == "isolated_node":
        return 1.0 - f("p_md"), 1.0 - f("p_md_hi"), 1.0 - f("p_md_lo")
    raise ConfigError(f"unknown formula {formula!r}")


def compare_rows(sim_rows: list[dict], analytic_rows: list[dict]) -> tuple[list[dict], dict]:
    """Join analytic grid rows against simulation rows on (eta, rho, k).

    The "simulation" side may itself be an analytic file (degenerate
    intervals), which makes self-comparison exact.
    """
    if not analytic_rows:
        raise ConfigError("analytic results are empty")
    if not sim_rows:
        raise ConfigError("simulation results are empty")
    sim_side_is_sweep = "formula" not in sim_rows[0]

    sim_index: dict[tuple, dict] = {}
    for row in sim_rows:
        key = _norm_key(row["eta"], row["rho"], row.get("k", "1"))
        sim_index[key] = row

    points = []
    unmatched = []
    for arow in analytic_rows:
        formula = arow["formula"]
        k = int(arow["k"])
        sim_k = k if formula == "p_md" else 1
        key = _norm_key(arow["eta"], arow["rho"], sim_k)
        srow = sim_index.get(key)
        if srow is None:
            unmatched.append(key)
            continue
        value = float(arow["value"])
        if sim_side_is_sweep:
            est, lo, hi = _sim_estimate(formula, srow)
        else:
            est = float(srow["value"])
            lo = hi = est
        covered = lo <= value <= hi
        points.append(
            {
                "formula": formula,
                "eta": _norm_eta(arow["eta"]),
                "r0": arow["r0"],
                "rho": results.fmt(float(arow["rho"])),
                "k": str(k),
                "analytic": results.fmt(value),
                "simulated": results.fmt(est),
                "sim_lo": results.fmt(lo),
                "sim_hi": results.fmt(hi),
                "covered": "true" if covered else "false",
                "residual": results.fmt(value - est),
            }
        )
    if unmatched:
        raise ConfigError(
            "grid mismatch; unmatched (eta, rho, k) keys: "
            + ", ".join(map(str, unmatched[:20]))
        )
    covered_n = sum(1 for p in points if p["covered"] == "true")
    summary = {
        "points": len(points),
        "covered": covered_n,
        "coverage": covered_n / len(points) if points else math.nan,
    }
    return points, summary


def run_compare(sim_path, analytic_path, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = results.utc_now()
    sim_rows = results.read_csv_rows(sim_path)
    analytic_rows = results.read_csv_rows(analytic_path)
    points, summary = compare_rows(sim_rows, analytic_rows)
    csv_path = out / "compare.csv"
    json_path = out / "compare.json"
    results.write_csv(csv_path, results.COMPARE_CSV_COLUMNS, points)
    results.write_json(json_path, {"schema": "geonet-compare-v1", "summary": summary})
    results.write_manifest(
        out / "manifest.json",
        command="compare",
        config_echo={"sim": str(sim_path), "analytic": str(analytic_path)},
        outputs=[csv_path, json_path],
        started_utc=started,
        finished_utc=results.utc_now(),
    )
    return {"compare_csv": str(csv_path), "summary": summary, "points": points}


def render_sample(cfg: SweepConfig) -> dict:
    """One realization of a single-cell config: positions, labels and edges.

    Unlike sweep cells, a rendered sample may consist of a single node.
    """
    if len(cfg.models) != 1 or len(cfg.densities) != 1:
        raise ConfigError(
            f"render needs a single-cell config; got {len(cfg.models)} models x "
            f"{len(cfg.densities)} densities"
        )
    try:
        domain = cfg.domain.to_core()
        model = cfg.models[0].to_core()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    rho = float(cfg.densities[0])
    n = nodes_for_density(rho, domain)
    if n < 1:
        raise ConfigError(f"density {rho} yields an empty network")
    positions = sample_points(domain, n, montecarlo._position_rng(cfg.master_seed, 0, 0))
    rng = None if isinstance(model, Disk) else montecarlo._link_rng(cfg.master_seed, 0, 0, 0)
    sample = build_graph(domain, positions, model, rng=rng, method=cfg.pair_sampling)
    _, _, labels = components(sample)
    return {"sample": sample, "labels": labels, "n": n}


def run_render_sample(cfg: SweepConfig, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = results.utc_now()
    rendered = render_sample(cfg)
    sample, labels = rendered["sample"], rendered["labels"]
    pos_path = out / "positions.csv"
    edge_path = out / "edges.txt"
    results.write_positions_csv(pos_path, sample.positions, labels)
    results.write_edge_list(edge_path, sample.edges)
    results.write_manifest(
        out / "manifest.json",
        command="render-sample",
        config_echo=cfg.model_dump(),
        outputs=[pos_path, edge_path],
        started_utc=started,
        finished_utc=results.utc_now(),
    )
    return {"positions_csv": str(pos_path), "edges": str(edge_path), "n": rendered["n"]}
