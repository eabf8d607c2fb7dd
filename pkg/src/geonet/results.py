"""Serialization of sweep and analytic results: CSV, JSON and run manifests.

Result files are byte-deterministic for a given config (UTF-8, LF endings,
shortest round-trip float formatting); wall-clock metadata lives only in
the manifest.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .channel import ConnectionModel, Disk
from .montecarlo import MIN_TRIALS_FOR_CI, SweepResult

SWEEP_CSV_COLUMNS = [
    "eta",
    "beta",
    "r0",
    "rho",
    "n",
    "k",
    "trials",
    "p_fc",
    "p_fc_lo",
    "p_fc_hi",
    "p_md",
    "p_md_lo",
    "p_md_hi",
    "p_fc_edge",
    "p_fc_edge_lo",
    "p_fc_edge_hi",
    "delta",
    "mean_degree",
    "mean_degree_se",
    "isolated_pair_freq",
]

ANALYTIC_CSV_COLUMNS = ["formula", "eta", "beta", "r0", "rho", "k", "value", "out_of_range"]

COMPARE_CSV_COLUMNS = [
    "formula",
    "eta",
    "r0",
    "rho",
    "k",
    "analytic",
    "simulated",
    "sim_lo",
    "sim_hi",
    "covered",
    "residual",
]


def fmt(value) -> str:
    """Full round-trip text for a float; empty for missing."""
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return ""
    return repr(value)


def model_columns(model: ConnectionModel) -> tuple[str, str, str]:
    """(eta, beta, r0) text columns; eta = 'inf' and beta empty for Disk."""
    if isinstance(model, Disk):
        return "inf", "", fmt(model.r0)
    return fmt(model.eta), fmt(model.beta), fmt(model.r0)


def sweep_rows(result: SweepResult) -> list[dict]:
    rows = []
    obs = result.config.effective_observables()
    for cell in result.cells:
        eta_s, beta_s, r0_s = model_columns(cell.model)
        have_ci = cell.trials >= MIN_TRIALS_FOR_CI
        for k in range(1, cell.k_max + 1):
            row = {c: "" for c in SWEEP_CSV_COLUMNS}
            row.update(
                eta=eta_s,
                beta=beta_s,
                r0=r0_s,
                rho=fmt(cell.density),
                n=str(cell.n),
                k=str(k),
                trials=str(cell.trials),
            )
            if "fc" in obs:
                p, lo, hi = cell.p_fc(k)
                row["p_fc"] = fmt(p)
                if have_ci:
                    row["p_fc_lo"], row["p_fc_hi"] = fmt(lo), fmt(hi)
            if "md" in obs:
                p, lo, hi = cell.p_md(k)
                row["p_md"] = fmt(p)
                if have_ci:
                    row["p_md_lo"], row["p_md_hi"] = fmt(lo), fmt(hi)
            if "edge_fc" in obs:
                p, lo, hi = cell.p_fc_edge(k)
                row["p_fc_edge"] = fmt(p)
                if have_ci:
                    row["p_fc_edge_lo"], row["p_fc_edge_hi"] = fmt(lo), fmt(hi)
            if {"fc", "md"} <= obs:
                row["delta"] = fmt(cell.delta(k))
            if "mean_degree" in obs:
                row["mean_degree"] = fmt(cell.mean_degree)
                row["mean_degree_se"] = fmt(cell.mean_degree_se)
            if "isolated_pair" in obs:
                row["isolated_pair_freq"] = fmt(cell.isolated_pair_freq)
            rows.append(row)
    return rows


def write_csv(path, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def read_csv_rows(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def config_jsonable(config) -> dict:
    """JSON echo of an ExperimentConfig."""
    models = []
    for m in config.models:
        if isinstance(m, Disk):
            models.append({"model": "disk", "r0": m.r0})
        else:
            models.append({"model": "rayleigh", "beta": m.beta, "eta": m.eta})
    return {
        "domain": {"dimension": config.domain.dimension, "side": config.domain.side},
        "models": models,
        "densities": list(config.densities),
        "k_max": config.k_max,
        "trials": config.trials,
        "master_seed": config.master_seed,
        "observables": sorted(config.observables),
        "pair_sampling": config.pair_sampling,
    }


def sweep_json_payload(result: SweepResult) -> dict:
    """Deterministic structured result (no timing data)."""
    cells = []
    for cell in result.cells:
        eta_s, beta_s, r0_s = model_columns(cell.model)
        entry = {
            "eta": eta_s,
            "beta": None if beta_s == "" else float(beta_s),
            "r0": float(r0_s),
            "rho": cell.density,
            "n": cell.n,
            "trials": cell.trials,
        }
        for name, counts in (
            ("fc", cell.fc_count),
            ("md", cell.md_count),
            ("edge_fc", cell.edge_fc_count),
            ("bridged_pair", cell.bridged_count),
        ):
            if counts is not None:
                entry[f"{name}_counts"] = [int(c) for c in counts]
        entry["isolated_pair_count"] = cell.isolated_pair_count
        if "mean_degree" in cell.observables:
            entry["mean_degree"] = cell.mean_degree
            entry["mean_degree_se"] = cell.mean_degree_se
        cells.append(entry)
    return {
        "schema": "geonet-sweep-v1",
        "version": __version__,
        "rng": result.rng_name,
        "config": config_jsonable(result.config),
        "cells": cells,
    }


def write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _sha256(path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()


def write_manifest(
    path,
    command: str,
    config_echo: dict,
    outputs: list,
    started_utc: str,
    finished_utc: str,
    cell_wall_times: list | None = None,
    extra: dict | None = None,
) -> dict:
    manifest = {
        "schema": "geonet-manifest-v1",
        "tool": "geonet",
        "version": __version__,
        "command": command,
        "config": config_echo,
        "started_utc": started_utc,
        "finished_utc": finished_utc,
        "outputs": {
            Path(p).name: {"sha256": _sha256(p), "bytes": Path(p).stat().st_size}
            for p in outputs
        },
    }
    if cell_wall_times is not None:
        manifest["cell_wall_times"] = cell_wall_times
    if extra:
        manifest.update(extra)
    write_json(path, manifest)
    return manifest


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def write_positions_csv(path, positions: np.ndarray, labels: np.ndarray) -> None:
    d = positions.shape[1]
    header = ["id", "x", "y"] + (["z"] if d == 3 else []) + ["component"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i, (pos, lab) in enumerate(zip(positions, labels)):
            writer.writerow([i] + [repr(float(c)) for c in pos] + [int(lab)])


def write_edge_list(path, edges: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for i, j in edges:
            fh.write(f"{int(i)} {int(j)}\n")
