"""Deterministic CSV and JSON output.  No timestamps or host data are written."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .checks import _jsonable
from .ensemble import EnsembleResult


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not rows:
        path.write_text("")
        return path
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = list(rows[0])
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(r[k]) for k in header])
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def aggregate_records(result: EnsembleResult):
    """One row per grid time: mean and SE of ``H`` and ``V``, Born fractions, mean state."""
    rows = []
    d = result.mean_rho.shape[-1]
    for k, t in enumerate(result.grid):
        row = {"t": float(t), "mean_H": float(result.mean_H[k]), "se_H": float(result.se_H[k]),
               "mean_V": float(result.mean_V[k]), "se_V": float(result.se_V[k])}
        for j in range(result.born_fraction.shape[1]):
            row[f"born_{j + 1}"] = float(result.born_fraction[k, j])
        for a in range(d):
            for b in range(d):
                z = result.mean_rho[k, a, b]
                row[f"rho_{a + 1}{b + 1}_re"] = float(z.real)
                row[f"rho_{a + 1}{b + 1}_im"] = float(z.imag)
        rows.append(row)
    return rows


def summary_document(result: EnsembleResult, reports) -> dict:
    return {
        "config": result.config.to_dict(),
        "config_hash": result.config_hash,
        "version": result.version,
        "paths": result.n_paths,
        "horizon": float(result.grid[-1]),
        "steps": int(result.grid.size - 1),
        "born_frequencies": result.born_frequencies(),
        "collapsed_fraction": result.collapsed_fraction,
        "invariants": result.invariants,
        "reports": [r.to_dict() for r in reports],
        "passed": all(r.passed for r in reports),
    }


def write_ensemble(result: EnsembleResult, reports, outdir) -> dict:
    """Write ``aggregate.csv``, ``paths.csv`` and ``summary.json`` under ``outdir``."""
    out = Path(outdir)
    return {
        "aggregate": write_csv(out / "aggregate.csv", aggregate_records(result)),
        "paths": write_csv(out / "paths.csv", result.path_records()),
        "summary": write_json(out / "summary.json", summary_document(result, reports)),
    }
