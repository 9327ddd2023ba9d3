"""Structured JSON reports and the run manifest.

Every report is a plain dict with a ``schema`` tag naming its published JSON
Schema (shipped under ``bearform/schemas/``). Serialization is canonical
(sorted keys, two-space indent, trailing newline) so identical runs produce
byte-identical files.
"""

from __future__ import annotations

import json
from importlib import resources

import numpy as np

from . import __version__
from .analysis import LinearizationReport, PeriodicityReport
from .config import config_hash, config_to_dict
from .scenarios import RunResult


def jsonable(obj):
    """Recursively convert numpy scalars/arrays so json can serialize them."""
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def write_json_report(report: dict, path) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(jsonable(report), fh, indent=2, sort_keys=True)
        fh.write("\n")


def schema_json(name: str) -> dict:
    """Load a published schema by name (e.g. "manifest")."""
    text = resources.files("bearform").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def build_manifest(result: RunResult, outputs: dict[str, str]) -> dict:
    cfg = result.config
    clamp_onsets = {}
    for i in range(1, result.n_agents):
        hit = np.nonzero(result.clamped[:, i])[0]
        clamp_onsets[f"agent{i + 1}"] = float(result.times[hit[0]]) if len(hit) else None
    return {
        "schema": "bearform/manifest@1",
        "artifact_version": __version__,
        "scenario": cfg.kind,
        "mode": result.mode.value,
        "config": config_to_dict(cfg),
        "config_hash": config_hash(cfg),
        "outputs": outputs,
        "events": [[t, tag] for t, tag in result.events],
        "diagnostics": {
            "terminal_shape": [list(result.shapes[-1, p, :]) for p in
                               range(result.n_agents - 1)],
            "clamp_onsets": clamp_onsets,
            "descent_passed": all(r.passed for r in result.descent),
            "periodicity_converged": (None if result.periodicity is None
                                      else result.periodicity.converged),
        },
    }


def build_descent_report(result: RunResult) -> dict:
    return {
        "schema": "bearform/descent@1",
        "pairs": [r.to_dict() for r in result.descent],
        "passed": all(r.passed for r in result.descent),
    }


def build_periodicity_report(report: PeriodicityReport) -> dict:
    return {"schema": "bearform/periodicity@1", **report.to_dict()}


def build_linearization_report(report: LinearizationReport) -> dict:
    return {"schema": "bearform/linearization@1", **report.to_dict()}


def build_estimate_report(window: int, dt: float, n_samples: int, interior: slice,
                          max_abs_u1_residual: float, outputs: dict[str, str]) -> dict:
    return {
        "schema": "bearform/estimate@1",
        "window": window,
        "dt": dt,
        "n_samples": n_samples,
        "interior": [interior.start, interior.stop],
        "max_abs_u1_residual": max_abs_u1_residual,
        "outputs": outputs,
    }


def build_sweep_report(param: str, entries: list[dict]) -> dict:
    return {"schema": "bearform/sweep@1", "param": param, "runs": entries}
