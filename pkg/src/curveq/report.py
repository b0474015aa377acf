"""Report bundles: a JSON document, an aligned text table, and band CSV.

The text table is rendered from the same flattened ``(key, value)`` pairs
as the JSON document, with floats shown to 6 significant digits.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from curveq.fitting import FitResult, covariance_of_estimate
from curveq.errors import RankDeficiencyError
from curveq.similarity import BandResult, CurveTestResult
from curveq.simulation import SimSummary
from curveq.target_dose import MedEstimate, MedInference

__all__ = ["ReportBundle", "fmt", "flatten", "fit_section", "band_section", "med_section", "sim_section"]


def _clean(x):
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_clean(v) for v in x.tolist()]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return None if not math.isfinite(x) else x
    return x


def fmt(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return f"{x:.6g}"
    if isinstance(x, list):
        return "[" + ", ".join(fmt(v) for v in x) + "]"
    return str(x)


def flatten(d: dict, prefix: str = "") -> list[tuple[str, object]]:
    out = []
    for k, v in d.items():
        key = f"{prefix}.{k}" if prefix else k
        if isinstance(v, dict):
            out.extend(flatten(v, key))
        else:
            out.append((key, v))
    return out


@dataclass
class ReportBundle:
    command: str
    config: dict
    results: dict = field(default_factory=dict)
    failure: dict | None = None
    band: str | None = None

    @property
    def ok(self) -> bool:
        return self.failure is None

    def machine(self) -> dict:
        doc = {
            "command": self.command,
            "status": "ok" if self.ok else "failed",
            "config": self.config,
            "results": self.results,
        }
        if self.failure is not None:
            doc["failure"] = self.failure
        return _clean(doc)

    def machine_text(self) -> str:
        return json.dumps(self.machine(), indent=2, allow_nan=False) + "\n"

    def human(self) -> str:
        doc = self.machine()
        lines = [f"curveq {self.command}: {doc['status']}"]
        sections = [("results", doc["results"])]
        if "failure" in doc:
            sections.append(("failure", doc["failure"]))
        for title, body in sections:
            pairs = flatten(body)
            if not pairs:
                continue
            width = max(len(k) for k, _ in pairs)
            lines.append("")
            lines.append(f"[{title}]")
            lines.extend(f"  {k.ljust(width)}  {fmt(v)}" for k, v in pairs)
        return "\n".join(lines) + "\n"


def fit_section(f: FitResult) -> dict:
    sec = {
        "label": f.label,
        "model": str(f.model),
        "n": f.n_total,
        "dose_levels": f.dose_levels,
        "theta": dict(zip(f.model.param_names, f.theta_hat.tolist())),
        "sigma2": f.sigma2_hat,
        "rss": f.rss,
        "converged": f.converged,
        "iterations": f.iterations,
    }
    try:
        se = np.sqrt(np.diag(covariance_of_estimate(f)))
        sec["std_error"] = dict(zip(f.model.param_names, se.tolist()))
    except RankDeficiencyError as exc:
        sec["std_error"] = None
        sec["note"] = str(exc)
    return sec


def band_section(b: BandResult) -> dict:
    return {
        "alpha": b.alpha,
        "quantile_source": b.quantile_source,
        "quantile": b.quantile,
        "placebo_adjusted": b.placebo_adjusted,
        "dose_min": float(b.grid[0]),
        "dose_max": float(b.grid[-1]),
        "grid_points": int(b.grid.size),
        "max_upper": {"dose": b.max_upper.dose, "value": b.max_upper.value},
        "min_lower": {"dose": b.min_lower.dose, "value": b.min_lower.value},
        "ci_for_max_abs": b.ci_for_max_abs,
    }


def curve_test_section(t: CurveTestResult) -> dict:
    return {
        "delta": t.delta,
        "reject_H": t.reject_H,
        "decision": "similar" if t.reject_H else "similarity not shown",
    }


def _med(m: MedEstimate) -> dict:
    return {"med": m.med, "target_response": m.target, "attainable": m.attainable}


def med_section(r: MedInference) -> dict:
    return {
        "clinical_delta": r.med1.delta_clinical,
        "group1": _med(r.med1),
        "group2": _med(r.med2),
        "diff": r.diff_hat,
        "tau": r.tau_hat,
        "alpha": r.alpha,
        "ci": {"lower": r.ci[0], "upper": r.ci[1]},
        "eta": r.eta,
        "critical_constant": r.c_critical,
        "reject_H": r.reject_H,
        "decision": "similar" if r.reject_H else "similarity not shown",
    }


def sim_section(s: SimSummary) -> dict:
    d = s.as_dict()
    d.pop("config")
    return d
