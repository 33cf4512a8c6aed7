"""Serialisation of estimator results into plain JSON-ready dictionaries."""

from __future__ import annotations

import csv
import io
import json
import math

from .dqc1 import TraceEstimate
from .estimator import EntropyEstimate, RoundTrace, TraceReport

SCHEMA_VERSION = "1.0"


def _num(x):
    """JSON cannot carry NaN/inf; map them to None."""
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def round_to_dict(r: RoundTrace) -> dict:
    out = {
        "round_index": r.round_index,
        "eps_r": r.eps_r,
        "x_r": r.x_r,
        "estimate_r": r.estimate_r,
        "measurements_r": r.measurements_r,
        "stopped": r.stopped,
    }
    det = r.detail
    if isinstance(det, TraceEstimate):
        out["shots_per_circuit"] = det.shots_per_circuit
        out["nominal_measurements"] = det.nominal_measurements
        out["circuit_precision"] = det.additive_error_target / det.rescale_factor
    elif isinstance(det, EntropyEstimate):
        out["inner_eps_rel"] = det.inner_eps_rel
        out["inner_rounds"] = [round_to_dict(x) for x in det.rounds]
    return out


def trace_report_to_dict(rep: TraceReport) -> dict:
    return {
        "x_hat": rep.x_hat,
        "x_min": rep.x_min,
        "x_max": rep.x_max,
        "eps_rel": rep.eps_rel,
        "confidence": rep.confidence,
        "round_confidence": rep.round_confidence,
        "rounds_cap": rep.rounds_cap,
        "total_measurements": rep.total_measurements,
        "nominal_measurements": rep.nominal_measurements,
        "oracle_queries_per_circuit": rep.oracle_queries_per_circuit,
        "polynomial_degree": rep.polynomial_degree,
        "theory_degree_bound": rep.theory_degree_bound,
        "polynomial_error": rep.polynomial_error,
        "encoding_scale": rep.encoding_scale,
        "encoding_ancillas": rep.encoding_ancillas,
        "rescale_factor": rep.rescale_factor,
        "cap_reached": rep.cap_reached,
        "low_confidence": rep.low_confidence,
        "strategy": rep.strategy,
        "gamma": rep.gamma,
    }


def entropy_to_dict(est: EntropyEstimate) -> dict:
    out = {
        "value": est.value,
        "alpha": est.alpha,
        "log_base": est.log_base,
        "precision_kind": est.precision_kind,
        "precision": est.precision,
        "confidence": est.confidence,
        "total_measurements": est.total_measurements,
        "oracle_queries_per_circuit": est.oracle_queries_per_circuit,
        "low_confidence": est.low_confidence,
        "per_round": [round_to_dict(r) for r in est.rounds],
    }
    if est.inner_eps_rel is not None:
        out["trace_eps_rel"] = est.inner_eps_rel
    if est.trace is not None:
        out["trace"] = trace_report_to_dict(est.trace)
    return out


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return _num(obj)


def dumps(report: dict) -> str:
    """Deterministic JSON: sorted keys, shortest round-trip float repr."""
    return json.dumps(_clean(report), sort_keys=True, indent=2, allow_nan=False)


def pretty(report: dict, indent: int = 0) -> str:
    lines = []
    pad = "  " * indent
    for key in sorted(report):
        val = report[key]
        if isinstance(val, dict):
            lines.append(f"{pad}{key}:")
            lines.append(pretty(val, indent + 1))
        elif isinstance(val, list) and val and isinstance(val[0], dict):
            lines.append(f"{pad}{key}:")
            for i, item in enumerate(val):
                lines.append(f"{pad}  [{i}]")
                lines.append(pretty(item, indent + 2))
        else:
            lines.append(f"{pad}{key}: {val}")
    return "\n".join(lines)


def csv_text(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for row in rows:
        w.writerow({k: _csv_cell(row.get(k)) for k in columns})
    return buf.getvalue()


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ""
    return v


def flat_report_csv(report: dict) -> str:
    """Single-row CSV of the scalar top-level fields of a report."""
    flat = {}
    for k, v in report.items():
        if isinstance(v, dict):
            for k2, v2 in v.items():
                if not isinstance(v2, (dict, list)):
                    flat[f"{k}.{k2}"] = v2
        elif not isinstance(v, list):
            flat[k] = v
    cols = sorted(flat)
    return csv_text([flat], cols)
