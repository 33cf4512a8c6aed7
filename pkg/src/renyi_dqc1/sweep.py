"""Cost sweeps: mean measurement counts over a grid of (d, alpha, eps_rel, x)."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import InfeasibleShotBudget, RenyiError, ValidationError
from .estimator import PIPELINE_SHOT_CAP, TracePipeline, trace_bounds
from .states import DensityMatrix, StateSpec, build_state, exact_trace_power, purify

SWEEP_COLUMNS = [
    "row", "d", "alpha", "delta", "x_true", "eps_rel", "mean_shots", "std_shots",
    "mean_rounds", "m_per_circuit", "trials", "seed_base", "failures", "slope",
]
WORKERS_ENV = "RENYI_DQC1_WORKERS"


def family_trace(lam: float, d: int, alpha: float) -> float:
    """``(1/d) Tr rho^alpha`` for ``rho = (1 - lam) I/d + lam |0><0|``."""
    lo = (1.0 - lam) / d
    return ((lo + lam) ** alpha + (d - 1) * lo**alpha) / d


def family_state(lam: float, d: int) -> DensityMatrix:
    w = np.full(d, (1.0 - lam) / d)
    w[0] += lam
    return build_state(StateSpec("classical", w))


def solve_family(x: float, d: int, alpha: float) -> float:
    """Mixing weight ``lam`` in ``[0, 1]`` with ``family_trace(lam) = x``."""
    x_min, x_max = trace_bounds(d, alpha)
    if not x_min - 1e-15 <= x <= x_max + 1e-15:
        raise ValidationError(f"target x={x!r} lies outside [{x_min!r}, {x_max!r}]")
    # alpha > 1: x grows from d^-alpha (lam=0) to 1/d (lam=1); alpha < 1 reversed
    f = lambda lam: family_trace(lam, d, alpha) - x
    if abs(f(0.0)) <= 1e-15:
        return 0.0
    if abs(f(1.0)) <= 1e-15:
        return 1.0
    return brentq(f, 0.0, 1.0, xtol=1e-16, rtol=1e-15)


def log_uniform_targets(d: int, alpha: float, points: int) -> list[float]:
    """``points`` targets evenly spaced in ``log2(x_max/x)`` at offsets ``k + 1/2``.

    Keeping the targets away from exact powers of two means each one sits at
    the same relative position between stopping thresholds, so the measured
    cost tracks the ``1/x^2`` law instead of its staircase.
    """
    x_min, x_max = trace_bounds(d, alpha)
    span = math.log2(x_max / x_min)
    return [x_max * 2.0 ** (-(k + 0.5) * span / points) for k in range(points)]


@dataclass(frozen=True)
class Cell:
    d: int
    alpha: float
    eps_rel: float
    x_target: float
    coords: tuple


def _cell_seeds(seed_base: int, coords: tuple, trials: int):
    root = np.random.SeedSequence(seed_base, spawn_key=coords)
    return root.spawn(trials)


def run_cell(cell: Cell, trials: int, seed_base: int, confidence: float,
             shot_cap: int = PIPELINE_SHOT_CAP, delta: float | None = None) -> dict:
    lam = solve_family(cell.x_target, cell.d, cell.alpha)
    rho = family_state(lam, cell.d)
    x_true = exact_trace_power(rho, cell.alpha) / cell.d
    dl = 0.5 * rho.min_eigenvalue if delta is None else delta
    row = {
        "row": "cell", "d": cell.d, "alpha": cell.alpha, "delta": dl, "x_true": x_true,
        "eps_rel": cell.eps_rel, "trials": trials, "seed_base": seed_base,
        "failures": 0, "mean_shots": None, "std_shots": None, "mean_rounds": None,
        "m_per_circuit": None, "slope": None,
    }
    try:
        pipe = TracePipeline(purify(rho), cell.alpha, dl, cell.eps_rel, confidence, shot_cap)
    except RenyiError:
        row["failures"] = trials
        return row
    row["m_per_circuit"] = pipe.queries_per_circuit
    shots, rounds = [], []
    for s in _cell_seeds(seed_base, cell.coords, trials):
        try:
            _, rep = pipe.run(s)
        except InfeasibleShotBudget:
            row["failures"] += 1
            continue
        shots.append(rep.total_measurements)
        rounds.append(len(rep.rounds))
    if shots:
        arr = np.asarray(shots, dtype=float)
        row["mean_shots"] = float(arr.mean())
        row["std_shots"] = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
        row["mean_rounds"] = float(np.mean(rounds))
    return row


def fit_slope(rows: list[dict]) -> float | None:
    pts = [(r["x_true"], r["mean_shots"]) for r in rows if r["mean_shots"]]
    if len(pts) < 2:
        return None
    x, y = np.log(np.array(pts)).T
    if np.ptp(x) == 0:
        return None
    return float(np.polyfit(x, y, 1)[0])


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValidationError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def run_sweep(
    dims, alphas, eps_rels, *, points: int | None = None, x_targets=None, trials: int = 30,
    seed_base: int = 0, confidence: float = 0.9, shot_cap: int = PIPELINE_SHOT_CAP,
    workers: int | None = None, delta: float | None = None,
) -> list[dict]:
    """Rows for every grid cell followed by one ``fit`` row per (d, alpha, eps_rel) series.

    Series with a single point get no fit row.
    """
    if not dims or not alphas or not eps_rels:
        raise ValidationError("sweep grid must be non-empty")
    if trials < 1:
        raise ValidationError("trials must be at least 1")
    series = []
    cells = []
    for i, d in enumerate(dims):
        for j, a in enumerate(alphas):
            for k, e in enumerate(eps_rels):
                xs = list(x_targets) if x_targets else log_uniform_targets(d, a, points or 6)
                group = [Cell(d, a, e, x, (i, j, k, m)) for m, x in enumerate(xs)]
                series.append(group)
                cells.extend(group)
    workers = default_workers() if workers is None else workers
    run = lambda c: run_cell(c, trials, seed_base, confidence, shot_cap, delta)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, cells))
    else:
        results = [run(c) for c in cells]
    by_coords = {c.coords: r for c, r in zip(cells, results)}
    rows = list(results)
    for group in series:
        if len(group) < 2:
            continue
        grows = [by_coords[c.coords] for c in group]
        c0 = group[0]
        rows.append({
            "row": "fit", "d": c0.d, "alpha": c0.alpha, "eps_rel": c0.eps_rel,
            "trials": trials, "seed_base": seed_base,
            "failures": sum(r["failures"] for r in grows), "slope": fit_slope(grows),
        })
    return rows
