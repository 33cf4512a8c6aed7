"""Exit criteria. Each test carries ``acceptance(criterion=N)``; the terminal
summary prints one PASS/FAIL line per criterion."""

import math

import numpy as np
import pytest

from renyi_dqc1.dqc1 import Dqc1Circuit, exact_clean_qubit_expectations
from renyi_dqc1.encoding import encode_density, read_block, verify_encoding
from renyi_dqc1.estimator import (
    IterativeConfig,
    TracePipeline,
    entropy_bounds,
    estimate_entropy_additive,
    estimate_entropy_multiplicative,
    multiplicative_estimate,
    claimed_entropy_floor,
    trace_bounds,
)
from renyi_dqc1.linalg import is_unitary
from renyi_dqc1.poly import DEGREE_CONSTANT, build_power_polynomial, power_encoding
from renyi_dqc1.states import (
    StateSpec,
    build_state,
    exact_renyi_entropy,
    exact_trace_power,
    maximally_mixed,
    purify,
)
from renyi_dqc1.sweep import run_sweep
from conftest import random_state

ALPHAS = [0.5, 2, 2.5, 3]


def acceptance(n):
    return pytest.mark.acceptance(criterion=n)


@acceptance(1)
def test_exact_pipeline_fidelity(record_property):
    eps = 1e-6
    worst = 0.0
    for i in range(200):
        d = (2, 4, 8)[i % 3]
        alpha = ALPHAS[(i // 3) % 4]
        rho = random_state(d, 0.1, 500 + i)
        rep = power_encoding(encode_density(purify(rho)), alpha, 0.1, eps)
        worst = max(worst, verify_encoding(rep.encoding, rho.power(alpha)))
    record_property("detail", f"worst deviation {worst:.3e} (limit {eps:g})")
    assert worst <= eps


@acceptance(2)
def test_density_encoding_exact(record_property):
    states = [maximally_mixed(2), maximally_mixed(8),
              build_state(StateSpec("classical", [1, 0])),
              build_state(StateSpec("classical", [0.75, 0.25])),
              build_state(StateSpec("eigenvalues", [0.4, 0.3, 0.2, 0.1], 4))]
    states += [random_state((2, 4, 8)[i % 3], 0.0, 900 + i) for i in range(60)]
    worst_read = worst_unit = 0.0
    for rho in states:
        enc = encode_density(purify(rho))
        worst_read = max(worst_read, float(np.max(np.abs(read_block(enc) - rho.matrix))))
        g = enc.unitary.conj().T @ enc.unitary - np.eye(enc.unitary.shape[0])
        worst_unit = max(worst_unit, float(np.max(np.abs(g))))
        assert enc.scale == 1 and enc.error_bound == 0
    record_property("detail", f"readback {worst_read:.1e}, unitarity {worst_unit:.1e}")
    assert worst_read <= 1e-9 and worst_unit <= 1e-10


@acceptance(3)
def test_phase_trick_identity(record_property):
    rng = np.random.default_rng(3)
    worst = 0.0
    for i in range(100):
        d = int(rng.choice([2, 4, 8]))
        alpha = float(rng.choice(ALPHAS))
        rho = random_state(d, 0.1, 3000 + i)
        enc = power_encoding(encode_density(purify(rho)), alpha, 0.1, 1e-6).encoding
        n = enc.total_qubits
        x_u, _ = exact_clean_qubit_expectations(Dqc1Circuit(enc.unitary))
        x_v, _ = exact_clean_qubit_expectations(Dqc1Circuit(enc.unitary, True, d))
        block_trace = np.trace(enc.unitary[:d, :d]).real
        worst = max(worst, abs(2**n * (x_u - x_v) - block_trace))
    record_property("detail", f"worst |Re Tr U - Re Tr U' - Tr block| = {worst:.1e}")
    assert worst <= 1e-10


@acceptance(4)
def test_additive_entropy_coverage(record_property):
    rho = build_state(StateSpec("classical", [0.75, 0.25]))
    truth = exact_renyi_entropy(rho, 2)
    assert truth == pytest.approx(0.470004, abs=1e-6)
    oracle = purify(rho)
    pipe = TracePipeline(oracle, 2, 0.2, -math.expm1(-0.1), 0.9)
    hits = 0
    shots = []
    for s in range(300):
        est = estimate_entropy_additive(oracle, 2, 0.2, 0.1, 0.9, s, pipeline=pipe)
        hits += abs(est.value - 0.470004) <= 0.1
        shots.append(est.total_measurements)
    record_property("detail", f"coverage {hits / 300:.3f} (need 0.85), mean shots {np.mean(shots):.3g}")
    assert hits / 300 >= 0.85


@acceptance(5)
def test_multiplicative_entropy_coverage(record_property):
    oracle = purify(maximally_mixed(4))
    s_min, s_max = entropy_bounds(4, 2, 0.1)
    cap = math.ceil(math.log2(s_max / s_min))
    hits = 0
    max_rounds = 0
    for s in range(300):
        est = estimate_entropy_multiplicative(oracle, 2, 0.1, 0.1, 0.9, s)
        hits += abs(est.value / math.log(4) - 1) <= 0.1
        max_rounds = max(max_rounds, len(est.rounds))
    record_property("detail", f"coverage {hits / 300:.3f} (need 0.85), max outer rounds {max_rounds} <= {cap}")
    assert hits / 300 >= 0.85
    assert max_rounds <= cap


@acceptance(6)
def test_cost_scaling(record_property):
    rows = run_sweep([8], [2], [0.2], points=6, trials=50, seed_base=6, workers=1)
    cells = [r for r in rows if r["row"] == "cell"]
    fit = [r for r in rows if r["row"] == "fit"]
    xs = [r["x_true"] for r in cells]
    assert len(cells) >= 6 and all(r["trials"] >= 50 for r in cells)
    assert min(xs) >= 8.0**-2 and max(xs) <= 8.0**-1
    slope = fit[0]["slope"]
    record_property("detail", f"slope {slope:.3f} over x in [{min(xs):.4f}, {max(xs):.4f}]")
    assert abs(slope + 2) <= 0.3


@acceptance(7)
def test_integer_alpha_degree(record_property):
    for alpha in (2, 3, 4):
        rho = random_state(4, 0.05, alpha)
        rep = power_encoding(encode_density(purify(rho)), alpha, 0.05, 1e-6)
        assert verify_encoding(rep.encoding, rho.power(alpha)) <= 1e-10
        assert rep.achieved_degree == alpha
        pipe = TracePipeline(purify(rho), alpha, 0.05, 0.2, 0.9)
        assert pipe.run(0)[1].oracle_queries_per_circuit == alpha
    worst = 0.0
    for alpha in (0.3, 0.5, 0.7, 1.5, 2.5, 3.5):
        for delta in (0.01, 0.02, 0.05, 0.1, 0.2, 0.4):
            for eps in (1e-2, 1e-4, 1e-6, 1e-8, 1e-10):
                p = build_power_polynomial(alpha, delta, eps)
                worst = max(worst, p.degree / (DEGREE_CONSTANT / delta * math.log(1 / eps)))
    record_property("detail", f"max degree / (C ln(1/eps)/delta) = {worst:.3f} with C = {DEGREE_CONSTANT}")
    assert worst <= 1.0


@acceptance(8)
def test_iterative_loop_conformance(record_property):
    cfg = IterativeConfig(0.1, 0.9, 1.0, 1 / 16)
    assert cfg.rounds_cap == 4
    # hand traces: thresholds 1/2, 1/4, 1/8, 1/16
    expected = {1.0: 1, 1 / 3: 2, 1 / 8: 4, 1 / 15: 4}
    for x, stop in expected.items():
        res = multiplicative_estimate(lambda e, c, s, x=x: x, cfg, 0)
        assert len(res.rounds) == stop
        assert res.estimate == x
        assert [r.stopped for r in res.rounds] == [False] * (stop - 1) + [True]
    # stochastic: a noisy stub and the real pipeline
    rng = np.random.default_rng(8)
    most = 0
    for k in range(300):
        x = 2.0 ** -rng.uniform(0, 4)
        res = multiplicative_estimate(
            lambda e, c, s, x=x: x + rng.uniform(-e, e), cfg, k)
        most = max(most, len(res.rounds))
    pipe = TracePipeline(purify(random_state(4, 0.05, 1)), 2, 0.05, 0.1, 0.9)
    for s in range(100):
        used = len(pipe.run(s)[1].rounds)
        assert used <= pipe.cfg.rounds_cap
        most = max(most, used)
    record_property("detail", f"hand traces match; max rounds in stochastic runs {most} <= R")
    assert most <= 4


@acceptance(9)
def test_bounds_conformance(record_property):
    rng = np.random.default_rng(9)
    trace_ok = smax_ok = floor_ok = floor_checked = 0
    floor_fail = []
    n = 100
    for i in range(n):
        d = int(2 ** rng.integers(1, 7))
        alpha = float(rng.uniform(0.05, 4.0))
        if abs(alpha - 1) < 1e-3:
            alpha += 0.01
        delta = float(rng.uniform(0.001, 0.999) / d)
        lo, hi = trace_bounds(d, alpha)
        x = exact_trace_power(random_state(d, delta, i), alpha) / d
        expect = (d**-1.0, d**-alpha) if alpha < 1 else (d**-alpha, d**-1.0)
        trace_ok += (lo, hi) == expect and lo <= x * (1 + 1e-12) and x <= hi * (1 + 1e-12)
        s_min, s_max = entropy_bounds(d, alpha, delta)
        smax_ok += s_max <= math.log(d)
        if alpha > 1:
            floor_checked += 1
            if s_min >= claimed_entropy_floor(alpha, delta):
                floor_ok += 1
            else:
                floor_fail.append(round(alpha, 3))
    span = f", failing alpha in [{min(floor_fail)}, {max(floor_fail)}]" if floor_fail else ""
    record_property(
        "detail",
        f"trace ranges {trace_ok}/{n}, S_max<=log d {smax_ok}/{n}, "
        f"S_min>=delta*alpha/|alpha-1| {floor_ok}/{floor_checked}{span}",
    )
    assert trace_ok == n
    assert smax_ok == n
    assert floor_ok == floor_checked
