import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from renyi_dqc1.errors import (
    AlphaOutOfRange,
    ConfidenceTooLow,
    DeltaOutOfRange,
    PureStateSuspected,
    SpectrumViolation,
    SubroutineFailure,
)
from renyi_dqc1.estimator import (
    IterativeConfig,
    TracePipeline,
    additive_to_relative,
    entropy_bounds,
    estimate_entropy_additive,
    estimate_entropy_multiplicative,
    estimate_trace_multiplicative,
    expected_cost_model,
    multiplicative_estimate,
    trace_bounds,
)
from renyi_dqc1.states import (
    StateSpec,
    build_state,
    exact_renyi_entropy,
    exact_trace_power,
    maximally_mixed,
    purify,
)
from conftest import random_state


def diag(*p):
    return build_state(StateSpec("classical", p))


def exact_stub(x):
    return lambda eps, conf, seed: x


def test_trace_bounds_examples():
    assert trace_bounds(4, 2) == (0.0625, 0.25)
    assert trace_bounds(4, 0.5) == (0.25, 0.5)
    assert trace_bounds(2, 3) == (0.125, 0.5)
    with pytest.raises(AlphaOutOfRange):
        trace_bounds(4, 1)


def test_entropy_bounds_example():
    s_min, s_max = entropy_bounds(4, 2, 0.1)
    assert s_min == pytest.approx(-math.log(0.82), abs=1e-12)
    assert s_max == pytest.approx(-math.log(0.28), abs=1e-12)
    assert s_min == pytest.approx(0.19845, abs=1e-5)
    assert s_max == pytest.approx(1.27297, abs=1e-5)
    assert math.ceil(math.log2(s_max / s_min)) == 3


def test_entropy_bounds_limits():
    s_min, s_max = entropy_bounds(8, 2, 1e-9)
    assert s_min == pytest.approx(0, abs=1e-8)
    # the closed form tends to log(d - 1), inside log d
    assert s_max == pytest.approx(math.log(7), abs=1e-8)
    assert s_max <= math.log(8)
    with pytest.raises(DeltaOutOfRange):
        entropy_bounds(4, 2, 0.25)


@settings(max_examples=100, deadline=None)
@given(d=st.sampled_from([2, 4, 8, 16]), alpha=st.sampled_from([0.3, 0.5, 2, 2.5, 3]),
       seed=st.integers(0, 2**32 - 1))
def test_trace_bounds_contain_random_states(d, alpha, seed):
    x = exact_trace_power(random_state(d, 0.0, seed), alpha) / d
    lo, hi = trace_bounds(d, alpha)
    assert lo - 1e-12 <= x <= hi + 1e-12


def test_config_rounds():
    cfg = IterativeConfig(0.1, 0.9, 1.0, 0.25)
    assert cfg.rounds_cap == 2
    assert IterativeConfig(0.1, 0.9, 1.0, 1 / 16).rounds_cap == 4
    assert IterativeConfig(0.1, 0.9, 1.0, 0.3).rounds_cap == 2
    assert cfg.round_confidence == pytest.approx(0.95)
    with pytest.raises(ConfidenceTooLow):
        IterativeConfig(0.1, 0.7, 1.0, 0.25)


def test_stub_at_x_max_stops_first_round():
    cfg = IterativeConfig(0.1, 0.9, 1.0, 1 / 16)
    res = multiplicative_estimate(exact_stub(1.0), cfg, 0)
    assert len(res.rounds) == 1 and res.estimate == 1.0 and not res.low_confidence


def test_stub_eighth():
    cfg = IterativeConfig(0.1, 0.9, 1.0, 1 / 16)
    est, rounds = multiplicative_estimate(exact_stub(1 / 8), cfg, 0)
    assert len(rounds) <= 4 and abs(est * 8 - 1) < 0.1


def test_round_schedule_halves():
    cfg = IterativeConfig(0.2, 0.9, 0.5, 0.5 / 64)
    res = multiplicative_estimate(exact_stub(0.5 / 100), cfg, 0)
    eps = [r.eps_r for r in res.rounds]
    xs = [r.x_r for r in res.rounds]
    assert all(a == 2 * b for a, b in zip(eps, eps[1:]))
    assert all(a == 2 * b for a, b in zip(xs, xs[1:]))
    assert eps[0] == 0.2 * 0.5 / 4
    assert all(r.stopped == (r.estimate_r > r.x_r) for r in res.rounds)
    # 1/100 of x_max is below x_min: the cap binds
    assert res.cap_reached and len(res.rounds) == 6


@settings(max_examples=200, deadline=None)
@given(ratio=st.floats(1.5, 1e4), frac=st.floats(0.0, 1.0))
def test_stub_stops_at_first_threshold_below_x(ratio, frac):
    x_max = 1.0
    x_min = x_max / ratio
    x = x_min + frac * (x_max - x_min)
    cfg = IterativeConfig(0.1, 0.9, x_max, x_min)
    res = multiplicative_estimate(exact_stub(x), cfg, 0)
    expected = next((r for r in range(1, cfg.rounds_cap + 1) if x > x_max / 2**r), cfg.rounds_cap)
    assert len(res.rounds) == expected <= cfg.rounds_cap
    assert abs(res.estimate - x) <= res.rounds[-1].eps_r


def test_subroutine_measurements_are_summed():
    cfg = IterativeConfig(0.1, 0.9, 1.0, 1 / 16)
    res = multiplicative_estimate(lambda e, c, s: (1 / 15, 10), cfg, 0)
    assert res.total_measurements == 40


def test_subroutine_failure_wrapped():
    def boom(eps, conf, seed):
        raise RuntimeError("device lost")

    with pytest.raises(SubroutineFailure):
        multiplicative_estimate(boom, IterativeConfig(0.1, 0.9, 1.0, 0.1), 0)
    with pytest.raises(SubroutineFailure):
        multiplicative_estimate(lambda e, c, s: float("nan"), IterativeConfig(0.1, 0.9, 1.0, 0.1), 0)


def test_subroutine_receives_round_confidence_and_distinct_seeds():
    seen = []

    def sub(eps, conf, seed):
        seen.append((conf, tuple(seed.generate_state(2))))
        return 0.0

    multiplicative_estimate(sub, IterativeConfig(0.1, 0.9, 1.0, 1 / 8), 5)
    assert all(c == pytest.approx(1 - 0.1 / 3) for c, _ in seen)
    assert len({s for _, s in seen}) == 3


def test_cost_model():
    base = expected_cost_model(1.0, 0.1, 1.0, 0.9)
    q1 = 4.0**2 / 0.1**2 * 0.9 / (1 - 0.4)
    assert base == pytest.approx(q1)
    assert expected_cost_model(0.5, 0.1, 1.0, 0.9) == pytest.approx(4 * base)
    assert math.isfinite(expected_cost_model(0.3, 0.1, 1.0, 0.76))
    with pytest.raises(ConfidenceTooLow):
        expected_cost_model(0.3, 0.1, 1.0, 0.75)


def test_trace_pipeline_mixed_qubit():
    x_hat, rep = estimate_trace_multiplicative(purify(maximally_mixed(2)), 2, 0.25, 0.2, 0.9, 1)
    assert 0.2 < x_hat < 0.3
    assert rep.total_measurements == sum(r.measurements_r for r in rep.rounds)


def test_trace_pipeline_diagonal_and_queries():
    x_hat, rep = estimate_trace_multiplicative(purify(diag(0.75, 0.25)), 2, 0.2, 0.1, 0.9, 2)
    assert abs(x_hat / 0.3125 - 1) < 0.1
    assert rep.oracle_queries_per_circuit == 2
    _, rep = estimate_trace_multiplicative(purify(diag(0.75, 0.25)), 3, 0.2, 0.1, 0.9, 2)
    assert rep.oracle_queries_per_circuit == 3


def test_spectrum_violation():
    with pytest.raises(SpectrumViolation):
        TracePipeline(purify(diag(0.95, 0.05)), 2, 0.1, 0.1, 0.9)


def test_pipeline_seed_determinism():
    pipe = TracePipeline(purify(random_state(4, 0.05, 3)), 0.5, 0.05, 0.1, 0.9)
    assert pipe.run(9) == pipe.run(9)


def test_multiplicative_trace_coverage():
    rho = random_state(4, 0.1, 21)
    x = exact_trace_power(rho, 2.5) / 4
    pipe = TracePipeline(purify(rho), 2.5, 0.1, 0.2, 0.8)
    hits = sum(abs(pipe.run(s)[0] / x - 1) < 0.2 for s in range(300))
    assert hits / 300 >= 0.8 - 0.05


def test_amplified_strategy():
    rho = random_state(4, 0.1, 2)
    x = exact_trace_power(rho, 0.5) / 4
    x_hat, rep = estimate_trace_multiplicative(purify(rho), 0.5, 0.1, 0.1, 0.9, 4, strategy="amplified")
    assert rep.gamma > 1 and len(rep.rounds) == 1
    assert abs(x_hat / x - 1) < 0.1
    with pytest.raises(AlphaOutOfRange):
        TracePipeline(purify(rho), 2, 0.1, 0.1, 0.9, strategy="amplified")


def test_additive_relative_conversion():
    eps_rel = additive_to_relative(0.1, 2)
    assert -math.log(1 - eps_rel) == pytest.approx(0.1)
    assert math.log(1.1) <= 0.1 / abs(1 - 2)


def test_additive_entropy_examples():
    o = purify(maximally_mixed(4))
    est = estimate_entropy_additive(o, 2, 0.125, 0.1, 0.9, 1)
    assert abs(est.value - math.log(4)) <= 0.1
    assert est.precision_kind == "additive" and est.oracle_queries_per_circuit == 2
    est = estimate_entropy_additive(purify(diag(0.75, 0.25)), 2, 0.2, 0.05, 0.9, 2)
    assert abs(est.value - 0.470004) <= 0.05
    bits = estimate_entropy_additive(purify(diag(0.75, 0.25)), 2, 0.2, 0.05, 0.9, 2, "two")
    assert abs(bits.value - 0.470004 / math.log(2)) <= 0.05


def test_entropy_propagation_identity():
    rho = random_state(4, 0.05, 8)
    for alpha in (0.5, 2.5):
        s = exact_renyi_entropy(rho, alpha)
        x = exact_trace_power(rho, alpha) / 4
        pipe = TracePipeline(purify(rho), alpha, 0.05, 0.1, 0.9)
        for seed in range(20):
            est = estimate_entropy_additive(purify(rho), alpha, 0.05, 0.1, 0.9, seed, pipeline=pipe)
            x_hat = est.trace.x_hat
            assert abs(est.value - s) <= abs(math.log(x_hat / x)) / abs(1 - alpha) + 1e-12


def test_multiplicative_entropy_examples():
    est = estimate_entropy_multiplicative(purify(maximally_mixed(4)), 2, 0.1, 0.1, 0.9, 1)
    assert 0.9 <= est.value / math.log(4) <= 1.1
    assert len(est.rounds) <= 3
    assert est.total_measurements == sum(r.measurements_r for r in est.rounds)
    rho = diag(0.95, 0.05)
    s = exact_renyi_entropy(rho, 2)
    assert s == pytest.approx(-math.log(0.905), abs=1e-12)
    est = estimate_entropy_multiplicative(purify(rho), 2, 0.05, 0.1, 0.9, 3)
    assert 0.9 <= est.value / s <= 1.1


def test_pure_state_suspected():
    # the state violates the claimed cutoff only slightly but is nearly pure
    rho = diag(1 - 1e-9, 1e-9)
    with pytest.raises((PureStateSuspected, SpectrumViolation)):
        estimate_entropy_multiplicative(purify(rho), 2, 0.2, 0.1, 0.9, 1)


def test_pure_state_suspected_from_stub(monkeypatch):
    import renyi_dqc1.estimator as est_mod

    monkeypatch.setattr(
        est_mod, "estimate_entropy_additive",
        lambda *a, **k: type("E", (), {"value": 0.0, "total_measurements": 1,
                                       "low_confidence": False, "oracle_queries_per_circuit": 2})(),
    )
    with pytest.raises(PureStateSuspected):
        estimate_entropy_multiplicative(purify(diag(0.8, 0.2)), 2, 0.2, 0.1, 0.9, 1)
