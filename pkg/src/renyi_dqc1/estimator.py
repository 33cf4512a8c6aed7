"""Trace and entropy estimators built from DQC1 additive estimates.

``multiplicative_estimate`` is the halving-threshold loop: round ``r`` asks
for additive precision ``eps_rel * x_max / 2^(r+1)`` and stops once the
estimate exceeds ``x_max / 2^r``. The trace pipeline wraps it around the
density encoding, the power transform and the two-circuit DQC1 estimator;
the entropy estimators sit on top.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dqc1 import estimate_block_trace
from .encoding import BlockEncoding, encode_density
from .errors import (
    AlphaOutOfRange,
    ConfidenceTooLow,
    DeltaOutOfRange,
    PureStateSuspected,
    RenyiError,
    SpectrumViolation,
    SubroutineFailure,
    ValidationError,
)
from .poly import TransformReport, amplify_encoding, power_encoding
from .states import PurifiedOracle, check_alpha, log_in_base

PIPELINE_SHOT_CAP = 10**15
SPECTRUM_TOL = 1e-9
POLY_ERROR_FRACTION = 0.1


def _as_seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(int(seed))


# ---------------------------------------------------------------- bounds


def trace_bounds(d: int, alpha: float) -> tuple[float, float]:
    """Range of ``(1/d) Tr rho^alpha`` over all states of dimension ``d``."""
    alpha = check_alpha(alpha)
    if d < 2:
        raise ValidationError(f"dimension must be at least 2, got {d}")
    a, b = float(d) ** -1.0, float(d) ** -alpha
    return (a, b) if alpha < 1 else (b, a)


def entropy_bounds(d: int, alpha: float, delta: float) -> tuple[float, float]:
    """Closed-form ``(s_min, s_max)`` in nats for spectra bounded below by ``delta``."""
    alpha = check_alpha(alpha)
    if d < 2:
        raise ValidationError(f"dimension must be at least 2, got {d}")
    if not 0 < delta < 1.0 / d:
        raise DeltaOutOfRange(f"delta must lie in (0, 1/d) = (0, {1.0 / d:g}), got {delta!r}")
    k = 1.0 / (1.0 - alpha)
    s_min = k * math.log(delta**alpha + (1.0 - delta) ** alpha)
    s_max = k * math.log(delta**alpha + (d - 1) ** (1.0 - alpha) * (1.0 - delta) ** alpha)
    return s_min, s_max


def claimed_entropy_floor(alpha: float, delta: float) -> float:
    """The simple lower bound ``delta * alpha / |alpha - 1|`` quoted for alpha > 1."""
    return delta * alpha / abs(alpha - 1.0)


# ------------------------------------------------------- iterative loop


@dataclass(frozen=True)
class IterativeConfig:
    eps_rel: float
    confidence: float
    x_max: float
    x_min: float
    shot_cap: int = PIPELINE_SHOT_CAP

    def __post_init__(self):
        if not 0 < self.eps_rel < 2:
            raise ValidationError(f"eps_rel must lie in (0, 2), got {self.eps_rel!r}")
        if not 0.75 < self.confidence < 1:
            raise ConfidenceTooLow(f"confidence must lie in (3/4, 1), got {self.confidence!r}")
        if not 0 < self.x_min < self.x_max:
            raise ValidationError("need 0 < x_min < x_max")

    @property
    def rounds_cap(self) -> int:
        # the epsilon keeps exact powers of two from rounding up
        return max(1, math.ceil(math.log2(self.x_max / self.x_min) - 1e-12))

    @property
    def round_confidence(self) -> float:
        return 1.0 - (1.0 - self.confidence) / self.rounds_cap

    def eps_round(self, r: int) -> float:
        return self.eps_rel * self.x_max / 2.0 ** (r + 1)

    def threshold(self, r: int) -> float:
        return self.x_max / 2.0**r


@dataclass(frozen=True)
class RoundTrace:
    round_index: int
    eps_r: float
    x_r: float
    estimate_r: float
    measurements_r: int
    stopped: bool
    detail: object = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class IterativeResult:
    estimate: float
    rounds: tuple[RoundTrace, ...]
    cap_reached: bool

    @property
    def low_confidence(self) -> bool:
        return self.cap_reached

    @property
    def total_measurements(self) -> int:
        return sum(r.measurements_r for r in self.rounds)

    def __iter__(self):
        # allows ``estimate, rounds = multiplicative_estimate(...)``
        return iter((self.estimate, self.rounds))


def multiplicative_estimate(
    additive_subroutine: Callable, cfg: IterativeConfig, seed=0
) -> IterativeResult:
    """Run the halving-threshold loop with at most ``cfg.rounds_cap`` rounds.

    ``additive_subroutine(eps, confidence, seed)`` returns either an estimate
    or ``(estimate, measurements)`` or ``(estimate, measurements, detail)``.
    Errors raised by the subroutine that are not package errors are wrapped
    in :class:`SubroutineFailure`.
    """
    R = cfg.rounds_cap
    c_round = cfg.round_confidence
    seeds = _as_seed_sequence(seed).spawn(R)
    rounds = []
    for r in range(1, R + 1):
        eps_r = cfg.eps_round(r)
        x_r = cfg.threshold(r)
        try:
            out = additive_subroutine(eps_r, c_round, seeds[r - 1])
        except RenyiError:
            raise
        except Exception as exc:
            raise SubroutineFailure(f"additive subroutine failed in round {r}: {exc}") from exc
        detail = None
        if isinstance(out, tuple):
            est, meas = float(out[0]), int(out[1])
            if len(out) > 2:
                detail = out[2]
        else:
            est, meas = float(out), 0
        if not math.isfinite(est):
            raise SubroutineFailure(f"additive subroutine returned {est!r} in round {r}")
        stopped = est > x_r
        rounds.append(RoundTrace(r, eps_r, x_r, est, meas, stopped, detail))
        if stopped:
            return IterativeResult(est, tuple(rounds), cap_reached=False)
    return IterativeResult(rounds[-1].estimate_r, tuple(rounds), cap_reached=True)


def expected_cost_model(x: float, eps_rel: float, x_max: float, confidence: float) -> float:
    """Closed-form expected-measurement bound.

    ``confidence`` is the per-round confidence ``c'``; the geometric tail only
    converges for ``c' > 3/4``.
    """
    if not 0 < x <= x_max:
        raise ValidationError("need 0 < x <= x_max")
    if not confidence > 0.75:
        raise ConfidenceTooLow(f"per-round confidence {confidence!r} must exceed 3/4")
    if not confidence <= 1:
        raise ValidationError("confidence must not exceed 1")
    q = math.ceil(math.log2(2.0 * x_max / x) - 1e-12)
    c = confidence
    return 4.0 ** (q + 1) / (x_max * eps_rel) ** 2 * c / (1.0 - 4.0 * (1.0 - c))


# ------------------------------------------------------- trace pipeline


@dataclass(frozen=True)
class TraceReport:
    x_hat: float
    x_min: float
    x_max: float
    eps_rel: float
    confidence: float
    round_confidence: float
    rounds_cap: int
    rounds: tuple[RoundTrace, ...]
    total_measurements: int
    nominal_measurements: int
    oracle_queries_per_circuit: int
    polynomial_degree: int
    theory_degree_bound: int
    polynomial_error: float
    encoding_scale: float
    encoding_ancillas: int
    rescale_factor: float
    cap_reached: bool
    low_confidence: bool
    strategy: str
    gamma: float = 1.0


class TracePipeline:
    """Everything for estimating ``x = (1/d) Tr rho^alpha`` that does not depend on the seed.

    Building the encodings is the expensive part, so repeated runs reuse one
    instance.
    """

    def __init__(
        self,
        oracle: PurifiedOracle,
        alpha: float,
        delta: float,
        eps_rel: float,
        confidence: float,
        shot_cap: int = PIPELINE_SHOT_CAP,
        strategy: str = "iterative",
    ):
        self.alpha = check_alpha(alpha)
        if strategy not in ("iterative", "amplified"):
            raise ValidationError(f"unknown strategy {strategy!r}")
        if strategy == "amplified" and self.alpha > 1:
            raise AlphaOutOfRange("the amplified strategy needs alpha < 1")
        self.strategy = strategy
        self.oracle = oracle
        self.d = 2**oracle.system_qubits
        self.delta = float(delta)
        lam_min = oracle.state.min_eigenvalue
        if lam_min < self.delta - SPECTRUM_TOL:
            raise SpectrumViolation(
                f"smallest eigenvalue {lam_min!r} is below the cutoff delta={self.delta!r}"
            )
        self.x_min, self.x_max = trace_bounds(self.d, self.alpha)
        self.cfg = IterativeConfig(eps_rel, confidence, self.x_max, self.x_min, shot_cap)
        self.shot_cap = shot_cap
        # the polynomial bias must stay well below the finest round precision
        eps_floor = self.cfg.eps_round(self.cfg.rounds_cap)
        if strategy == "amplified":
            eps_floor = eps_rel * self.x_min
        self.poly_target = min(POLY_ERROR_FRACTION * eps_floor, 0.5)
        base = encode_density(oracle)
        self.transform: TransformReport = power_encoding(
            base, self.alpha, self.delta, self.poly_target
        )
        self.encoding: BlockEncoding = self.transform.encoding
        self.gamma = 1.0
        if strategy == "amplified":
            self._amplify()

    def _amplify(self):
        enc = self.encoding
        k = enc.system_dim
        top = float(np.max(np.abs(np.linalg.eigvalsh(enc.unitary[:k, :k]))))
        gamma = min(float(self.d), (1.0 - self.delta) / top)
        if gamma > 1.0:
            self.gamma = gamma
            self.encoding = amplify_encoding(enc, gamma, self.delta, POLY_ERROR_FRACTION)

    @property
    def polynomial_error(self) -> float:
        return self.transform.encoding.error_bound

    @property
    def queries_per_circuit(self) -> int:
        return self.encoding.queries

    def additive(self, eps: float, confidence: float, seed):
        """Additive estimate of ``x`` to ``eps``: the sampling gets what the bias leaves."""
        # error_bound is in units of the (possibly amplified) encoded operator
        bias = self.encoding.error_bound
        eps_sample = self.gamma * eps - bias
        if eps_sample <= 0:
            raise ValidationError("polynomial error exceeds the requested precision")
        est = estimate_block_trace(
            self.encoding, eps_sample, 1.0 - confidence, seed, shot_cap=self.shot_cap
        )
        return est.value / self.gamma, est.measurements_used, est

    def run(self, seed=0) -> tuple[float, TraceReport]:
        if self.strategy == "amplified":
            return self._run_amplified(seed)
        res = multiplicative_estimate(self.additive, self.cfg, seed)
        x_hat = min(max(res.estimate, self.x_min), self.x_max)
        last = res.rounds[-1]
        # with x >= x_min >= x_R the capped round is still accurate to eps_R
        inconsistent = res.cap_reached and last.estimate_r + last.eps_r < self.x_min
        return x_hat, self._report(x_hat, res.rounds, res.cap_reached, inconsistent)

    def _run_amplified(self, seed):
        eps = self.cfg.eps_rel * self.x_min
        value, meas, est = self.additive(eps, self.cfg.confidence, _as_seed_sequence(seed))
        rnd = RoundTrace(1, eps, self.x_min, value, meas, True, est)
        x_hat = min(max(value, self.x_min), self.x_max)
        return x_hat, self._report(x_hat, (rnd,), False, False)

    def _report(self, x_hat, rounds, cap_reached, low_confidence) -> TraceReport:
        nominal = sum(getattr(r.detail, "nominal_measurements", 0) for r in rounds)
        rf = rounds[-1].detail.rescale_factor if rounds and rounds[-1].detail else 0.0
        return TraceReport(
            x_hat=x_hat,
            x_min=self.x_min,
            x_max=self.x_max,
            eps_rel=self.cfg.eps_rel,
            confidence=self.cfg.confidence,
            round_confidence=self.cfg.round_confidence,
            rounds_cap=self.cfg.rounds_cap,
            rounds=tuple(rounds),
            total_measurements=sum(r.measurements_r for r in rounds),
            nominal_measurements=nominal,
            oracle_queries_per_circuit=self.queries_per_circuit,
            polynomial_degree=self.transform.achieved_degree,
            theory_degree_bound=self.transform.theory_degree_bound,
            polynomial_error=self.polynomial_error,
            encoding_scale=self.encoding.scale,
            encoding_ancillas=self.encoding.ancilla_qubits,
            rescale_factor=rf,
            cap_reached=cap_reached,
            low_confidence=low_confidence,
            strategy=self.strategy,
            gamma=self.gamma,
        )


def estimate_trace_multiplicative(
    rho_oracle: PurifiedOracle,
    alpha: float,
    delta: float,
    eps_rel: float,
    confidence: float,
    seed=0,
    shot_cap: int = PIPELINE_SHOT_CAP,
    strategy: str = "iterative",
) -> tuple[float, TraceReport]:
    """Estimate ``x = (1/d) Tr rho^alpha`` to relative precision ``eps_rel``."""
    pipe = TracePipeline(rho_oracle, alpha, delta, eps_rel, confidence, shot_cap, strategy)
    return pipe.run(seed)


# ---------------------------------------------------------------- entropy


@dataclass(frozen=True)
class EntropyEstimate:
    value: float
    alpha: float
    log_base: str
    precision_kind: str
    precision: float
    confidence: float
    total_measurements: int
    oracle_queries_per_circuit: int
    rounds: tuple[RoundTrace, ...]
    low_confidence: bool = False
    trace: TraceReport | None = None
    inner_eps_rel: float | None = None


def additive_to_relative(eps: float, alpha: float) -> float:
    """Relative trace precision that guarantees additive entropy error ``eps``.

    ``|log(x'/x)| <= -log(1 - eps_rel) = eps |1 - alpha|``.
    """
    return -math.expm1(-eps * abs(1.0 - alpha))


def entropy_from_normalized_trace(x: float, d: int, alpha: float, log_base: str) -> float:
    return log_in_base(d * x, log_base) / (1.0 - alpha)


def _check_log_base(log_base: str):
    if log_base not in ("natural", "two"):
        raise ValidationError(f"unknown log base {log_base!r}")


def estimate_entropy_additive(
    rho_oracle: PurifiedOracle,
    alpha: float,
    delta: float,
    eps: float,
    confidence: float,
    seed=0,
    log_base: str = "natural",
    shot_cap: int = PIPELINE_SHOT_CAP,
    strategy: str = "iterative",
    pipeline: TracePipeline | None = None,
) -> EntropyEstimate:
    """Entropy to additive precision ``eps`` (in the units of ``log_base``)."""
    alpha = check_alpha(alpha)
    _check_log_base(log_base)
    if not eps > 0:
        raise ValidationError(f"eps must be positive, got {eps!r}")
    eps_nats = eps * math.log(2.0) if log_base == "two" else eps
    eps_rel = additive_to_relative(eps_nats, alpha)
    if pipeline is None:
        pipeline = TracePipeline(
            rho_oracle, alpha, delta, eps_rel, confidence, shot_cap, strategy
        )
    x_hat, rep = pipeline.run(seed)
    d = 2**rho_oracle.system_qubits
    value = max(entropy_from_normalized_trace(x_hat, d, alpha, log_base), 0.0)
    return EntropyEstimate(
        value=value,
        alpha=alpha,
        log_base=log_base,
        precision_kind="additive",
        precision=eps,
        confidence=confidence,
        total_measurements=rep.total_measurements,
        oracle_queries_per_circuit=rep.oracle_queries_per_circuit,
        rounds=rep.rounds,
        low_confidence=rep.low_confidence,
        trace=rep,
        inner_eps_rel=eps_rel,
    )


def estimate_entropy_multiplicative(
    rho_oracle: PurifiedOracle,
    alpha: float,
    delta: float,
    eps_rel: float,
    confidence: float,
    seed=0,
    log_base: str = "natural",
    shot_cap: int = PIPELINE_SHOT_CAP,
) -> EntropyEstimate:
    """Entropy to relative precision ``eps_rel``.

    The outer loop runs over ``[s_min, s_max]`` from :func:`entropy_bounds`;
    each outer round asks for an additive entropy estimate at its round
    precision and passes its per-round confidence down.
    """
    alpha = check_alpha(alpha)
    _check_log_base(log_base)
    d = 2**rho_oracle.system_qubits
    s_min, s_max = entropy_bounds(d, alpha, delta)
    if s_max <= s_min * (1.0 + 1e-9):
        # d = 2 pins both bounds to the same spectrum; log d is always an upper bound
        s_max = math.log(d)
    cfg = IterativeConfig(eps_rel, confidence, s_max, s_min, shot_cap)
    pipelines: dict[tuple, TracePipeline] = {}

    def inner(eps_s, conf, seed_s):
        er = round(additive_to_relative(eps_s, alpha), 15)
        key = (er, conf)
        if key not in pipelines:
            pipelines[key] = TracePipeline(rho_oracle, alpha, delta, er, conf, shot_cap)
        est = estimate_entropy_additive(
            rho_oracle, alpha, delta, eps_s, conf, seed_s, "natural",
            pipeline=pipelines[key],
        )
        return est.value, est.total_measurements, est

    res = multiplicative_estimate(inner, cfg, seed)
    last = res.rounds[-1]
    if res.cap_reached and last.estimate_r + last.eps_r < s_min:
        raise PureStateSuspected(
            f"entropy estimate {last.estimate_r:g} is below the floor {s_min:g}; "
            "the state may be pure or violate the cutoff"
        )
    value = res.estimate
    if log_base == "two":
        value /= math.log(2.0)
    inner_low = any(r.detail.low_confidence for r in res.rounds if r.detail is not None)
    queries = res.rounds[-1].detail.oracle_queries_per_circuit
    return EntropyEstimate(
        value=value,
        alpha=alpha,
        log_base=log_base,
        precision_kind="multiplicative",
        precision=eps_rel,
        confidence=confidence,
        total_measurements=res.total_measurements,
        oracle_queries_per_circuit=queries,
        rounds=res.rounds,
        low_confidence=inner_low,
        trace=None,
    )

