"""Simulated one-clean-qubit estimation of Renyi entropies from purified state access."""

__version__ = "0.1.0"

from . import errors

from .encoding import BlockEncoding, encode_density, read_block, verify_encoding
from .estimator import (
    EntropyEstimate,
    IterativeConfig,
    RoundTrace,
    TracePipeline,
    entropy_bounds,
    estimate_entropy_additive,
    estimate_entropy_multiplicative,
    estimate_trace_multiplicative,
    expected_cost_model,
    multiplicative_estimate,
    trace_bounds,
)
from .poly import (
    PowerPolynomial,
    amplify_encoding,
    apply_polynomial,
    build_power_polynomial,
    power_encoding,
)
from .states import (
    DensityMatrix,
    PurifiedOracle,
    StateSpec,
    build_state,
    exact_renyi_entropy,
    exact_trace_power,
    purify,
)

__all__ = [
    "errors",
    "BlockEncoding",
    "DensityMatrix",
    "EntropyEstimate",
    "IterativeConfig",
    "PowerPolynomial",
    "PurifiedOracle",
    "RoundTrace",
    "StateSpec",
    "TracePipeline",
    "amplify_encoding",
    "apply_polynomial",
    "build_power_polynomial",
    "build_state",
    "encode_density",
    "entropy_bounds",
    "estimate_entropy_additive",
    "estimate_entropy_multiplicative",
    "estimate_trace_multiplicative",
    "exact_renyi_entropy",
    "exact_trace_power",
    "expected_cost_model",
    "multiplicative_estimate",
    "power_encoding",
    "purify",
    "read_block",
    "trace_bounds",
    "verify_encoding",
]
