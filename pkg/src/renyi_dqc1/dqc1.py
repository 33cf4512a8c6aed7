"""One-clean-qubit trace estimation.

Only the clean-qubit marginal is simulated: for a controlled ``U`` acting on
``n`` maximally mixed qubits the clean qubit has ``<X> = Re Tr U / 2^n`` and
``<Y> = -Im Tr U / 2^n``, so each shot is a ``+-1`` coin with
``p(+1) = (1 + <basis>)/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .encoding import BlockEncoding
from .errors import InfeasibleShotBudget, ValidationError
from .linalg import DEFAULT_TOL, as_matrix, is_unitary, num_qubits

DEFAULT_SHOT_CAP = 10**9
DEFAULT_ETA = 0.05
# largest shot count per binomial draw; keeps numpy's int64 sampler safe
BATCH_SHOTS = 2**44


@dataclass(frozen=True, eq=False)
class Dqc1Circuit:
    """Controlled ``target_unitary`` on ``n`` dirty qubits.

    With ``phase_variant`` the conditional phase ``V = i`` on the first
    ``block_dim`` basis states (ancilla in ``|0...0>``) and ``1`` elsewhere is
    composed before ``U``.
    """

    target_unitary: np.ndarray
    phase_variant: bool = False
    block_dim: int | None = None

    @classmethod
    def checked(cls, u, phase_variant: bool = False, block_dim: int | None = None, tol=DEFAULT_TOL):
        arr = as_matrix(u)
        num_qubits(arr.shape[0])
        if not is_unitary(arr, tol):
            raise ValidationError("target is not unitary")
        return cls(arr, phase_variant, block_dim)

    @property
    def n(self) -> int:
        return num_qubits(self.target_unitary.shape[0])

    def trace(self) -> complex:
        diag = np.diagonal(self.target_unitary)
        if not self.phase_variant:
            return complex(diag.sum())
        k = self.target_unitary.shape[0] if self.block_dim is None else self.block_dim
        return complex(1j * diag[:k].sum() + diag[k:].sum())


def exact_clean_qubit_expectations(circ: Dqc1Circuit) -> tuple[float, float]:
    tr = circ.trace() / 2**circ.n
    return float(tr.real), float(-tr.imag)


def sample_clean_qubit(circ: Dqc1Circuit, basis: str, shots: int, seed) -> float:
    """Empirical mean of ``shots`` clean-qubit outcomes in the X or Y basis.

    Shots are drawn as binomial counts in batches, each batch from its own
    stream spawned off ``seed``, and summed.
    """
    shots = int(shots)
    if shots < 1:
        raise ValidationError("shots must be at least 1")
    x, y = exact_clean_qubit_expectations(circ)
    if basis == "X":
        mean = x
    elif basis == "Y":
        mean = y
    else:
        raise ValidationError(f"basis must be 'X' or 'Y', got {basis!r}")
    p = min(max(0.5 * (1.0 + mean), 0.0), 1.0)
    return _binomial_mean(p, shots, seed)


def _binomial_mean(p: float, shots: int, seed) -> float:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    n_batches = -(-shots // BATCH_SHOTS)
    plus = 0
    remaining = shots
    for child in ss.spawn(n_batches):
        k = min(remaining, BATCH_SHOTS)
        plus += int(np.random.default_rng(child).binomial(k, p))
        remaining -= k
    return (2 * plus - shots) / shots


def hoeffding_shots(eps: float, eta: float) -> int:
    """Shots so that a mean of ``+-1`` outcomes is within ``eps`` w.p. ``1 - eta``.

    ``2 exp(-N eps^2 / 2) <= eta`` gives ``N = ceil(2 ln(2/eta) / eps^2)``.
    """
    return math.ceil(2.0 * math.log(2.0 / eta) / (eps * eps))


@dataclass(frozen=True)
class TraceEstimate:
    """Estimate of ``Tr(A)/2^s`` for the operator ``A`` carried by an encoding.

    ``measurements_used`` includes the ancilla-dilution inflation;
    ``nominal_measurements`` is the count the same precision would need with
    no ancilla dilution and unit scale.
    """

    value: float
    additive_error_target: float
    confidence: float
    measurements_used: int
    nominal_measurements: int
    shots_per_circuit: int
    rescale_factor: float
    seed: int


def _seed_int(seed) -> int:
    if isinstance(seed, np.random.SeedSequence):
        return int(seed.generate_state(2, np.uint32).view(np.uint64)[0])
    return int(seed)


def estimate_block_trace(
    enc: BlockEncoding,
    epsilon: float,
    eta: float = DEFAULT_ETA,
    seed=0,
    shot_cap: int = DEFAULT_SHOT_CAP,
) -> TraceEstimate:
    """Estimate ``Tr(A)/d`` (``d = 2^s``) for ``A = read_block(enc)`` to additive ``epsilon``.

    Uses ``Re Tr U - Re Tr(U V)``, which equals ``Tr`` of the ``|0>_a`` block
    of ``U`` for a Hermitian block. Each half gets ``epsilon/2`` and
    ``eta/2``. The returned value multiplies the circuit estimate by
    ``2^(n-s) * scale``, so the circuit precision is shrunk by the same factor.
    """
    if not 0 < epsilon < 1 or not 0 < eta < 1:
        raise ValidationError("epsilon and eta must lie in (0, 1)")
    n = enc.total_qubits
    rf = 2.0 ** (n - enc.system_qubits) * enc.scale
    eps_half = epsilon / rf / 2.0
    shots_half = hoeffding_shots(eps_half, eta / 2.0)
    total = 2 * shots_half
    if total > shot_cap:
        raise InfeasibleShotBudget(
            f"{total} measurements needed, cap is {shot_cap}", required=total, cap=shot_cap
        )
    nominal = 2 * hoeffding_shots(epsilon / 2.0, eta / 2.0)
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    s_plain, s_phase = ss.spawn(2)
    plain = Dqc1Circuit(enc.unitary)
    phased = Dqc1Circuit(enc.unitary, phase_variant=True, block_dim=enc.system_dim)
    m_plain = sample_clean_qubit(plain, "X", shots_half, s_plain)
    m_phase = sample_clean_qubit(phased, "X", shots_half, s_phase)
    return TraceEstimate(
        value=rf * (m_plain - m_phase),
        additive_error_target=epsilon,
        confidence=1.0 - eta,
        measurements_used=total,
        nominal_measurements=nominal,
        shots_per_circuit=shots_half,
        rescale_factor=rf,
        seed=_seed_int(seed),
    )


def exact_block_trace(enc: BlockEncoding) -> float:
    """Noise-free value of the two-circuit difference, rescaled like the estimator."""
    n = enc.total_qubits
    rf = 2.0 ** (n - enc.system_qubits) * enc.scale
    x_plain, _ = exact_clean_qubit_expectations(Dqc1Circuit(enc.unitary))
    x_phase, _ = exact_clean_qubit_expectations(
        Dqc1Circuit(enc.unitary, phase_variant=True, block_dim=enc.system_dim)
    )
    return rf * (x_plain - x_phase)
