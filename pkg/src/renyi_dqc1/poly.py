"""Power-function polynomials and their application to block encodings.

The polynomial transform is realised semantically: the encoded block is
diagonalised, the (rescaled) polynomial is applied to its eigenvalues, and the
result is dilated back to a unitary with one extra ancilla qubit.

Non-integer powers use ``P(x) = Q(x^2)`` where ``Q`` interpolates
``y^(alpha/2)`` at Chebyshev nodes of ``[delta^2, 1]``. Interpolating
``x^alpha`` directly on ``[delta, 1]`` gives polynomials that blow up on
``[-1, delta)``; the squared variable keeps ``P`` even and bounded on all of
``[-1, 1]`` by roughly 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev as cheb
from scipy.fft import dct

from .encoding import BlockEncoding, read_block
from .errors import (
    AmplificationOverflow,
    DeltaOutOfRange,
    DeltaTooSmall,
    ErrorBudgetExceeded,
    ValidationError,
)
from .linalg import CLAMP_WINDOW, dilate_hermitian_contraction, hermitian_eig
from .states import check_alpha

MAX_DEGREE = 10_000
MIN_DELTA = 1e-4
DEGREE_CONSTANT = 2.0
GRID_POINTS = 10_001
CAP_LIMIT = 0.5
EXACT_MARGIN = 1e-9
APPROX_MARGIN = 1e-3


def is_integer_alpha(alpha: float) -> bool:
    return float(alpha).is_integer()


def theory_degree_bound(alpha: float, delta: float, eps: float, c: float = DEGREE_CONSTANT) -> int:
    """``ceil(c * max(1, alpha)/delta * ln(1/eps))``."""
    return math.ceil(c * max(1.0, alpha) / delta * math.log(1.0 / eps))


@dataclass(frozen=True)
class PowerPolynomial:
    """Polynomial ``P ~= x^alpha`` on ``[delta, 1]`` in the Chebyshev basis.

    ``coefficients`` describe the unscaled approximant. The polynomial handed
    to the transform is ``scale_factor * P``, whose maximum modulus on
    ``[-1, 1]`` is ``cap < 1/2``.
    """

    alpha: float
    delta: float
    degree: int
    coefficients: np.ndarray
    sup_error: float
    scale_factor: float
    cap: float
    target_error: float
    exact: bool

    def __call__(self, x):
        return cheb.chebval(x, self.coefficients)

    def scaled(self, x):
        return self.scale_factor * cheb.chebval(x, self.coefficients)


def cheb_coeffs_from_nodes(values: np.ndarray) -> np.ndarray:
    """Chebyshev coefficients of the interpolant through ``values`` at the
    first-kind nodes ``cos(pi (k + 1/2)/n)`` listed in ascending order."""
    n = len(values)
    c = dct(np.asarray(values, dtype=float)[::-1], type=2) / n
    c[0] /= 2.0
    return c


def chebyshev_nodes(n: int) -> np.ndarray:
    return np.cos(np.pi * (np.arange(n) + 0.5) / n)[::-1]


def _squared_interpolant(alpha: float, delta: float, n: int) -> np.ndarray:
    lo = delta * delta
    t = chebyshev_nodes(n + 1)
    y = 0.5 * (1.0 + lo) + 0.5 * (1.0 - lo) * t
    qc = cheb_coeffs_from_nodes(y ** (0.5 * alpha))
    s = chebyshev_nodes(2 * n + 1)
    tv = (2.0 * s * s - (1.0 + lo)) / (1.0 - lo)
    pc = cheb_coeffs_from_nodes(cheb.chebval(tv, qc))
    # P is even; odd coefficients are pure roundoff
    pc[1::2] = 0.0
    return pc


def sup_error_grid(delta: float, degree: int) -> np.ndarray:
    grid = np.linspace(delta, 1.0, GRID_POINTS)
    nodes = 0.5 * (1.0 + delta) + 0.5 * (1.0 - delta) * chebyshev_nodes(max(degree, 1) + 1)
    return np.concatenate([grid, nodes])


def cap_grid(degree: int) -> np.ndarray:
    pts = max(20_001, 8 * degree + 1)
    return np.concatenate([np.linspace(-1.0, 1.0, pts), chebyshev_nodes(degree + 1)])


def _check_params(alpha: float, delta: float, target_error: float) -> float:
    alpha = check_alpha(alpha)
    if not 0 < target_error < 1:
        raise ValidationError(f"target_error must lie in (0, 1), got {target_error!r}")
    integer = is_integer_alpha(alpha)
    if not (0 <= delta < 0.5) or (delta == 0 and not integer):
        raise DeltaOutOfRange(f"delta must lie in (0, 1/2), got {delta!r}")
    if not integer and delta < MIN_DELTA:
        raise DeltaTooSmall(
            f"delta {delta!r} < {MIN_DELTA:g} would need a degree above {MAX_DEGREE}"
        )
    return alpha


def build_power_polynomial(alpha: float, delta: float, target_error: float) -> PowerPolynomial:
    """Smallest doubling-schedule approximant meeting ``target_error`` on ``[delta, 1]``."""
    alpha = _check_params(alpha, delta, target_error)
    if is_integer_alpha(alpha):
        m = int(alpha)
        coeffs = cheb.poly2cheb(np.eye(m + 1)[m])
        sf = CAP_LIMIT / (1.0 + EXACT_MARGIN)
        return PowerPolynomial(
            alpha=alpha, delta=delta, degree=m, coefficients=coeffs, sup_error=0.0,
            scale_factor=sf, cap=sf, target_error=target_error, exact=True,
        )

    half = MAX_DEGREE // 2
    n = 1
    while True:
        pc = _squared_interpolant(alpha, delta, n)
        degree = 2 * n
        g = sup_error_grid(delta, degree)
        err = float(np.max(np.abs(cheb.chebval(g, pc) - g**alpha)))
        if err <= target_error:
            break
        if n >= half:
            raise DeltaTooSmall(
                f"no polynomial of degree <= {MAX_DEGREE} reaches error {target_error:g} "
                f"for alpha={alpha}, delta={delta}"
            )
        n = min(2 * n, half)

    raw_cap = float(np.max(np.abs(cheb.chebval(cap_grid(degree), pc))))
    sf = CAP_LIMIT / (raw_cap * (1.0 + APPROX_MARGIN))
    return PowerPolynomial(
        alpha=alpha, delta=delta, degree=degree, coefficients=pc, sup_error=err,
        scale_factor=sf, cap=sf * raw_cap, target_error=target_error, exact=False,
    )


def propagated_error(enc: BlockEncoding, degree: int) -> float:
    return 4.0 * degree * math.sqrt(enc.error_bound / enc.scale)


def _embed_dilation(w: np.ndarray, ancilla_qubits: int, system_dim: int) -> np.ndarray:
    """Place the dilation ``w`` on ``[dilation | old ancilla | system]``, identity on the old ancilla."""
    da = 2**ancilla_qubits
    t = w.reshape(2, system_dim, 2, system_dim)
    u = np.einsum("ijkl,ab->iajkbl", t, np.eye(da))
    return u.reshape(2 * da * system_dim, 2 * da * system_dim)


def apply_polynomial(
    enc: BlockEncoding, poly: PowerPolynomial, error_budget: float | None = None
) -> BlockEncoding:
    """Encoding of ``P(A)`` where ``A = read_block(enc)``.

    Readback of the result is ``P(A)``; the scale is ``1/poly.scale_factor``.
    """
    extra = propagated_error(enc, poly.degree)
    if error_budget is not None and extra + 1e-9 > error_budget:
        raise ErrorBudgetExceeded(
            f"propagated input error {extra:g} does not fit the budget {error_budget:g}"
        )
    block = read_block(enc)
    eig = hermitian_eig(block)
    m = eig.apply(poly.scaled)
    w = dilate_hermitian_contraction(m)
    u = _embed_dilation(w, enc.ancilla_qubits, enc.system_dim)
    u.setflags(write=False)
    return BlockEncoding(
        unitary=u,
        scale=1.0 / poly.scale_factor,
        ancilla_qubits=enc.ancilla_qubits + 1,
        system_qubits=enc.system_qubits,
        error_bound=poly.sup_error + extra,
        queries=enc.queries * poly.degree,
    )


def amplification_degree(gamma: float, delta: float, rel_error: float) -> int:
    return math.ceil(DEGREE_CONSTANT * gamma / delta * math.log(gamma / rel_error))


def amplify_encoding(enc: BlockEncoding, gamma: float, delta: float, rel_error: float) -> BlockEncoding:
    """Encoding with every eigenvalue of the encoded block multiplied by ``gamma``.

    The scale is unchanged, so readback is ``gamma * read_block(enc)``. The
    amplification is applied exactly; ``delta`` and ``rel_error`` only feed the
    query bookkeeping of a polynomial implementation.
    """
    if not gamma > 1:
        raise ValidationError(f"gamma must exceed 1, got {gamma!r}")
    if not 0 < delta < 1:
        raise DeltaOutOfRange(f"delta must lie in (0, 1), got {delta!r}")
    if not 0 < rel_error < 1:
        raise ValidationError(f"rel_error must lie in (0, 1), got {rel_error!r}")
    inner = enc.unitary[: enc.system_dim, : enc.system_dim]
    eig = hermitian_eig(inner)
    top = float(np.max(np.abs(eig.eigenvalues))) * gamma
    if top > 1.0 + CLAMP_WINDOW:
        raise AmplificationOverflow(f"amplified eigenvalue {top!r} exceeds 1")
    w = dilate_hermitian_contraction(gamma * 0.5 * (inner + inner.conj().T))
    u = _embed_dilation(w, enc.ancilla_qubits, enc.system_dim)
    u.setflags(write=False)
    return BlockEncoding(
        unitary=u,
        scale=enc.scale,
        ancilla_qubits=enc.ancilla_qubits + 1,
        system_qubits=enc.system_qubits,
        error_bound=gamma * enc.error_bound,
        queries=enc.queries * amplification_degree(gamma, delta, rel_error),
    )


@dataclass(frozen=True)
class TransformReport:
    requested_error: float
    achieved_degree: int
    theory_degree_bound: int
    encoding: BlockEncoding
    polynomial: PowerPolynomial


def power_encoding(
    enc: BlockEncoding, alpha: float, delta: float, target_error: float
) -> TransformReport:
    """Build the polynomial for ``x^alpha`` and apply it to ``enc``.

    The input error is charged against ``target_error`` together with the
    polynomial error.
    """
    if not 0 < target_error < 1:
        raise ValidationError(f"target_error must lie in (0, 1), got {target_error!r}")
    poly = build_power_polynomial(alpha, delta, target_error)
    out = apply_polynomial(enc, poly, error_budget=target_error if enc.error_bound else None)
    if delta > 0:
        bound = theory_degree_bound(alpha, delta, target_error)
    else:
        bound = poly.degree
    return TransformReport(
        requested_error=target_error,
        achieved_degree=poly.degree,
        theory_degree_bound=bound,
        encoding=out,
        polynomial=poly,
    )

