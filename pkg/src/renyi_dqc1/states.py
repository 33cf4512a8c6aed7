"""Density matrices, exact spectral functionals and purified oracles."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import AlphaOutOfRange, DimensionMismatch, InvalidSpec, NonHermitian, ValidationError
from .linalg import (
    DEFAULT_TOL,
    HermitianEig,
    as_matrix,
    haar_unitary,
    hermitian_eig,
    num_qubits,
)

ZERO_EIG = 1e-14
NORMALIZATION_TOL = 1e-9
LOG_BASES = ("natural", "two")


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, PSD, unit-trace matrix of power-of-two dimension.

    The constructor validates the matrix; use :meth:`from_matrix` for the
    usual entry point.
    """

    matrix: np.ndarray
    spectrum: HermitianEig = field(repr=False)

    @classmethod
    def from_matrix(cls, m, tol: float = DEFAULT_TOL) -> "DensityMatrix":
        arr = as_matrix(m)
        try:
            num_qubits(arr.shape[0])
        except DimensionMismatch as exc:
            raise InvalidSpec(str(exc)) from None
        eig = hermitian_eig(arr, tol)
        if eig.eigenvalues[-1] < -tol:
            raise InvalidSpec(f"matrix has negative eigenvalue {eig.eigenvalues[-1]!r}")
        tr = float(np.real(np.trace(arr)))
        if abs(tr - 1.0) > tol:
            raise InvalidSpec(f"trace {tr!r} differs from 1")
        clamped = HermitianEig(np.clip(eig.eigenvalues, 0.0, None), eig.eigenvectors)
        herm = 0.5 * (arr + arr.conj().T)
        herm.setflags(write=False)
        return cls(matrix=herm, spectrum=clamped)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def system_qubits(self) -> int:
        return num_qubits(self.dim)

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.spectrum.eigenvalues

    @property
    def min_eigenvalue(self) -> float:
        return float(self.spectrum.eigenvalues[-1])

    def power(self, alpha: float) -> np.ndarray:
        """Matrix power from the spectrum, with tiny eigenvalues mapped to 0."""
        def f(lam):
            out = np.zeros_like(lam)
            keep = lam >= ZERO_EIG
            out[keep] = lam[keep] ** alpha
            return out
        return self.spectrum.apply(f)


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not math.isfinite(alpha) or alpha <= 0 or alpha == 1.0:
        raise AlphaOutOfRange(f"alpha must be positive and different from 1, got {alpha!r}")
    return alpha


def log_in_base(value: float, log_base: str) -> float:
    if log_base == "natural":
        return math.log(value)
    if log_base == "two":
        return math.log(value) / math.log(2.0)
    raise ValidationError(f"unknown log base {log_base!r}")


def trace_power_of_spectrum(eigenvalues, alpha: float) -> float:
    lam = np.asarray(eigenvalues, dtype=float)
    lam = lam[lam >= ZERO_EIG]
    return float(np.sum(lam**alpha))


def exact_trace_power(rho: DensityMatrix, alpha: float) -> float:
    """``sum_i p_i^alpha`` over the spectrum of ``rho``."""
    alpha = check_alpha(alpha)
    return trace_power_of_spectrum(rho.eigenvalues, alpha)


def exact_renyi_entropy(rho: DensityMatrix, alpha: float, log_base: str = "natural") -> float:
    alpha = check_alpha(alpha)
    tr = trace_power_of_spectrum(rho.eigenvalues, alpha)
    value = log_in_base(tr, log_base) / (1.0 - alpha)
    # log(1) may come out as a tiny negative number
    return max(value, 0.0)


@dataclass(frozen=True)
class StateSpec:
    """Recipe for a density matrix.

    ``kind`` is one of ``eigenvalues``, ``matrix``, ``classical``, ``random``.
    Payloads:

    * ``eigenvalues`` / ``classical``: a sequence of weights summing to 1.
      ``eigenvalues`` uses a Haar-random eigenbasis when ``seed`` is given and
      the computational basis otherwise; ``classical`` is always diagonal.
    * ``matrix``: a square complex array.
    * ``random``: ``(dim, delta)``; spectrum ``delta + (1 - dim*delta)*w`` with
      Dirichlet weights ``w`` and a Haar-random eigenbasis.
    """

    kind: str
    payload: object
    seed: int | None = None


def _weights(payload) -> np.ndarray:
    try:
        w = np.asarray(payload, dtype=float).ravel()
    except (TypeError, ValueError):
        raise InvalidSpec("weights must be real numbers") from None
    if w.size == 0 or not np.all(np.isfinite(w)):
        raise InvalidSpec("weights must be finite and non-empty")
    if np.any(w < 0):
        raise InvalidSpec("weights must be nonnegative")
    if abs(w.sum() - 1.0) > NORMALIZATION_TOL:
        raise InvalidSpec(f"weights sum to {w.sum()!r}, expected 1")
    try:
        num_qubits(w.size)
    except DimensionMismatch as exc:
        raise InvalidSpec(str(exc)) from None
    return w / w.sum()


def build_state(spec: StateSpec) -> DensityMatrix:
    kind = spec.kind
    if kind == "classical":
        return DensityMatrix.from_matrix(np.diag(_weights(spec.payload)).astype(complex))
    if kind == "eigenvalues":
        w = _weights(spec.payload)
        if spec.seed is None:
            return DensityMatrix.from_matrix(np.diag(w).astype(complex))
        v = haar_unitary(w.size, np.random.default_rng(spec.seed))
        return DensityMatrix.from_matrix((v * w) @ v.conj().T)
    if kind == "matrix":
        try:
            m = as_matrix(spec.payload)
            return DensityMatrix.from_matrix(m)
        except NonHermitian:
            raise
        except ValidationError as exc:
            raise InvalidSpec(str(exc)) from None
    if kind == "random":
        try:
            dim, delta = spec.payload
            dim = int(dim)
            delta = float(delta)
        except (TypeError, ValueError):
            raise InvalidSpec("random payload must be (dim, delta)") from None
        try:
            num_qubits(dim)
        except DimensionMismatch as exc:
            raise InvalidSpec(str(exc)) from None
        if not 0 <= delta <= 1.0 / dim:
            raise InvalidSpec(f"delta must lie in [0, 1/dim], got {delta!r}")
        rng = np.random.default_rng(spec.seed)
        w = rng.dirichlet(np.ones(dim))
        lam = delta + (1.0 - dim * delta) * w
        v = haar_unitary(dim, rng)
        return DensityMatrix.from_matrix((v * lam) @ v.conj().T)
    raise InvalidSpec(f"unknown state kind {kind!r}")


def maximally_mixed(dim: int) -> DensityMatrix:
    return build_state(StateSpec("classical", np.full(dim, 1.0 / dim)))


def load_state_file(path) -> DensityMatrix:
    """Read a JSON state file.

    Accepted forms: ``{"kind": "eigenvalues"|"classical", "dim": d,
    "eigenvalues": [...]}``, ``{"kind": "mixed", "dim": d}`` and
    ``{"kind": "matrix", "re": [[...]], "im": [[...]]}``.
    """
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidSpec(f"cannot read state file {path}: {exc}") from None
    if not isinstance(data, dict):
        raise InvalidSpec("state file must contain a JSON object")
    kind = data.get("kind")
    if kind == "matrix":
        try:
            re = np.asarray(data["re"], dtype=float)
            im = np.asarray(data.get("im", np.zeros_like(re)), dtype=float)
        except (KeyError, TypeError, ValueError):
            raise InvalidSpec("matrix state file needs numeric 're' and 'im' arrays") from None
        if re.shape != im.shape:
            raise InvalidSpec("'re' and 'im' shapes differ")
        return build_state(StateSpec("matrix", re + 1j * im))
    if kind == "mixed":
        return maximally_mixed(int(data.get("dim", 0)))
    if kind in ("eigenvalues", "classical"):
        eig = data.get("eigenvalues")
        if eig is None:
            raise InvalidSpec("state file is missing 'eigenvalues'")
        if "dim" in data and int(data["dim"]) != len(eig):
            raise InvalidSpec("'dim' does not match the number of eigenvalues")
        return build_state(StateSpec(kind, eig, data.get("seed")))
    raise InvalidSpec(f"unknown state file kind {kind!r}")


@dataclass(frozen=True, eq=False)
class PurifiedOracle:
    """Unitary ``U`` on ``[ancilla a | system s]`` with ``U|0> = sum_i sqrt(p_i)|i>|psi_i>``."""

    system_qubits: int
    ancilla_qubits: int
    unitary: np.ndarray
    state: DensityMatrix = field(repr=False)

    @cached_property
    def purification(self) -> np.ndarray:
        return self.unitary[:, 0].copy()

    def reduced_state(self) -> np.ndarray:
        da = 2**self.ancilla_qubits
        ds = 2**self.system_qubits
        psi = self.purification.reshape(da, ds)
        return psi.T @ psi.conj()


def complete_to_unitary(first_column: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Unitary whose first column is the given unit vector.

    Remaining columns come from Gram-Schmidt on the standard basis in index
    order, so the completion is deterministic.
    """
    v = np.asarray(first_column, dtype=complex)
    n = v.size
    cols = [v / np.linalg.norm(v)]
    basis = np.array(cols)
    for k in range(n):
        if len(cols) == n:
            break
        e = np.zeros(n, dtype=complex)
        e[k] = 1.0
        # two passes keep the columns orthonormal to machine precision
        for _ in range(2):
            e = e - basis.T @ (basis.conj() @ e)
        norm = np.linalg.norm(e)
        if norm > tol:
            cols.append(e / norm)
            basis = np.array(cols)
    return np.array(cols).T


def purify(rho: DensityMatrix) -> PurifiedOracle:
    """Canonical purification ``sum_i sqrt(p_i)|i>_a|psi_i>_s`` completed to a unitary."""
    s = rho.system_qubits
    p = rho.eigenvalues
    vecs = rho.spectrum.eigenvectors
    # row i of psi_mat is the ancilla-|i> slice
    psi_mat = np.sqrt(p)[:, None] * vecs.T
    u = complete_to_unitary(psi_mat.ravel())
    u.setflags(write=False)
    return PurifiedOracle(system_qubits=s, ancilla_qubits=s, unitary=u, state=rho)
