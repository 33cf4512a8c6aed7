"""Block encodings and the purified-oracle construction of an encoding of rho.

Register convention: the ancilla register is always the most significant
part of the index, so the "ancilla in |0...0>" block of a unitary is its
leading ``2**s x 2**s`` corner. For the density encoding the registers are
``[oracle ancilla a | oracle system s | fresh s]`` and the fresh register is
the encoded system.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, ValidationError
from .linalg import DEFAULT_TOL, as_matrix, is_unitary, num_qubits, spectral_norm
from .states import PurifiedOracle


@dataclass(frozen=True, eq=False)
class BlockEncoding:
    """Unitary ``U`` with ``A ~= scale * (<0|_a x I) U (|0>_a x I)`` up to ``error_bound``.

    ``queries`` counts how many uses of the base density encoding one
    application of ``U`` costs.
    """

    unitary: np.ndarray
    scale: float
    ancilla_qubits: int
    system_qubits: int
    error_bound: float = 0.0
    queries: int = 1

    def __post_init__(self):
        dim = 2 ** (self.ancilla_qubits + self.system_qubits)
        if self.unitary.shape != (dim, dim):
            raise DimensionMismatch(
                f"unitary shape {self.unitary.shape} does not match 2^(a+s) = {dim}"
            )
        if not self.scale > 0:
            raise ValidationError("scale must be positive")
        if self.error_bound < 0:
            raise ValidationError("error_bound must be nonnegative")

    @property
    def system_dim(self) -> int:
        return 2**self.system_qubits

    @property
    def total_qubits(self) -> int:
        return self.ancilla_qubits + self.system_qubits

    def check_unitary(self, tol: float = DEFAULT_TOL) -> bool:
        return is_unitary(self.unitary, tol)


def encode_density(oracle: PurifiedOracle) -> BlockEncoding:
    """Exact scale-1 encoding ``(U^dag x I)(I_a x SWAP)(U x I)`` of the purified state."""
    a, s = oracle.ancilla_qubits, oracle.system_qubits
    da, ds = 2**a, 2**s
    w1 = np.kron(oracle.unitary, np.eye(ds))
    # SWAP(oracle system, fresh) as a row permutation
    i, x, y = np.meshgrid(np.arange(da), np.arange(ds), np.arange(ds), indexing="ij")
    perm = (i * ds * ds + y * ds + x).ravel()
    u = w1.conj().T @ w1[perm]
    u.setflags(write=False)
    return BlockEncoding(unitary=u, scale=1.0, ancilla_qubits=a + s, system_qubits=s)


def read_block(enc: BlockEncoding) -> np.ndarray:
    d = enc.system_dim
    return enc.scale * enc.unitary[:d, :d]


def verify_encoding(enc: BlockEncoding, reference) -> float:
    """Spectral-norm distance between ``reference`` and the encoded operator."""
    ref = as_matrix(reference)
    if ref.shape != (enc.system_dim, enc.system_dim):
        raise DimensionMismatch(
            f"reference shape {ref.shape} does not match system dimension {enc.system_dim}"
        )
    return spectral_norm(ref - read_block(enc))


def trivial_encoding(m_unitary) -> BlockEncoding:
    """Wrap a unitary as an ancilla-free scale-1 encoding of itself."""
    u = as_matrix(m_unitary)
    s = num_qubits(u.shape[0])
    return BlockEncoding(unitary=u, scale=1.0, ancilla_qubits=0, system_qubits=s)
