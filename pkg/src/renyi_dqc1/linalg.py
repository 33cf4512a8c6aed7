"""Dense complex linear algebra shared by the rest of the package.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``. All
functions are pure; none of them mutates its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonFinite, NonHermitian, NormTooLarge

DEFAULT_TOL = 1e-10
CLAMP_WINDOW = 1e-12


@dataclass(frozen=True)
class HermitianEig:
    """Eigendecomposition with eigenvalues sorted in descending order.

    ``eigenvectors[:, k]`` is the eigenvector belonging to ``eigenvalues[k]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T

    def apply(self, func) -> np.ndarray:
        """Return ``V f(diag(lambda)) V^dagger`` for a vectorised scalar function."""
        v = self.eigenvectors
        return (v * func(self.eigenvalues)) @ v.conj().T


def as_matrix(m, *, square: bool = True) -> np.ndarray:
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D matrix, got shape {arr.shape}")
    if square and arr.shape[0] != arr.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFinite("matrix has NaN or infinite entries")
    return arr


def max_abs(m: np.ndarray) -> float:
    return float(np.max(np.abs(m))) if m.size else 0.0


def hermitian_eig(m, tol: float = DEFAULT_TOL) -> HermitianEig:
    """Eigendecomposition of a Hermitian matrix.

    Raises :class:`NonHermitian` when ``max|m - m^dagger| > tol``.
    """
    arr = as_matrix(m)
    if max_abs(arr - arr.conj().T) > tol:
        raise NonHermitian(f"matrix deviates from Hermitian by more than {tol:g}")
    herm = 0.5 * (arr + arr.conj().T)
    vals, vecs = np.linalg.eigh(herm)
    # stable, so degenerate eigenvectors keep the solver's order
    order = np.argsort(-vals, kind="stable")
    return HermitianEig(eigenvalues=vals[order], eigenvectors=vecs[:, order])


def is_unitary(m, tol: float = DEFAULT_TOL) -> bool:
    arr = as_matrix(m)
    gram = arr.conj().T @ arr
    gram[np.diag_indices_from(gram)] -= 1.0
    return max_abs(gram) <= tol


def spectral_norm(m) -> float:
    arr = np.asarray(m, dtype=np.complex128)
    if arr.size == 0:
        return 0.0
    return float(np.linalg.svd(arr, compute_uv=False)[0])


def psd_sqrt(m, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Principal square root of a positive semidefinite matrix (negative roundoff clamped)."""
    eig = hermitian_eig(m, tol)
    return eig.apply(lambda lam: np.sqrt(np.clip(lam, 0.0, None)))


def dilate_hermitian_contraction(m, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Unitary dilation ``[[M, S], [S, -M]]`` with ``S = sqrt(I - M^2)``.

    The dilation qubit is the most significant index, so the top-left block of
    the result is ``M``. Eigenvalues within ``1e-12`` outside ``[-1, 1]`` are
    clamped before taking the square root; anything further out raises
    :class:`NormTooLarge`.
    """
    arr = as_matrix(m)
    eig = hermitian_eig(arr, tol)
    lam = eig.eigenvalues
    top = float(np.max(np.abs(lam))) if lam.size else 0.0
    if top > 1.0 + CLAMP_WINDOW:
        raise NormTooLarge(f"spectral norm {top!r} exceeds 1")
    clamped = np.clip(lam, -1.0, 1.0)
    if np.any(clamped != lam):
        block = eig.apply(lambda _: clamped)
    else:
        block = 0.5 * (arr + arr.conj().T)
    comp = eig.apply(lambda _: np.sqrt(np.clip(1.0 - clamped**2, 0.0, None)))
    return np.block([[block, comp], [comp, -block]])


def partial_trace_first(vec_or_rho, dim_first: int, dim_second: int) -> np.ndarray:
    """Trace out the first (most significant) tensor factor.

    Accepts either a state vector of length ``dim_first * dim_second`` or a
    density matrix of that size.
    """
    arr = np.asarray(vec_or_rho, dtype=np.complex128)
    if arr.ndim == 1:
        if arr.size != dim_first * dim_second:
            raise DimensionMismatch("vector length does not match the factor dimensions")
        psi = arr.reshape(dim_first, dim_second)
        return psi.T @ psi.conj()
    if arr.shape != (dim_first * dim_second,) * 2:
        raise DimensionMismatch("matrix shape does not match the factor dimensions")
    t = arr.reshape(dim_first, dim_second, dim_first, dim_second)
    return np.einsum("iajb,ij->ab", t, np.eye(dim_first))


def num_qubits(dim: int) -> int:
    """log2 of ``dim``; raises when ``dim`` is not a positive power of two."""
    if dim < 1 or dim & (dim - 1):
        raise DimensionMismatch(f"dimension {dim} is not a power of two")
    return dim.bit_length() - 1


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary from the QR decomposition of a complex Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    phases = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * phases
