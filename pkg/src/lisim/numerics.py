"""Deterministic complex-matrix kernels: SVD, inverse-sqrt spectra, log-det.

All functions are pure and safe to call concurrently. The SVD applies a
fixed phase convention so repeated runs (and different platforms with the
same LAPACK) produce identical filter matrices downstream.
"""
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError

DEFAULT_SINGULAR_FLOOR = 1e-12


@dataclass(frozen=True)
class SvdResult:
    """Economy SVD A = U @ diag(S) @ V^H with S descending and >= 0."""

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray

    def reconstruct(self):
        return (self.U * self.S) @ self.V.conj().T


def _check_finite(A, name="matrix"):
    if A.size == 0:
        raise NumericalError(f"{name} is empty")
    if not np.all(np.isfinite(A)):
        raise NumericalError(f"{name} contains non-finite entries")


def svd(A):
    """Economy SVD with a deterministic phase convention.

    Each left singular vector is rotated so that its largest-magnitude
    entry is real and non-negative; the matching right vector gets the
    same rotation, so U @ diag(S) @ V^H is unchanged.
    """
    A = np.asarray(A)
    _check_finite(A, "svd input")
    try:
        U, s, Vh = np.linalg.svd(A, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}") from exc
    V = Vh.conj().T
    # Phase normalization, column by column.
    for j in range(s.size):
        col = U[:, j]
        i = int(np.argmax(np.abs(col)))
        mag = abs(col[i])
        if mag > 0:
            phase = col[i] / mag
            U[:, j] = col * np.conj(phase)
            V[:, j] = V[:, j] * np.conj(phase)
    return SvdResult(U=U, S=s, V=V)


def inv_sqrt_singular(S, floor_ratio=DEFAULT_SINGULAR_FLOOR):
    """Element-wise s -> 1/sqrt(max(s, floor_ratio * S[0])).

    S must be descending with S[0] > 0 (the SVD output ordering).
    """
    S = np.asarray(S, dtype=float)
    if S.size == 0 or S[0] <= 0:
        raise NumericalError("singular spectrum is all zero (degenerate matrix chain)")
    if np.any(np.diff(S) > 0):
        raise NumericalError("singular values must be sorted descending")
    floored = np.maximum(S, floor_ratio * S[0])
    if np.any(floored <= 0):
        raise NumericalError("singular values not positive after flooring; pass floor_ratio > 0")
    return 1.0 / np.sqrt(floored)


def _cholesky_pivot_index(A):
    """Locate the first non-positive pivot of a failed Cholesky, by hand."""
    n = A.shape[0]
    L = np.zeros_like(A)
    for i in range(n):
        pivot = A[i, i].real - np.sum(np.abs(L[i, :i]) ** 2)
        if pivot <= 0:
            return i
        L[i, i] = np.sqrt(pivot)
        for j in range(i + 1, n):
            L[j, i] = (A[j, i] - L[j, :i] @ L[i, :i].conj()) / L[i, i]
    return n - 1


def logdet_hermitian_pd(A, asym_tol=1e-9):
    """log2(det(A)) for Hermitian positive-definite A, via Cholesky."""
    A = np.asarray(A)
    _check_finite(A, "logdet input")
    if A.shape[0] != A.shape[1]:
        raise NumericalError("logdet input must be square")
    scale = np.linalg.norm(A)
    if np.linalg.norm(A - A.conj().T) > asym_tol * max(scale, 1.0):
        raise NumericalError("logdet input is not Hermitian within tolerance")
    A = 0.5 * (A + A.conj().T)
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        idx = _cholesky_pivot_index(A)
        raise NumericalError(
            f"matrix is not positive definite (first bad pivot at index {idx})"
        ) from exc
    return float(2.0 * np.sum(np.log2(np.abs(np.diag(L)))))
