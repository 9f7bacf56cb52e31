"""Per-panel filter formulation: reduced matched filter and the sequential
interference-cancellation chain, plus centralized baselines used as oracles.
"""
from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import ConfigError, NumericalError


@dataclass(frozen=True)
class PanelEqualizer:
    """Np x Mp filtering matrix for one panel.

    selected_users is the ordered strongest-user index list for the
    matched-filter variant; None for the cancellation chain, whose rows
    are orthonormal singular-vector directions rather than per-user taps.
    """

    W: np.ndarray
    selected_users: tuple
    panel_index: int


@dataclass(frozen=True)
class IICState:
    """K x K Hermitian matrix passed panel to panel (noise covariance role)."""

    Z: np.ndarray

    @classmethod
    def identity(cls, K):
        return cls(Z=np.eye(K, dtype=complex))


def rmf_formulate(H_i, Np, panel_index=0) -> PanelEqualizer:
    """Reduced matched filter: conjugated channels of the Np strongest users.

    Strength of user n is the squared column norm of the panel-local
    channel; ties broken toward the lower user index.
    """
    H_i = np.asarray(H_i)
    K = H_i.shape[1]
    if not 1 <= Np <= K:
        raise ConfigError(f"Np={Np} must satisfy 1 <= Np <= K={K}")
    strengths = np.sum(np.abs(H_i) ** 2, axis=0)
    # Stable sort on (-strength, index): descending strength, low index first.
    order = np.lexsort((np.arange(K), -strengths))
    selected = tuple(int(n) for n in order[:Np])
    W = H_i[:, selected].conj().T
    return PanelEqualizer(W=W, selected_users=selected, panel_index=panel_index)


def iic_formulate_step(H_i, state: IICState, Np, panel_index=0,
                       floor_ratio=numerics.DEFAULT_SINGULAR_FLOOR):
    """One panel step of the interference-cancellation chain.

    1. [U_z, S_z] = svd(Z_in)
    2. H_eq = H_i U_z S_z^{-1/2}          (whitening)
    3. U_eq = left singular vectors of H_eq
    4. W    = conjugate transpose of the first Np columns of U_eq
    5. Z_out = Z_in + (W H_i)^H (W H_i)
    """
    H_i = np.asarray(H_i)
    Mp, K = H_i.shape
    if not 1 <= Np <= min(Mp, K):
        raise ConfigError(f"Np={Np} must satisfy 1 <= Np <= min(Mp={Mp}, K={K})")
    Z = np.asarray(state.Z)
    if Z.shape != (K, K):
        raise ConfigError(f"Z has shape {Z.shape}, expected ({K}, {K})")

    z_svd = numerics.svd(Z)
    inv_sqrt = numerics.inv_sqrt_singular(z_svd.S, floor_ratio)
    H_eq = H_i @ (z_svd.U * inv_sqrt)
    eq_svd = numerics.svd(H_eq)
    W = eq_svd.U[:, :Np].conj().T
    WH = W @ H_i
    Z_out = Z + WH.conj().T @ WH
    Z_out = 0.5 * (Z_out + Z_out.conj().T)
    eq = PanelEqualizer(W=W, selected_users=None, panel_index=panel_index)
    return eq, IICState(Z=Z_out)


def iic_chain(H_slices, Np, Z0=None, order=None, sweeps=1):
    """Thread the Z matrix through all panels, one step each, in order.

    Returns the per-panel equalizers (indexed by panel, not by visit
    order) and the final state. Z0 defaults to the identity.
    """
    P = len(H_slices)
    K = H_slices[0].shape[1]
    if order is None:
        order = list(range(P))
    if sorted(order) != list(range(P)):
        raise ConfigError("order must be a permutation of panel indices")
    state = IICState.identity(K) if Z0 is None else Z0
    equalizers = [None] * P
    for _ in range(sweeps):
        for i in order:
            eq, state = iic_formulate_step(H_slices[i], state, Np, panel_index=i)
            equalizers[i] = eq
    return equalizers, state


def baseline_centralized(H, kind, rho=1.0):
    """Centralized K x M receiver: full matched filter or MMSE."""
    H = np.asarray(H)
    if kind == "MF":
        return H.conj().T
    if kind == "MMSE":
        K = H.shape[1]
        A = H.conj().T @ H + np.eye(K) / rho
        try:
            return np.linalg.solve(A, H.conj().T)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"MMSE system is singular: {exc}") from exc
    raise ConfigError(f"unknown baseline kind {kind!r} (use 'MF' or 'MMSE')")
