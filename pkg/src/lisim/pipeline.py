"""Filtering-phase machinery: per-panel dimension reduction, tree
aggregation with combine/bypass processing-switching units, the effective
channel seen at the central processor, and its sum-rate capacity.

The bypass effective channel keeps its noise covariance in block-diagonal
form (one Np x Np block per panel); at full scenario scale the dense
matrix would be prohibitively large and is never needed.
"""
from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import ConfigError, NumericalError

COMBINE = "combine"
BYPASS = "bypass"

COV_REG_RATIO = 1e-12


@dataclass(frozen=True)
class FilteredBlock:
    """One panel's (or PSU's) reduced output vector with user tagging.

    user_tags aligns entries to user indices for combine mode; None for
    bypass streams.
    """

    values: np.ndarray
    user_tags: tuple = None


def panel_filter(eq, y_i) -> FilteredBlock:
    """Apply a panel's filtering matrix to its received vector."""
    W = eq.W
    y_i = np.asarray(y_i)
    if y_i.shape[0] != W.shape[1]:
        raise ConfigError(f"input length {y_i.shape[0]} != Mp={W.shape[1]}")
    return FilteredBlock(values=W @ y_i, user_tags=eq.selected_users)


def psu_process(children, mode, num_users=None) -> FilteredBlock:
    """Combine (per-user coherent sum) or bypass (ordered concatenation)."""
    if mode == BYPASS:
        return FilteredBlock(values=np.concatenate([c.values for c in children]))
    if mode != COMBINE:
        raise ConfigError(f"unknown PSU mode {mode!r}")
    if num_users is None:
        raise ConfigError("combine mode needs num_users")
    out = np.zeros(num_users, dtype=complex)
    for child in children:
        if child.user_tags is None:
            raise ConfigError("combine mode needs user-tagged child blocks")
        if len(set(child.user_tags)) != len(child.user_tags):
            raise ConfigError("duplicate user tags within one child block")
        for tag, v in zip(child.user_tags, child.values):
            out[tag] += v
    return FilteredBlock(values=out, user_tags=tuple(range(num_users)))


@dataclass(frozen=True)
class PsuTree:
    """Aggregation tree over panels; leaves are panel indices in order."""

    fan_in: int
    levels: int
    mode: str
    P: int

    @classmethod
    def build(cls, P, fan_in=4, mode=BYPASS):
        if fan_in < 2:
            raise ConfigError("fan_in must be >= 2")
        levels = 0
        n = P
        while n > 1:
            n = -(-n // fan_in)
            levels += 1
        return cls(fan_in=fan_in, levels=levels, mode=mode, P=P)


def aggregate_tree(tree: PsuTree, blocks, num_users=None) -> FilteredBlock:
    """Run the panel blocks up the PSU tree to the root."""
    if len(blocks) != tree.P:
        raise ConfigError(f"expected {tree.P} blocks, got {len(blocks)}")
    level = list(blocks)
    while len(level) > 1:
        level = [
            psu_process(level[i:i + tree.fan_in], tree.mode, num_users=num_users)
            for i in range(0, len(level), tree.fan_in)
        ]
    if tree.mode == COMBINE:
        # Embed even a lone leaf into the full per-user vector (idempotent).
        return psu_process(level, COMBINE, num_users=num_users)
    return level[0]


@dataclass(frozen=True)
class EffectiveChannel:
    """Reduced observation model z = G x + n~ with cov(n~) = C.

    combine: G is K x K and C dense K x K. bypass: G is (Np P) x K and C
    is stored as per-panel diagonal blocks (C_blocks); the dense C
    property materializes it for small instances.
    """

    G: np.ndarray
    mode: str
    C_dense: np.ndarray = None
    C_blocks: tuple = None

    @property
    def C(self):
        if self.C_dense is not None:
            return self.C_dense
        dim = sum(b.shape[0] for b in self.C_blocks)
        C = np.zeros((dim, dim), dtype=complex)
        r = 0
        for b in self.C_blocks:
            n = b.shape[0]
            C[r:r + n, r:r + n] = b
            r += n
        return C

    def block_view(self):
        """(G_block, C_block) pairs; a single pair in combine mode."""
        if self.mode == COMBINE:
            return [(self.G, self.C_dense)]
        out = []
        r = 0
        for b in self.C_blocks:
            n = b.shape[0]
            out.append((self.G[r:r + n], b))
            r += n
        return out


def effective_channel(equalizers, H_slices, mode, num_users=None) -> EffectiveChannel:
    """Assemble G and the filtered-noise covariance for either PSU mode."""
    if len(equalizers) != len(H_slices):
        raise ConfigError("one equalizer per panel slice required")
    if mode == BYPASS:
        G = np.vstack([eq.W @ H_i for eq, H_i in zip(equalizers, H_slices)])
        blocks = tuple(eq.W @ eq.W.conj().T for eq in equalizers)
        return EffectiveChannel(G=G, mode=BYPASS, C_blocks=blocks)
    if mode != COMBINE:
        raise ConfigError(f"unknown aggregation mode {mode!r}")
    K = num_users if num_users is not None else H_slices[0].shape[1]
    G = np.zeros((K, K), dtype=complex)
    C = np.zeros((K, K), dtype=complex)
    for eq, H_i in zip(equalizers, H_slices):
        if eq.selected_users is None:
            raise ConfigError("combine mode needs user-tagged equalizers")
        rows = np.asarray(eq.selected_users)
        G[rows] += eq.W @ H_i
        WWh = eq.W @ eq.W.conj().T
        C[np.ix_(rows, rows)] += WWh
    return EffectiveChannel(G=G, mode=COMBINE, C_dense=C)


def _regularize(C):
    """Guard an ill-conditioned covariance block before inversion."""
    evals = np.linalg.eigvalsh(0.5 * (C + C.conj().T))
    if evals[-1] <= 0:
        raise NumericalError("noise covariance block is not positive semidefinite")
    if evals[0] < COV_REG_RATIO * evals[-1]:
        C = C + (COV_REG_RATIO * np.trace(C).real / C.shape[0]) * np.eye(C.shape[0])
    return C


def whitened_gram(eff: EffectiveChannel):
    """G^H C^{-1} G, accumulated block by block (Hermitian K x K)."""
    K = eff.G.shape[1]
    A = np.zeros((K, K), dtype=complex)
    for G_b, C_b in eff.block_view():
        C_b = _regularize(C_b)
        try:
            A += G_b.conj().T @ np.linalg.solve(C_b, G_b)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"noise covariance is singular: {exc}") from exc
    return 0.5 * (A + A.conj().T)


def sum_rate(eff: EffectiveChannel, rho):
    """log2 det(I_K + rho G^H C^{-1} G), in bps/Hz."""
    K = eff.G.shape[1]
    A = whitened_gram(eff)
    return numerics.logdet_hermitian_pd(np.eye(K) + rho * A)


def centralized_rate(H, rho):
    """Capacity upper bound log2 det(I + rho H^H H) of the unreduced array."""
    H = np.asarray(H)
    K = H.shape[1]
    return numerics.logdet_hermitian_pd(np.eye(K) + rho * (H.conj().T @ H))


_QPSK = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2.0)


def detect_and_ser(eff: EffectiveChannel, rho, n_symbols=1000, seed=0):
    """Monte-Carlo QPSK symbol-error rate of the MMSE detector at the CDSP.

    Model: z = G x + n~ with x = sqrt(rho) s, s unit-power QPSK, and
    n~ ~ CN(0, C); estimate x^ = (G^H C^{-1} G + I/rho)^{-1} G^H C^{-1} z.
    """
    rng = np.random.default_rng(seed)
    K = eff.G.shape[1]
    A = whitened_gram(eff)
    blocks = eff.block_view()
    chols = []
    for _, C_b in blocks:
        chols.append(np.linalg.cholesky(_regularize(C_b)))
    filt = np.linalg.solve(A + np.eye(K) / rho, np.conj(eff.G.T))  # (K x dim) after C^-1
    # Pre-fold C^{-1} blockwise into the receive filter.
    r = 0
    filt_cols = []
    for (_, C_b), L in zip(blocks, chols):
        n = C_b.shape[0]
        block = filt[:, r:r + n]
        y = np.linalg.solve(L.conj().T, np.linalg.solve(L, block.conj().T))
        filt_cols.append(y.conj().T)
        r += n
    receive = np.hstack(filt_cols)       # (K x dim)

    errors = 0
    idx = rng.integers(0, 4, size=(K, n_symbols))
    s = _QPSK[idx]
    noise = []
    for (_, C_b), L in zip(blocks, chols):
        n = C_b.shape[0]
        v = (rng.standard_normal((n, n_symbols)) + 1j * rng.standard_normal((n, n_symbols))) / np.sqrt(2.0)
        noise.append(L @ v)
    z = eff.G @ (np.sqrt(rho) * s) + np.vstack(noise)
    x_hat = receive @ z
    s_hat = x_hat / np.sqrt(rho)
    decided = (np.sign(s_hat.real) + 1j * np.sign(s_hat.imag)) / np.sqrt(2.0)
    # Map zeros (measure-zero ties) to a fixed decision.
    decided = np.where(decided.real == 0, decided + 1 / np.sqrt(2), decided)
    decided = np.where(decided.imag == 0, decided + 1j / np.sqrt(2), decided)
    errors = np.sum(np.abs(decided - s) > 1e-9)
    return float(errors / (K * n_symbols))
