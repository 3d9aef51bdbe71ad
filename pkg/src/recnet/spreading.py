"""Spreading-activation retrieval over a weighted proximity network.

Cue nodes are activated and the activation vector is iteratively multiplied
by the (row-normalized, decayed) weight matrix until it settles.  Row
normalization bounds the spectral radius by 1, so any decay below 1 makes the
iteration a contraction; activation is read at the fixed point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.sparse import csr_matrix

from .proximity import NodeRef, SparseProximity


@dataclass
class SAConfig:
    decay: float = 0.8
    max_iters: int = 500
    eps: float = 1e-8
    cue_clamp: bool = True
    exclude_cues_from_ranking: bool = True
    top_k: int | None = None
    threshold: float | None = None  # keep nodes with activation strictly above

    def __post_init__(self) -> None:
        if not 0.0 < self.decay < 1.0:
            raise ValueError(f"decay out of (0,1): {self.decay}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")


@dataclass
class SpreadResult:
    ranking: list[tuple[str, float]]
    activations: np.ndarray
    labels: tuple[str, ...]
    iterations: int
    converged: bool


def _row_normalized(W: SparseProximity) -> csr_matrix:
    M = W.to_csr()
    sums = np.asarray(M.sum(axis=1)).ravel()
    scale = np.divide(1.0, sums, out=np.zeros_like(sums), where=sums > 0)
    # scale rows in place on the CSR structure
    M = M.tocsr()
    M.data = M.data * np.repeat(scale, np.diff(M.indptr))
    return M


def spread_detailed(
    W: SparseProximity, cues: Iterable[NodeRef], cfg: SAConfig | None = None
) -> SpreadResult:
    """Propagate activation from the cue nodes to a fixed point.

    a_{t+1} = decay * W_hat^T a_t, with cue entries reset to 1 each step when
    clamping is on.  Self-associations never propagate (to_csr drops them).
    """
    cfg = cfg or SAConfig()
    cue_idx = sorted({W.index(c) for c in cues})
    if not cue_idx:
        raise ValueError("cue set is empty")

    WT = _row_normalized(W).T.tocsr()
    a = np.zeros(W.n)
    a[cue_idx] = 1.0
    iterations = 0
    converged = False
    for iterations in range(1, cfg.max_iters + 1):
        a_new = cfg.decay * (WT @ a)
        if cfg.cue_clamp:
            a_new[cue_idx] = 1.0
        delta = float(np.max(np.abs(a_new - a))) if W.n else 0.0
        a = a_new
        if delta < cfg.eps:
            converged = True
            break

    cue_set = set(cue_idx)
    order = sorted(
        (i for i in range(W.n) if a[i] > 0.0),
        key=lambda i: (-a[i], i),
    )
    ranking: list[tuple[str, float]] = []
    for i in order:
        if cfg.exclude_cues_from_ranking and i in cue_set:
            continue
        if cfg.threshold is not None and not a[i] > cfg.threshold:
            continue
        ranking.append((W.labels[i], float(a[i])))
    if cfg.top_k is not None:
        ranking = ranking[: cfg.top_k]
    return SpreadResult(
        ranking=ranking,
        activations=a,
        labels=W.labels,
        iterations=iterations,
        converged=converged,
    )


def spread(
    W: SparseProximity, cues: Iterable[NodeRef], cfg: SAConfig | None = None
) -> list[tuple[str, float]]:
    """Ranked (node, activation) pairs by settled activation, strongest first."""
    return spread_detailed(W, cues, cfg).ranking
