"""Bidirectional contrastive loss over paired unit embeddings.

With S[i, j] = scale * <v_i, w_j>, the loss is the sum of a row-softmax
cross-entropy (image to text) and a column-softmax cross-entropy (text to
image), each averaged over the batch. Gradients are exact and analytic.
"""

from __future__ import annotations

import numpy as np

from ..errors import CountMismatch, DimMismatch, EmptyPairs


def _check_pairs(V: np.ndarray, W: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    V = np.asarray(V, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    if V.ndim != 2 or W.ndim != 2:
        raise DimMismatch(f"expected 2-d batches, got shapes {V.shape} and {W.shape}")
    if V.shape[0] != W.shape[0]:
        raise CountMismatch(f"{V.shape[0]} image rows vs {W.shape[0]} text rows")
    if V.shape[1] != W.shape[1]:
        raise DimMismatch(f"image dim {V.shape[1]} vs text dim {W.shape[1]}")
    if V.shape[0] == 0:
        raise EmptyPairs("contrastive loss needs at least one pair")
    return V, W


def _log_softmax(S: np.ndarray, axis: int) -> np.ndarray:
    shifted = S - S.max(axis=axis, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))


def contrastive_loss(V: np.ndarray, W: np.ndarray, scale: float) -> float:
    """Sum of image-to-text and text-to-image cross-entropies."""
    V, W = _check_pairs(V, W)
    S = scale * (V @ W.T)
    n = S.shape[0]
    diag = np.arange(n)
    loss_i2t = -_log_softmax(S, axis=1)[diag, diag].mean()
    loss_t2i = -_log_softmax(S, axis=0)[diag, diag].mean()
    return float(loss_i2t + loss_t2i)


def grad_contrastive(V: np.ndarray, W: np.ndarray, scale: float) -> tuple[float, np.ndarray, np.ndarray]:
    """Loss plus exact gradients with respect to V and W.

    dL/dS = (P - I + Q - I) / n with P the row softmax and Q the column
    softmax of S; the chain rule through S = scale * V W^T gives the
    returned matrices.
    """
    V, W = _check_pairs(V, W)
    S = scale * (V @ W.T)
    n = S.shape[0]
    diag = np.arange(n)
    log_p = _log_softmax(S, axis=1)
    log_q = _log_softmax(S, axis=0)
    loss = float(-log_p[diag, diag].mean() - log_q[diag, diag].mean())
    G = np.exp(log_p) + np.exp(log_q)
    G[diag, diag] -= 2.0
    G /= n
    return loss, scale * (G @ W), scale * (G.T @ V)
