"""Modality gap measurement between paired embedding sets."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..bank import EmbeddingBank
from ..errors import CountMismatch, DimMismatch, EmptyPairs, UnknownId

MAX_UNPAIRED = 10_000


@dataclass
class GapStats:
    """Cosine statistics of matched pairs versus random mismatched pairs."""

    n_pairs: int
    mean_paired_cosine: float
    mean_paired_angle: float
    mean_unpaired_cosine: float | None
    std_paired_cosine: float
    std_unpaired_cosine: float | None
    n_unpaired: int

    def to_dict(self) -> dict:
        return {
            "n_pairs": self.n_pairs,
            "mean_paired_cosine": self.mean_paired_cosine,
            "mean_paired_angle": self.mean_paired_angle,
            "mean_unpaired_cosine": self.mean_unpaired_cosine,
            "std_paired_cosine": self.std_paired_cosine,
            "std_unpaired_cosine": self.std_unpaired_cosine,
            "n_unpaired": self.n_unpaired,
        }


def paired_cosine(img: np.ndarray, txt: np.ndarray) -> np.ndarray:
    """Row-wise cosine between two equally shaped batches."""
    A = np.asarray(img, dtype=np.float64)
    B = np.asarray(txt, dtype=np.float64)
    if A.ndim != 2 or B.ndim != 2:
        raise DimMismatch(f"expected 2-d batches, got shapes {A.shape} and {B.shape}")
    if A.shape[0] != B.shape[0]:
        raise CountMismatch(f"{A.shape[0]} image rows vs {B.shape[0]} text rows")
    if A.shape[1] != B.shape[1]:
        raise DimMismatch(f"image dim {A.shape[1]} vs text dim {B.shape[1]}")
    if A.shape[0] == 0:
        raise EmptyPairs("paired cosine needs at least one pair")
    A = A / np.linalg.norm(A, axis=1, keepdims=True)
    B = B / np.linalg.norm(B, axis=1, keepdims=True)
    return np.clip((A * B).sum(axis=1), -1.0, 1.0)


def _resolve_side(side) -> tuple[np.ndarray, dict[str, int] | None]:
    """Bank or array -> (float64 matrix, id->row map when ids exist)."""
    if isinstance(side, EmbeddingBank):
        index = {gid: i for i, gid in enumerate(side.ids)}
        return side.matrix.astype(np.float64), index
    M = np.asarray(side, dtype=np.float64)
    if M.ndim != 2:
        raise DimMismatch(f"expected a 2-d embedding batch, got shape {M.shape}")
    return M, None


def _row_for(key, matrix: np.ndarray, index: dict[str, int] | None, side_name: str) -> int:
    if isinstance(key, str):
        if index is None:
            raise UnknownId(f"{side_name} side has no ids; pair entries must be integer rows")
        if key not in index:
            raise UnknownId(f"{side_name} id {key!r} not found")
        return index[key]
    row = int(key)
    if not (0 <= row < matrix.shape[0]):
        raise UnknownId(f"{side_name} row {row} out of range [0, {matrix.shape[0]})")
    return row


def modality_gap(
    images,
    texts,
    pairs: Sequence[tuple] | None = None,
    seed: int = 42,
    max_unpaired: int = MAX_UNPAIRED,
) -> GapStats:
    """Gap statistics between image and text embeddings.

    Each side is an EmbeddingBank or a 2-d array. Alignment, in order of
    preference: explicit pairs of (image key, text key) where a key is an
    id string (banks) or a row index; two banks holding the same id set,
    matched by id; equal row counts, matched by position.

    The mismatched baseline samples up to max_unpaired (i, j) index pairs
    with i != j from a seeded generator; with fewer than two pairs those
    fields are None.
    """
    img_mat, img_index = _resolve_side(images)
    txt_mat, txt_index = _resolve_side(texts)
    if img_mat.shape[1] != txt_mat.shape[1]:
        raise DimMismatch(f"image dim {img_mat.shape[1]} vs text dim {txt_mat.shape[1]}")

    if pairs is not None:
        if len(pairs) == 0:
            raise EmptyPairs("gap measurement needs at least one pair")
        img_rows = [_row_for(a, img_mat, img_index, "image") for a, _ in pairs]
        txt_rows = [_row_for(b, txt_mat, txt_index, "text") for _, b in pairs]
        A = img_mat[img_rows]
        B = txt_mat[txt_rows]
    elif img_index is not None and txt_index is not None and set(img_index) == set(txt_index):
        order = sorted(img_index)
        A = img_mat[[img_index[i] for i in order]]
        B = txt_mat[[txt_index[i] for i in order]]
    elif img_mat.shape[0] == txt_mat.shape[0]:
        A, B = img_mat, txt_mat
    else:
        raise CountMismatch(
            f"sides pair neither by id nor by position: {img_mat.shape[0]} vs {txt_mat.shape[0]} rows"
        )
    if A.shape[0] == 0:
        raise EmptyPairs("gap measurement needs at least one pair")

    cos = paired_cosine(A, B)
    n = cos.shape[0]
    An = A / np.linalg.norm(A, axis=1, keepdims=True)
    Bn = B / np.linalg.norm(B, axis=1, keepdims=True)

    mean_unpaired = std_unpaired = None
    n_unpaired = 0
    if n >= 2:
        rng = np.random.default_rng(seed)
        n_unpaired = min(max_unpaired, n * (n - 1))
        i = rng.integers(0, n, size=n_unpaired)
        shift = rng.integers(1, n, size=n_unpaired)
        j = (i + shift) % n  # guarantees i != j
        mis = np.clip((An[i] * Bn[j]).sum(axis=1), -1.0, 1.0)
        mean_unpaired = float(mis.mean())
        std_unpaired = float(mis.std())

    return GapStats(
        n_pairs=n,
        mean_paired_cosine=float(cos.mean()),
        mean_paired_angle=float(np.arccos(cos).mean()),
        mean_unpaired_cosine=mean_unpaired,
        std_paired_cosine=float(cos.std()),
        std_unpaired_cosine=std_unpaired,
        n_unpaired=n_unpaired,
    )
