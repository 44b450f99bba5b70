"""Linear embedding tower with a low-rank residual adapter.

The tower maps an input vector x to normalize(base @ x + (alpha/r) B A x).
base is frozen; only the factors A and B train. B starts at zero so the
adapted tower initially equals the base tower. Dropout, when enabled,
applies to the adapter branch output only; the base path is never dropped.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import (
    BadConfig,
    BadHeader,
    BadMagic,
    DimMismatch,
    TrailingData,
    TruncatedFile,
)

MAGIC = b"CTA1"
HEADER = struct.Struct("<4sIIIf")  # magic, d_in, d_out, rank, lora_alpha


@dataclass
class TowerParams:
    """Frozen base matrix plus trainable low-rank factors."""

    base: np.ndarray       # (d_out, d_in)
    lora_A: np.ndarray     # (rank, d_in)
    lora_B: np.ndarray     # (d_out, rank)
    lora_alpha: float
    dropout_p: float = 0.0

    @property
    def d_in(self) -> int:
        return self.base.shape[1]

    @property
    def d_out(self) -> int:
        return self.base.shape[0]

    @property
    def rank(self) -> int:
        return self.lora_A.shape[0]

    @property
    def scaling(self) -> float:
        return self.lora_alpha / self.rank

    def effective_matrix(self) -> np.ndarray:
        """base plus the scaled adapter, as one dense matrix."""
        return self.base + self.scaling * (self.lora_B @ self.lora_A)

    def copy(self) -> "TowerParams":
        return TowerParams(
            self.base.copy(), self.lora_A.copy(), self.lora_B.copy(),
            self.lora_alpha, self.dropout_p,
        )


def init_tower(
    base: np.ndarray,
    rank: int,
    lora_alpha: float,
    rng: np.random.Generator,
    dropout_p: float = 0.0,
) -> TowerParams:
    """Fresh adapter around a frozen base: B = 0, A ~ U(+-1/sqrt(d_in))."""
    base = np.asarray(base, dtype=np.float64)
    if base.ndim != 2:
        raise BadConfig(f"base must be 2-d, got shape {base.shape}")
    if rank < 1:
        raise BadConfig(f"rank must be >= 1, got {rank}")
    if not (np.isfinite(lora_alpha) and lora_alpha > 0):
        raise BadConfig(f"lora_alpha must be a positive finite number, got {lora_alpha}")
    if not (0.0 <= dropout_p < 1.0):
        raise BadConfig(f"dropout_p must lie in [0, 1), got {dropout_p}")
    d_out, d_in = base.shape
    bound = 1.0 / np.sqrt(d_in)
    lora_A = rng.uniform(-bound, bound, size=(rank, d_in))
    lora_B = np.zeros((d_out, rank))
    return TowerParams(
        base=base, lora_A=lora_A, lora_B=lora_B,
        lora_alpha=float(lora_alpha), dropout_p=float(dropout_p),
    )


def dropout_mask(rng: np.random.Generator, shape: tuple[int, int], p: float) -> np.ndarray | None:
    """Inverted-dropout multiplier: kept entries scaled by 1/(1-p)."""
    if p <= 0.0:
        return None
    return (rng.random(shape) >= p).astype(np.float64) / (1.0 - p)


def tower_pre(params: TowerParams, inputs: np.ndarray, adapter_mask: np.ndarray | None = None) -> np.ndarray:
    """Unnormalized tower outputs, one row per input row.

    adapter_mask, when given, multiplies the adapter branch elementwise
    (dropout, pre-scaled by 1/(1-p)).
    """
    X = np.asarray(inputs, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != params.d_in:
        raise DimMismatch(f"inputs shape {X.shape} vs tower d_in {params.d_in}")
    branch = params.scaling * ((X @ params.lora_A.T) @ params.lora_B.T)
    if adapter_mask is not None:
        if adapter_mask.shape != branch.shape:
            raise DimMismatch(f"adapter_mask shape {adapter_mask.shape} vs branch {branch.shape}")
        branch = adapter_mask * branch
    return X @ params.base.T + branch


def forward_tower(
    params: TowerParams,
    inputs: np.ndarray,
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
    adapter_mask: np.ndarray | None = None,
) -> np.ndarray:
    """Unit-normalized tower outputs, one row per input row.

    In train_mode a dropout mask for the adapter branch is drawn from rng
    (probability params.dropout_p) unless an explicit adapter_mask is
    supplied; outside train_mode no dropout is applied.
    """
    X = np.asarray(inputs, dtype=np.float64)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if adapter_mask is None and train_mode and params.dropout_p > 0.0:
        if rng is None:
            raise BadConfig("train_mode with dropout_p > 0 needs an rng")
        adapter_mask = dropout_mask(rng, (X.shape[0], params.d_out), params.dropout_p)
    U = tower_pre(params, X, adapter_mask)
    norms = np.linalg.norm(U, axis=1, keepdims=True)
    if np.any(norms < 1e-12) or not np.all(np.isfinite(norms)):
        raise BadConfig("tower produced a zero or non-finite output vector")
    out = U / norms
    return out[0] if single else out


def write_tower(params: TowerParams, destination) -> None:
    """Serialize to the adapter blob format (little-endian, float32)."""
    buf = io.BytesIO()
    buf.write(HEADER.pack(MAGIC, params.d_in, params.d_out, params.rank, float(params.lora_alpha)))
    for mat in (params.base, params.lora_A, params.lora_B):
        buf.write(np.ascontiguousarray(mat, dtype="<f4").tobytes())
    payload = buf.getvalue()
    if isinstance(destination, (str, Path)):
        Path(destination).write_bytes(payload)
    else:
        destination.write(payload)


def load_tower(source) -> TowerParams:
    """Parse an adapter blob; rejects structural damage explicitly."""
    if isinstance(source, (str, Path)):
        data = Path(source).read_bytes()
    elif isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    else:
        data = source.read()
    if len(data) < HEADER.size:
        raise TruncatedFile(f"adapter blob is {len(data)} bytes, header needs {HEADER.size}")
    magic, d_in, d_out, rank, lora_alpha = HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise BadMagic(f"expected {MAGIC!r}, got {magic!r}")
    if d_in < 1 or d_out < 1 or rank < 1:
        raise BadHeader(f"dimensions must be positive: d_in={d_in} d_out={d_out} rank={rank}")
    if not (np.isfinite(lora_alpha) and lora_alpha > 0):
        raise BadHeader(f"lora_alpha must be a positive finite number, got {lora_alpha}")
    counts = (d_out * d_in, rank * d_in, d_out * rank)
    need = HEADER.size + 4 * sum(counts)
    if len(data) < need:
        raise TruncatedFile(f"adapter blob is {len(data)} bytes, expected {need}")
    if len(data) > need:
        raise TrailingData(f"{len(data) - need} extra bytes after adapter matrices")
    offset = HEADER.size
    mats = []
    shapes = ((d_out, d_in), (rank, d_in), (d_out, rank))
    for count, shape in zip(counts, shapes):
        flat = np.frombuffer(data, dtype="<f4", count=count, offset=offset)
        if not np.all(np.isfinite(flat)):
            raise BadHeader("adapter matrices contain non-finite values")
        mats.append(flat.reshape(shape).astype(np.float64))
        offset += 4 * count
    return TowerParams(base=mats[0], lora_A=mats[1], lora_B=mats[2], lora_alpha=float(lora_alpha))
