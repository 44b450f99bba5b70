"""Anchored contrastive tuning loop for the synthetic mechanism experiment.

One side of the pair can be frozen while the other trains toward it:
text-anchored (image tower trains against fixed text anchors), the mirror
image-anchored variant, or no anchor (both towers train). Every run is
fully deterministic given its config.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum

import numpy as np

from ..bank import EmbeddingBank, Modality
from ..errors import BadConfig
from ..geometry import slerp
from ..search import top_k
from .gap import GapStats, modality_gap, paired_cosine
from .loss import contrastive_loss, grad_contrastive
from .optim import AdamW
from .synthetic import SyntheticDataset, gen_synthetic
from .tower import TowerParams, dropout_mask, forward_tower, init_tower, tower_pre

PROBE_ALPHA = 0.8


class AnchorMode(str, Enum):
    """Which side stays frozen during tuning."""

    TEXT = "text_anchor"
    IMAGE = "image_anchor"
    NONE = "none_anchor"


_CONFIG_ALIASES = {"lr": "learning_rate", "dropout": "dropout_p"}
_CONFIG_INT_KEYS = {"n_pairs", "dim", "concept_dim", "rank", "epochs", "batch_size", "seed"}


@dataclass(frozen=True)
class TrainConfig:
    """Full recipe for one tuning run, synthetic data included.

    concept_dim None means min(4, dim // 2). Config files may give tau
    instead of logit_scale (logit_scale = 1 / tau) and lr instead of
    learning_rate.
    """

    n_pairs: int = 1024
    dim: int = 32
    concept_dim: int | None = None
    gap_rotation_angle: float = math.pi / 3
    noise_sigma: float = 0.05
    rank: int = 4
    lora_alpha: float = 4.0
    dropout_p: float = 0.1
    logit_scale: float = 1.0 / 0.07
    learning_rate: float = 1e-2
    weight_decay: float = 0.01
    epochs: int = 30
    batch_size: int = 64
    seed: int = 42
    anchoring: AnchorMode = AnchorMode.TEXT

    def __post_init__(self):
        if self.dim < 4:
            raise BadConfig(f"dim must be >= 4, got {self.dim}")
        if self.concept_dim is not None and not (1 <= self.concept_dim <= 2 * (self.dim // 2)):
            raise BadConfig(
                f"concept_dim must lie in [1, {2 * (self.dim // 2)}], got {self.concept_dim}"
            )
        if self.n_pairs < 5:
            raise BadConfig(f"n_pairs must be >= 5, got {self.n_pairs}")
        if not (0.0 <= self.gap_rotation_angle <= math.pi / 2):
            raise BadConfig(f"gap_rotation_angle must lie in [0, pi/2], got {self.gap_rotation_angle}")
        if self.noise_sigma < 0:
            raise BadConfig(f"noise_sigma must be non-negative, got {self.noise_sigma}")
        if self.rank < 1:
            raise BadConfig(f"rank must be >= 1, got {self.rank}")
        if not (math.isfinite(self.lora_alpha) and self.lora_alpha > 0):
            raise BadConfig(f"lora_alpha must be positive and finite, got {self.lora_alpha}")
        if not (0.0 <= self.dropout_p < 1.0):
            raise BadConfig(f"dropout_p must lie in [0, 1), got {self.dropout_p}")
        if not (math.isfinite(self.logit_scale) and self.logit_scale > 0):
            raise BadConfig(f"logit_scale must be positive and finite, got {self.logit_scale}")
        if self.learning_rate <= 0:
            raise BadConfig(f"learning_rate must be positive, got {self.learning_rate}")
        if self.weight_decay < 0:
            raise BadConfig(f"weight_decay must be non-negative, got {self.weight_decay}")
        if self.epochs < 0:
            raise BadConfig(f"epochs must be non-negative, got {self.epochs}")
        if self.batch_size < 1:
            raise BadConfig(f"batch_size must be >= 1, got {self.batch_size}")
        if not isinstance(self.anchoring, AnchorMode):
            raise BadConfig(f"anchoring must be an AnchorMode, got {self.anchoring!r}")

    @classmethod
    def from_mapping(cls, mapping: dict) -> "TrainConfig":
        """Build a config from a plain dict, resolving the documented aliases."""
        m = {}
        for key, value in mapping.items():
            canonical = _CONFIG_ALIASES.get(key, key)
            if canonical in m:
                raise BadConfig(f"config gives {canonical!r} more than once (aliases included)")
            m[canonical] = value
        if "tau" in m:
            if "logit_scale" in m:
                raise BadConfig("give either tau or logit_scale, not both")
            try:
                tau = float(m.pop("tau"))
            except (TypeError, ValueError):
                raise BadConfig(f"tau must be a number, got {m['tau']!r}") from None
            if not (math.isfinite(tau) and tau > 0):
                raise BadConfig(f"tau must be positive and finite, got {tau}")
            m["logit_scale"] = 1.0 / tau
        known = {f.name for f in fields(cls)}
        unknown = set(m) - known
        if unknown:
            raise BadConfig(f"unknown config keys: {sorted(unknown)}")
        kwargs: dict = {}
        try:
            for key, value in m.items():
                if key == "anchoring":
                    kwargs[key] = AnchorMode(value)
                elif key == "concept_dim" and value in (None, "none", "auto"):
                    kwargs[key] = None
                elif key in _CONFIG_INT_KEYS:
                    as_float = float(value)
                    if as_float != int(as_float):
                        raise BadConfig(f"{key} must be an integer, got {value}")
                    kwargs[key] = int(as_float)
                else:
                    kwargs[key] = float(value)
        except (TypeError, ValueError) as e:
            raise BadConfig(f"bad config value: {e}") from None
        return cls(**kwargs)

    @classmethod
    def from_text(cls, text: str) -> "TrainConfig":
        """Parse a JSON object or key=value lines (# starts a comment)."""
        stripped = text.strip()
        if stripped.startswith("{"):
            try:
                obj = json.loads(stripped)
            except json.JSONDecodeError as e:
                raise BadConfig(f"invalid JSON config: {e.msg}") from None
            if not isinstance(obj, dict):
                raise BadConfig("JSON config must be an object")
            return cls.from_mapping(obj)
        m: dict = {}
        for lineno, line in enumerate(stripped.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise BadConfig(f"config line {lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            m[key.strip()] = value.strip()
        return cls.from_mapping(m)

    def to_dict(self) -> dict:
        obj = asdict(self)
        obj["anchoring"] = self.anchoring.value
        return obj


@dataclass
class TrainResult:
    """Towers, per-epoch history, and before/after evaluation snapshots."""

    config: TrainConfig
    data: SyntheticDataset
    image_tower: TowerParams
    text_tower: TowerParams
    history: list[dict] = field(default_factory=list)
    pre_gap: GapStats | None = None
    post_gap: GapStats | None = None
    pre_recall1: float = 0.0
    post_recall1: float = 0.0


def loss_and_grads(
    image_tower: TowerParams,
    text_tower: TowerParams,
    x_inputs: np.ndarray,
    w_inputs: np.ndarray,
    scale: float,
    img_mask: np.ndarray | None = None,
    txt_mask: np.ndarray | None = None,
) -> tuple[float, dict[str, np.ndarray]]:
    """Batch loss plus exact adapter gradients for both towers.

    Masks apply dropout to the corresponding adapter branch; gradients flow
    through the same masks, the unit normalization, and the low-rank
    factors analytically.
    """
    U_v = tower_pre(image_tower, x_inputs, img_mask)
    U_w = tower_pre(text_tower, w_inputs, txt_mask)
    norms_v = np.linalg.norm(U_v, axis=1, keepdims=True)
    norms_w = np.linalg.norm(U_w, axis=1, keepdims=True)
    V = U_v / norms_v
    W = U_w / norms_w
    loss, g_V, g_W = grad_contrastive(V, W, scale)
    g_img_A, g_img_B = _adapter_grads(image_tower, x_inputs, V, norms_v, g_V, img_mask)
    g_txt_A, g_txt_B = _adapter_grads(text_tower, w_inputs, W, norms_w, g_W, txt_mask)
    return loss, {"img_A": g_img_A, "img_B": g_img_B, "txt_A": g_txt_A, "txt_B": g_txt_B}


def _adapter_grads(
    params: TowerParams,
    X: np.ndarray,
    V: np.ndarray,
    norms: np.ndarray,
    g_out: np.ndarray,
    mask: np.ndarray | None,
) -> tuple[np.ndarray, np.ndarray]:
    # Through normalization: dL/du = (g - (g.v) v) / ||u||.
    X = np.asarray(X, dtype=np.float64)
    d_U = (g_out - (g_out * V).sum(axis=1, keepdims=True) * V) / norms
    d_branch = d_U if mask is None else mask * d_U
    AX = X @ params.lora_A.T
    g_B = params.scaling * (d_branch.T @ AX)
    g_A = params.scaling * ((d_branch @ params.lora_B).T @ X)
    return g_A, g_B


def retrieval_probe(
    image_tower: TowerParams,
    text_tower: TowerParams,
    data: SyntheticDataset,
    alpha: float = PROBE_ALPHA,
) -> float:
    """Recall@1 on held-out pairs against an independent gallery draw.

    Gallery entries are tower outputs of a second image draw per held-out
    pair; each composed query's single target is its own pair's entry.
    """
    gallery_vecs = forward_tower(image_tower, data.test_gallery_x)
    gallery = EmbeddingBank.from_vectors(
        [(f"g{i:05d}", gallery_vecs[i]) for i in range(data.n_test)],
        modality=Modality.IMAGE,
    )
    refs = forward_tower(image_tower, data.test_x)
    txts = forward_tower(text_tower, data.test_w)
    hits = 0
    for i in range(data.n_test):
        query = slerp(refs[i], txts[i], alpha)
        ranked = top_k(query, gallery, 1, query_id=f"q{i:05d}")
        hits += int(ranked.hits[0][0] == f"g{i:05d}")
    return hits / data.n_test


def _held_out_gap(image_tower: TowerParams, data: SyntheticDataset, seed: int) -> GapStats:
    # Image tower outputs against the ORIGINAL text anchors: the quantity
    # anchored tuning tries to drive toward 1.
    return modality_gap(forward_tower(image_tower, data.test_x), data.test_w, seed=seed)


def _epoch_row(
    epoch: int,
    config: TrainConfig,
    data: SyntheticDataset,
    image_tower: TowerParams,
    text_tower: TowerParams,
) -> dict:
    V_train = forward_tower(image_tower, data.train_x)
    W_train = forward_tower(text_tower, data.train_w)
    V_test = forward_tower(image_tower, data.test_x)
    W_test = forward_tower(text_tower, data.test_w)
    return {
        "epoch": epoch,
        "loss": contrastive_loss(V_train, W_train, config.logit_scale),
        "gap": _held_out_gap(image_tower, data, config.seed).to_dict(),
        # Held-out image outputs against the current text side, which moves
        # under the image_anchor and none_anchor variants.
        "gap_towers": float(paired_cosine(V_test, W_test).mean()),
    }


def train(config: TrainConfig, data: SyntheticDataset | None = None) -> TrainResult:
    """Run the full tuning loop; bit-deterministic for a fixed config."""
    if data is None:
        data = gen_synthetic(
            n_pairs=config.n_pairs,
            dim=config.dim,
            gap_rotation_angle=config.gap_rotation_angle,
            noise_sigma=config.noise_sigma,
            seed=config.seed,
            concept_dim=config.concept_dim,
        )
    tower_rng = np.random.default_rng([config.seed, 0])
    image_tower = init_tower(
        np.eye(data.dim), config.rank, config.lora_alpha, tower_rng, dropout_p=config.dropout_p
    )
    text_tower = init_tower(
        np.eye(data.dim), config.rank, config.lora_alpha, tower_rng, dropout_p=config.dropout_p
    )
    shuffle_rng = np.random.default_rng([config.seed, 1])
    dropout_rng = np.random.default_rng([config.seed, 2])

    train_img = config.anchoring in (AnchorMode.TEXT, AnchorMode.NONE)
    train_txt = config.anchoring in (AnchorMode.IMAGE, AnchorMode.NONE)
    optimizers: dict[str, AdamW] = {}
    if train_img:
        optimizers["img"] = AdamW(
            {"A": image_tower.lora_A, "B": image_tower.lora_B},
            lr=config.learning_rate, weight_decay=config.weight_decay,
        )
    if train_txt:
        optimizers["txt"] = AdamW(
            {"A": text_tower.lora_A, "B": text_tower.lora_B},
            lr=config.learning_rate, weight_decay=config.weight_decay,
        )

    result = TrainResult(config=config, data=data, image_tower=image_tower, text_tower=text_tower)
    result.pre_gap = _held_out_gap(image_tower, data, config.seed)
    result.pre_recall1 = retrieval_probe(image_tower, text_tower, data)
    result.history.append(_epoch_row(0, config, data, image_tower, text_tower))

    n = data.n_train
    for epoch in range(1, config.epochs + 1):
        perm = shuffle_rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = perm[start:start + config.batch_size]
            xb = data.train_x[idx]
            wb = data.train_w[idx]
            img_mask = dropout_mask(dropout_rng, (len(idx), data.dim), config.dropout_p) if train_img else None
            txt_mask = dropout_mask(dropout_rng, (len(idx), data.dim), config.dropout_p) if train_txt else None
            _, grads = loss_and_grads(
                image_tower, text_tower, xb, wb, config.logit_scale,
                img_mask=img_mask, txt_mask=txt_mask,
            )
            if train_img:
                optimizers["img"].step({"A": grads["img_A"], "B": grads["img_B"]})
            if train_txt:
                optimizers["txt"].step({"A": grads["txt_A"], "B": grads["txt_B"]})
        result.history.append(_epoch_row(epoch, config, data, image_tower, text_tower))

    result.post_gap = _held_out_gap(image_tower, data, config.seed)
    result.post_recall1 = retrieval_probe(image_tower, text_tower, data)
    return result


def compare_anchoring(config: TrainConfig) -> dict[str, TrainResult]:
    """Identical runs under each anchoring mode, sharing data and seeds."""
    return {
        mode.value: train(replace(config, anchoring=mode))
        for mode in (AnchorMode.TEXT, AnchorMode.NONE, AnchorMode.IMAGE)
    }
