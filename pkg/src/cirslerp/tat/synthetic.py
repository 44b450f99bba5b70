"""Synthetic paired data with a controllable image/text angular gap.

Concepts are unit vectors drawn from a low-dimensional subspace V. The text
anchor of a pair is its (noised, renormalized) concept; the image input is
the same thing pushed through a fixed orthogonal rotation R chosen so that
z . (R z) = cos(gap_rotation_angle) for EVERY unit z in V: on an even-
dimensional block E containing V, R = cos(g) I + sin(g) J with J an
orthogonal antisymmetric map (a complex structure), so z . J z = 0 kills
the cross term; off the block R is the identity. J scatters V across all
of E, which is what makes the gap hurt retrieval before tuning: composed
queries pick up a J-direction component that scores incoherently against
rotated gallery items.

Keeping concepts and noise inside V also makes the correction a tuned tower
must learn exactly low rank: image inputs live in R V, where the needed
residual (R^T - I) restricted to R V has rank at most dim(V), so an adapter
of rank >= concept_dim can represent it exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import BadConfig

TRAIN_FRACTION = 0.8
DEFAULT_CONCEPT_DIM = 4


def _gap_rotation(dim: int, concept_dim: int, angle: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Constant-diagonal-angle rotation plus the concept subspace basis.

    Returns (R, basis): R rotates the even block E by the given angle along
    a complex structure J and fixes the orthogonal complement; basis spans
    a concept_dim subspace of E, so every concept satisfies z . R z =
    cos(angle) exactly.
    """
    m = 2 * (dim // 2)
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    q = q * np.sign(np.diag(r))  # fix QR sign ambiguity for determinism
    block = q[:, :m]
    even, odd = block[:, 0::2], block[:, 1::2]
    J = odd @ even.T - even @ odd.T          # J^2 = -projector onto E
    projector = block @ block.T
    rotation = np.eye(dim) + np.sin(angle) * J + (np.cos(angle) - 1.0) * projector
    mix = rng.standard_normal((m, concept_dim))
    qb, rb = np.linalg.qr(block @ mix)
    basis = qb * np.sign(np.diag(rb))
    return rotation, basis


def _unit_rows(M: np.ndarray) -> np.ndarray:
    return M / np.linalg.norm(M, axis=1, keepdims=True)


@dataclass
class SyntheticDataset:
    """Paired image inputs and text anchors with a train/held-out split."""

    dim: int
    concept_dim: int
    gap_rotation_angle: float
    noise_sigma: float
    seed: int
    rotation: np.ndarray       # (dim, dim) orthogonal
    basis: np.ndarray          # (dim, concept_dim), orthonormal columns of V
    train_x: np.ndarray        # (n_train, dim) image tower inputs
    train_w: np.ndarray        # (n_train, dim) unit text anchors
    test_x: np.ndarray
    test_w: np.ndarray
    test_gallery_x: np.ndarray  # independent image draw per held-out pair

    @property
    def n_train(self) -> int:
        return self.train_x.shape[0]

    @property
    def n_test(self) -> int:
        return self.test_x.shape[0]


def gen_synthetic(
    n_pairs: int,
    dim: int,
    gap_rotation_angle: float,
    noise_sigma: float,
    seed: int,
    concept_dim: int | None = None,
) -> SyntheticDataset:
    """Deterministic dataset for the anchoring mechanism experiment.

    concept_dim defaults to min(4, dim // 2) and must fit inside the even
    rotation block, i.e. concept_dim <= 2 * (dim // 2).
    """
    if dim < 4:
        raise BadConfig(f"dim must be >= 4, got {dim}")
    if concept_dim is None:
        concept_dim = min(DEFAULT_CONCEPT_DIM, dim // 2)
    block_dim = 2 * (dim // 2)
    if not (1 <= concept_dim <= block_dim):
        raise BadConfig(f"concept_dim must lie in [1, {block_dim}], got {concept_dim}")
    if n_pairs < 5:
        raise BadConfig(f"n_pairs must be >= 5, got {n_pairs}")
    if not (0.0 <= gap_rotation_angle <= np.pi / 2):
        raise BadConfig(f"gap_rotation_angle must lie in [0, pi/2], got {gap_rotation_angle}")
    if noise_sigma < 0:
        raise BadConfig(f"noise_sigma must be non-negative, got {noise_sigma}")

    rng = np.random.default_rng(seed)
    rotation, basis = _gap_rotation(dim, concept_dim, gap_rotation_angle, rng)

    concepts = rng.standard_normal((n_pairs, concept_dim))
    text_noise = rng.standard_normal((n_pairs, concept_dim))
    image_noise = rng.standard_normal((n_pairs, concept_dim))
    gallery_noise = rng.standard_normal((n_pairs, concept_dim))

    z = _unit_rows(concepts @ basis.T)
    w = _unit_rows(z + noise_sigma * (text_noise @ basis.T))
    x = _unit_rows(z + noise_sigma * (image_noise @ basis.T)) @ rotation.T
    x_gallery = _unit_rows(z + noise_sigma * (gallery_noise @ basis.T)) @ rotation.T

    n_train = int(n_pairs * TRAIN_FRACTION)
    return SyntheticDataset(
        dim=dim,
        concept_dim=concept_dim,
        gap_rotation_angle=float(gap_rotation_angle),
        noise_sigma=float(noise_sigma),
        seed=seed,
        rotation=rotation,
        basis=basis,
        train_x=x[:n_train],
        train_w=w[:n_train],
        test_x=x[n_train:],
        test_w=w[n_train:],
        test_gallery_x=x_gallery[n_train:],
    )
