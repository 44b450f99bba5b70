"""AdamW with decoupled weight decay and bias correction."""

from __future__ import annotations

import numpy as np

from ..errors import BadConfig


class AdamW:
    """Updates a named set of arrays in place.

    Weight decay is decoupled: the decay term lr * wd * p is subtracted
    directly and never enters the moment estimates.
    """

    def __init__(
        self,
        params: dict[str, np.ndarray],
        lr: float,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        weight_decay: float = 0.0,
    ):
        if lr <= 0:
            raise BadConfig(f"lr must be positive, got {lr}")
        if not (0.0 <= betas[0] < 1.0 and 0.0 <= betas[1] < 1.0):
            raise BadConfig(f"betas must lie in [0, 1), got {betas}")
        if eps <= 0:
            raise BadConfig(f"eps must be positive, got {eps}")
        if weight_decay < 0:
            raise BadConfig(f"weight_decay must be non-negative, got {weight_decay}")
        self.params = params
        self.lr = float(lr)
        self.beta1, self.beta2 = float(betas[0]), float(betas[1])
        self.eps = float(eps)
        self.weight_decay = float(weight_decay)
        self.t = 0
        self.m = {k: np.zeros_like(p) for k, p in params.items()}
        self.v = {k: np.zeros_like(p) for k, p in params.items()}

    def step(self, grads: dict[str, np.ndarray]) -> None:
        """One update using the given gradients (keyed like params)."""
        missing = set(self.params) - set(grads)
        if missing:
            raise BadConfig(f"missing gradients for {sorted(missing)}")
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for key, p in self.params.items():
            g = grads[key]
            if g.shape != p.shape:
                raise BadConfig(f"gradient shape {g.shape} vs param shape {p.shape} for {key!r}")
            m = self.m[key]
            v = self.v[key]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            update = self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            if self.weight_decay:
                update = update + self.lr * self.weight_decay * p
            p -= update
