"""Shared parameterized building blocks: linear, layer norm, multi-head attention.

Parameter containers are plain dataclasses of Tensors with a ``named``
method so the model can assemble its flat name -> Tensor dictionary for the
optimizer and the checkpoint. Naming matters: the optimizer skips weight
decay for names ending in ``.b`` and names containing ``norm``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import ConfigError
from .rng import RngState
from .tensor import Tensor

MASK_NEG = -1e30  # additive mask; exp() underflows to exactly 0.0


def glorot(rng: RngState, shape: tuple[int, ...]) -> np.ndarray:
    fan_in, fan_out = shape[0], shape[-1]
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, shape)


@dataclass
class Linear:
    w: Tensor
    b: Tensor

    @staticmethod
    def init(rng: RngState, d_in: int, d_out: int) -> "Linear":
        return Linear(Tensor(glorot(rng, (d_in, d_out)), requires_grad=True),
                      Tensor(np.zeros(d_out), requires_grad=True))

    def __call__(self, x: Tensor) -> Tensor:
        return T.matmul(x, self.w) + self.b

    def named(self, prefix: str) -> dict[str, Tensor]:
        return {f"{prefix}.w": self.w, f"{prefix}.b": self.b}


@dataclass
class LayerNorm:
    gain: Tensor
    bias: Tensor
    eps: float = 1e-5

    @staticmethod
    def init(d: int, eps: float = 1e-5) -> "LayerNorm":
        return LayerNorm(Tensor(np.ones(d), requires_grad=True),
                         Tensor(np.zeros(d), requires_grad=True), eps)

    def __call__(self, x: Tensor) -> Tensor:
        return T.layer_norm(x, self.gain, self.bias, self.eps)

    def named(self, prefix: str) -> dict[str, Tensor]:
        # 'norm' in the prefix keeps both out of weight decay
        return {f"{prefix}.gain": self.gain, f"{prefix}.bias": self.bias}


@dataclass
class Attention:
    """Q/K/V/O projections for one multi-head attention block."""

    q: Linear
    k: Linear
    v: Linear
    o: Linear
    n_heads: int

    @staticmethod
    def init(rng: RngState, d: int, n_heads: int) -> "Attention":
        if d % n_heads != 0:
            raise ConfigError(f"width {d} not divisible by {n_heads} heads")
        return Attention(Linear.init(rng, d, d), Linear.init(rng, d, d),
                         Linear.init(rng, d, d), Linear.init(rng, d, d),
                         n_heads)

    def named(self, prefix: str) -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        for tag, lin in (("q", self.q), ("k", self.k), ("v", self.v), ("o", self.o)):
            out.update(lin.named(f"{prefix}.{tag}"))
        return out


def key_padding_bias(key_mask: np.ndarray) -> np.ndarray:
    """(B, n_k) boolean mask -> (B, 1, 1, n_k) additive bias, MASK_NEG at pads."""
    return np.where(key_mask, 0.0, MASK_NEG)[:, None, None, :]


def multi_head_attention(params: Attention, query: Tensor, key: Tensor,
                         value: Tensor, key_mask: np.ndarray | None = None,
                         collect: list | None = None) -> Tensor:
    """Scaled dot-product attention with key-side padding masking.

    ``key_mask`` is the (B, n_k) boolean attention mask (True = real token).
    Masked keys receive exactly zero weight, so every row still sums to 1
    over the unmasked keys. When ``collect`` is given the (B, H, n_q, n_k)
    weight array of this call is appended to it (eval instrumentation).
    """
    B, n_q, d = query.shape
    n_k = key.shape[1]
    h = params.n_heads
    dh = d // h

    def split(x: Tensor, n: int) -> Tensor:
        return T.transpose(x.reshape(B, n, h, dh), (0, 2, 1, 3))

    q = split(params.q(query), n_q)
    k = split(params.k(key), n_k)
    v = split(params.v(value), n_k)
    scores = T.matmul(q, T.swapaxes(k, -1, -2)) * (1.0 / math.sqrt(dh))
    if key_mask is not None:
        scores = scores + Tensor(key_padding_bias(key_mask))
    weights = T.softmax(scores, axis=-1)
    if collect is not None:
        collect.append(weights.data)
    mixed = T.transpose(T.matmul(weights, v), (0, 2, 1, 3)).reshape(B, n_q, d)
    return params.o(mixed)


@dataclass
class FeedForward:
    """Position-wise pair d -> d_ff -> d with ReLU."""

    inner: Linear
    outer: Linear

    @staticmethod
    def init(rng: RngState, d: int, d_ff: int) -> "FeedForward":
        return FeedForward(Linear.init(rng, d, d_ff), Linear.init(rng, d_ff, d))

    def __call__(self, x: Tensor) -> Tensor:
        return self.outer(T.relu(self.inner(x)))

    def named(self, prefix: str) -> dict[str, Tensor]:
        return {**self.inner.named(f"{prefix}.inner"),
                **self.outer.named(f"{prefix}.outer")}


def apply_dropout(x: Tensor, p: float, rng: RngState | None, training: bool) -> Tensor:
    """Multiply by an inverted-dropout mask (no-op in eval or at p = 0)."""
    if not training or p == 0.0:
        return x
    return x * T.dropout_mask(x.shape, p, rng, training)
