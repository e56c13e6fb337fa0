"""Multi-head graph attention (v1 form) over a flat edge list.

Attention logits are LeakyReLU(a · [W h_dst ; W h_src]); normalization is a
softmax over each node's in-neighborhood, computed with segment kernels so
the whole layer is two gathers, a segment softmax and a segment-sum away
from dense linear algebra. Heads are concatenated and projected back to d.
"""

from __future__ import annotations

import math
from collections import namedtuple
from dataclasses import dataclass

import numpy as np

from . import kernels
from . import tensor as T
from .errors import ConfigError, ContractError
from .graph import EdgeIndex
from .layers import Linear, apply_dropout
from .rng import RngState
from .tensor import Tensor

GatHead = namedtuple("GatHead", ["W", "a"])  # W: (d, d_head); a: (2*d_head,)


@dataclass
class GatParams:
    W: Tensor       # (heads, d, d_head)
    a_dst: Tensor   # (heads, d_head) — pairs with W h_destination
    a_src: Tensor   # (heads, d_head) — pairs with W h_source
    proj: Linear    # heads*d_head -> d
    negative_slope: float = 0.2
    attn_dropout: float = 0.0
    feat_dropout: float = 0.0

    @property
    def n_heads(self) -> int:
        return self.W.shape[0]

    @property
    def d_head(self) -> int:
        return self.W.shape[2]

    @staticmethod
    def init(rng: RngState, d: int, hidden: int, heads: int,
             negative_slope: float = 0.2, attn_dropout: float = 0.0,
             feat_dropout: float = 0.0) -> "GatParams":
        if hidden % heads != 0:
            raise ConfigError(f"hidden size {hidden} not divisible by {heads} heads")
        dh = hidden // heads
        w_lim = math.sqrt(6.0 / (d + dh))
        a_lim = math.sqrt(6.0 / (2 * dh + 1))
        return GatParams(
            W=Tensor(rng.uniform(-w_lim, w_lim, (heads, d, dh)), requires_grad=True),
            a_dst=Tensor(rng.uniform(-a_lim, a_lim, (heads, dh)), requires_grad=True),
            a_src=Tensor(rng.uniform(-a_lim, a_lim, (heads, dh)), requires_grad=True),
            proj=Linear.init(rng, hidden, d),
            negative_slope=negative_slope,
            attn_dropout=attn_dropout,
            feat_dropout=feat_dropout,
        )

    def head(self, i: int) -> GatHead:
        """Per-head view (W_h, a_h) with a_h = [a_dst ; a_src]."""
        return GatHead(self.W.data[i],
                       np.concatenate([self.a_dst.data[i], self.a_src.data[i]]))

    def named(self, prefix: str = "gat") -> dict[str, Tensor]:
        return {f"{prefix}.W": self.W, f"{prefix}.a_dst": self.a_dst,
                f"{prefix}.a_src": self.a_src,
                **self.proj.named(f"{prefix}.proj")}


def attention_logits(h_src: np.ndarray, h_dst: np.ndarray, head: GatHead,
                     negative_slope: float = 0.2) -> float:
    """Raw (pre-softmax) attention logit for one ordered pair of nodes."""
    dh = head.W.shape[1]
    z = float(head.a[:dh] @ (head.W.T @ h_dst) + head.a[dh:] @ (head.W.T @ h_src))
    return z if z >= 0 else negative_slope * z


def gat_forward(H: Tensor, edges: EdgeIndex, params: GatParams,
                rng: RngState | None, training: bool,
                collect: dict | None = None) -> Tensor:
    """Graph-attention layer: (node_count, d) -> (node_count, d).

    The input must be flattened to one row per *real* token, consistent with
    ``edges`` (padding holds no node). In eval mode, per-head attention rows
    are stashed into ``collect['gat_alpha']`` as (alpha (E, heads), targets).
    """
    N, d = H.shape
    if N != edges.node_count:
        raise ContractError(
            f"feature rows ({N}) disagree with edge index nodes "
            f"({edges.node_count})")
    h = params.n_heads
    src, tgt = edges.sources, edges.targets

    # per-node projections and score halves, laid out (N, heads, ...)
    Wh = T.transpose(T.matmul(H, params.W), (1, 0, 2))          # (N, h, dh)
    s_dst = T.sum_(Wh * params.a_dst.reshape(1, h, -1), axis=-1)  # (N, h)
    s_src = T.sum_(Wh * params.a_src.reshape(1, h, -1), axis=-1)

    logits = T.leaky_relu(T.gather_rows(s_dst, tgt) + T.gather_rows(s_src, src),
                          params.negative_slope)                 # (E, h)

    # segment softmax over each target's in-neighborhood (shift detached)
    shift = kernels.segment_max(logits.data, tgt, N)[tgt]
    z = T.exp(logits - Tensor(shift))
    denom = T.segment_sum(z, tgt, N)                             # (N, h)
    alpha = z / T.gather_rows(denom, tgt)                        # (E, h)
    if collect is not None:
        collect["gat_alpha"] = (alpha.data.copy(), tgt.copy())
    alpha = apply_dropout(alpha, params.attn_dropout, rng, training)

    messages = T.gather_rows(Wh, src) * alpha.reshape(-1, h, 1)  # (E, h, dh)
    mixed = T.segment_sum(messages, tgt, N)                      # (N, h, dh)
    feats = T.elu(mixed).reshape(N, h * params.d_head)
    feats = apply_dropout(feats, params.feat_dropout, rng, training)
    return params.proj(feats)
