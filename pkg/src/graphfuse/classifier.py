"""Linear classification head and the masked loss it feeds."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError
from .layers import Linear
from .rng import RngState
from .tensor import Tensor, masked_cross_entropy  # noqa: F401  (re-export)


@dataclass
class HeadParams:
    out: Linear  # d -> L

    @staticmethod
    def init(rng: RngState, d: int, n_labels: int) -> "HeadParams":
        if n_labels < 2:
            raise ConfigError(f"need at least 2 labels, got {n_labels}")
        return HeadParams(Linear.init(rng, d, n_labels))

    def named(self, prefix: str = "head") -> dict[str, Tensor]:
        return self.out.named(f"{prefix}.out")


def classify(H_dec: Tensor, head: HeadParams) -> Tensor:
    """Per-token affine map to label logits (no softmax; the loss wants logits)."""
    return head.out(H_dec)
