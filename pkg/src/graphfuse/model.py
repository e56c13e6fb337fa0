"""Model assembly: config, variant wiring, forward/loss/predict.

Three variants mirror the ablation rows: "encoder" classifies the encoder
output directly, "gat" adds the graph-attention stage, "full" adds the
decoder refinement on top. All stages operate at width d, so the classifier
is shared unchanged across variants.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import tensor as T
from .classifier import HeadParams, classify
from .data import Batch, LabelVocab, TokenVocab
from .decoder import DecoderParams, decode_refine
from .encoder import EncoderParams, encode
from .errors import ConfigError
from .gat import GatParams, gat_forward
from .graph import build_fully_connected
from .rng import RngState
from .tensor import Tensor, masked_cross_entropy

VARIANTS = ("encoder", "gat", "full")


@dataclass
class ModelConfig:
    vocab_size: int
    n_labels: int
    d_emb: int = 64
    d: int = 64
    enc_layers: int = 0
    enc_heads: int = 4
    gat_hidden: int = 64
    gat_heads: int = 4
    dec_heads: int = 4
    dec_layers: int = 1
    dropout: float = 0.3
    negative_slope: float = 0.2
    gat_residual: bool = False
    max_len: int = 128
    variant: str = "full"

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.vocab_size < 2:
            raise ConfigError(f"vocab_size must cover pad+unk, got {self.vocab_size}")
        if self.n_labels < 2:
            raise ConfigError(f"n_labels must be >= 2, got {self.n_labels}")
        if self.d_emb % 2 != 0:
            raise ConfigError(f"d_emb must be even for sinusoidal positions, got {self.d_emb}")
        if self.enc_layers not in (0, 1, 2):
            raise ConfigError(f"enc_layers must be 0, 1 or 2, got {self.enc_layers}")
        if self.enc_layers and self.d_emb % self.enc_heads != 0:
            raise ConfigError(f"d_emb {self.d_emb} not divisible by enc_heads {self.enc_heads}")
        if self.gat_hidden % self.gat_heads != 0:
            raise ConfigError(f"gat_hidden {self.gat_hidden} not divisible by "
                              f"gat_heads {self.gat_heads}")
        if self.d % self.dec_heads != 0:
            raise ConfigError(f"d {self.d} not divisible by dec_heads {self.dec_heads}")
        if self.dec_layers < 1:
            raise ConfigError(f"dec_layers must be >= 1, got {self.dec_layers}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must lie in [0,1), got {self.dropout}")
        if not 0.0 < self.negative_slope < 1.0:
            raise ConfigError(f"negative_slope must lie in (0,1), got {self.negative_slope}")
        if self.max_len < 1:
            raise ConfigError(f"max_len must be >= 1, got {self.max_len}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


class TokenClassifier:
    """Encoder -> (GAT ->) (decoder ->) linear head, per the variant flag."""

    def __init__(self, config: ModelConfig, token_vocab: TokenVocab,
                 label_vocab: LabelVocab, rng: RngState):
        config.validate()
        if config.vocab_size != len(token_vocab):
            raise ConfigError(f"config vocab_size {config.vocab_size} != "
                              f"token vocab {len(token_vocab)}")
        if config.n_labels != len(label_vocab):
            raise ConfigError(f"config n_labels {config.n_labels} != "
                              f"label vocab {len(label_vocab)}")
        self.config = config
        self.token_vocab = token_vocab
        self.label_vocab = label_vocab
        c = config
        self.encoder = EncoderParams.init(
            rng.split(), c.vocab_size, c.d_emb, c.d, c.enc_layers,
            c.enc_heads, c.max_len, c.dropout)
        self.gat = None
        self.decoder = None
        if c.variant in ("gat", "full"):
            self.gat = GatParams.init(
                rng.split(), c.d, c.gat_hidden, c.gat_heads,
                negative_slope=c.negative_slope,
                attn_dropout=c.dropout, feat_dropout=c.dropout)
        if c.variant == "full":
            self.decoder = DecoderParams.init(
                rng.split(), c.d, c.dec_heads, c.dec_layers, c.dropout)
        self.head = HeadParams.init(rng.split(), c.d, c.n_labels)

    # -- parameter plumbing -------------------------------------------------

    def parameters(self) -> dict[str, Tensor]:
        """Flat name -> Tensor map in stable construction order."""
        out = self.encoder.named("encoder")
        if self.gat is not None:
            out.update(self.gat.named("gat"))
        if self.decoder is not None:
            out.update(self.decoder.named("decoder"))
        out.update(self.head.named("head"))
        return out

    def zero_grad(self) -> None:
        for p in self.parameters().values():
            p.zero_grad()

    # -- forward paths --------------------------------------------------------

    def forward(self, batch: Batch, rng: RngState | None = None,
                training: bool = False, collect: dict | None = None) -> Tensor:
        """Logits (B, n_max, L) for the configured variant."""
        H = encode(batch, self.encoder, rng, training, collect)
        if self.config.variant == "encoder":
            return classify(H, self.head)

        B, n_max = batch.token_ids.shape
        d = self.config.d
        edges = build_fully_connected(batch.lengths)
        flat_idx = np.concatenate(
            [b * n_max + np.arange(n, dtype=np.int64)
             for b, n in enumerate(batch.lengths)])
        H_nodes = T.gather_rows(H.reshape(B * n_max, d), flat_idx)
        G = gat_forward(H_nodes, edges, self.gat, rng, training, collect)
        if self.config.gat_residual:
            G = G + H_nodes
        # flat_idx is unique, so this segment_sum is a pure scatter; padding
        # rows come back as zeros
        H_g = T.segment_sum(G, flat_idx, B * n_max).reshape(B, n_max, d)
        if self.config.variant == "gat":
            return classify(H_g, self.head)

        H_dec = decode_refine(H_g, batch.attention_mask, self.decoder,
                              rng, training, collect)
        return classify(H_dec, self.head)

    def loss(self, batch: Batch, rng: RngState | None = None,
             training: bool = True) -> Tensor:
        return masked_cross_entropy(self.forward(batch, rng, training),
                                    batch.label_ids)

    def predict_batch(self, batch: Batch) -> list[list[int]]:
        """Per-sentence argmax label ids (ties break to the lowest index)."""
        with T.no_grad():
            logits = self.forward(batch, rng=None, training=False)
        ids = np.argmax(logits.data, axis=-1)
        return [ids[b, :n].tolist() for b, n in enumerate(batch.lengths)]
