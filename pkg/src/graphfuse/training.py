"""AdamW trainer: linear warmup/decay, global-norm clipping, early stopping
on validation micro-F1, deterministic given the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import Corpus, make_batches
from .errors import ConfigError, ContractError, TrainingDivergedError
from .evaluation import evaluate
from .model import TokenClassifier
from .rng import RngState
from .tensor import Tensor


@dataclass
class TrainConfig:
    learning_rate: float = 5e-5
    weight_decay: float = 0.01
    clip_norm: float = 1.0
    warmup_ratio: float = 0.1
    dropout: float = 0.3
    batch_size: int = 16
    epochs: int = 15
    max_len: int = 128
    early_stop_patience: int = 3
    seed: int = 0
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8

    def validate(self) -> None:
        if not 0.0 <= self.warmup_ratio < 1.0:
            raise ConfigError(f"warmup_ratio must lie in [0,1), got {self.warmup_ratio}")
        if self.clip_norm <= 0:
            raise ConfigError(f"clip_norm must be positive, got {self.clip_norm}")
        if self.early_stop_patience < 1:
            raise ConfigError(f"patience must be >= 1, got {self.early_stop_patience}")
        if self.learning_rate < 0:
            raise ConfigError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.epochs < 1 or self.batch_size < 1 or self.max_len < 1:
            raise ConfigError("epochs, batch_size and max_len must all be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must lie in [0,1), got {self.dropout}")
        b1, b2 = self.betas
        if not (0.0 <= b1 < 1.0 and 0.0 <= b2 < 1.0):
            raise ConfigError(f"betas must lie in [0,1), got {self.betas}")

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["betas"] = list(self.betas)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        if "betas" in d:
            d["betas"] = tuple(d["betas"])
        return cls(**d)


def lr_schedule(step: int, total_steps: int, warmup_ratio: float,
                peak: float) -> float:
    """Linear 0 -> peak over the warmup, then linear peak -> 0 at total_steps."""
    if total_steps <= 0:
        raise ConfigError(f"total_steps must be positive, got {total_steps}")
    if not 0 <= step <= total_steps:
        raise ContractError(f"step {step} outside [0, {total_steps}]")
    warmup_steps = round(warmup_ratio * total_steps)
    if warmup_steps >= total_steps:
        warmup_steps = total_steps - 1
    if warmup_steps > 0 and step <= warmup_steps:
        return peak * step / warmup_steps
    return peak * (total_steps - step) / (total_steps - warmup_steps)


def clip_gradients(grads: list[np.ndarray], max_norm: float) -> float:
    """Scale gradients in place to a global L2 norm of max_norm; return the scale."""
    if max_norm <= 0:
        raise ConfigError(f"max_norm must be positive, got {max_norm}")
    total = math.sqrt(sum(float(np.sum(g * g)) for g in grads))
    if total <= max_norm or total == 0.0:
        return 1.0
    scale = max_norm / total
    for g in grads:
        g *= scale
    return scale


class OptState:
    """Per-parameter AdamW moment buffers plus the shared step counter."""

    def __init__(self):
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.step = 0


def _decayed(name: str) -> bool:
    # biases (".b") and layer-norm gains/biases ("...normK.*") are exempt
    return not (name.endswith(".b") or ".norm" in name)


def adamw_step(params: dict[str, Tensor], grads: dict[str, np.ndarray],
               state: OptState, lr: float, config: TrainConfig) -> None:
    """One decoupled-weight-decay Adam update, in place."""
    b1, b2 = config.betas
    state.step += 1
    t = state.step
    bc1 = 1.0 - b1 ** t
    bc2 = 1.0 - b2 ** t
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.data.shape:
            raise ContractError(f"{name}: grad {g.shape} vs param {p.data.shape}")
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        update = (m / bc1) / (np.sqrt(v / bc2) + config.eps)
        if config.weight_decay and _decayed(name):
            update = update + config.weight_decay * p.data
        p.data -= lr * update


@dataclass
class TrainResult:
    history: list[dict] = field(default_factory=list)
    best_epoch: int = -1
    best_micro: float = -1.0

    def history_jsonl(self) -> str:
        import json
        return "\n".join(json.dumps(row) for row in self.history) + "\n"


def train(model: TokenClassifier, corpora: dict[str, Corpus],
          config: TrainConfig) -> TrainResult:
    """Optimize the model; the model ends up holding the best-epoch weights.

    One validation pass per epoch; early stop after ``early_stop_patience``
    evaluations without strict micro-F1 improvement. Raises
    TrainingDivergedError (naming the step) if the loss goes non-finite.
    """
    config.validate()
    train_corpus = corpora.get("train")
    valid_corpus = corpora.get("valid")
    if not train_corpus or not valid_corpus:
        raise ConfigError("train() needs non-empty 'train' and 'valid' corpora")

    root = RngState(config.seed)
    shuffle_rng = root.split()
    dropout_rng = root.split()

    steps_per_epoch = math.ceil(len(train_corpus) / config.batch_size)
    total_steps = steps_per_epoch * config.epochs
    params = model.parameters()
    state = OptState()
    result = TrainResult()
    best_params: dict[str, np.ndarray] | None = None
    stale_evals = 0
    global_step = 0

    for epoch in range(config.epochs):
        batches = make_batches(train_corpus, config.batch_size, config.max_len,
                               model.token_vocab, model.label_vocab,
                               rng=shuffle_rng)
        epoch_loss = 0.0
        for batch in batches:
            model.zero_grad()
            loss = model.loss(batch, dropout_rng, training=True)
            value = loss.item()
            if not math.isfinite(value):
                raise TrainingDivergedError(
                    f"non-finite loss ({value}) at optimizer step {global_step}")
            loss.backward()
            grads = {name: p.grad for name, p in params.items()}
            clip_gradients(list(grads.values()), config.clip_norm)
            lr = lr_schedule(global_step, total_steps, config.warmup_ratio,
                             config.learning_rate)
            adamw_step(params, grads, state, lr, config)
            epoch_loss += value
            global_step += 1

        report = evaluate(model, valid_corpus, batch_size=config.batch_size,
                          max_len=config.max_len)
        micro = report.micro["f1"]
        result.history.append({
            "epoch": epoch,
            "train_loss": epoch_loss / len(batches),
            "micro_f1": micro,
            "macro_f1": report.macro["f1"],
        })
        if micro > result.best_micro:
            result.best_micro = micro
            result.best_epoch = epoch
            best_params = {k: p.data.copy() for k, p in params.items()}
            stale_evals = 0
        else:
            stale_evals += 1
            if stale_evals >= config.early_stop_patience:
                break

    if best_params is not None:
        for name, p in params.items():
            p.data = best_params[name]
    return result
