"""Reverse-mode autodiff over numpy float64 arrays.

A :class:`Tensor` wraps an ndarray plus an optional gradient buffer. Ops
build a DAG of closures; :func:`backward` walks it once in topological order
and accumulates dL/dθ into ``.grad``. Everything is 64-bit: at desk scale we
trade speed for checkable numerics (finite differences at 1e-3 relative
tolerance need the headroom).

Design notes
------------
* Gradients accumulate across ``backward`` calls until ``zero_grad``.
* Stochastic ops take an explicit :class:`~graphfuse.rng.RngState`.
* ``no_grad()`` suppresses graph construction (evaluation paths).
* Fused primitives (softmax, layer_norm, masked_cross_entropy) carry
  closed-form backwards instead of being composed from smaller ops; the
  max-shift inside softmax/log-sum-exp is detached, which is exact because
  the shift cancels in the gradient.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np

from .errors import (ConfigError, ContractError, DegenerateBatchError,
                     ShapeMismatchError)
from .rng import RngState

_grad_enabled = True


@contextmanager
def no_grad():
    """Disable graph construction inside the block (forward pass only)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


class Tensor:
    """An ndarray with an optional grad buffer and a backward closure."""

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward_fn")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._backward_fn = None

    # -- bookkeeping --------------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}{flag})"

    # -- operator sugar ------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __pow__(self, k):
        return pow_(self, k)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 else shape[0])

    def transpose(self, axes):
        return transpose(self, axes)

    def swapaxes(self, a, b):
        return swapaxes(self, a, b)

    def sum(self, axis=None, keepdims=False):
        return sum_(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis=axis, keepdims=keepdims)

    def backward(self) -> None:
        backward(self)


def _ensure_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data: np.ndarray, parents: tuple[Tensor, ...], backward_fn) -> Tensor:
    """Wrap an op result, recording the graph only when grads can flow."""
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward_fn = backward_fn
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to the original operand shape."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    keep = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if keep:
        grad = grad.sum(axis=keep, keepdims=True)
    return grad.reshape(shape)


# -- arithmetic ---------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = _ensure_tensor(a), _ensure_tensor(b)
    out = a.data + b.data

    def bw(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)

    return _make(out, (a, b), bw)


def sub(a, b) -> Tensor:
    a, b = _ensure_tensor(a), _ensure_tensor(b)
    out = a.data - b.data

    def bw(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(-g, b.data.shape)

    return _make(out, (a, b), bw)


def mul(a, b) -> Tensor:
    a, b = _ensure_tensor(a), _ensure_tensor(b)
    out = a.data * b.data

    def bw(g):
        return (_unbroadcast(g * b.data, a.data.shape),
                _unbroadcast(g * a.data, b.data.shape))

    return _make(out, (a, b), bw)


def div(a, b) -> Tensor:
    a, b = _ensure_tensor(a), _ensure_tensor(b)
    out = a.data / b.data

    def bw(g):
        return (_unbroadcast(g / b.data, a.data.shape),
                _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape))

    return _make(out, (a, b), bw)


def neg(a) -> Tensor:
    a = _ensure_tensor(a)
    return _make(-a.data, (a,), lambda g: (-g,))


def pow_(a, k: float) -> Tensor:
    """Elementwise power with a constant scalar exponent."""
    a = _ensure_tensor(a)
    k = float(k)
    out = a.data ** k
    return _make(out, (a,), lambda g: (g * k * a.data ** (k - 1.0),))


def exp(a) -> Tensor:
    a = _ensure_tensor(a)
    out = np.exp(a.data)
    return _make(out, (a,), lambda g: (g * out,))


def log(a) -> Tensor:
    a = _ensure_tensor(a)
    return _make(np.log(a.data), (a,), lambda g: (g / a.data,))


def matmul(a, b) -> Tensor:
    """Matrix product; batch dims broadcast like np.matmul."""
    a, b = _ensure_tensor(a), _ensure_tensor(b)
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise ShapeMismatchError(
            f"matmul needs rank >= 2 operands, got {a.data.shape} and {b.data.shape}")
    if a.data.shape[-1] != b.data.shape[-2]:
        raise ShapeMismatchError(
            f"matmul inner dimensions disagree: {a.data.shape} x {b.data.shape}")
    try:
        out = np.matmul(a.data, b.data)
    except ValueError as exc:
        raise ShapeMismatchError(
            f"matmul batch dims do not broadcast: {a.data.shape} x {b.data.shape}"
        ) from exc

    def bw(g):
        ga = np.matmul(g, b.data.swapaxes(-1, -2))
        gb = np.matmul(a.data.swapaxes(-1, -2), g)
        return _unbroadcast(ga, a.data.shape), _unbroadcast(gb, b.data.shape)

    return _make(out, (a, b), bw)


# -- shape ops ----------------------------------------------------------------

def reshape(a, shape) -> Tensor:
    a = _ensure_tensor(a)
    out = a.data.reshape(shape)
    return _make(out, (a,), lambda g: (g.reshape(a.data.shape),))


def transpose(a, axes) -> Tensor:
    a = _ensure_tensor(a)
    axes = tuple(axes)
    inv = tuple(np.argsort(axes))
    out = a.data.transpose(axes)
    return _make(out, (a,), lambda g: (g.transpose(inv),))


def swapaxes(a, i: int, j: int) -> Tensor:
    a = _ensure_tensor(a)
    out = a.data.swapaxes(i, j)
    return _make(out, (a,), lambda g: (g.swapaxes(i, j),))


# -- reductions ---------------------------------------------------------------

def _expand_reduced(g: np.ndarray, shape, axis, keepdims) -> np.ndarray:
    if axis is None:
        return np.broadcast_to(g, shape).copy() if np.ndim(g) == 0 \
            else np.broadcast_to(g.reshape(()), shape).copy()
    if not keepdims:
        axes = axis if isinstance(axis, tuple) else (axis,)
        for ax in sorted(a % len(shape) for a in axes):
            g = np.expand_dims(g, ax)
    return np.broadcast_to(g, shape).copy()


def sum_(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _ensure_tensor(a)
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def bw(g):
        return (_expand_reduced(g, a.data.shape, axis, keepdims),)

    return _make(out, (a,), bw)


def mean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _ensure_tensor(a)
    out = a.data.mean(axis=axis, keepdims=keepdims)
    count = a.data.size if axis is None else \
        np.prod([a.data.shape[ax] for ax in
                 (axis if isinstance(axis, tuple) else (axis,))])

    def bw(g):
        return (_expand_reduced(g, a.data.shape, axis, keepdims) / count,)

    return _make(out, (a,), bw)


# -- nonlinearities -----------------------------------------------------------

def softmax(x, axis: int = -1) -> Tensor:
    """Stable softmax along ``axis`` (max-shifted; shift is detached)."""
    x = _ensure_tensor(x)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)

    def bw(g):
        dot = (g * y).sum(axis=axis, keepdims=True)
        return ((g - dot) * y,)

    return _make(y, (x,), bw)


def leaky_relu(x, negative_slope: float = 0.2) -> Tensor:
    if not 0.0 < negative_slope < 1.0:
        raise ConfigError(f"leaky_relu slope must lie in (0,1), got {negative_slope}")
    x = _ensure_tensor(x)
    slope = float(negative_slope)
    pos = x.data >= 0
    out = np.where(pos, x.data, slope * x.data)

    def bw(g):
        return (g * np.where(pos, 1.0, slope),)

    return _make(out, (x,), bw)


def relu(x) -> Tensor:
    x = _ensure_tensor(x)
    pos = x.data > 0
    return _make(np.where(pos, x.data, 0.0), (x,), lambda g: (g * pos,))


def elu(x, alpha: float = 1.0) -> Tensor:
    """ELU: x for x > 0, alpha·(eˣ−1) otherwise. Grad is (y+alpha) below zero."""
    x = _ensure_tensor(x)
    pos = x.data > 0
    out = np.where(pos, x.data, alpha * (np.exp(np.minimum(x.data, 0.0)) - 1.0))

    def bw(g):
        return (g * np.where(pos, 1.0, out + alpha),)

    return _make(out, (x,), bw)


def layer_norm(x, gain, bias, eps: float = 1e-5) -> Tensor:
    """Normalize over the last axis, then scale/shift by (gain, bias)."""
    if eps <= 0:
        raise ConfigError(f"layer_norm eps must be positive, got {eps}")
    x, gain, bias = _ensure_tensor(x), _ensure_tensor(gain), _ensure_tensor(bias)
    d = x.data.shape[-1]
    if gain.data.shape != (d,) or bias.data.shape != (d,):
        raise ShapeMismatchError(
            f"layer_norm affine params must have shape ({d},), "
            f"got gain {gain.data.shape} and bias {bias.data.shape}")
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    y = xhat * gain.data + bias.data

    def bw(g):
        dxhat = g * gain.data
        dgain = (g * xhat).reshape(-1, d).sum(axis=0)
        dbias = g.reshape(-1, d).sum(axis=0)
        dx = inv * (dxhat
                    - dxhat.mean(axis=-1, keepdims=True)
                    - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True))
        return dx, dgain, dbias

    return _make(y, (x, gain, bias), bw)


# -- stochastic ---------------------------------------------------------------

def dropout_mask(shape, p: float, rng: RngState, training: bool) -> Tensor:
    """Inverted-dropout mask: Bernoulli(1−p)/(1−p) in training, ones in eval."""
    if not 0.0 <= p < 1.0:
        raise ConfigError(f"dropout probability must lie in [0,1), got {p}")
    if not training or p == 0.0:
        return Tensor(np.ones(shape))
    keep = rng.uniform(0.0, 1.0, shape) >= p
    return Tensor(keep.astype(np.float64) / (1.0 - p))


# -- gather / scatter ---------------------------------------------------------

def gather_rows(x, indices) -> Tensor:
    """Select rows of ``x`` along axis 0; backward scatter-adds (repeats ok)."""
    from . import kernels
    x = _ensure_tensor(x)
    idx = np.asarray(indices, dtype=np.int64)
    if idx.ndim != 1:
        raise ContractError(f"gather_rows wants a 1-D index list, got shape {idx.shape}")
    if idx.size and (idx.min() < 0 or idx.max() >= x.data.shape[0]):
        raise ContractError(
            f"gather_rows index out of range for {x.data.shape[0]} rows")
    out = x.data[idx]

    def bw(g):
        cols = int(np.prod(x.data.shape[1:], dtype=np.int64)) if x.data.ndim > 1 else 1
        flat = kernels.segment_sum(g.reshape(idx.size, cols), idx, x.data.shape[0])
        return (flat.reshape(x.data.shape),)

    return _make(out, (x,), bw)


def segment_sum(x, segments, num_segments: int) -> Tensor:
    """Sum rows of ``x`` into ``num_segments`` buckets; backward is a gather."""
    from . import kernels
    x = _ensure_tensor(x)
    seg = np.asarray(segments, dtype=np.int64)
    if seg.ndim != 1 or seg.shape[0] != x.data.shape[0]:
        raise ContractError(
            f"segments must be 1-D with one id per row: {seg.shape} vs {x.data.shape}")
    if seg.size and (seg.min() < 0 or seg.max() >= num_segments):
        raise ContractError(f"segment id out of range [0, {num_segments})")
    cols = int(np.prod(x.data.shape[1:], dtype=np.int64)) if x.data.ndim > 1 else 1
    out = kernels.segment_sum(x.data.reshape(x.data.shape[0], cols), seg, num_segments)
    out = out.reshape((num_segments,) + x.data.shape[1:])

    def bw(g):
        return (g.reshape(num_segments, cols)[seg].reshape(x.data.shape),)

    return _make(out, (x,), bw)


# -- fused loss ---------------------------------------------------------------

IGNORE_INDEX = -100


def masked_cross_entropy(logits: Tensor, label_ids: np.ndarray) -> Tensor:
    """Mean cross-entropy over positions whose label is not IGNORE_INDEX.

    ``logits`` has shape (..., L); ``label_ids`` matches the leading shape.
    Ignored positions contribute exactly zero gradient. Raises
    DegenerateBatchError when every position is ignored.
    """
    logits = _ensure_tensor(logits)
    labels = np.asarray(label_ids, dtype=np.int64)
    if labels.shape != logits.data.shape[:-1]:
        raise ShapeMismatchError(
            f"labels {labels.shape} do not match logits {logits.data.shape}")
    n_classes = logits.data.shape[-1]
    flat = logits.data.reshape(-1, n_classes)
    lab = labels.reshape(-1)
    bad = (lab != IGNORE_INDEX) & ((lab < 0) | (lab >= n_classes))
    if bad.any():
        raise ContractError(
            f"label id {lab[bad][0]} outside [0, {n_classes}) and not {IGNORE_INDEX}")
    valid = lab != IGNORE_INDEX
    n_valid = int(valid.sum())
    if n_valid == 0:
        raise DegenerateBatchError("all positions carry the ignore label")

    rows = flat[valid]
    shifted = rows - rows.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1))
    picked = shifted[np.arange(n_valid), lab[valid]]
    loss = np.float64((lse - picked).mean())

    def bw(g):
        soft = np.exp(shifted)
        soft /= soft.sum(axis=1, keepdims=True)
        soft[np.arange(n_valid), lab[valid]] -= 1.0
        dflat = np.zeros_like(flat)
        dflat[valid] = soft * (float(g) / n_valid)
        return (dflat.reshape(logits.data.shape),)

    return _make(np.asarray(loss), (logits,), bw)


# -- engine -------------------------------------------------------------------

def backward(loss: Tensor) -> None:
    """Populate ``.grad`` on every requires_grad tensor reachable from loss.

    Iterative topological order; each node is visited exactly once. Repeated
    calls accumulate into existing buffers.
    """
    if loss.data.ndim != 0:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.data.shape}")
    if not loss.requires_grad:
        raise ContractError("loss does not require grad; nothing to differentiate")

    topo: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, done = stack.pop()
        if done:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))

    # Per-call working buffers keep repeated backward() calls independent;
    # only the final += below touches the persistent .grad accumulators.
    work: dict[int, np.ndarray] = {id(loss): np.ones(())}
    for node in reversed(topo):
        g = work.pop(id(node), None)
        if g is None:
            continue
        if node.grad is None:
            node.grad = np.zeros_like(node.data)
        node.grad += g
        if node._backward_fn is None:
            continue
        for parent, pg in zip(node._parents, node._backward_fn(g)):
            if pg is None or not parent.requires_grad:
                continue
            acc = work.get(id(parent))
            work[id(parent)] = pg if acc is None else acc + pg
