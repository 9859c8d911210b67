"""Dense float64 tensors with a reverse-mode tape, dropout and RMSProp.

Operations run eagerly on numpy arrays. While a :class:`Tape` is active
(``with Tape() as tape:``) every primitive appends a record holding its
inputs, its output and a closure mapping the output gradient to input
gradients. :func:`backward` replays those records in reverse and
accumulates leaf gradients into the owning :class:`Param`.

Random numbers come from numpy's PCG64 bit generator
(``np.random.default_rng``); integer seeds are derived with
``np.random.SeedSequence`` so streams can be split deterministically.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "Tensor",
    "Param",
    "Tape",
    "RmsPropConfig",
    "ShapeError",
    "as_tensor",
    "matmul",
    "add",
    "sub",
    "mul",
    "neg",
    "sigmoid",
    "tanh",
    "elementwise",
    "transpose",
    "reshape",
    "take",
    "concat",
    "stack",
    "tsum",
    "masked_softmax",
    "weighted_sum",
    "cross_entropy",
    "dropout",
    "backward",
    "finite_diff_grad",
    "rmsprop_step",
    "derive_seed",
    "max_relative_error",
]


class ShapeError(ValueError):
    """Raised when operand shapes are incompatible."""


class Tensor:
    __slots__ = ("data", "param", "__weakref__")

    def __init__(self, data, param: "Param | None" = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.param = param

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() on a tensor of shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, data={self.data!r})"

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

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return take(self, index)

    @property
    def T(self) -> "Tensor":
        return transpose(self)


class Param:
    """A trainable tensor with gradient and RMSProp cache slots."""

    __slots__ = ("name", "value", "grad", "rms_cache")

    def __init__(self, value, name: str = ""):
        self.name = name
        self.value = Tensor(np.array(value, dtype=np.float64), param=self)
        self.grad = np.zeros_like(self.value.data)
        self.rms_cache = np.zeros_like(self.value.data)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def zero_grad(self) -> None:
        self.grad[...] = 0.0

    def __repr__(self) -> str:
        return f"Param({self.name!r}, shape={self.shape})"


@dataclass(frozen=True)
class RmsPropConfig:
    learning_rate: float = 0.001
    decay: float = 0.9
    epsilon: float = 1e-8

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not 0 < self.decay < 1:
            raise ValueError("decay must lie in (0, 1)")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")


# --------------------------------------------------------------------------
# tape
# --------------------------------------------------------------------------

_state = threading.local()


def _active() -> "Tape | None":
    stack = getattr(_state, "stack", None)
    return stack[-1] if stack else None


@dataclass
class _Record:
    out: Tensor
    inputs: tuple[Tensor, ...]
    grad_fn: Callable[[np.ndarray], Sequence[np.ndarray | None]]


class Tape:
    """Ordered log of primitive operations executed while active."""

    def __init__(self):
        self.records: list[_Record] = []

    def __enter__(self) -> "Tape":
        if not hasattr(_state, "stack"):
            _state.stack = []
        _state.stack.append(self)
        return self

    def __exit__(self, *exc) -> None:
        _state.stack.pop()

    def __len__(self) -> int:
        return len(self.records)


def _emit(data: np.ndarray, inputs: tuple[Tensor, ...], grad_fn) -> Tensor:
    out = Tensor(data)
    tape = _active()
    if tape is not None:
        tape.records.append(_Record(out, inputs, grad_fn))
    return out


def as_tensor(x) -> Tensor:
    if isinstance(x, Tensor):
        return x
    if isinstance(x, Param):
        return x.value
    return Tensor(x)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# --------------------------------------------------------------------------
# primitives
# --------------------------------------------------------------------------


def matmul(a, b) -> Tensor:
    """Matrix product; ``a`` may carry leading batch axes, ``b`` is 1-D or 2-D."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 1 or b.ndim not in (1, 2) or a.shape[-1] != b.shape[0]:
        raise ShapeError(f"matmul shape mismatch: {a.shape} vs {b.shape}")
    ad, bd = a.data, b.data
    k = ad.shape[-1]

    def grad_fn(g):
        if bd.ndim == 1:
            ga = g[..., None] * bd
            gb = (ad * g[..., None]).reshape(-1, k).sum(axis=0)
        elif ad.ndim == 1:
            ga = bd @ g
            gb = np.outer(ad, g)
        else:
            ga = g @ bd.T
            gb = ad.reshape(-1, k).T @ g.reshape(-1, bd.shape[1])
        return ga, gb

    return _emit(ad @ bd, (a, b), grad_fn)


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape
    try:
        out = a.data + b.data
    except ValueError as err:
        raise ShapeError(f"add shape mismatch: {sa} vs {sb}") from err
    return _emit(out, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape
    try:
        out = a.data - b.data
    except ValueError as err:
        raise ShapeError(f"sub shape mismatch: {sa} vs {sb}") from err
    return _emit(out, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb)))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data
    try:
        out = ad * bd
    except ValueError as err:
        raise ShapeError(f"mul shape mismatch: {a.shape} vs {b.shape}") from err
    return _emit(
        out,
        (a, b),
        lambda g: (_unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape)),
    )


def neg(a) -> Tensor:
    a = as_tensor(a)
    return _emit(-a.data, (a,), lambda g: (-g,))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # branch-free stable form: exp never sees a positive argument
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def sigmoid(x) -> Tensor:
    x = as_tensor(x)
    y = _sigmoid(x.data)
    return _emit(y, (x,), lambda g: (g * y * (1.0 - y),))


def tanh(x) -> Tensor:
    x = as_tensor(x)
    y = np.tanh(x.data)
    return _emit(y, (x,), lambda g: (g * (1.0 - y * y),))


_ELEMENTWISE = {"sigmoid": sigmoid, "tanh": tanh}


def elementwise(f: str, x) -> Tensor:
    """Apply ``"sigmoid"`` or ``"tanh"`` entrywise."""
    try:
        fn = _ELEMENTWISE[f]
    except KeyError:
        raise ValueError(f"unknown nonlinearity {f!r}; expected one of {sorted(_ELEMENTWISE)}")
    return fn(x)


def transpose(x) -> Tensor:
    x = as_tensor(x)
    return _emit(x.data.T, (x,), lambda g: (g.T,))


def reshape(x, shape) -> Tensor:
    x = as_tensor(x)
    old = x.shape
    return _emit(x.data.reshape(shape), (x,), lambda g: (g.reshape(old),))


def take(x, index) -> Tensor:
    """Numpy-style indexing (basic or advanced) with scatter-add backward."""
    x = as_tensor(x)
    xd = x.data
    out = xd[index]
    if isinstance(out, np.ndarray) and np.shares_memory(out, xd):
        out = out.copy()

    def grad_fn(g):
        full = np.zeros_like(xd)
        np.add.at(full, index, g)
        return (full,)

    return _emit(np.asarray(out, dtype=np.float64), (x,), grad_fn)


def concat(tensors: Sequence, axis: int = 0) -> Tensor:
    ts = tuple(as_tensor(t) for t in tensors)
    if not ts:
        raise ValueError("concat of nothing")
    try:
        out = np.concatenate([t.data for t in ts], axis=axis)
    except ValueError as err:
        raise ShapeError(f"concat shape mismatch: {[t.shape for t in ts]}") from err
    bounds = np.cumsum([t.shape[axis] for t in ts])[:-1]
    return _emit(out, ts, lambda g: tuple(np.split(g, bounds, axis=axis)))


def stack(tensors: Sequence, axis: int = 0) -> Tensor:
    ts = tuple(as_tensor(t) for t in tensors)
    if not ts:
        raise ValueError("stack of nothing")
    try:
        out = np.stack([t.data for t in ts], axis=axis)
    except ValueError as err:
        raise ShapeError(f"stack shape mismatch: {[t.shape for t in ts]}") from err
    n = len(ts)
    return _emit(
        out, ts, lambda g: tuple(np.squeeze(p, axis=axis) for p in np.split(g, n, axis=axis))
    )


def tsum(x, axis=None) -> Tensor:
    x = as_tensor(x)
    shape = x.shape

    def grad_fn(g):
        if axis is not None:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape).copy(),)

    return _emit(np.asarray(x.data.sum(axis=axis)), (x,), grad_fn)


def masked_softmax(logits, mask=None) -> Tensor:
    """Softmax along the last axis restricted to ``mask``; masked entries are exactly 0."""
    logits = as_tensor(logits)
    z = logits.data
    m = np.ones(z.shape, dtype=bool) if mask is None else np.broadcast_to(np.asarray(mask, dtype=bool), z.shape)
    if not m.any(axis=-1).all():
        raise ValueError("empty attention support")
    shift = np.where(m, z, -np.inf).max(axis=-1, keepdims=True)
    e = np.where(m, np.exp(np.where(m, z - shift, 0.0)), 0.0)
    p = e / e.sum(axis=-1, keepdims=True)

    def grad_fn(g):
        return (p * (g - (g * p).sum(axis=-1, keepdims=True)),)

    return _emit(p, (logits,), grad_fn)


def weighted_sum(weights, values) -> Tensor:
    """``out[..., d] = sum_t weights[..., t] * values[..., t, d]``."""
    w, v = as_tensor(weights), as_tensor(values)
    if v.ndim != w.ndim + 1 or v.shape[:-1] != w.shape:
        raise ShapeError(f"weighted_sum shape mismatch: {w.shape} vs {v.shape}")
    wd, vd = w.data, v.data
    out = np.einsum("...t,...td->...d", wd, vd)
    return _emit(
        out,
        (w, v),
        lambda g: (np.einsum("...d,...td->...t", g, vd), wd[..., None] * g[..., None, :]),
    )


_TINY = np.finfo(np.float64).tiny


def cross_entropy(probs, targets, weights=None) -> Tensor:
    """Mean over rows of ``-weight * log(probs[row, target])``."""
    p = as_tensor(probs)
    if p.ndim != 2:
        raise ShapeError(f"cross_entropy expects (rows, classes), got {p.shape}")
    t = np.asarray(targets, dtype=np.intp)
    if t.shape != (p.shape[0],):
        raise ShapeError(f"cross_entropy target shape {t.shape} vs probs {p.shape}")
    w = np.ones(len(t)) if weights is None else np.asarray(weights, dtype=np.float64)
    rows = np.arange(len(t))
    picked = np.maximum(p.data[rows, t], _TINY)
    n = len(t)
    out = np.asarray(-(w * np.log(picked)).sum() / n)

    def grad_fn(g):
        full = np.zeros_like(p.data)
        full[rows, t] = -g * w / (picked * n)
        return (full,)

    return _emit(out, (p,), grad_fn)


def derive_seed(*keys: int) -> int:
    """Deterministic 63-bit integer seed from a tuple of nonnegative ints."""
    return int(np.random.SeedSequence(list(keys)).generate_state(1, np.uint64)[0] >> 1)


def dropout(x, rate: float, seed: int, training: bool) -> Tensor:
    """Inverted dropout; the identity (same object) outside training."""
    if not 0 <= rate < 1:
        raise ValueError("dropout rate must lie in [0, 1)")
    x = as_tensor(x)
    if not training or rate == 0:
        return x
    keep = np.random.default_rng(seed).random(x.shape) >= rate
    scale = keep / (1.0 - rate)
    return _emit(x.data * scale, (x,), lambda g: (g * scale,))


# --------------------------------------------------------------------------
# gradients
# --------------------------------------------------------------------------


def backward(tape: Tape, loss: Tensor, wrt: Iterable[Tensor] | None = None):
    """Accumulate d(loss)/d(param) into every reachable ``Param.grad``.

    If ``wrt`` is given, also return the gradients of those tensors (zeros when
    unreachable).
    """
    if not tape.records:
        raise ValueError("backward on an empty tape")
    if loss.data.size != 1:
        raise ShapeError(f"loss must be a scalar, got shape {loss.shape}")
    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    leaves: dict[int, Tensor] = {id(loss): loss}
    for rec in reversed(tape.records):
        g = grads.pop(id(rec.out), None)
        if g is None:
            continue
        leaves.pop(id(rec.out), None)
        for inp, gi in zip(rec.inputs, rec.grad_fn(g)):
            if gi is None:
                continue
            k = id(inp)
            if k in grads:
                grads[k] = grads[k] + gi
            else:
                grads[k] = gi
                leaves[k] = inp
    for k, g in grads.items():
        t = leaves[k]
        if t.param is not None:
            t.param.grad += g
    if wrt is not None:
        return [grads.get(id(t), np.zeros_like(t.data)) for t in wrt]
    return None


def finite_diff_grad(f: Callable[[np.ndarray], float], x, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar function at ``x``."""
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = float(f(x))
        flat[i] = orig - h
        fm = float(f(x))
        flat[i] = orig
        gflat[i] = (fp - fm) / (2 * h)
    return grad


def rmsprop_step(p: Param, cfg: RmsPropConfig) -> Param:
    p.rms_cache *= cfg.decay
    p.rms_cache += (1.0 - cfg.decay) * p.grad * p.grad
    p.value.data -= cfg.learning_rate * p.grad / np.sqrt(p.rms_cache + cfg.epsilon)
    return p


def max_relative_error(analytic, numeric, floor: float = 1e-6) -> float:
    """``max |a - n| / max(|a|, |n|, floor)``; the floor keeps coordinates whose
    gradient sits at finite-difference noise level from dominating."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    if a.size == 0:
        return 0.0
    return float((np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)).max())
