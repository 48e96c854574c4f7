"""Dense tensors with reverse-mode automatic differentiation.

Every primitive computes its forward result eagerly with numpy and records
the backward rule on the output tensor. The recorded parent links form an
implicit acyclic graph; `Tensor.backward` walks it in reverse topological
order and accumulates gradients, so reusing a tensor twice adds both
contributions. Tensors are value-like: forward results are never mutated,
only `.grad` fills in during a backward pass.

Broadcasting is limited to leading axes: a binary op accepts operands of
equal shape, or a right operand whose shape is a suffix of the left's
(a bias row added to every position, a mask shared across heads). Anything
else needs an explicit reshape.

`grad_check` is the verification oracle: central finite differences
against the recorded backward pass, in 64-bit.
"""
from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

DEFAULT_DTYPE = np.float32
LAYER_NORM_EPS = 1e-5
# Large finite constant for masked attention scores: exp(x - max) underflows
# to exactly 0.0, so masked positions contribute nothing, bit-exactly.
MASK_VALUE = -1e9


class ShapeError(ValueError):
    """Operands do not fit the primitive (shape or dtype)."""

    def __init__(self, op: str, message: str):
        super().__init__(f"{op}: {message}")
        self.op = op


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(DEFAULT_DTYPE)
        arr.setflags(write=False)
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], None] | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.dtype.name}, requires_grad={self.requires_grad})"

    def __add__(self, other: "Tensor") -> "Tensor":
        return add(self, other)

    def __mul__(self, other) -> "Tensor":
        if isinstance(other, Tensor):
            return mul(self, other)
        return scale(self, float(other))

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = g.copy()
        else:
            self.grad = self.grad + g

    def backward(self) -> None:
        """Backpropagate from this scalar through the recorded graph."""
        if self.data.size != 1:
            raise ShapeError("backward", f"can only backpropagate from a scalar, got shape {self.shape}")
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        self._accumulate(np.ones_like(self.data))
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)


def _result(data: np.ndarray, parents: Sequence[Tensor], backward: Callable[[np.ndarray], None]) -> Tensor:
    out = Tensor(data, requires_grad=any(p.requires_grad for p in parents))
    if out.requires_grad:
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _check_dtypes(op: str, *tensors: Tensor) -> None:
    dtypes = {t.dtype for t in tensors}
    if len(dtypes) > 1:
        raise ShapeError(op, f"mixed dtypes {sorted(d.name for d in dtypes)}")


def _suffix_axes(op: str, a: Tensor, b: Tensor) -> tuple[int, ...]:
    """Leading axes of `a` that `b` broadcasts over; b.shape must suffix-match."""
    if b.data.ndim > a.data.ndim or a.shape[a.data.ndim - b.data.ndim :] != b.shape:
        raise ShapeError(op, f"shapes {a.shape} and {b.shape} (right operand must suffix-match)")
    return tuple(range(a.data.ndim - b.data.ndim))


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_dtypes("add", a, b)
    lead = _suffix_axes("add", a, b)

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a._accumulate(g)
        if b.requires_grad:
            b._accumulate(g.sum(axis=lead) if lead else g)

    return _result(a.data + b.data, (a, b), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_dtypes("mul", a, b)
    lead = _suffix_axes("mul", a, b)

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a._accumulate(g * b.data)
        if b.requires_grad:
            gb = g * a.data
            b._accumulate(gb.sum(axis=lead) if lead else gb)

    return _result(a.data * b.data, (a, b), backward)


def scale(a: Tensor, factor: float) -> Tensor:
    c = a.data.dtype.type(factor)

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a._accumulate(g * c)

    return _result(a.data * c, (a,), backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    _check_dtypes("matmul", a, b)
    if a.data.ndim == b.data.ndim == 2:
        ok = a.shape[1] == b.shape[0]
    elif a.data.ndim == b.data.ndim == 3:
        ok = a.shape[0] == b.shape[0] and a.shape[2] == b.shape[1]
    else:
        ok = False
    if not ok:
        raise ShapeError("matmul", f"shapes {a.shape} and {b.shape}")

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a._accumulate(np.matmul(g, b.data.swapaxes(-1, -2)))
        if b.requires_grad:
            b._accumulate(np.matmul(a.data.swapaxes(-1, -2), g))

    return _result(np.matmul(a.data, b.data), (a, b), backward)


def relu(a: Tensor) -> Tensor:
    positive = a.data > 0

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a._accumulate(g * positive)

    return _result(np.where(positive, a.data, a.data.dtype.type(0)), (a,), backward)


def softmax(a: Tensor) -> Tensor:
    """Softmax over the last axis, max-subtracted for stability."""
    if a.data.ndim == 0 or a.shape[-1] == 0:
        raise ShapeError("softmax", f"needs a non-empty last axis, got {a.shape}")
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=-1, keepdims=True)

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a._accumulate((g - (g * y).sum(axis=-1, keepdims=True)) * y)

    return _result(y, (a,), backward)


def log_softmax(a: Tensor) -> Tensor:
    if a.data.ndim == 0 or a.shape[-1] == 0:
        raise ShapeError("log_softmax", f"needs a non-empty last axis, got {a.shape}")
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    y = shifted - log_z
    probs = np.exp(y)

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a._accumulate(g - probs * g.sum(axis=-1, keepdims=True))

    return _result(y, (a,), backward)


def layer_norm(a: Tensor, gain: Tensor, bias: Tensor) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then gain+bias."""
    d = a.shape[-1] if a.data.ndim else 0
    if d == 0 or gain.shape != (d,) or bias.shape != (d,):
        raise ShapeError("layer_norm", f"input {a.shape} with gain {gain.shape}, bias {bias.shape}")
    _check_dtypes("layer_norm", a, gain, bias)
    mu = a.data.mean(axis=-1, keepdims=True)
    centered = a.data - mu
    var = (centered**2).mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + a.data.dtype.type(LAYER_NORM_EPS))
    xhat = centered * inv_std

    def backward(g: np.ndarray) -> None:
        reduce_axes = tuple(range(g.ndim - 1))
        if bias.requires_grad:
            bias._accumulate(g.sum(axis=reduce_axes) if reduce_axes else g)
        if gain.requires_grad:
            gg = g * xhat
            gain._accumulate(gg.sum(axis=reduce_axes) if reduce_axes else gg)
        if a.requires_grad:
            gx_hat = g * gain.data
            mean_g = gx_hat.mean(axis=-1, keepdims=True)
            mean_gx = (gx_hat * xhat).mean(axis=-1, keepdims=True)
            a._accumulate((gx_hat - mean_g - xhat * mean_gx) * inv_std)

    return _result(xhat * gain.data + bias.data, (a, gain, bias), backward)


def embedding_lookup(table: Tensor, ids) -> Tensor:
    ids = np.asarray(ids, dtype=np.int64)
    if table.data.ndim != 2:
        raise ShapeError("embedding_lookup", f"table must be 2-D, got {table.shape}")
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise ShapeError("embedding_lookup", f"id out of range for table of {table.shape[0]} rows")

    def backward(g: np.ndarray) -> None:
        if table.requires_grad:
            gt = np.zeros_like(table.data)
            np.add.at(gt, ids, g)
            table._accumulate(gt)

    return _result(table.data[ids], (table,), backward)


def gather(a: Tensor, index) -> Tensor:
    """Pick index[i] from each row of a 2-D tensor: out[i] = a[i, index[i]]."""
    index = np.asarray(index, dtype=np.int64)
    if a.data.ndim != 2 or index.shape != (a.shape[0],):
        raise ShapeError("gather", f"input {a.shape} with index {index.shape}")
    rows = np.arange(a.shape[0])

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            ga = np.zeros_like(a.data)
            np.add.at(ga, (rows, index), g)
            a._accumulate(ga)

    return _result(a.data[rows, index], (a,), backward)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise ShapeError("concat", "needs at least one tensor")
    _check_dtypes("concat", *tensors)
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g: np.ndarray) -> None:
        for t, lo, hi in zip(tensors, offsets, offsets[1:]):
            if t.requires_grad:
                key = [slice(None)] * g.ndim
                key[axis] = slice(lo, hi)
                t._accumulate(g[tuple(key)])

    try:
        data = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as exc:
        raise ShapeError("concat", str(exc)) from exc
    return _result(data, tuple(tensors), backward)


def slice_(a: Tensor, key) -> Tensor:
    """Basic slicing only (slices/ints), so backward is a plain scatter."""
    data = a.data[key]

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            ga = np.zeros_like(a.data)
            ga[key] = g
            a._accumulate(ga)

    return _result(data, (a,), backward)


def transpose(a: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    if sorted(axes) != list(range(a.data.ndim)):
        raise ShapeError("transpose", f"axes {axes} invalid for shape {a.shape}")
    inverse = tuple(np.argsort(axes))

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a._accumulate(g.transpose(inverse))

    return _result(a.data.transpose(axes), (a,), backward)


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(shape)
    if int(np.prod(shape)) != a.data.size:
        raise ShapeError("reshape", f"cannot reshape {a.shape} to {shape}")

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a._accumulate(g.reshape(a.shape))

    return _result(a.data.reshape(shape), (a,), backward)


def masked_fill(a: Tensor, mask: np.ndarray, value: float) -> Tensor:
    """Replace positions where `mask` is True; their gradient is cut to zero.

    The mask is data, not a differentiable input; its shape must equal the
    input's or suffix-match it (shared across leading axes).
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim > a.data.ndim or a.shape[a.data.ndim - mask.ndim :] != mask.shape:
        raise ShapeError("masked_fill", f"input {a.shape} with mask {mask.shape}")

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a._accumulate(np.where(mask, g.dtype.type(0), g))

    return _result(np.where(mask, a.data.dtype.type(value), a.data), (a,), backward)


def sum_(a: Tensor) -> Tensor:
    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a._accumulate(np.broadcast_to(g, a.shape).copy())

    return _result(a.data.sum(), (a,), backward)


def mean(a: Tensor) -> Tensor:
    return scale(sum_(a), 1.0 / a.data.size)


# --- verification oracle ----------------------------------------------------

def grad_check(
    fn: Callable[[list[Tensor]], Tensor],
    points: Iterable[np.ndarray],
    epsilon: float = 1e-5,
    max_components_per_input: int | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """Compare reverse-mode gradients with central finite differences.

    `fn` must rebuild its graph from the given inputs on every call and
    return a scalar. Checks every component by default; for large inputs a
    deterministic random sample of `max_components_per_input` components
    per tensor keeps the cost bounded. Returns the maximum relative error,
    falling back to absolute error below 1e-8 magnitude.
    """
    if not (0 < epsilon <= 1e-2):
        raise ValueError(f"epsilon must be in (0, 1e-2], got {epsilon}")
    arrays = [np.asarray(p, dtype=np.float64) for p in points]
    inputs = [Tensor(a, requires_grad=True) for a in arrays]

    out = fn(inputs)
    if not np.all(np.isfinite(out.data)):
        raise FloatingPointError("gradient check: function value is not finite")
    out.backward()
    analytic = [np.zeros_like(a) if t.grad is None else t.grad for a, t in zip(arrays, inputs)]
    for g in analytic:
        if not np.all(np.isfinite(g)):
            raise FloatingPointError("gradient check: reverse-mode gradient is not finite")

    rng = rng or np.random.default_rng(0)
    worst = 0.0
    for slot, base in enumerate(arrays):
        flat_indices = np.arange(base.size)
        if max_components_per_input is not None and base.size > max_components_per_input:
            flat_indices = rng.choice(base.size, size=max_components_per_input, replace=False)
        for flat in flat_indices:
            idx = np.unravel_index(flat, base.shape) if base.shape else ()

            def eval_at(delta: float) -> float:
                shifted = base.copy()
                shifted[idx] += delta
                probe = [Tensor(a if i != slot else shifted, requires_grad=False) for i, a in enumerate(arrays)]
                return float(fn(probe).data)

            numeric = (eval_at(epsilon) - eval_at(-epsilon)) / (2.0 * epsilon)
            if not np.isfinite(numeric):
                raise FloatingPointError("gradient check: finite-difference value is not finite")
            a_val = float(analytic[slot][idx])
            denom = max(abs(a_val), abs(numeric))
            err = abs(a_val - numeric) if denom < 1e-8 else abs(a_val - numeric) / denom
            worst = max(worst, err)
    return worst
