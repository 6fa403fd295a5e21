"""Minimal dense tensor math with reverse-mode differentiation.

Only the operations the fusion head needs: affine maps, ReLU, row softmax,
outer products, matrix-vector products, layer norm, concatenation and squared
error. The graph is a fresh tape per forward pass; backward() topologically
sorts and accumulates gradients into .grad buffers.
"""
from __future__ import annotations

import numpy as np

from .types import ValidationError


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad=False, name=""):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = None
        self._parents = ()
        self._backward = None
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    def zero_grad(self):
        self.grad = None

    def _accum(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self):
        if self.data.size != 1:
            raise ValidationError("backward() requires a scalar output")
        order = []
        seen = set()

        def visit(t):
            if id(t) in seen:
                return
            seen.add(id(t))
            for p in t._parents:
                visit(p)
            order.append(t)

        visit(self)
        self._accum(np.ones_like(self.data))
        for t in reversed(order):
            if t._backward is not None and t.grad is not None:
                t._backward(t.grad)


def _node(data, parents, backward):
    out = Tensor(data)
    out._parents = tuple(p for p in parents if isinstance(p, Tensor))
    out._backward = backward
    return out


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ValidationError(f"add shape mismatch {a.shape} vs {b.shape}")

    def backward(g):
        a._accum(g)
        b._accum(g)

    return _node(a.data + b.data, (a, b), backward)


def affine(W: Tensor, x: Tensor, b: Tensor) -> Tensor:
    """y = W x + b for a 2D weight and 1D input/bias."""
    if W.data.ndim != 2 or x.data.ndim != 1 or b.data.ndim != 1 \
            or W.shape[1] != x.shape[0] or W.shape[0] != b.shape[0]:
        raise ValidationError(
            f"affine shape mismatch W{W.shape} x{x.shape} b{b.shape}")

    def backward(g):
        W._accum(np.outer(g, x.data))
        x._accum(W.data.T @ g)
        b._accum(g)

    return _node(W.data @ x.data + b.data, (W, x, b), backward)


def outer(q: Tensor, k: Tensor) -> Tensor:
    """Rank-1 outer product q k^T."""

    def backward(g):
        q._accum(g @ k.data)
        k._accum(g.T @ q.data)

    return _node(np.outer(q.data, k.data), (q, k), backward)


def scale(t: Tensor, c: float) -> Tensor:
    def backward(g):
        t._accum(g * c)

    return _node(t.data * c, (t,), backward)


def row_softmax(S: Tensor) -> Tensor:
    """Per-row softmax with max-subtraction stabilization."""
    z = S.data - S.data.max(axis=-1, keepdims=True)
    e = np.exp(z)
    out_data = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        dot = (g * out_data).sum(axis=-1, keepdims=True)
        S._accum(out_data * (g - dot))

    return _node(out_data, (S,), backward)


def matvec(M: Tensor, v: Tensor) -> Tensor:
    if M.data.ndim != 2 or v.data.ndim != 1 or M.shape[1] != v.shape[0]:
        raise ValidationError(f"matvec shape mismatch {M.shape} x {v.shape}")

    def backward(g):
        M._accum(np.outer(g, v.data))
        v._accum(M.data.T @ g)

    return _node(M.data @ v.data, (M, v), backward)


def relu(x: Tensor) -> Tensor:
    gate = (x.data > 0).astype(np.float64)  # subgradient 0 at 0

    def backward(g):
        x._accum(g * gate)

    return _node(np.maximum(x.data, 0.0), (x,), backward)


def concat(a: Tensor, b: Tensor) -> Tensor:
    na = a.data.shape[0]

    def backward(g):
        a._accum(g[:na])
        b._accum(g[na:])

    return _node(np.concatenate([a.data, b.data]), (a, b), backward)


def layer_norm(x: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize a vector to zero mean, unit variance (no learned affine)."""
    mu = x.data.mean()
    var = x.data.var()
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv
    n = x.data.size

    def backward(g):
        x._accum(inv * (g - g.mean() - xhat * (g * xhat).mean()) if n > 1
                 else np.zeros_like(g))

    return _node(xhat, (x,), backward)


def squared_error(pred: Tensor, target: float) -> Tensor:
    """(y - yhat)^2 for a 1-element prediction."""
    diff = float(pred.data.reshape(()) - target)

    def backward(g):
        pred._accum(np.full_like(pred.data, 2.0 * diff * float(g.reshape(()))))

    return _node(np.array(diff ** 2), (pred,), backward)


def add_scalars(terms: list[Tensor]) -> Tensor:
    def backward(g):
        for t in terms:
            t._accum(g)

    return _node(np.array(sum(float(t.data) for t in terms)), tuple(terms), backward)


# ---------------------------------------------------------------------------
# Adam with decoupled weight decay

class AdamState:
    def __init__(self, params: dict, lr=1e-5, beta1=0.9, beta2=0.999,
                 eps=1e-8, weight_decay=0.0):
        self.step_count = 0
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.m = {k: np.zeros_like(p.data) for k, p in params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in params.items()}


def adam_step(params: dict, state: AdamState):
    """One Adam update with bias correction; decoupled weight decay is applied
    as theta <- theta - lr*wd*theta before the moment update."""
    state.step_count += 1
    t = state.step_count
    for key, p in params.items():
        g = p.grad
        if g is None:
            g = np.zeros_like(p.data)
        if not np.all(np.isfinite(g)):
            raise ValidationError(f"non-finite gradient for {key}")
        if state.weight_decay:
            p.data -= state.lr * state.weight_decay * p.data
        state.m[key] = state.beta1 * state.m[key] + (1 - state.beta1) * g
        state.v[key] = state.beta2 * state.v[key] + (1 - state.beta2) * g * g
        mhat = state.m[key] / (1 - state.beta1 ** t)
        vhat = state.v[key] / (1 - state.beta2 ** t)
        p.data -= state.lr * mhat / (np.sqrt(vhat) + state.eps)
