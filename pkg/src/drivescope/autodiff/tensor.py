"""Reverse-mode tape over float64 numpy arrays.

Each op returns a fresh Tensor holding the op record (parents + vjp
closure); `backward` walks the recorded tape in reverse topological order.
Every op output is trapped for NaN/Inf. Activations use NHWC layout for
conv ops.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import erf

_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class NumericsError(ArithmeticError):
    pass


def _trap(arr, op_name):
    # a single reduction: any NaN or +-Inf poisons the sum
    s = float(np.sum(arr))
    if not math.isfinite(s):
        raise NumericsError(f"non-finite values out of op '{op_name}'")
    return arr


class Tensor:
    __slots__ = ("data", "requires_grad", "_parents", "_vjp", "name")

    def __init__(self, data, requires_grad=False, _parents=(), _vjp=None,
                 name=None, _op="leaf"):
        self.data = np.asarray(data, dtype=np.float64)
        _trap(self.data, _op)
        self.requires_grad = bool(requires_grad)
        self._parents = _parents
        self._vjp = _vjp
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, grad={self.requires_grad}, name={self.name})"

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(_wrap(other), self)

    def __neg__(self):
        return mul(self, -1.0)

    def __truediv__(self, other):
        return div(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return tslice(self, key)


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=np.float64))


_grad_enabled = [True]


class no_grad:
    """Context manager: ops inside build no tape (pure forward)."""

    def __enter__(self):
        _grad_enabled.append(False)

    def __exit__(self, *exc):
        _grad_enabled.pop()


def _make(data, parents, vjp, op):
    rg = _grad_enabled[-1] and any(p.requires_grad for p in parents)
    if not rg:
        return Tensor(data, _op=op)
    return Tensor(data, requires_grad=True, _parents=tuple(parents), _vjp=vjp, _op=op)


def _unbroadcast(grad, shape):
    """Sum `grad` down to `shape` after numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, (g, s) in enumerate(zip(grad.shape, shape)) if s == 1 and g != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def backward(output: Tensor, seed=None):
    """Run the tape backwards from `output`.

    Returns a dict Tensor -> gradient array covering every node on the
    path that requires grad (parameters, inputs, and intermediates alike).
    `seed` defaults to ones and must match the output shape.
    """
    if seed is None:
        seed = np.ones_like(output.data)
    else:
        seed = np.asarray(seed, dtype=np.float64)
        if seed.shape != output.data.shape:
            raise ValueError(f"seed shape {seed.shape} != output shape {output.data.shape}")
    # iterative topological order over the requires_grad subgraph
    topo = []
    visited = set()
    stack = [(output, False)]
    while stack:
        node, done = stack.pop()
        if done:
            topo.append(node)
            continue
        if id(node) in visited or not node.requires_grad:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            stack.append((p, False))

    grads: dict = {output: seed}
    for node in reversed(topo):
        g = grads.get(node)
        if g is None or node._vjp is None:
            continue
        for parent, pg in zip(node._parents, node._vjp(g)):
            if pg is None or not parent.requires_grad:
                continue
            if parent in grads:
                grads[parent] = grads[parent] + pg
            else:
                grads[parent] = pg
    return grads


def grad_of(grads: dict, t: Tensor):
    """Gradient for t from a backward() result; zeros if untouched."""
    g = grads.get(t)
    return np.zeros_like(t.data) if g is None else g


# ---------------------------------------------------------------- arithmetic

def add(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    out = a.data + b.data

    def vjp(g):
        return (_unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape))

    return _make(out, (a, b), vjp, "add")


def sub(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    out = a.data - b.data

    def vjp(g):
        return (_unbroadcast(g, a.data.shape), _unbroadcast(-g, b.data.shape))

    return _make(out, (a, b), vjp, "sub")


def mul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    out = a.data * b.data

    def vjp(g):
        return (_unbroadcast(g * b.data, a.data.shape),
                _unbroadcast(g * a.data, b.data.shape))

    return _make(out, (a, b), vjp, "mul")


def div(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    out = a.data / b.data

    def vjp(g):
        return (_unbroadcast(g / b.data, a.data.shape),
                _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape))

    return _make(out, (a, b), vjp, "div")


def square(a) -> Tensor:
    a = _wrap(a)
    out = a.data * a.data

    def vjp(g):
        return (2.0 * g * a.data,)

    return _make(out, (a,), vjp, "square")


def sqrt(a) -> Tensor:
    a = _wrap(a)
    out = np.sqrt(a.data)

    def vjp(g):
        return (g * 0.5 / np.maximum(out, 1e-12),)

    return _make(out, (a,), vjp, "sqrt")


def matmul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    out = np.matmul(a.data, b.data)

    def vjp(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        if ga.shape != a.data.shape:
            ga = _unbroadcast(ga, a.data.shape)
        if b.data.ndim == 2 and a.data.ndim > 2:
            # broadcast weight: fold batch dims into one GEMM
            k = a.data.shape[-1]
            gb = a.data.reshape(-1, k).T @ g.reshape(-1, g.shape[-1])
        else:
            gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
            if gb.shape != b.data.shape:
                gb = _unbroadcast(gb, b.data.shape)
        return (ga, gb)

    return _make(out, (a, b), vjp, "matmul")


def linear(x, w, b=None) -> Tensor:
    out = matmul(x, w)
    return out if b is None else add(out, b)


# ------------------------------------------------------------- nonlinearities

def relu(a) -> Tensor:
    a = _wrap(a)
    out = np.maximum(a.data, 0.0)

    def vjp(g):
        return (g * (a.data > 0.0),)

    return _make(out, (a,), vjp, "relu")


def gelu(a) -> Tensor:
    a = _wrap(a)
    cdf = 0.5 * (1.0 + erf(a.data * _INV_SQRT2))
    out = a.data * cdf

    def vjp(g):
        pdf = np.exp(-0.5 * a.data * a.data) * _INV_SQRT_2PI
        return (g * (cdf + a.data * pdf),)

    return _make(out, (a,), vjp, "gelu")


def sigmoid(a) -> Tensor:
    a = _wrap(a)
    out = 1.0 / (1.0 + np.exp(-a.data))

    def vjp(g):
        return (g * out * (1.0 - out),)

    return _make(out, (a,), vjp, "sigmoid")


def tanh(a) -> Tensor:
    a = _wrap(a)
    out = np.tanh(a.data)

    def vjp(g):
        return (g * (1.0 - out * out),)

    return _make(out, (a,), vjp, "tanh")


def softmax(a, axis=-1) -> Tensor:
    a = _wrap(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def vjp(g):
        dot = (g * out).sum(axis=axis, keepdims=True)
        return ((g - dot) * out,)

    return _make(out, (a,), vjp, "softmax")


def layernorm(x, gamma, beta, eps=1e-5) -> Tensor:
    """Normalize over the last dimension, then affine."""
    x, gamma, beta = _wrap(x), _wrap(gamma), _wrap(beta)
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv_std
    out = gamma.data * xhat + beta.data
    n = x.data.shape[-1]

    def vjp(g):
        dgamma = _unbroadcast(g * xhat, gamma.data.shape)
        dbeta = _unbroadcast(g, beta.data.shape)
        dxhat = g * gamma.data
        dx = inv_std / n * (n * dxhat - dxhat.sum(axis=-1, keepdims=True)
                            - xhat * (dxhat * xhat).sum(axis=-1, keepdims=True))
        return (dx, dgamma, dbeta)

    return _make(out, (x, gamma, beta), vjp, "layernorm")


# ----------------------------------------------------------------- conv/pool

def _same_pad(size, k, s):
    out = -(-size // s)  # ceil division
    total = max((out - 1) * s + k - size, 0)
    return total // 2, total - total // 2


def conv2d(x, w, b=None, stride=1, padding="same") -> Tensor:
    """NHWC conv: x (B, H, W, Ci), w (kh, kw, Ci, Co), b (Co,)."""
    x, w = _wrap(x), _wrap(w)
    if b is not None:
        b = _wrap(b)
    if stride not in (1, 2):
        raise ValueError("conv2d supports stride 1 or 2")
    if padding not in ("same", "valid"):
        raise ValueError("conv2d padding must be 'same' or 'valid'")
    bs, h_in, w_in, ci = x.data.shape
    kh, kw, ci2, co = w.data.shape
    if ci != ci2:
        raise ValueError(f"conv2d channel mismatch {ci} vs {ci2}")
    if padding == "same":
        pt, pb = _same_pad(h_in, kh, stride)
        pl, pr = _same_pad(w_in, kw, stride)
    else:
        pt = pb = pl = pr = 0
    xp = np.pad(x.data, ((0, 0), (pt, pb), (pl, pr), (0, 0))) if (pt or pb or pl or pr) else x.data
    hp, wp = xp.shape[1], xp.shape[2]
    ho = (hp - kh) // stride + 1
    wo = (wp - kw) // stride + 1
    # im2col: one big GEMM for forward, weight grad, and input grad
    if kh == 1 and kw == 1 and stride == 1:
        col2d = xp.reshape(-1, ci)
    else:
        col = np.empty((bs, ho, wo, kh * kw * ci))
        for ki in range(kh):
            for kj in range(kw):
                col[:, :, :, (ki * kw + kj) * ci:(ki * kw + kj + 1) * ci] = \
                    xp[:, ki:ki + stride * ho:stride, kj:kj + stride * wo:stride, :]
        col2d = col.reshape(-1, kh * kw * ci)
    wflat = w.data.reshape(kh * kw * ci, co)
    out = (col2d @ wflat).reshape(bs, ho, wo, co)
    if b is not None:
        out = out + b.data

    def vjp(g):
        g2d = g.reshape(-1, co)
        gw = (col2d.T @ g2d).reshape(w.data.shape)
        gcol = (g2d @ wflat.T).reshape(bs, ho, wo, kh * kw * ci)
        gxp = np.zeros_like(xp)
        for ki in range(kh):
            for kj in range(kw):
                gxp[:, ki:ki + stride * ho:stride, kj:kj + stride * wo:stride, :] += \
                    gcol[:, :, :, (ki * kw + kj) * ci:(ki * kw + kj + 1) * ci]
        gx = gxp[:, pt:hp - pb, pl:wp - pr, :] if (pt or pb or pl or pr) else gxp
        if b is not None:
            return (gx, gw, g.sum(axis=(0, 1, 2)))
        return (gx, gw)

    parents = (x, w) if b is None else (x, w, b)
    return _make(out, parents, vjp, "conv2d")


def _pool_views(x, k, s):
    bs, h, w, c = x.shape
    ho = (h - k) // s + 1
    wo = (w - k) // s + 1
    views = [x[:, i:i + s * ho:s, j:j + s * wo:s, :] for i in range(k) for j in range(k)]
    return np.stack(views, axis=0), ho, wo


def maxpool2d(x, k=2, stride=2) -> Tensor:
    x = _wrap(x)
    stacked, ho, wo = _pool_views(x.data, k, stride)
    arg = stacked.argmax(axis=0)
    out = np.take_along_axis(stacked, arg[None], axis=0)[0]

    def vjp(g):
        gx = np.zeros_like(x.data)
        bs, _, _, c = x.data.shape
        for idx in range(k * k):
            i, j = divmod(idx, k)
            mask = (arg == idx)
            view = gx[:, i:i + stride * ho:stride, j:j + stride * wo:stride, :]
            view += g * mask
        return (gx,)

    return _make(out, (x,), vjp, "maxpool2d")


def avgpool2d(x, k=2, stride=2) -> Tensor:
    x = _wrap(x)
    stacked, ho, wo = _pool_views(x.data, k, stride)
    out = stacked.mean(axis=0)
    inv = 1.0 / (k * k)

    def vjp(g):
        gx = np.zeros_like(x.data)
        for idx in range(k * k):
            i, j = divmod(idx, k)
            gx[:, i:i + stride * ho:stride, j:j + stride * wo:stride, :] += g * inv
        return (gx,)

    return _make(out, (x,), vjp, "avgpool2d")


# ----------------------------------------------------------------- reductions

def tsum(a, axis=None, keepdims=False) -> Tensor:
    a = _wrap(a)
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def vjp(g):
        if axis is None:
            return (np.broadcast_to(g, a.data.shape).copy(),)
        if not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.data.shape).copy(),)

    return _make(out, (a,), vjp, "sum")


def mean(a, axis=None, keepdims=False) -> Tensor:
    a = _wrap(a)
    out = a.data.mean(axis=axis, keepdims=keepdims)
    if axis is None:
        count = a.data.size
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        count = 1
        for ax in axes:
            count *= a.data.shape[ax]

    def vjp(g):
        if axis is None:
            return (np.broadcast_to(g / count, a.data.shape).copy(),)
        gg = g if keepdims else np.expand_dims(g, axis)
        return (np.broadcast_to(gg / count, a.data.shape).copy(),)

    return _make(out, (a,), vjp, "mean")


def tabs(a) -> Tensor:
    a = _wrap(a)
    out = np.abs(a.data)

    def vjp(g):
        return (g * np.sign(a.data),)

    return _make(out, (a,), vjp, "abs")


# -------------------------------------------------------------- shape plumbing

def reshape(a, shape) -> Tensor:
    a = _wrap(a)
    out = a.data.reshape(shape)

    def vjp(g):
        return (g.reshape(a.data.shape),)

    return _make(out, (a,), vjp, "reshape")


def transpose(a, axes) -> Tensor:
    a = _wrap(a)
    out = a.data.transpose(axes)
    inv = np.argsort(axes)

    def vjp(g):
        return (g.transpose(inv),)

    return _make(out, (a,), vjp, "transpose")


def concat(tensors, axis=0) -> Tensor:
    tensors = [_wrap(t) for t in tensors]
    out = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def vjp(g):
        return tuple(np.split(g, splits, axis=axis))

    return _make(out, tuple(tensors), vjp, "concat")


def tslice(a, key) -> Tensor:
    a = _wrap(a)
    out = a.data[key]

    def vjp(g):
        gx = np.zeros_like(a.data)
        np.add.at(gx, key, g)
        return (gx,)

    return _make(out, (a,), vjp, "slice")


def embedding(weight, idx) -> Tensor:
    """Row lookup: weight (V, d), idx int array -> (..., d)."""
    weight = _wrap(weight)
    idx = np.asarray(idx)
    out = weight.data[idx]

    def vjp(g):
        gw = np.zeros_like(weight.data)
        np.add.at(gw, idx, g)
        return (gw,)

    return _make(out, (weight,), vjp, "embedding")
