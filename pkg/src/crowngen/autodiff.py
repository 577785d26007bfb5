"""Minimal dense-tensor engine with reverse-mode differentiation and the
ADAM optimizer. Float64 throughout: model sizes are desk-scale, so
gradient-check reliability beats speed.

A Tensor wraps a numpy array; ops build a DAG of closures that backward()
walks in reverse topological order.
"""

import json

import numpy as np

from crowngen.errors import NumericalError

CHECKPOINT_VERSION = 1


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_backward", "_parents")

    def __init__(self, data, requires_grad=False, _parents=(), _backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, grad={self.requires_grad})"

    def item(self):
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    def backward(self):
        if self.data.shape != ():
            raise ValueError("backward() requires a scalar root")
        order = []
        seen = set()
        stack = [(self, False)]
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
                stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # operator sugar; constants are wrapped without gradient tracking
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return add(self, mul(other, -1.0))

    def __rsub__(self, other):
        return add(other, mul(self, -1.0))

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _accumulate(t, g):
    if not t.requires_grad and t._backward is None and not t._parents:
        return
    t.grad = g if t.grad is None else t.grad + g


def _unbroadcast(g, shape):
    """Reduce a broadcast gradient back to the parent's shape."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _track(parents):
    return any(p.requires_grad or p._parents for p in parents)


def _make(data, parents, backward):
    if _track(parents):
        return Tensor(data, _parents=tuple(parents), _backward=backward)
    return Tensor(data)


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out_data = a.data + b.data

    def backward(g):
        _accumulate(a, _unbroadcast(g, a.data.shape))
        _accumulate(b, _unbroadcast(g, b.data.shape))

    return _make(out_data, (a, b), backward)


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out_data = a.data * b.data

    def backward(g):
        _accumulate(a, _unbroadcast(g * b.data, a.data.shape))
        _accumulate(b, _unbroadcast(g * a.data, b.data.shape))

    return _make(out_data, (a, b), backward)


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out_data = a.data @ b.data

    def backward(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        _accumulate(a, _unbroadcast(ga, a.data.shape))
        _accumulate(b, _unbroadcast(gb, b.data.shape))

    return _make(out_data, (a, b), backward)


def relu(a):
    a = as_tensor(a)
    mask = a.data > 0

    def backward(g):
        _accumulate(a, g * mask)

    return _make(a.data * mask, (a,), backward)


def sqrt(a):
    a = as_tensor(a)
    out_data = np.sqrt(a.data)

    def backward(g):
        _accumulate(a, g * (0.5 / out_data))

    return _make(out_data, (a,), backward)


def softmax(a, axis=-1):
    """Row-normalized softmax along `axis`."""
    a = as_tensor(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        inner = (g * s).sum(axis=axis, keepdims=True)
        _accumulate(a, s * (g - inner))

    return _make(s, (a,), backward)


def layer_norm(a, gamma, beta, eps=1e-5):
    """Normalize over the last axis, then scale and shift."""
    a, gamma, beta = as_tensor(a), as_tensor(gamma), as_tensor(beta)
    mu = a.data.mean(axis=-1, keepdims=True)
    var = ((a.data - mu) ** 2).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (a.data - mu) * inv
    out_data = xhat * gamma.data + beta.data

    def backward(g):
        gh = g * gamma.data
        gx = inv * (gh - gh.mean(axis=-1, keepdims=True)
                    - xhat * (gh * xhat).mean(axis=-1, keepdims=True))
        _accumulate(a, gx)
        axes = tuple(range(g.ndim - 1))
        _accumulate(gamma, _unbroadcast((g * xhat).sum(axis=axes), gamma.data.shape))
        _accumulate(beta, _unbroadcast(g.sum(axis=axes), beta.data.shape))

    return _make(out_data, (a, gamma, beta), backward)


def max_reduce(a, axis):
    """Max over one axis; the gradient routes to the first argmax."""
    a = as_tensor(a)
    idx = a.data.argmax(axis=axis)
    out_data = np.take_along_axis(a.data, np.expand_dims(idx, axis),
                                  axis=axis).squeeze(axis)

    def backward(g):
        ga = np.zeros_like(a.data)
        np.put_along_axis(ga, np.expand_dims(idx, axis),
                          np.expand_dims(g, axis), axis=axis)
        _accumulate(a, ga)

    return _make(out_data, (a,), backward)


def tsum(a, axis=None, keepdims=False):
    a = as_tensor(a)
    out_data = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is None:
            _accumulate(a, np.broadcast_to(g, a.data.shape).copy())
        else:
            ge = g if keepdims else np.expand_dims(g, axis)
            _accumulate(a, np.broadcast_to(ge, a.data.shape).copy())

    return _make(out_data, (a,), backward)


def tmean(a, axis=None, keepdims=False):
    a = as_tensor(a)
    n = a.data.size if axis is None else a.data.shape[axis]
    return mul(tsum(a, axis=axis, keepdims=keepdims), 1.0 / n)


def gather(a, indices):
    """Select rows along the first axis; gradients scatter-add back."""
    a = as_tensor(a)
    indices = np.asarray(indices, dtype=np.int64)

    def backward(g):
        ga = np.zeros_like(a.data)
        np.add.at(ga, indices, g)
        _accumulate(a, ga)

    return _make(a.data[indices], (a,), backward)


def concat(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.data.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        for t, piece in zip(tensors, np.split(g, splits, axis=axis)):
            _accumulate(t, piece)

    return _make(np.concatenate([t.data for t in tensors], axis=axis),
                 tensors, backward)


def reshape(a, shape):
    a = as_tensor(a)

    def backward(g):
        _accumulate(a, g.reshape(a.data.shape))

    return _make(a.data.reshape(shape), (a,), backward)


def transpose(a, axes):
    a = as_tensor(a)
    inverse = np.argsort(axes)

    def backward(g):
        _accumulate(a, g.transpose(inverse))

    return _make(a.data.transpose(axes), (a,), backward)


def grad(output, inputs):
    """Reverse-mode gradients of a scalar output for each input tensor.
    Inputs off the computation path get zeros."""
    output = as_tensor(output)
    if output.data.shape != ():
        raise ValueError("grad() requires a scalar output")
    for t in inputs:
        t.zero_grad()
    output.backward()
    return [t.grad if t.grad is not None else np.zeros_like(t.data)
            for t in inputs]


def lr_at(epoch, lr0=0.0005, decay=0.9, every=20):
    """Stepwise schedule: lr0 * decay^floor(epoch / every)."""
    return lr0 * decay ** (int(epoch) // every)


class Adam:
    """ADAM with bias correction over a name -> Tensor parameter dict."""

    def __init__(self, params, lr=0.0005, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = dict(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = {k: np.zeros_like(t.data) for k, t in self.params.items()}
        self.v = {k: np.zeros_like(t.data) for k, t in self.params.items()}

    def zero_grad(self):
        for t in self.params.values():
            t.zero_grad()

    def step(self, lr=None):
        lr = self.lr if lr is None else lr
        self.step_count += 1
        b1t = 1.0 - self.beta1 ** self.step_count
        b2t = 1.0 - self.beta2 ** self.step_count
        for name, t in self.params.items():
            g = t.grad
            if g is None:
                continue
            if g.shape != t.data.shape:
                raise ValueError(f"gradient shape mismatch for {name}")
            if not np.isfinite(g).all():
                raise NumericalError(f"non-finite gradient for {name}")
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            t.data -= lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)

    def state_dict(self):
        return {"step_count": self.step_count, "m": self.m, "v": self.v,
                "hyper": {"lr": self.lr, "beta1": self.beta1,
                          "beta2": self.beta2, "eps": self.eps}}

    def load_state_dict(self, state):
        self.step_count = int(state["step_count"])
        hyper = state["hyper"]
        self.lr = float(hyper["lr"])
        self.beta1 = float(hyper["beta1"])
        self.beta2 = float(hyper["beta2"])
        self.eps = float(hyper["eps"])
        for k in self.params:
            self.m[k] = np.asarray(state["m"][k], dtype=np.float64)
            self.v[k] = np.asarray(state["v"][k], dtype=np.float64)


def save_checkpoint(path, params, optimizer=None, meta=None):
    """Single-archive checkpoint: named parameter arrays, optional ADAM
    moments, and a JSON meta record (format version, user fields)."""
    arrays = {f"param/{k}": t.data for k, t in params.items()}
    full_meta = {"format_version": CHECKPOINT_VERSION}
    if meta:
        full_meta.update(meta)
    if optimizer is not None:
        state = optimizer.state_dict()
        for k, arr in state["m"].items():
            arrays[f"adam_m/{k}"] = arr
        for k, arr in state["v"].items():
            arrays[f"adam_v/{k}"] = arr
        full_meta["adam"] = {"step_count": state["step_count"],
                             "hyper": state["hyper"]}
    arrays["__meta__"] = np.frombuffer(
        json.dumps(full_meta, sort_keys=True).encode(), dtype=np.uint8)
    np.savez(path, **arrays)


def load_checkpoint(path):
    """Returns (params dict of trainable Tensors, adam state or None, meta)."""
    with np.load(path) as archive:
        meta = json.loads(bytes(archive["__meta__"].tobytes()).decode())
        if meta.get("format_version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta.get('format_version')}")
        params = {}
        m, v = {}, {}
        for key in archive.files:
            if key.startswith("param/"):
                params[key[6:]] = Tensor(archive[key], requires_grad=True)
            elif key.startswith("adam_m/"):
                m[key[7:]] = archive[key]
            elif key.startswith("adam_v/"):
                v[key[7:]] = archive[key]
    adam_state = None
    if "adam" in meta:
        adam_state = {"step_count": meta["adam"]["step_count"],
                      "hyper": meta["adam"]["hyper"], "m": m, "v": v}
    return params, adam_state, meta
