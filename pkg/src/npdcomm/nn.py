"""Small dense-network engine: MLP forward/backward, Adam, finite differences."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("elu", "relu", "tanh")


def _act(name, z):
    if name == "elu":
        # min(z, 0) -> expm1 -> max with z gives z for z > 0 and expm1(z) otherwise
        out = np.minimum(z, 0.0)
        np.expm1(out, out=out)
        return np.maximum(z, out, out=out)
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    raise ValueError(f"unknown activation {name!r}")


def _act_grad(name, z, a):
    if name == "elu":
        out = np.minimum(a, 0.0)
        out += 1.0
        return out
    if name == "relu":
        return (z > 0).astype(z.dtype)
    if name == "tanh":
        return 1.0 - a * a
    raise ValueError(f"unknown activation {name!r}")


@dataclass
class MlpCache:
    inputs: list
    pre: list
    owner: int


class Mlp:
    """Fully connected network: affine + activation on hidden layers, affine output.

    Parameters are exposed as a flat list ``[W0, b0, W1, b1, ...]`` where
    ``W_i`` has shape ``(fan_in, fan_out)``.
    """

    def __init__(self, layer_dims, activation="elu", rng=None, dtype=np.float64):
        layer_dims = tuple(int(v) for v in layer_dims)
        if len(layer_dims) < 2 or min(layer_dims) < 1:
            raise ValueError(f"bad layer dims {layer_dims}")
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.layer_dims = layer_dims
        self.activation = activation
        self.dtype = np.dtype(dtype)
        rng = np.random.default_rng(rng)
        self.params = []
        for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
            bound = np.sqrt(6.0 / fan_in)
            self.params.append(rng.uniform(-bound, bound, (fan_in, fan_out)).astype(self.dtype))
            self.params.append(np.zeros(fan_out, dtype=self.dtype))

    @property
    def n_layers(self) -> int:
        return len(self.layer_dims) - 1

    @property
    def d_in(self) -> int:
        return self.layer_dims[0]

    @property
    def d_out(self) -> int:
        return self.layer_dims[-1]

    def copy(self) -> "Mlp":
        new = Mlp.__new__(Mlp)
        new.layer_dims, new.activation, new.dtype = self.layer_dims, self.activation, self.dtype
        new.params = [p.copy() for p in self.params]
        return new

    def forward(self, x):
        """x: (..., d_in) -> (out (..., d_out), cache)."""
        x = np.asarray(x, dtype=self.dtype)
        if x.shape[-1] != self.d_in:
            raise ValueError(f"input width {x.shape[-1]} != {self.d_in}")
        lead = x.shape[:-1]
        a = x.reshape(-1, self.d_in)
        inputs, pre = [], []
        for i in range(self.n_layers):
            W, b = self.params[2 * i], self.params[2 * i + 1]
            inputs.append(a)
            z = a @ W
            z += b
            if i < self.n_layers - 1:
                pre.append(z)
                a = _act(self.activation, z)
            else:
                a = z
        return a.reshape(lead + (self.d_out,)), MlpCache(inputs, pre, id(self))

    def __call__(self, x):
        return self.forward(x)[0]

    def backward(self, cache: MlpCache, upstream):
        """Gradients of <upstream, output> w.r.t. parameters and input."""
        if cache.owner != id(self):
            raise ValueError("cache was produced by a different network")
        g = np.asarray(upstream, dtype=self.dtype)
        lead = g.shape[:-1]
        g = g.reshape(-1, self.d_out)
        if g.shape[0] != cache.inputs[0].shape[0]:
            raise ValueError("upstream batch does not match cache")
        grads = [None] * len(self.params)
        for i in range(self.n_layers - 1, -1, -1):
            W = self.params[2 * i]
            grads[2 * i] = cache.inputs[i].T @ g
            grads[2 * i + 1] = g.sum(axis=0)
            g = g @ W.T
            if i > 0:
                z = cache.pre[i - 1]
                g = g * _act_grad(self.activation, z, cache.inputs[i])
        return grads, g.reshape(lead + (self.d_in,))


def zeros_like_params(params):
    return [np.zeros_like(p) for p in params]


@dataclass
class Adam:
    """Bias-corrected Adam acting in place on a list of arrays."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    def step(self, params, grads):
        if len(params) != len(grads):
            raise ValueError("params/grads length mismatch")
        if not self.m:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.step_count += 1
        t = self.step_count
        c1 = 1.0 - self.beta1 ** t
        c2 = 1.0 - self.beta2 ** t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            if p.shape != g.shape:
                raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def numerical_gradient(f, params, step=1e-5):
    """Central finite differences of the scalar ``f()`` w.r.t. each array in ``params`` (perturbed in place)."""
    out = []
    for p in params:
        g = np.zeros_like(p, dtype=float)
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + step
            fp = f()
            flat[i] = old - step
            fm = f()
            flat[i] = old
            gflat[i] = (fp - fm) / (2 * step)
        out.append(g)
    return out


def relative_error(a, b, floor=1e-6):
    """max |a-b| / max(|a|, |b|, floor), elementwise max over all entries."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    return float(np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor), initial=0.0))
