"""NPD parameters, channel embedding and rate recovery."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..nn import Mlp
from ..polar import PunctureConfig

NETWORKS = ("E", "E_co", "F", "G", "H")


@dataclass(eq=False)
class NpdParams:
    """Weights of the embedding E, constant embedding E_co and the SC networks F, G, H.

    ``parameters()`` lists every trainable array in the fixed order
    E, E_co, F, G, H (per network: W0, b0, W1, b1, ...).
    """

    E: Mlp
    E_co: np.ndarray
    F: Mlp
    G: Mlp
    H: Mlp
    d: int
    h: int
    m: int = 1

    @classmethod
    def init(cls, d: int, h: int, m: int = 1, hidden_layers: int = 1, activation: str = "elu",
             seed=0, dtype=np.float64):
        if min(d, h, m) < 1 or hidden_layers < 1:
            raise ValueError("d, h, m and hidden_layers must be positive")
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        rngs = [np.random.default_rng(s) for s in ss.spawn(5)]
        hid = (h,) * hidden_layers

        def net(d_in, d_out, r):
            return Mlp((d_in,) + hid + (d_out,), activation, r, dtype)

        E = net(3, d * m, rngs[0])
        E_co = rngs[1].normal(scale=0.1, size=d * m).astype(dtype)
        return cls(E, E_co, net(2 * d, d, rngs[2]), net(2 * d + 1, d, rngs[3]), net(d, 1, rngs[4]), d, h, m)

    def parameters(self) -> list:
        return self.E.params + [self.E_co] + self.F.params + self.G.params + self.H.params

    def split(self, flat: list) -> dict:
        """Split a list aligned with ``parameters()`` into per-network lists."""
        sizes = [len(self.E.params), 1, len(self.F.params), len(self.G.params), len(self.H.params)]
        out, i = {}, 0
        for name, s in zip(NETWORKS, sizes):
            out[name] = flat[i: i + s]
            i += s
        return out

    def copy(self) -> "NpdParams":
        return NpdParams(self.E.copy(), self.E_co.copy(), self.F.copy(), self.G.copy(), self.H.copy(),
                         self.d, self.h, self.m)

    def equals(self, other: "NpdParams") -> bool:
        a, b = self.parameters(), other.parameters()
        return (self.d, self.h, self.m) == (other.d, other.h, other.m) and len(a) == len(b) and all(
            x.shape == y.shape and np.array_equal(x, y) for x, y in zip(a, b))


def n0_feature(n0):
    """Noise-variance input of the embedding: 10 log10(N0) / 10."""
    n0 = np.asarray(n0, dtype=float)
    if np.any(n0 <= 0):
        raise ValueError("N0 must be positive")
    return np.log10(n0)


def _features(y, n0):
    y = np.asarray(y, dtype=complex)
    f = np.broadcast_to(n0_feature(n0), y.shape)
    return np.stack([y.real, y.imag, f], axis=-1)


def embed(params: NpdParams, y, n0, return_cache: bool = False):
    """Symbols ``y`` (..., S) with noise variance ``n0`` (broadcast against ``y``) -> (..., S*m, d).

    Symbol ``i`` yields rows ``i*m .. i*m+m-1``; row ``r`` belongs to the
    symbol's ``r``-th mapped bit.
    """
    feats = _features(y, n0)
    out, cache = params.E.forward(feats)
    e = out.reshape(out.shape[:-2] + (out.shape[-2] * params.m, params.d))
    return (e, cache) if return_cache else e


def embed_backward(params: NpdParams, cache, de):
    """Parameter gradients of E given the gradient w.r.t. the embedding rows."""
    de = np.asarray(de)
    g = de.reshape(de.shape[:-2] + (de.shape[-2] // params.m, params.m * params.d))
    grads, _ = params.E.backward(cache, g)
    return grads


def embed_channel_output(params: NpdParams, y, n0) -> np.ndarray:
    """Embeddings of a single received symbol: (m, d)."""
    return embed(params, np.asarray([y]), n0)


def constant_embedding(params: NpdParams) -> np.ndarray:
    return params.E_co.reshape(params.m, params.d)


def constant_sequence(params: NpdParams, N: int, lead=()) -> np.ndarray:
    """E_co repeated over all N positions: (*lead, N, d)."""
    if N % params.m:
        raise ValueError("N must be a multiple of m")
    rows = np.tile(constant_embedding(params), (N // params.m, 1))
    return np.broadcast_to(rows, tuple(lead) + rows.shape).copy()


def rate_recover(e_punct, cfg: PunctureConfig, params: NpdParams) -> np.ndarray:
    """Expand (..., N_r, d) embeddings to (..., N, d), filling punctured rows from E_co."""
    e_punct = np.asarray(e_punct)
    if e_punct.shape[-2] != cfg.N_r:
        raise ValueError(f"expected {cfg.N_r} rows, got {e_punct.shape[-2]}")
    if cfg.m != params.m:
        raise ValueError("puncture config and model disagree on bits per symbol")
    lead = e_punct.shape[:-2]
    out = constant_sequence(params, cfg.N, lead).astype(e_punct.dtype)
    out[..., cfg.kept, :] = e_punct
    return out
