"""Training loop: NSC loss on channel embeddings plus the constant embedding."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from ..nn import Adam
from .loss import nsc_loss
from .model import NpdParams, constant_sequence, embed, embed_backward

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    iterations: int = 1000
    batch_size: int = 32
    lr: float = 1e-3
    log_every: int = 0


@dataclass
class TrainResult:
    params: NpdParams
    loss: np.ndarray  # L_X + L_Y per iteration
    loss_const: np.ndarray  # NSC loss of the repeated constant embedding
    loss_channel: np.ndarray  # NSC loss of the channel embeddings
    seconds: float = 0.0
    optimizer: Adam = field(default=None, repr=False)


def loss_and_grads(params: NpdParams, x, y, n0):
    """Return (L_const, L_channel, grads aligned with ``params.parameters()``).

    Both losses are batch means; the gradient is that of their sum.
    """
    x = np.asarray(x, dtype=np.uint8)
    B, N = x.shape
    e0, ecache = embed(params, y, n0[:, None] if np.ndim(n0) else n0, return_cache=True)
    eco = constant_sequence(params, N, (B,)).astype(e0.dtype)
    res = nsc_loss(params, np.concatenate([eco, e0]), np.concatenate([x, x]), np.full(2 * B, 1.0 / B))
    de = res.e0_grad
    g_co = de[:B].reshape(B, N // params.m, params.m * params.d).sum(axis=(0, 1))
    g_E = embed_backward(params, ecache, de[B:])
    grads = g_E + [g_co] + res.grads["F"] + res.grads["G"] + res.grads["H"]
    return float(res.block_losses[:B].mean()), float(res.block_losses[B:].mean()), grads


def train(params: NpdParams, stream, config: TrainConfig, callback=None) -> TrainResult:
    """Adam on L_X + L_Y for ``config.iterations`` batches drawn from ``stream``.

    ``stream`` yields ``(x, y, n0)`` with ``x`` (B, N), ``y`` (B, N/m) and
    ``n0`` (B,). The input ``params`` are left untouched; the trained copy is
    returned.
    """
    params = params.copy()
    opt = Adam(lr=config.lr)
    it = iter(stream)
    lc = np.empty(config.iterations)
    ly = np.empty(config.iterations)
    t0 = time.perf_counter()
    for i in range(config.iterations):
        try:
            x, y, n0 = next(it)
        except StopIteration:
            raise RuntimeError(f"dataset stream exhausted after {i} of {config.iterations} iterations") from None
        lc[i], ly[i], grads = loss_and_grads(params, x, y, np.asarray(n0, float))
        opt.step(params.parameters(), grads)
        if config.log_every and (i + 1) % config.log_every == 0:
            w = slice(max(0, i + 1 - config.log_every), i + 1)
            log.info("iter %d  loss %.4f  (const %.4f, channel %.4f)", i + 1,
                     lc[w].mean() + ly[w].mean(), lc[w].mean(), ly[w].mean())
        if callback is not None:
            callback(i, lc[i], ly[i], params)
    return TrainResult(params, lc + ly, lc, ly, time.perf_counter() - t0, opt)
