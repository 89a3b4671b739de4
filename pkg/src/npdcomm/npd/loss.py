"""Staged NSC loss over the full polar factor graph, with reverse-mode gradients.

Stage 0 scores ``e_0`` against the codeword ``x``. Each later stage splits
the previous one into contiguous sub-blocks, pairs odd/even rows inside
every sub-block and applies ``F`` (bits ``v_o xor v_e``) and ``G`` (bits
``v_e``). All stages share the head ``H``; the loss is the mean base-2
cross-entropy over the ``(n+1) N`` terms.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..polar import log2_exact
from .model import NpdParams

LN2 = np.log(2.0)


@dataclass
class NscResult:
    loss: float  # weighted sum of per-block losses (mean over blocks by default)
    block_losses: np.ndarray  # (B,)
    stage_losses: np.ndarray  # (n+1,), batch mean
    grads: dict | None = None  # {"F": [...], "G": [...], "H": [...]}
    e0_grad: np.ndarray | None = None  # (B, N, d)


def _as_batch(e0, x):
    e0 = np.asarray(e0)
    x = np.asarray(x, dtype=np.uint8)
    single = e0.ndim == 2
    if single:
        e0, x = e0[None], x[None]
    if e0.ndim != 3 or x.shape != e0.shape[:2]:
        raise ValueError(f"shape mismatch: e0 {e0.shape}, x {x.shape}")
    log2_exact(e0.shape[1])
    return e0, x, single


def _butterfly(params, e, v, nb, keep):
    """One stage on (B, N, d) with ``nb`` sub-blocks."""
    B, N, d = e.shape
    M = N // nb
    eb = e.reshape(B, nb, M, d)
    vb = v.reshape(B, nb, M)
    eo, ee = eb[:, :, 0::2], eb[:, :, 1::2]
    vx = vb[:, :, 0::2] ^ vb[:, :, 1::2]
    fo, fc = params.F.forward(np.concatenate([eo, ee], -1))
    go, gc = params.G.forward(np.concatenate([eo, ee, vx[..., None].astype(e.dtype)], -1))
    e_next = np.concatenate([fo, go], axis=2).reshape(B, N, d)
    v_next = np.concatenate([vx, vb[:, :, 1::2]], axis=2).reshape(B, N)
    return e_next, v_next, ((fc, gc) if keep else None)


def staged_forward(params: NpdParams, e0, x, keep=False):
    """Embeddings and bits of every stage: lists of (B, N, d) and (B, N)."""
    B, N, d = e0.shape
    n = log2_exact(N)
    es, vs, caches = [e0], [x], []
    for j in range(1, n + 1):
        e, v, c = _butterfly(params, es[-1], vs[-1], 1 << (j - 1), keep)
        es.append(e)
        vs.append(v)
        caches.append(c)
    return es, vs, caches


def nsc_loss(params: NpdParams, e0, x, weights=None, need_grad: bool = True) -> NscResult:
    """NSC loss of embeddings ``e0`` (B, N, d) against codewords ``x`` (B, N).

    ``weights`` (B,) sets the contribution of each block to ``loss``;
    the default is the batch mean.
    """
    e0, x, single = _as_batch(e0, x)
    B, N, d = e0.shape
    n = log2_exact(N)
    w = np.full(B, 1.0 / B) if weights is None else np.asarray(weights, float)
    if w.shape != (B,):
        raise ValueError("weights must have one entry per block")

    es, vs, caches = staged_forward(params, e0, x, keep=need_grad)
    E_all = np.stack(es, axis=1)  # (B, n+1, N, d)
    V_all = np.stack(vs, axis=1).astype(float)
    out, hc = params.H.forward(E_all)
    logits = out[..., 0]
    sgn = 2.0 * V_all - 1.0
    ce = np.logaddexp(0.0, -sgn * logits) / LN2
    block = ce.mean(axis=(1, 2))
    res = NscResult(float(w @ block), block, ce.mean(axis=(0, 2)))
    if not need_grad:
        return res

    # d ce / d logit = (sigmoid(l) - v) / ln 2
    sig = 0.5 * (1.0 + np.tanh(0.5 * logits))
    dlog = (sig - V_all) / LN2 * (w / ((n + 1) * N))[:, None, None]
    gH, dE = params.H.backward(hc, dlog[..., None])
    gF = [np.zeros_like(p) for p in params.F.params]
    gG = [np.zeros_like(p) for p in params.G.params]
    de = dE[:, n]
    for j in range(n, 0, -1):
        nb = 1 << (j - 1)
        M = N // nb
        fc, gc = caches[j - 1]
        db = de.reshape(B, nb, M, d)
        pf, dfin = params.F.backward(fc, db[:, :, : M // 2])
        pg, dgin = params.G.backward(gc, db[:, :, M // 2:])
        for acc, g in zip(gF, pf):
            acc += g
        for acc, g in zip(gG, pg):
            acc += g
        prev = np.empty_like(db)
        prev[:, :, 0::2] = dfin[..., :d] + dgin[..., :d]
        prev[:, :, 1::2] = dfin[..., d:] + dgin[..., d:2 * d]
        de = prev.reshape(B, N, d) + dE[:, j - 1]
    res.grads = {"F": gF, "G": gG, "H": gH}
    res.e0_grad = de[0] if single else de
    return res


def nsc_loss_tilde(params: NpdParams, e0, x):
    """Final-stage bits ``v_n`` (equal to the u-domain bits) and embeddings ``e_n``."""
    e0, x, single = _as_batch(e0, x)
    es, vs, _ = staged_forward(params, e0, x)
    if single:
        return vs[-1][0], es[-1][0]
    return vs[-1], es[-1]
