"""SC and CA-SCL decoding over embeddings with pluggable F/G/H kernels."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..polar import CodeDesign, _branch, _gather, _path_penalty, bit_node, bit_reversal_perm, check_node, select_path
from .model import NpdParams


@dataclass(frozen=True)
class Kernels:
    """``f(a, b)``, ``g(a, b, u)`` map (..., d) embeddings to (..., d); ``h(e)`` gives (...,) LLRs."""

    f: Callable
    g: Callable
    h: Callable


def neural_kernels(params: NpdParams) -> Kernels:
    def f(a, b):
        return params.F(np.concatenate([a, b], -1))

    def g(a, b, u):
        return params.G(np.concatenate([a, b, np.asarray(u, a.dtype)[..., None]], -1))

    def h(e):
        return params.H(e)[..., 0]

    return Kernels(f, g, h)


def classical_kernels() -> Kernels:
    """Scalar LLRs as 1-dimensional embeddings, processed by the exact SC kernels."""
    return Kernels(
        lambda a, b: check_node(a[..., 0], b[..., 0])[..., None],
        lambda a, b, u: bit_node(a[..., 0], b[..., 0], u)[..., None],
        lambda e: e[..., 0],
    )


def _prepare(e0, design):
    e0 = np.asarray(e0)
    if e0.ndim < 2 or e0.shape[-2] != design.N:
        raise ValueError(f"expected (..., {design.N}, d) embeddings, got {e0.shape}")
    lead = e0.shape[:-2]
    flat = e0.reshape((-1,) + e0.shape[-2:])
    if not design.include_bit_reversal:
        flat = flat[:, bit_reversal_perm(design.n)]
    return flat, lead


def _sc(e, fv, k: Kernels):
    B, M, _ = e.shape
    if M == 1:
        llr = k.h(e)
        if fv[0] == 0.5:
            u = (llr[:, 0] > 0).astype(np.uint8)
        else:
            u = np.full(B, int(fv[0]), dtype=np.uint8)
        return u[:, None], u[:, None], llr
    eo, ee = e[:, 0::2], e[:, 1::2]
    h = M // 2
    u1, x1, l1 = _sc(k.f(eo, ee), fv[:h], k)
    u2, x2, l2 = _sc(k.g(eo, ee, x1), fv[h:], k)
    x = np.empty((B, M), dtype=np.uint8)
    x[:, 0::2] = x1 ^ x2
    x[:, 1::2] = x2
    return np.concatenate([u1, u2], 1), x, np.concatenate([l1, l2], 1)


def sc_decode_embeddings(e0, design: CodeDesign, kernels: Kernels):
    """SC decoding of (..., N, d) embeddings; returns (u_hat, decision LLRs), each (..., N)."""
    flat, lead = _prepare(e0, design)
    u, _, llr = _sc(flat, design.frozen_values, kernels)
    return u.reshape(lead + (design.N,)), llr.reshape(lead + (design.N,))


def _scl(e, fv, pm, L, k: Kernels):
    B, P, M, _ = e.shape
    if M == 1:
        li = k.h(e)[:, :, 0]
        if fv[0] != 0.5:
            bit = int(fv[0])
            u = np.full((B, P, 1), bit, dtype=np.uint8)
            return u, u, pm + _path_penalty(li, bit), np.broadcast_to(np.arange(P), (B, P))
        bits, pm, parent = _branch(pm, li, L)
        u = bits[:, :, None]
        return u, u, pm, parent
    h = M // 2
    eo, ee = e[:, :, 0::2], e[:, :, 1::2]
    u1, x1, pm, p1 = _scl(k.f(eo, ee), fv[:h], pm, L, k)
    # copy-on-branch: surviving paths take their parent's partial embeddings
    eo, ee = _gather(eo, p1), _gather(ee, p1)
    u2, x2, pm, p2 = _scl(k.g(eo, ee, x1), fv[h:], pm, L, k)
    u1, x1 = _gather(u1, p2), _gather(x1, p2)
    x = np.empty(x2.shape[:2] + (M,), dtype=np.uint8)
    x[:, :, 0::2] = x1 ^ x2
    x[:, :, 1::2] = x2
    return np.concatenate([u1, u2], 2), x, pm, np.take_along_axis(p1, p2, axis=1)


def scl_decode_embeddings(e0, design: CodeDesign, kernels: Kernels, list_size: int = 8) -> np.ndarray:
    """CRC-aided list decoding of (..., N, d) embeddings; returns u_hat (..., N)."""
    if list_size < 1:
        raise ValueError("list_size must be >= 1")
    flat, lead = _prepare(e0, design)
    B = flat.shape[0]
    u, _, pm, _ = _scl(flat[:, None], design.frozen_values, np.zeros((B, 1)), list_size, kernels)
    return select_path(u, pm, design).reshape(lead + (design.N,))


def npd_sc_decode(params: NpdParams, e0, design: CodeDesign):
    return sc_decode_embeddings(e0, design, neural_kernels(params))


def npd_ca_scl_decode(params: NpdParams, e0, design: CodeDesign, list_size: int = 8) -> np.ndarray:
    return scl_decode_embeddings(e0, design, neural_kernels(params), list_size)


def npd_decode_batched(params: NpdParams, e0, design: CodeDesign, list_size: int = 1, chunk: int = 512):
    """Decode many blocks in chunks to bound memory; SC when ``list_size == 1`` and no CRC."""
    e0 = np.asarray(e0)
    out = np.empty(e0.shape[:-1], dtype=np.uint8)
    flat_in = e0.reshape((-1,) + e0.shape[-2:])
    flat_out = out.reshape(-1, e0.shape[-2])
    for s in range(0, flat_in.shape[0], chunk):
        blk = flat_in[s: s + chunk]
        if list_size == 1 and design.crc_len == 0:
            flat_out[s: s + chunk] = npd_sc_decode(params, blk, design)[0]
        else:
            flat_out[s: s + chunk] = npd_ca_scl_decode(params, blk, design, list_size)
    return out
