"""Mutual-information estimates of the synthetic channels and NPD code design."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..polar import CodeDesign, PunctureConfig
from .loss import LN2, nsc_loss_tilde
from .model import NpdParams, embed, rate_recover


@dataclass
class MiEstimate:
    raw: np.ndarray  # 1 - mean cross-entropy (bits), may fall below 0
    blocks: int

    @property
    def clipped(self) -> np.ndarray:
        return np.clip(self.raw, 0.0, 1.0)

    @property
    def mean(self) -> float:
        return float(self.raw.mean())


def mi_from_embeddings(params: NpdParams, e0, x, chunk: int = 256) -> MiEstimate:
    """Per-index 1 - mean CE of the final-stage embeddings, over the blocks of ``e0`` (B, N, d)."""
    e0 = np.asarray(e0)
    x = np.asarray(x, np.uint8)
    total = np.zeros(e0.shape[1])
    for s in range(0, e0.shape[0], chunk):
        v, e = nsc_loss_tilde(params, e0[s: s + chunk], x[s: s + chunk])
        logits = params.H(e)[..., 0]
        total += (np.logaddexp(0.0, -(2.0 * v - 1.0) * logits) / LN2).sum(axis=0)
    return MiEstimate(1.0 - total / e0.shape[0], e0.shape[0])


def estimate_mi(params: NpdParams, x, y, n0, puncture: PunctureConfig | None = None, chunk: int = 256):
    """MI estimate from codewords ``x`` (B, N) and received symbols ``y`` (B, N_r/m)."""
    n0 = np.asarray(n0, float)
    e = embed(params, y, n0[:, None] if n0.ndim else n0)
    if puncture is not None and puncture.P:
        e = rate_recover(e, puncture, params)
    return mi_from_embeddings(params, e, x, chunk)


def design_from_mi(mi, K: int, crc_len: int = 0, frozen_seed=0, include_bit_reversal: bool = True) -> CodeDesign:
    """Top-``K`` indices by raw MI (ties to the lower index) form the information set."""
    mi = np.asarray(mi, float)
    N = mi.size
    if not 0 <= K <= N:
        raise ValueError(f"need 0 <= K <= N, got K={K}")
    order = np.lexsort((np.arange(N), -mi))
    return CodeDesign.from_info_set(N, order[:K], crc_len, frozen_seed, include_bit_reversal)


def design_code(params: NpdParams, k: int, link, blocks: int = 2000, seed=0, snr_db=None) -> CodeDesign:
    """Simulate ``blocks`` random codewords over ``link``, estimate MI, keep the best ``k + crc_len``.

    ``snr_db`` defaults to the link's design SNR.
    """
    from ..harness.dataset import generate_dataset

    if not 0 <= k <= link.N - link.crc_len:
        raise ValueError(f"k={k} out of range for N={link.N}, crc_len={link.crc_len}")
    ds = generate_dataset(link, blocks, seed=seed, snr_db=link.design_snr if snr_db is None else snr_db)
    mi = estimate_mi(params, ds.x, ds.y, ds.n0, link.puncture)
    return design_from_mi(mi.raw, k + link.crc_len, link.crc_len, link.frozen_seed)
