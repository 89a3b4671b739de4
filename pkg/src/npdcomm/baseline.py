"""Classical pilot-based OFDM receiver: LS estimation, linear MMSE, analytic LLRs, CA-SCL."""
from __future__ import annotations

import numpy as np

from .polar import CodeDesign, ca_scl_decode, sc_decode
from .waveform import demap_llrs


def _interp_complex(xq, xp, fp):
    return np.interp(xq, xp, fp.real) + 1j * np.interp(xq, xp, fp.imag)


def ls_channel_estimate(rx_grid, pilot_mask, pilot_values) -> np.ndarray:
    """Least-squares channel estimate on every cell of (..., n_symbols, n_subcarriers) grids.

    Pilot cells give ``y / p``. Within a pilot symbol the estimate is
    interpolated linearly across subcarriers (constant beyond the outermost
    pilots). Between pilot symbols magnitude and phase are interpolated
    linearly in time; before the first and after the last pilot symbol the
    nearest estimate is held.
    """
    rx_grid = np.asarray(rx_grid, dtype=complex)
    mask = np.asarray(pilot_mask, dtype=bool)
    if not mask.any():
        raise ValueError("LS estimation needs at least one pilot cell")
    n_sym, n_sc = mask.shape
    lead = rx_grid.shape[:-2]
    flat = rx_grid.reshape((-1, n_sym, n_sc))
    sc = np.arange(n_sc)
    psyms = np.flatnonzero(mask.any(axis=1))
    per_sym = np.empty((flat.shape[0], psyms.size, n_sc), dtype=complex)
    for j, s in enumerate(psyms):
        cols = np.flatnonzero(mask[s])
        raw = flat[:, s, cols] / pilot_values[s, cols]
        if cols.size == 1:
            per_sym[:, j] = raw[:, :1]
        else:
            for b in range(flat.shape[0]):
                per_sym[b, j] = _interp_complex(sc, cols, raw[b])
    out = np.empty_like(flat)
    for t in range(n_sym):
        if t <= psyms[0]:
            out[:, t] = per_sym[:, 0]
        elif t >= psyms[-1]:
            out[:, t] = per_sym[:, -1]
        else:
            j = np.searchsorted(psyms, t) - 1
            t0, t1 = psyms[j], psyms[j + 1]
            a = (t - t0) / (t1 - t0)
            h0, h1 = per_sym[:, j], per_sym[:, j + 1]
            mag = (1 - a) * np.abs(h0) + a * np.abs(h1)
            dphi = np.angle(h1 * np.conj(h0))
            out[:, t] = mag * np.exp(1j * (np.angle(h0) + a * dphi))
    return out.reshape(lead + (n_sym, n_sc))


def mmse_equalize(y, h_hat, n0):
    """Per-cell linear MMSE estimate ``conj(H) y / (|H|^2 + N0)``; 0 where H and N0 both vanish."""
    y = np.asarray(y, dtype=complex)
    h_hat = np.asarray(h_hat, dtype=complex)
    den = np.abs(h_hat) ** 2 + np.asarray(n0, float)
    num = np.conj(h_hat) * y
    safe = np.where(den > 0, den, 1.0)
    return np.where(den > 0, num / safe, 0.0)


def mmse_noise_variance(h_hat, n0):
    """Residual variance N0 / (|H|^2 + N0) used for post-equalization LLRs."""
    return np.asarray(n0, float) / (np.abs(np.asarray(h_hat)) ** 2 + np.asarray(n0, float))


def classic_llrs(tx, link, csi: str = "ls") -> np.ndarray:
    """Channel LLRs (B, N) for a :class:`Transmission`, punctured positions set to zero."""
    B = tx.x.shape[0]
    n0 = tx.n0[:, None]
    if link.waveform == "none":
        h = np.ones_like(tx.y)
        y = tx.y
    elif link.waveform == "ofdm":
        layout = link.layout
        if csi == "perfect":
            h_grid = tx.h_cells
        elif csi == "ls":
            h_grid = ls_channel_estimate(tx.rx_grid, layout.pilot_mask, layout.pilot_values)
        else:
            raise ValueError(f"unknown CSI mode {csi!r}")
        h = layout.extract(h_grid)
        y = tx.y
    else:
        raise ValueError("the classical receiver supports the ofdm and none waveforms only")
    s_hat = mmse_equalize(y, h, n0)
    var = np.maximum(mmse_noise_variance(h, n0), 1e-300)
    llr = demap_llrs(s_hat, link.mod, var)
    return link.puncture.recover_llrs(llr.reshape(B, -1))


def classic_receive(tx, link, design: CodeDesign, csi: str = "ls") -> np.ndarray:
    """OFDM demod output -> LS/perfect CSI -> MMSE -> LLRs -> rate recovery -> CA-SCL. Returns u_hat (B, N)."""
    llr = classic_llrs(tx, link, csi)
    if link.list_size == 1 and design.crc_len == 0:
        return sc_decode(llr, design)[0]
    return ca_scl_decode(llr, design, link.list_size)
