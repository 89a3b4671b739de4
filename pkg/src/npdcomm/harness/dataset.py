"""Transmit chain simulation and training/evaluation datasets."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..channel import ChannelRealization, apply_channel, awgn, load_tdl_profile, rapp_nonlinearity, realize_tdl_taps
from ..waveform import (SINC_SPAN, channel_frequency_response, map_bits, matched_filter, ofdm_demodulate,
                        ofdm_modulate, pulse_shape)
from .config import LinkConfig


@dataclass
class Transmission:
    """One batch of simulated blocks.

    ``y`` holds the received data symbols in block order (what the NPD
    embeds). ``rx_grid`` and ``h_cells`` are the demodulated OFDM grid and the
    true per-cell channel, present for OFDM only.
    """

    x: np.ndarray  # (B, N) codeword bits
    y: np.ndarray  # (B, N_r/m)
    n0: np.ndarray  # (B,)
    rx_grid: np.ndarray | None = None
    h_cells: np.ndarray | None = None


@dataclass
class Dataset:
    x: np.ndarray
    y: np.ndarray
    n0: np.ndarray

    def __len__(self):
        return self.x.shape[0]

    def batches(self, size: int):
        for s in range(0, len(self), size):
            yield self.x[s: s + size], self.y[s: s + size], self.n0[s: s + size]


def snr_to_n0(snr_db):
    """Es/N0 in dB -> N0 for unit-energy symbols."""
    return 10.0 ** (-np.asarray(snr_db, dtype=float) / 10.0)


def _realize(link: LinkConfig, B: int, n_samples: int, sample_rate: float, rng) -> ChannelRealization | None:
    if link.channel == "awgn":
        return None
    if link.channel == "static":
        taps = np.repeat(link.normalized_taps[None, :, None], n_samples, axis=2)
        return ChannelRealization(np.broadcast_to(taps, (B,) + taps.shape[1:]), 0, sample_rate)
    profile = load_tdl_profile(link.tdl_profile, link.delay_spread)
    velocity = rng.uniform(link.velocity_min, link.velocity_max, B)
    reals = [realize_tdl_taps(profile, n_samples, sample_rate, v, rng, link.carrier_frequency) for v in velocity]
    return ChannelRealization(np.stack([r.taps for r in reals]), reals[0].l_min, sample_rate)


def _pass(s, ch, noise_var, rng):
    if ch is None:
        return s + awgn(s.shape, noise_var, rng)
    return apply_channel(s, ch, noise_var, rng)


def transmit(link: LinkConfig, x, n0, rng) -> Transmission:
    """Puncture, map, modulate, amplify, propagate and demodulate codewords ``x`` (B, N)."""
    x = np.asarray(x, dtype=np.uint8)
    B = x.shape[0]
    n0 = np.broadcast_to(np.asarray(n0, float), (B,)).copy()
    sym = map_bits(link.puncture.puncture(x), link.mod)
    rapp = (lambda s: rapp_nonlinearity(s, link.rapp_p, link.rapp_ibo_db)) if link.rapp else (lambda s: s)

    if link.waveform == "none":
        return Transmission(x, _pass(rapp(sym), None, n0, rng), n0)

    if link.waveform == "ofdm":
        layout = link.layout
        grid = layout.fill(sym, rng)
        samples = rapp(ofdm_modulate(grid, layout.cp_len))
        ch = _realize(link, B, samples.shape[-1], link.bandwidth, rng)
        rx = ofdm_demodulate(_pass(samples, ch, n0, rng), layout.n_subcarriers, layout.n_symbols, layout.cp_len)
        if ch is None:
            h_cells = np.ones(rx.shape, dtype=complex)
        else:
            L = layout.n_subcarriers + layout.cp_len
            taps = ch.taps.reshape(ch.taps.shape[:-1] + (layout.n_symbols, L))[..., layout.cp_len:]
            mean = np.moveaxis(taps.mean(axis=-1), -2, -1)  # (B, n_symbols, n_lags)
            h_cells = channel_frequency_response(mean, ch.l_min, layout.n_subcarriers)
        return Transmission(x, layout.extract(rx), n0, rx, h_cells)

    # single carrier: channel at the oversampled rate, noise PSD N0 over os * W
    os_ = link.oversampling
    samples = rapp(pulse_shape(sym, os_, SINC_SPAN))
    ch = _realize(link, B, samples.shape[-1], link.bandwidth * os_, rng)
    y = matched_filter(_pass(samples, ch, n0 * os_, rng), sym.shape[-1], os_, SINC_SPAN)
    return Transmission(x, y, n0)


def block_n0(link: LinkConfig, B: int, rng, snr_db=None) -> np.ndarray:
    """Per-block noise variance: fixed ``snr_db`` or uniform (in dB) over ``link.train_snr_db``."""
    if snr_db is None:
        lo, hi = link.train_snr_db
        return snr_to_n0(rng.uniform(lo, hi, B))
    return np.full(B, float(snr_to_n0(snr_db)))


def generate_dataset(link: LinkConfig, blocks: int, seed=0, snr_db=None) -> Dataset:
    """``blocks`` i.i.d. uniform codewords sent over ``link``."""
    if blocks < 1:
        raise ValueError("blocks must be >= 1")
    rng = np.random.default_rng(seed)
    x = rng.integers(0, 2, (blocks, link.N), dtype=np.uint8)
    n0 = block_n0(link, blocks, rng, snr_db)
    tx = transmit(link, x, n0, rng)
    return Dataset(tx.x, tx.y, tx.n0)


def dataset_stream(link: LinkConfig, batch_size: int, seed=0, snr_db=None, limit=None):
    """Endless (or ``limit``-long) stream of fresh ``(x, y, n0)`` batches; batch ``i`` is seeded by (seed, i)."""
    if isinstance(seed, np.random.SeedSequence):
        entropy, key = seed.entropy, tuple(seed.spawn_key)
    else:
        entropy, key = seed, ()
    i = 0
    while limit is None or i < limit:
        ds = generate_dataset(link, batch_size, np.random.SeedSequence(entropy, spawn_key=key + (i,)), snr_db)
        yield ds.x, ds.y, ds.n0
        i += 1
