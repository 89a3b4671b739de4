"""Symbol mapping, OFDM and single-carrier waveforms, pilot layouts."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PILOT_PATTERNS = ("none", "1P", "2P", "1P2", "2P2")
# Pilot symbol positions as drawn on a ten-symbol grid; rescaled to the actual grid.
_PILOT_SYMBOLS_OF_TEN = {"1P": (2,), "2P": (2, 7), "1P2": (2,), "2P2": (2, 7)}


@dataclass(frozen=True, eq=False)
class Modulation:
    name: str
    m: int
    points: np.ndarray  # points[label], label = bits read MSB first
    labels: np.ndarray  # (2**m, m) bit table

    def __repr__(self):
        return f"Modulation({self.name})"


def _labels(m):
    return ((np.arange(1 << m)[:, None] >> np.arange(m - 1, -1, -1)) & 1).astype(np.uint8)


BPSK = Modulation("BPSK", 1, np.array([1.0 + 0j, -1.0 + 0j]), _labels(1))
# Gray labeled, bit order (b_real, b_imag)
QPSK = Modulation("QPSK", 2, np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / math.sqrt(2), _labels(2))

_MODULATIONS = {"BPSK": BPSK, "QPSK": QPSK}


def get_modulation(name: str) -> Modulation:
    try:
        return _MODULATIONS[name.upper()]
    except KeyError:
        raise ValueError(f"unknown modulation {name!r}") from None


def map_bits(bits, mod: Modulation) -> np.ndarray:
    """Bits (..., L) -> symbols (..., L/m)."""
    bits = np.asarray(bits, dtype=np.int64)
    L = bits.shape[-1]
    if L % mod.m:
        raise ValueError(f"{L} bits do not fill {mod.name} symbols of {mod.m} bits")
    groups = bits.reshape(bits.shape[:-1] + (L // mod.m, mod.m))
    idx = groups @ (1 << np.arange(mod.m - 1, -1, -1))
    return mod.points[idx]


def demap_llrs(symbols, mod: Modulation, n0, max_log: bool = False) -> np.ndarray:
    """Per-bit LLRs log P(1)/P(0) under complex AWGN of variance ``n0``.

    ``n0`` broadcasts against ``symbols``. Returns (..., S*m).
    """
    y = np.asarray(symbols, dtype=complex)
    n0 = np.asarray(n0, dtype=float)
    metric = -np.abs(y[..., None] - mod.points) ** 2 / n0[..., None]  # (..., S, 2**m)
    out = np.empty(y.shape + (mod.m,))
    for i in range(mod.m):
        one = mod.labels[:, i] == 1
        if max_log:
            out[..., i] = metric[..., one].max(-1) - metric[..., ~one].max(-1)
        else:
            out[..., i] = np.logaddexp.reduce(metric[..., one], -1) - np.logaddexp.reduce(metric[..., ~one], -1)
    return out.reshape(y.shape[:-1] + (y.shape[-1] * mod.m,))


# --------------------------------------------------------------------------- OFDM

def ofdm_modulate(cells, cp_len: int = 0) -> np.ndarray:
    """Grid (..., n_symbols, n_subcarriers) -> samples (..., n_symbols*(n_subcarriers+cp_len)).

    Unitary IDFT per OFDM symbol; the cyclic prefix copies the last ``cp_len`` samples.
    """
    cells = np.asarray(cells, dtype=complex)
    if not 0 <= cp_len <= cells.shape[-1]:
        raise ValueError(f"cp_len must lie in [0, {cells.shape[-1]}], got {cp_len}")
    t = np.fft.ifft(cells, axis=-1, norm="ortho")
    if cp_len:
        t = np.concatenate([t[..., -cp_len:], t], axis=-1)
    return t.reshape(t.shape[:-2] + (-1,))


def ofdm_demodulate(samples, n_subcarriers: int, n_symbols: int, cp_len: int = 0) -> np.ndarray:
    samples = np.asarray(samples, dtype=complex)
    if samples.shape[-1] != n_symbols * (n_subcarriers + cp_len):
        raise ValueError(f"expected {n_symbols * (n_subcarriers + cp_len)} samples, got {samples.shape[-1]}")
    t = samples.reshape(samples.shape[:-1] + (n_symbols, n_subcarriers + cp_len))[..., cp_len:]
    return np.fft.fft(t, axis=-1, norm="ortho")


def channel_frequency_response(taps, l_min: int, n_subcarriers: int) -> np.ndarray:
    """DFT of a tap vector (..., n_lags) on the subcarrier grid (negative lags wrap)."""
    taps = np.asarray(taps, dtype=complex)
    lags = l_min + np.arange(taps.shape[-1])
    k = np.arange(n_subcarriers)
    phase = np.exp(-2j * np.pi * np.outer(lags, k) / n_subcarriers)
    return taps @ phase


def pilot_symbol_indices(pattern: str, n_symbols: int) -> tuple:
    if pattern not in PILOT_PATTERNS:
        raise ValueError(f"unknown pilot pattern {pattern!r}")
    if pattern == "none":
        return ()
    idx = tuple(sorted({int(math.floor(i * n_symbols / 10 + 0.5)) for i in _PILOT_SYMBOLS_OF_TEN[pattern]}))
    need = len(_PILOT_SYMBOLS_OF_TEN[pattern])
    if n_symbols < need or len(idx) < need or idx[-1] >= n_symbols:
        raise ValueError(f"pattern {pattern} needs at least {need} OFDM symbols, grid has {n_symbols}")
    return idx


def build_pilot_pattern(pattern: str, n_subcarriers: int, n_symbols: int, seed: int = 0):
    """Return (mask, values), both shaped (n_symbols, n_subcarriers).

    1P/2P fill every subcarrier of one/two OFDM symbols, 1P2/2P2 every second
    (odd-indexed) subcarrier. Pilot values are seeded random QPSK.
    """
    mask = np.zeros((n_symbols, n_subcarriers), dtype=bool)
    for s in pilot_symbol_indices(pattern, n_symbols):
        if pattern.endswith("2") and pattern != "2P":
            mask[s, 1::2] = True
        else:
            mask[s, :] = True
    rng = np.random.default_rng(seed)
    values = np.zeros(mask.shape, dtype=complex)
    values[mask] = QPSK.points[rng.integers(0, 4, int(mask.sum()))]
    return mask, values


@dataclass(frozen=True, eq=False)
class FrameLayout:
    """OFDM resource grid of one transmitted block.

    ``n_data`` leading data cells (symbol-major order) carry the block; any
    remaining non-pilot cells carry random filler symbols.
    """

    n_subcarriers: int
    n_symbols: int
    cp_len: int
    pilot_mask: np.ndarray
    pilot_values: np.ndarray
    n_data: int

    @classmethod
    def for_block(cls, n_data: int, n_subcarriers: int, cp_len: int = 0, pilot_pattern: str = "none",
                  pilot_seed: int = 0):
        """Smallest grid holding ``n_data`` data cells plus the pilot pattern."""
        n_symbols = max(1, math.ceil(n_data / n_subcarriers))
        while True:
            try:
                mask, values = build_pilot_pattern(pilot_pattern, n_subcarriers, n_symbols, pilot_seed)
            except ValueError:
                if pilot_pattern not in PILOT_PATTERNS:
                    raise
                n_symbols += 1
                continue
            if mask.size - mask.sum() >= n_data:
                return cls(n_subcarriers, n_symbols, cp_len, mask, values, n_data)
            n_symbols += 1

    @property
    def shape(self):
        return (self.n_symbols, self.n_subcarriers)

    @property
    def n_samples(self) -> int:
        return self.n_symbols * (self.n_subcarriers + self.cp_len)

    @property
    def data_cells(self) -> np.ndarray:
        """Flat indices of the data cells, in block order."""
        return np.flatnonzero(~self.pilot_mask.ravel())[: self.n_data]

    def fill(self, data, rng=None, filler: Modulation = BPSK) -> np.ndarray:
        """Data symbols (..., n_data) -> grid (..., n_symbols, n_subcarriers)."""
        data = np.asarray(data, dtype=complex)
        grid = np.zeros(data.shape[:-1] + (self.pilot_mask.size,), dtype=complex)
        grid[..., self.pilot_mask.ravel()] = self.pilot_values[self.pilot_mask]
        free = np.flatnonzero(~self.pilot_mask.ravel())
        grid[..., free[: self.n_data]] = data
        spare = free[self.n_data:]
        if spare.size:
            rng = np.random.default_rng(rng)
            grid[..., spare] = filler.points[rng.integers(0, len(filler.points), data.shape[:-1] + spare.shape)]
        return grid.reshape(data.shape[:-1] + self.shape)

    def extract(self, grid) -> np.ndarray:
        grid = np.asarray(grid)
        return grid.reshape(grid.shape[:-2] + (-1,))[..., self.data_cells]


# --------------------------------------------------------------------------- single carrier

SINC_SPAN = 16
RX_BANDWIDTH_FACTOR = 1.2


def sinc_pulse(oversampling: int, span: int = SINC_SPAN, bandwidth_factor: float = 1.0) -> np.ndarray:
    """Hann-windowed sinc sampled at ``oversampling`` samples per symbol, +-``span`` symbols."""
    n = np.arange(-span * oversampling, span * oversampling + 1)
    t = n / oversampling
    window = 0.5 * (1 + np.cos(np.pi * n / (span * oversampling + 1)))
    return bandwidth_factor * np.sinc(bandwidth_factor * t) * window


def pulse_shape(symbols, oversampling: int = 4, span: int = SINC_SPAN) -> np.ndarray:
    """Upsample and sinc-filter. Output length ``len*os + 2*span*os`` (full convolution)."""
    symbols = np.asarray(symbols, dtype=complex)
    if oversampling < 1:
        raise ValueError("oversampling must be >= 1")
    if oversampling == 1:
        return symbols.copy()
    up = np.zeros(symbols.shape[:-1] + (symbols.shape[-1] * oversampling,), dtype=complex)
    up[..., ::oversampling] = symbols
    return _convolve_last(up, sinc_pulse(oversampling, span))


def matched_filter(samples, n_symbols: int, oversampling: int = 4, span: int = SINC_SPAN) -> np.ndarray:
    """Receive-filter ``pulse_shape`` output and sample at the symbol instants.

    The receive sinc is 20% wider than the transmit sinc so that the cascade
    stays Nyquist despite the window; white input noise of variance ``s2``
    per sample comes out with variance ``s2 * rx_noise_gain(os) / os``.
    """
    samples = np.asarray(samples, dtype=complex)
    if oversampling == 1:
        return samples[..., :n_symbols].copy()
    q = sinc_pulse(oversampling, span, RX_BANDWIDTH_FACTOR) / oversampling
    z = _convolve_last(samples, q)
    delay = 2 * span * oversampling
    return z[..., delay: delay + n_symbols * oversampling: oversampling]


def rx_noise_gain(oversampling: int, span: int = SINC_SPAN) -> float:
    """Noise power after ``matched_filter`` relative to ``n0`` when input noise is ``n0 * os`` per sample."""
    if oversampling == 1:
        return 1.0
    q = sinc_pulse(oversampling, span, RX_BANDWIDTH_FACTOR)
    return float(np.sum(q ** 2) / oversampling)


def _convolve_last(x, h):
    n = x.shape[-1] + h.size - 1
    nfft = 1 << (n - 1).bit_length()
    X = np.fft.fft(x, nfft, axis=-1)
    Hf = np.fft.fft(h, nfft)
    return np.fft.ifft(X * Hf, axis=-1)[..., :n]
