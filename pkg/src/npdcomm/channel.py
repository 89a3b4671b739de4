"""Time-varying multipath fading channels.

Discrete-time taps follow ``h_l[t] = sum_p a_p(t/W) sinc(l - W tau_p)`` and the
received signal is ``y[t] = sum_l s[t - l] h_l[t] + w[t]``.  Path gains are
Rayleigh processes with a Jakes Doppler spectrum (sum of sinusoids).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0
SINC_MARGIN = 4
N_SINUSOIDS = 32

_PROFILE_FILES = {"TDL-A": "tdl_a.txt", "TDL-B": "tdl_b.txt", "TDL-C": "tdl_c.txt"}


@dataclass(frozen=True, eq=False)
class TdlProfile:
    name: str
    normalized_delays: np.ndarray
    powers_db: np.ndarray
    delay_spread: float  # seconds

    @property
    def delays(self) -> np.ndarray:
        return self.normalized_delays * self.delay_spread

    @property
    def powers(self) -> np.ndarray:
        """Linear path powers normalized to unit sum."""
        p = 10.0 ** (self.powers_db / 10.0)
        return p / p.sum()


def read_profile_file(path, delay_spread: float) -> TdlProfile:
    """Parse a profile file: a name line, then ``normalized_delay power_db`` rows.

    ``#`` starts a comment. Rows are sorted by delay on load.
    """
    lines = [ln.split("#", 1)[0].strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ValueError(f"{path}: empty profile file")
    name = lines[0]
    rows = np.array([[float(v) for v in ln.split()] for ln in lines[1:]])
    if rows.ndim != 2 or rows.shape[1] != 2:
        raise ValueError(f"{path}: expected two columns per row")
    if np.any(rows[:, 0] < 0):
        raise ValueError(f"{path}: negative delay")
    order = np.argsort(rows[:, 0], kind="stable")
    return TdlProfile(name, rows[order, 0], rows[order, 1], float(delay_spread))


def load_tdl_profile(name: str, delay_spread: float) -> TdlProfile:
    key = name.upper()
    if key not in _PROFILE_FILES:
        raise ValueError(f"unknown TDL profile {name!r}; known: {sorted(_PROFILE_FILES)}")
    ref = resources.files("npdcomm") / "data" / _PROFILE_FILES[key]
    with resources.as_file(ref) as p:
        return read_profile_file(p, delay_spread)


def single_path_profile(delay: float = 0.0) -> TdlProfile:
    return TdlProfile("single", np.array([0.0]), np.array([0.0]), float(delay))


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """Taps ``h_l[t]`` stored as ``taps[..., l - l_min, t]``."""

    taps: np.ndarray
    l_min: int
    bandwidth: float = 1.0

    @property
    def l_max(self) -> int:
        return self.l_min + self.taps.shape[-2] - 1

    @property
    def n_samples(self) -> int:
        return self.taps.shape[-1]

    def mean_taps(self, start: int, stop: int) -> np.ndarray:
        return self.taps[..., start:stop].mean(axis=-1)


def doppler_frequency(velocity: float, carrier_frequency: float = 3.5e9) -> float:
    return velocity * carrier_frequency / SPEED_OF_LIGHT


def jakes_gains(n_paths: int, times, doppler: float, rng, n_sinusoids: int = N_SINUSOIDS) -> np.ndarray:
    """Unit-power complex gains (n_paths, len(times)) with Jakes autocorrelation J0(2 pi f_D tau)."""
    times = np.asarray(times, dtype=float)
    phases = rng.uniform(0, 2 * np.pi, (n_paths, n_sinusoids))
    if doppler == 0:
        g = np.exp(1j * phases).sum(axis=1) / math.sqrt(n_sinusoids)
        return np.repeat(g[:, None], times.size, axis=1)
    offset = rng.uniform(0, 2 * np.pi / n_sinusoids, (n_paths, 1))
    angles = offset + 2 * np.pi * np.arange(n_sinusoids) / n_sinusoids
    freqs = 2 * np.pi * doppler * np.cos(angles)
    arg = freqs[:, :, None] * times + phases[:, :, None]
    return np.exp(1j * arg).sum(axis=1) / math.sqrt(n_sinusoids)


def sinc_kernel(delay_samples: np.ndarray, l_min: int, l_max: int) -> np.ndarray:
    """Truncated sinc interpolation weights (n_paths, n_lags), each row at unit energy."""
    lags = np.arange(l_min, l_max + 1)
    k = np.sinc(lags[None, :] - np.asarray(delay_samples, float)[:, None])
    return k / np.linalg.norm(k, axis=1, keepdims=True)


def lag_range(profile: TdlProfile, bandwidth: float) -> tuple[int, int]:
    tau_max = float(np.max(profile.delays)) if profile.delays.size else 0.0
    return -SINC_MARGIN, int(math.ceil(bandwidth * tau_max - 1e-12)) + SINC_MARGIN


def realize_tdl_taps(profile: TdlProfile, n_samples: int, bandwidth: float, velocity: float = 0.0,
                     rng=None, carrier_frequency: float = 3.5e9) -> ChannelRealization:
    """Draw one realization of the discrete-time taps over ``n_samples`` samples."""
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    if velocity < 0:
        raise ValueError("velocity must be nonnegative")
    rng = np.random.default_rng(rng)
    l_min, l_max = lag_range(profile, bandwidth)
    times = np.arange(n_samples) / bandwidth
    gains = jakes_gains(len(profile.powers), times, doppler_frequency(velocity, carrier_frequency), rng)
    gains *= np.sqrt(profile.powers)[:, None]
    kernel = sinc_kernel(bandwidth * profile.delays, l_min, l_max)
    taps = kernel.T @ gains  # (n_lags, T)
    return ChannelRealization(taps, l_min, bandwidth)


def static_channel(taps, n_samples: int, l_min: int = 0) -> ChannelRealization:
    """Time-invariant channel with the given tap vector starting at lag ``l_min``."""
    taps = np.asarray(taps, dtype=complex)
    return ChannelRealization(np.repeat(taps[:, None], n_samples, axis=1), l_min)


def apply_channel(s, ch: ChannelRealization, n0: float = 0.0, rng=None) -> np.ndarray:
    """Time-varying convolution plus CN(0, n0) noise.

    Zero prehistory, output truncated to the input length; taps with negative
    lag read ahead and see zeros past the end. ``s`` may carry leading batch
    axes that broadcast against ``ch.taps[..., l, t]``; ``n0`` may be a scalar
    or broadcast against the leading axes.
    """
    s = np.asarray(s, dtype=complex)
    T = s.shape[-1]
    if ch.n_samples < T:
        raise ValueError("channel realization shorter than the signal")
    taps = ch.taps[..., :T]
    y = np.zeros(np.broadcast_shapes(s.shape, taps.shape[:-2] + (T,)), dtype=complex)
    for i in range(taps.shape[-2]):
        lag = ch.l_min + i
        shifted = np.zeros_like(s)
        if lag >= 0:
            shifted[..., lag:] = s[..., : T - lag] if lag < T else 0
        else:
            shifted[..., : T + lag] = s[..., -lag:]
        y = y + taps[..., i, :] * shifted
    return y + awgn(y.shape, n0, rng)


def awgn(shape, n0, rng=None) -> np.ndarray:
    """Circularly symmetric complex Gaussian noise with variance ``n0`` per sample."""
    n0 = np.asarray(n0, dtype=float)
    if np.all(n0 == 0):
        return np.zeros(shape, dtype=complex)
    rng = np.random.default_rng(rng)
    w = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    scale = np.sqrt(n0 / 2.0)
    if scale.ndim:
        scale = scale.reshape(scale.shape + (1,) * (len(shape) - scale.ndim))
    return w * scale


def rapp(s, p: float = 2.0, a_sat: float = 1.0) -> np.ndarray:
    """RAPP AM/AM compression ``A / (1 + (A/A_sat)^(2p))^(1/(2p))``; phase preserved."""
    if p <= 0:
        raise ValueError("smoothness p must be positive")
    s = np.asarray(s, dtype=complex)
    a = np.abs(s)
    g = 1.0 / (1.0 + (a / a_sat) ** (2 * p)) ** (1.0 / (2 * p))
    return s * g


def rapp_nonlinearity(s, p: float = 2.0, ibo_db: float = 0.0) -> np.ndarray:
    """RAPP amplifier driven at input back-off ``ibo_db`` from saturation.

    Saturation amplitude is set so that ``A_sat**2 = mean|s|**2 * 10**(ibo_db/10)``,
    with the mean taken over the last axis.
    """
    s = np.asarray(s, dtype=complex)
    pin = np.mean(np.abs(s) ** 2, axis=-1, keepdims=True)
    a_sat = np.sqrt(pin * 10.0 ** (ibo_db / 10.0))
    a_sat = np.where(a_sat > 0, a_sat, 1.0)
    return rapp(s, p, a_sat)
