"""Link and run configuration, parsed from flat ``key = value`` files."""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from ..polar import PunctureConfig, log2_exact
from ..waveform import PILOT_PATTERNS, FrameLayout, get_modulation

log = logging.getLogger(__name__)

WAVEFORMS = ("ofdm", "single_carrier", "none")
CHANNELS = ("awgn", "tdl", "static")
DECODERS = ("npd", "classic", "classic_pcsi")


@dataclass(frozen=True)
class LinkConfig:
    """Everything needed to simulate one transmitted block and decode it.

    ``snr_db`` is the evaluation sweep (Es/N0 per data symbol). Training and
    dataset generation draw a per-block SNR uniformly from ``train_snr_db``
    unless a fixed value is requested.
    """

    waveform: str = "ofdm"
    modulation: str = "BPSK"
    N: int = 64
    N_r: int = 0  # 0 means no puncturing
    k: int = 32
    crc_len: int = 0
    list_size: int = 8
    channel: str = "awgn"
    tdl_profile: str = "TDL-A"
    delay_spread: float = 300e-9
    velocity_min: float = 0.0
    velocity_max: float = 0.0
    carrier_frequency: float = 3.5e9
    static_taps: tuple = (1.0,)
    snr_db: tuple = (0.0,)
    train_snr_db: tuple = (-5.0, 15.0)
    design_snr_db: float = math.nan  # nan: middle of train_snr_db
    pilot_pattern: str = "none"
    cp_len: int = 0
    n_subcarriers: int = 32
    subcarrier_spacing: float = 15e3
    oversampling: int = 4
    rapp: bool = False
    rapp_p: float = 2.0
    rapp_ibo_db: float = 0.0
    seed: int = 0
    frozen_seed: int = 0
    pilot_seed: int = 0

    def __post_init__(self):
        if self.N_r == 0:
            object.__setattr__(self, "N_r", self.N)
        log2_exact(self.N)
        if self.waveform not in WAVEFORMS:
            raise ValueError(f"waveform must be one of {WAVEFORMS}")
        if self.channel not in CHANNELS:
            raise ValueError(f"channel must be one of {CHANNELS}")
        if self.pilot_pattern not in PILOT_PATTERNS:
            raise ValueError(f"pilot_pattern must be one of {PILOT_PATTERNS}")
        m = get_modulation(self.modulation).m
        if self.k < 0 or self.k + self.crc_len > self.N:
            raise ValueError("need 0 <= k and k + crc_len <= N")
        if not 1 <= self.N_r <= self.N or self.N_r % m or self.N % m:
            raise ValueError("need 1 <= N_r <= N with N and N_r multiples of the bits per symbol")
        if not self.snr_db:
            raise ValueError("snr_db list must be nonempty")
        if len(self.train_snr_db) != 2 or self.train_snr_db[0] > self.train_snr_db[1]:
            raise ValueError("train_snr_db must be an increasing pair")
        if self.velocity_min < 0 or self.velocity_max < self.velocity_min:
            raise ValueError("need 0 <= velocity_min <= velocity_max")
        if self.list_size < 1 or self.cp_len < 0 or self.n_subcarriers < 1 or self.oversampling < 1:
            raise ValueError("list_size, n_subcarriers, oversampling must be positive and cp_len nonnegative")
        if self.cp_len > self.n_subcarriers:
            raise ValueError("cp_len cannot exceed n_subcarriers")
        if self.waveform == "none" and self.channel != "awgn":
            raise ValueError("waveform 'none' supports only the awgn channel")
        if self.channel == "static" and not np.any(np.abs(self.static_taps) > 0):
            raise ValueError("static_taps must not be all zero")

    def replace(self, **kw) -> "LinkConfig":
        return dataclasses.replace(self, **kw)

    @property
    def mod(self):
        return get_modulation(self.modulation)

    @property
    def m(self) -> int:
        return self.mod.m

    @property
    def n_data_symbols(self) -> int:
        return self.N_r // self.m

    @property
    def puncture(self) -> PunctureConfig:
        return PunctureConfig(self.N, self.N_r, self.m)

    @property
    def rate(self) -> float:
        return self.k / self.N_r

    @property
    def layout(self) -> FrameLayout:
        return FrameLayout.for_block(self.n_data_symbols, self.n_subcarriers, self.cp_len, self.pilot_pattern,
                                     self.pilot_seed)

    @property
    def bandwidth(self) -> float:
        """Symbol-rate bandwidth W = n_subcarriers * subcarrier spacing."""
        return self.n_subcarriers * self.subcarrier_spacing

    @property
    def cp_seconds(self) -> float:
        return self.cp_len / self.bandwidth

    @property
    def design_snr(self) -> float:
        if math.isnan(self.design_snr_db):
            return 0.5 * (self.train_snr_db[0] + self.train_snr_db[1])
        return self.design_snr_db

    @property
    def normalized_taps(self) -> np.ndarray:
        t = np.asarray(self.static_taps, dtype=complex)
        return t / np.linalg.norm(t)


@dataclass(frozen=True)
class RunConfig:
    """Model, training and Monte-Carlo settings."""

    d: int = 16
    h: int = 64
    hidden_layers: int = 1
    activation: str = "elu"
    dtype: str = "float32"  # training precision; gradient checks use float64 directly
    iterations: int = 1000
    batch_size: int = 32
    lr: float = 1e-3
    design_blocks: int = 2000
    min_block_errors: int = 50
    max_blocks: int = 100_000
    mc_batch: int = 500
    workers: int = 1
    decoder: str = "npd"

    def __post_init__(self):
        if min(self.d, self.h, self.hidden_layers, self.iterations, self.batch_size, self.design_blocks,
               self.mc_batch, self.workers, self.max_blocks) < 1:
            raise ValueError("sizes and counts must be positive")
        if self.min_block_errors < 0:
            raise ValueError("min_block_errors must be nonnegative")
        if self.dtype not in ("float32", "float64"):
            raise ValueError("dtype must be float32 or float64")
        if self.decoder not in DECODERS:
            raise ValueError(f"decoder must be one of {DECODERS}")


def expand_range(text: str) -> list:
    """``"a:step:b"`` -> inclusive arithmetic sequence; plain numbers pass through."""
    parts = text.replace("\u2212", "-").split(":")
    if len(parts) == 1:
        return [float(text)]
    if len(parts) != 3:
        raise ValueError(f"bad range {text!r}; use start:step:stop")
    a, s, b = (float(p) for p in parts)
    if s == 0 or (b - a) / s < 0:
        raise ValueError(f"bad range {text!r}")
    count = int(math.floor((b - a) / s + 1e-9)) + 1
    return [round(a + i * s, 12) for i in range(count)]


def _parse_list(text: str) -> tuple:
    out = []
    for item in text.replace(" ", "").split(","):
        if item:
            out.extend(expand_range(item))
    return tuple(out)


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _convert(f: dataclasses.Field, text: str):
    default = f.default
    if isinstance(default, bool):
        return _parse_bool(text)
    if isinstance(default, int):
        v = float(text)
        if v != int(v):
            raise ValueError(f"{f.name} must be an integer")
        return int(v)
    if isinstance(default, float):
        return float(text)
    if isinstance(default, tuple):
        return _parse_list(text)
    return text.strip()


_LINK_FIELDS = {f.name: f for f in fields(LinkConfig)}
_RUN_FIELDS = {f.name: f for f in fields(RunConfig)}


def parse_config_text(text: str, source: str = "<config>", overrides: dict | None = None):
    """Parse ``key = value`` lines into (LinkConfig, RunConfig)."""
    link_kw, run_kw = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in _LINK_FIELDS:
            target, fld = link_kw, _LINK_FIELDS[key]
        elif key in _RUN_FIELDS:
            target, fld = run_kw, _RUN_FIELDS[key]
        else:
            raise ValueError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            target[key] = _convert(fld, value)
        except ValueError as exc:
            raise ValueError(f"{source}:{lineno}: invalid value for {key!r}: {exc}") from None
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        (link_kw if key in _LINK_FIELDS else run_kw)[key] = value
    link, run = LinkConfig(**link_kw), RunConfig(**run_kw)
    for name, cfg in (("link", link), ("run", run)):
        for f in fields(cfg):
            log.info("config %s.%s = %r", name, f.name, getattr(cfg, f.name))
    return link, run


def parse_config(path, overrides: dict | None = None):
    path = Path(path)
    return parse_config_text(path.read_text(), str(path), overrides)


def format_config(link: LinkConfig, run: RunConfig | None = None) -> str:
    """Render configs back to the file format (round-trips through ``parse_config_text``)."""
    lines = []
    for cfg in (link, run) if run is not None else (link,):
        for f in fields(cfg):
            v = getattr(cfg, f.name)
            if isinstance(v, tuple):
                v = ", ".join(repr(float(np.real(t))) for t in v)
            lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"
