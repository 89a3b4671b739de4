from __future__ import annotations

import math
import time
import zlib

import numpy as np
import pytest

from npdcomm.cli import train_model
from npdcomm.harness.config import LinkConfig, RunConfig

ACCEPTANCE_LINES: list[str] = []

# AWGN learning run: N=64 BPSK, rate 1/2, trained at Eb/N0 = 4 dB
AWGN_EBN0_DB = 4.0
AWGN_ESN0_DB = AWGN_EBN0_DB + 10 * math.log10(0.5)
AWGN_LINK = LinkConfig(waveform="none", channel="awgn", modulation="BPSK", N=64, k=32, list_size=1,
                       train_snr_db=(AWGN_ESN0_DB, AWGN_ESN0_DB), snr_db=(AWGN_ESN0_DB,))
AWGN_RUN = RunConfig(d=16, h=64, batch_size=32, iterations=20_000, lr=1e-3)

# static 3-tap ISI over OFDM, no cyclic prefix during training
ISI_LINK = LinkConfig(waveform="ofdm", channel="static", static_taps=(1.0, 0.6, 0.3), modulation="BPSK", N=64, k=32,
                      list_size=1, n_subcarriers=8, pilot_pattern="1P", cp_len=0, train_snr_db=(0.0, 10.0))
ISI_RUN = RunConfig(d=16, h=64, batch_size=32, iterations=6_000, lr=1e-3)


def record(name: str, passed: bool, detail: str) -> str:
    line = f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line


@pytest.fixture(scope="session")
def awgn_training():
    t0 = time.perf_counter()
    res = train_model(AWGN_LINK, AWGN_RUN, seed=2024)
    return res, time.perf_counter() - t0


@pytest.fixture(scope="session")
def isi_training():
    t0 = time.perf_counter()
    res = train_model(ISI_LINK, ISI_RUN, seed=7)
    return res, time.perf_counter() - t0


@pytest.fixture
def rng(request):
    # stable per-test seed so failures reproduce
    return np.random.default_rng(zlib.crc32(request.node.name.encode()))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
