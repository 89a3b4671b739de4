"""Monte-Carlo BER/BLER/throughput evaluation."""
from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..baseline import classic_receive
from ..npd.decode import npd_decode_batched
from ..npd.model import embed, rate_recover
from ..polar import CodeDesign, encode, extract_payload
from .config import DECODERS, LinkConfig
from .dataset import snr_to_n0, transmit

log = logging.getLogger(__name__)

CSV_COLUMNS = ("snr_db", "blocks", "bit_errors", "block_errors", "ber", "bler", "throughput_mbps")


def throughput(bler: float, k: int, subcarrier_spacing: float, cp_seconds: float = 0.0) -> float:
    """(1 - BLER) k / (1/spacing + T_cp), in Mbit/s."""
    if not 0.0 <= bler <= 1.0:
        raise ValueError("bler must lie in [0, 1]")
    return (1.0 - bler) * k / (1.0 / subcarrier_spacing + cp_seconds) / 1e6


@dataclass(frozen=True)
class SimRecord:
    snr_db: float
    blocks: int
    bit_errors: int
    block_errors: int
    k: int
    throughput_mbps: float

    @property
    def ber(self) -> float:
        # an empty payload has no bits to get wrong
        return self.bit_errors / (self.blocks * self.k) if self.k and self.blocks else 0.0

    @property
    def bler(self) -> float:
        return self.block_errors / self.blocks if self.blocks else 0.0

    def row(self) -> dict:
        return {"snr_db": self.snr_db, "blocks": self.blocks, "bit_errors": self.bit_errors,
                "block_errors": self.block_errors, "ber": self.ber, "bler": self.bler,
                "throughput_mbps": self.throughput_mbps}


def decode_transmission(tx, link: LinkConfig, design: CodeDesign, decoder: str, params=None):
    if decoder == "npd":
        if params is None:
            raise ValueError("the npd decoder needs trained parameters")
        e = embed(params, tx.y, tx.n0[:, None])
        if link.puncture.P:
            e = rate_recover(e, link.puncture, params)
        return npd_decode_batched(params, e, design, link.list_size)
    if decoder == "classic":
        return classic_receive(tx, link, design, "ls")
    if decoder == "classic_pcsi":
        return classic_receive(tx, link, design, "perfect")
    raise ValueError(f"decoder must be one of {DECODERS}")


def simulate_batch(link, design, decoder, params, snr_db, size, seed_seq):
    """Errors of ``size`` blocks: (bit_errors, block_errors)."""
    rng = np.random.default_rng(seed_seq)
    payload = rng.integers(0, 2, (size, design.k), dtype=np.uint8)
    x = encode(payload, design)
    tx = transmit(link, x, snr_to_n0(snr_db), rng)
    u_hat = decode_transmission(tx, link, design, decoder, params)
    got, _ = extract_payload(u_hat, design)
    err = got != payload
    return int(err.sum()), int(err.any(axis=1).sum())


def _batch_job(args):
    return simulate_batch(*args)


def run_montecarlo(link: LinkConfig, decoder: str, design: CodeDesign, params=None, min_block_errors: int = 50,
                   max_blocks: int = 100_000, batch: int = 500, seed=None, workers: int = 1, snr_db=None):
    """One :class:`SimRecord` per SNR point.

    Batch ``b`` at SNR index ``s`` draws from ``SeedSequence(seed, spawn_key=(s, b))``
    and batches are reduced in index order, so records depend only on the
    seed, never on ``workers``. A point stops once ``min_block_errors`` is
    reached or ``max_blocks`` blocks were simulated.
    """
    if design.N != link.N:
        raise ValueError("design and link disagree on N")
    if decoder not in DECODERS:
        raise ValueError(f"decoder must be one of {DECODERS}")
    if decoder == "npd" and params is None:
        raise ValueError("the npd decoder needs trained parameters")
    seed = link.seed if seed is None else seed
    snrs = link.snr_db if snr_db is None else tuple(np.atleast_1d(snr_db))
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    records = []
    target = min_block_errors if min_block_errors > 0 else None  # 0: always run max_blocks
    try:
        for si, snr in enumerate(snrs):
            blocks = bit_err = blk_err = b = 0
            done = False
            while not done:
                sizes, planned = [], blocks
                for _ in range(workers):
                    if planned >= max_blocks:
                        break
                    sizes.append(min(batch, max_blocks - planned))
                    planned += sizes[-1]
                jobs = [(link, design, decoder, params, float(snr), sz,
                         np.random.SeedSequence(seed, spawn_key=(si, b + j))) for j, sz in enumerate(sizes)]
                results = list(pool.map(_batch_job, jobs)) if pool else [_batch_job(a) for a in jobs]
                # reduce in batch order; results past the stopping point are discarded
                for sz, (be, ke) in zip(sizes, results):
                    blocks += sz
                    bit_err += be
                    blk_err += ke
                    b += 1
                    done = blocks >= max_blocks or (target is not None and blk_err >= target)
                    if done:
                        break
            bler = blk_err / blocks
            rec = SimRecord(float(snr), blocks, bit_err, blk_err, design.k,
                            throughput(bler, design.k, link.subcarrier_spacing,
                                       link.cp_seconds if link.waveform == "ofdm" else 0.0))
            log.info("%s snr %.2f dB: blocks %d  ber %.3e  bler %.3e", decoder, snr, rec.blocks, rec.ber, rec.bler)
            records.append(rec)
    finally:
        if pool:
            pool.shutdown()
    return records


def write_records(path, records) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for r in records:
            w.writerow(r.row())


def read_records(path) -> list:
    with open(path, newline="") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]
