"""Command-line entry points: train, design, simulate, dataset, selftest."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .harness.checkpoint import load_checkpoint, save_checkpoint
from .harness.config import DECODERS, LinkConfig, RunConfig, parse_config
from .harness.dataset import dataset_stream, generate_dataset, snr_to_n0
from .harness.montecarlo import run_montecarlo, write_records
from .npd import NpdParams, TrainConfig, design_code, train
from .polar import CodeDesign, mc_design

log = logging.getLogger("npdcomm")


def _load(args):
    if args.config:
        return parse_config(args.config, {"seed": args.seed})
    link, run = LinkConfig(), RunConfig()
    return (link.replace(seed=args.seed) if args.seed is not None else link), run


def train_model(link: LinkConfig, run: RunConfig, seed: int):
    """Initialize from ``seed`` and train on fresh batches of ``link`` (per-block SNR from ``train_snr_db``)."""
    init_seed, data_seed = np.random.SeedSequence(seed).spawn(2)
    params = NpdParams.init(run.d, run.h, link.m, run.hidden_layers, run.activation, init_seed,
                            np.dtype(run.dtype))
    cfg = TrainConfig(run.iterations, run.batch_size, run.lr, log_every=max(1, run.iterations // 20))
    return train(params, dataset_stream(link, run.batch_size, data_seed), cfg)


def cmd_train(args):
    link, run = _load(args)
    res = train_model(link, run, link.seed)
    save_checkpoint(res.params, args.out)
    if args.trace:
        np.savetxt(args.trace, np.column_stack([res.loss, res.loss_const, res.loss_channel]), delimiter=",",
                   header="loss,loss_const,loss_channel", comments="", fmt="%.10g")
    print(f"trained {run.iterations} iterations in {res.seconds:.1f} s; final loss {res.loss[-1]:.4f} "
          f"(channel {res.loss_channel[-1]:.4f}); saved {args.out}")
    return 0


def cmd_design(args):
    link, run = _load(args)
    if args.checkpoint:
        params = load_checkpoint(args.checkpoint)
        design = design_code(params, link.k, link, run.design_blocks, seed=link.seed)
    else:
        if link.channel != "awgn" or link.modulation.upper() != "BPSK":
            raise SystemExit("classical design without a checkpoint supports BPSK over AWGN only")
        design = mc_design(link.N, link.k + link.crc_len, float(snr_to_n0(link.design_snr)), run.design_blocks,
                           link.seed, link.crc_len, link.frozen_seed)
    Path(args.out).write_text(json.dumps(design.to_dict(), indent=1))
    print(f"information set ({design.K} indices): {list(design.info_set)}")
    return 0


def cmd_simulate(args):
    link, run = _load(args)
    decoder = args.decoder or run.decoder
    design = CodeDesign.from_dict(json.loads(Path(args.design).read_text()))
    params = load_checkpoint(args.checkpoint) if args.checkpoint else None
    records = run_montecarlo(link, decoder, design, params, run.min_block_errors, run.max_blocks, run.mc_batch,
                             link.seed, run.workers)
    write_records(args.out, records)
    for r in records:
        print(f"{r.snr_db:7.2f} dB  blocks {r.blocks:7d}  ber {r.ber:.3e}  bler {r.bler:.3e}  "
              f"throughput {r.throughput_mbps:.4f} Mbit/s")
    return 0


def cmd_dataset(args):
    link, _ = _load(args)
    ds = generate_dataset(link, args.blocks, link.seed, args.snr_db)
    np.savez_compressed(args.out, x=ds.x, y=ds.y, n0=ds.n0)
    print(f"wrote {len(ds)} blocks to {args.out}")
    return 0


def cmd_selftest(args):
    from .selftest import run_selftest

    return 0 if run_selftest(seed=args.seed or 0) else 1


def build_parser():
    ap = argparse.ArgumentParser(prog="npdcomm", description="Neural polar decoder link-level toolkit")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--seed", type=int, help="root seed override")
        p.set_defaults(func=func)
        return p

    p = add("train", cmd_train, "train an NPD and write a checkpoint")
    p.add_argument("--out", default="npd.npdc")
    p.add_argument("--trace", help="CSV file for the loss trace")
    p = add("design", cmd_design, "choose the information set (NPD MI ranking, or classical without checkpoint)")
    p.add_argument("--checkpoint")
    p.add_argument("--out", default="design.json")
    p = add("simulate", cmd_simulate, "Monte-Carlo BER/BLER/throughput sweep")
    p.add_argument("--design", required=True)
    p.add_argument("--checkpoint")
    p.add_argument("--decoder", choices=DECODERS)
    p.add_argument("--out", default="results.csv")
    p = add("dataset", cmd_dataset, "write simulated (x, y, N0) blocks to an .npz file")
    p.add_argument("--blocks", type=int, default=1000)
    p.add_argument("--snr-db", type=float, help="fixed SNR instead of the training range")
    p.add_argument("--out", default="dataset.npz")
    add("selftest", cmd_selftest, "fast internal consistency checks")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
