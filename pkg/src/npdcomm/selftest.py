"""Fast consistency checks runnable from the command line."""
from __future__ import annotations

import numpy as np

from .harness.checkpoint import decode_checkpoint, encode_checkpoint
from .harness.montecarlo import throughput
from .nn import numerical_gradient, relative_error
from .npd import NpdParams, classical_kernels, nsc_loss, sc_decode_embeddings
from .polar import (CodeDesign, bit_reversal_perm, crc_attach, crc_check, exact_llr_oracle, polar_transform,
                    puncture_set, sc_decode)
from .waveform import ofdm_demodulate, ofdm_modulate


def _checks(rng):
    yield "bit reversal n=3", list(bit_reversal_perm(3) + 1) == [1, 5, 3, 7, 2, 6, 4, 8]
    yield "puncture (8,3,1)", sorted(puncture_set(8, 3, 1) + 1) == [1, 3, 5]
    yield "throughput plateau", abs(throughput(0, 32, 15e3, 0) - 0.48) < 1e-4

    u = rng.integers(0, 2, (10, 64))
    yield "transform involution", np.array_equal(polar_transform(polar_transform(u)), u)

    b = rng.integers(0, 2, 100)
    w = crc_attach(b, 11)
    w2 = w.copy()
    w2[17] ^= 1
    yield "crc round trip", bool(crc_check(w, 11)) and not bool(crc_check(w2, 11))

    design = CodeDesign.from_info_set(8, [3, 5, 6, 7], frozen_seed=1)
    sigma2 = 0.8
    worst = 0.0
    for _ in range(10):
        x = polar_transform(rng.integers(0, 2, 8))
        y = (1 - 2.0 * x) + rng.normal(scale=np.sqrt(sigma2), size=8)
        llr = -2 * y / sigma2

        def loglik(yy, X):
            return -((yy - (1 - 2.0 * X)) ** 2) / (2 * sigma2)

        _, d_sc = sc_decode(llr, design)
        _, d_ex = exact_llr_oracle(y, loglik, design)
        worst = max(worst, float(np.max(np.abs(d_sc - d_ex))))
    yield "SC vs exhaustive oracle (N=8)", worst < 1e-9

    llr = rng.normal(scale=3, size=(50, 64))
    design = CodeDesign.from_info_set(64, rng.permutation(64)[:32], frozen_seed=0)
    a = sc_decode(llr, design)[0]
    b2 = sc_decode_embeddings(np.clip(llr, -40, 40)[..., None], design, classical_kernels())[0]
    yield "classical kernels through embedding SC", np.array_equal(a, b2)

    grid = rng.normal(size=(3, 16)) + 1j * rng.normal(size=(3, 16))
    yield "OFDM round trip", np.allclose(ofdm_demodulate(ofdm_modulate(grid, 4), 16, 3, 4), grid, atol=1e-12)

    p = NpdParams.init(4, 8, seed=int(rng.integers(1 << 30)))
    e0 = rng.normal(size=(2, 8, 4))
    x = rng.integers(0, 2, (2, 8))
    res = nsc_loss(p, e0, x)
    num = numerical_gradient(lambda: nsc_loss(p, e0, x, need_grad=False).loss, p.H.params)
    yield "NSC loss gradient (H)", max(relative_error(g, n) for g, n in zip(res.grads["H"], num)) < 1e-4

    yield "checkpoint round trip", decode_checkpoint(encode_checkpoint(p)).equals(p)


def run_selftest(seed: int = 0) -> bool:
    rng = np.random.default_rng(seed)
    ok = True
    for name, passed in _checks(rng):
        print(f"[{'PASS' if passed else 'FAIL'}] {name}")
        ok &= bool(passed)
    return ok
