"""Classical polar code machinery.

Sign convention: every LLR in this package is ``log P(bit=1) / P(bit=0)``.
With that convention the check-node kernel carries a leading minus sign and
the hard decision is ``1 if l > 0 else 0``. Mixing in the more common
``P(0)/P(1)`` convention silently flips every decision, so be careful when
feeding LLRs from elsewhere.

Indices are 0-based throughout the Python API.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

LLR_CLIP = 40.0

# Generator polynomials, MSB (x^r) first.
CRC_POLYNOMIALS = {
    6: 0b1100001,  # x^6 + x^5 + 1
    11: 0b111000100001,  # x^11 + x^10 + x^9 + x^5 + 1
    16: 0x11021,  # x^16 + x^12 + x^5 + 1
}


def log2_exact(N: int) -> int:
    """Return n with 2**n == N, raising ValueError otherwise."""
    N = int(N)
    if N < 1 or N & (N - 1):
        raise ValueError(f"length {N} is not a power of two")
    return N.bit_length() - 1


def bit_reversal_perm(n: int) -> np.ndarray:
    """Bit-reversal index map of length 2**n (an involution)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    idx = np.arange(1 << n)
    rev = np.zeros_like(idx)
    for b in range(n):
        rev |= ((idx >> b) & 1) << (n - 1 - b)
    return rev


def polar_transform(u, include_bit_reversal: bool = True) -> np.ndarray:
    """Compute ``u @ G_N`` over GF(2) along the last axis.

    ``G_N = B_N F^{(x)n}`` when ``include_bit_reversal`` is set, otherwise the
    plain Kronecker power. Both variants are involutions.
    """
    u = np.asarray(u, dtype=np.uint8)
    N = u.shape[-1]
    n = log2_exact(N)
    lead = u.shape[:-1]
    x = u[..., bit_reversal_perm(n)] if include_bit_reversal else u.copy()
    s = 1
    while s < N:
        x = x.reshape(*lead, N // (2 * s), 2, s)
        x[..., 0, :] ^= x[..., 1, :]
        s *= 2
    return x.reshape(*lead, N)


@lru_cache(maxsize=64)
def _crc_matrix(k: int, crc_len: int) -> np.ndarray:
    poly = CRC_POLYNOMIALS[crc_len]
    mask = (1 << crc_len) - 1
    # rows[i] = x^(crc_len + k - 1 - i) mod g, built from the last row upward
    rows = np.zeros((k, crc_len), dtype=np.uint8)
    rem = poly & mask  # x^crc_len mod g
    for i in range(k - 1, -1, -1):
        rows[i] = [(rem >> (crc_len - 1 - j)) & 1 for j in range(crc_len)]
        carry = rem >> (crc_len - 1)
        rem = (rem << 1) & mask
        if carry:
            rem ^= poly & mask
    return rows


def crc_parity(bits, crc_len: int) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint8)
    if crc_len == 0:
        return np.zeros(bits.shape[:-1] + (0,), dtype=np.uint8)
    if crc_len not in CRC_POLYNOMIALS:
        raise ValueError(f"no CRC polynomial of length {crc_len}")
    M = _crc_matrix(bits.shape[-1], crc_len)
    return ((bits.astype(np.int64) @ M) & 1).astype(np.uint8)


def crc_attach(bits, crc_len: int = 11) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint8)
    return np.concatenate([bits, crc_parity(bits, crc_len)], axis=-1)


def crc_check(word, crc_len: int = 11):
    """True where the trailing ``crc_len`` bits match the parity of the rest."""
    word = np.asarray(word, dtype=np.uint8)
    if crc_len == 0:
        return np.ones(word.shape[:-1], dtype=bool)
    if word.shape[-1] <= crc_len:
        raise ValueError("word shorter than the CRC")
    parity = crc_parity(word[..., :-crc_len], crc_len)
    return np.all(parity == word[..., -crc_len:], axis=-1)


def puncture_set(N: int, P: int, m: int = 1) -> np.ndarray:
    """Punctured bit positions from the bit-reversal order.

    For ``m == 1`` this is the first ``P`` entries of the bit-reversal
    permutation. For ``m > 1`` the first ``P // m`` entries pick bit positions
    whose whole m-bit symbols are punctured.
    """
    n = log2_exact(N)
    if not 0 <= P < N:
        raise ValueError(f"need 0 <= P < N, got P={P}, N={N}")
    if m < 1:
        raise ValueError("m must be positive")
    order = bit_reversal_perm(n)
    if m == 1:
        return order[:P].copy()
    if P % m:
        raise ValueError(f"P={P} is not a multiple of m={m}")
    symbols = order[: P // m] // m
    return (symbols[:, None] * m + np.arange(m)).ravel()


@dataclass(frozen=True)
class PunctureConfig:
    N: int
    N_r: int
    m: int = 1
    positions: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.N_r > self.N or self.N_r < 1:
            raise ValueError("need 1 <= N_r <= N")
        object.__setattr__(self, "positions", puncture_set(self.N, self.N - self.N_r, self.m))

    @property
    def P(self) -> int:
        return self.N - self.N_r

    @property
    def kept(self) -> np.ndarray:
        mask = np.ones(self.N, dtype=bool)
        mask[self.positions] = False
        return np.flatnonzero(mask)

    def puncture(self, x) -> np.ndarray:
        return np.asarray(x)[..., self.kept]

    def recover_llrs(self, llrs) -> np.ndarray:
        """Place received LLRs at kept positions; punctured ones become 0."""
        llrs = np.asarray(llrs, dtype=float)
        out = np.zeros(llrs.shape[:-1] + (self.N,))
        out[..., self.kept] = llrs
        return out


@dataclass(frozen=True, eq=False)
class CodeDesign:
    """Information/frozen split of a length-2**n polar code.

    ``frozen_values`` holds 0/1 at frozen positions and 0.5 at information
    positions. ``info_set`` includes the CRC positions when ``crc_len > 0``;
    the payload size is ``len(info_set) - crc_len``.
    """

    n: int
    info_set: tuple
    frozen_values: np.ndarray
    crc_len: int = 0
    include_bit_reversal: bool = True

    def __post_init__(self):
        N = 1 << self.n
        info = tuple(sorted(int(i) for i in self.info_set))
        if len(set(info)) != len(info) or (info and (info[0] < 0 or info[-1] >= N)):
            raise ValueError("info_set must hold distinct indices in [0, N)")
        fv = np.asarray(self.frozen_values, dtype=float)
        if fv.shape != (N,):
            raise ValueError("frozen_values must have length N")
        is_info = np.zeros(N, dtype=bool)
        is_info[list(info)] = True
        if not np.all((fv == 0.5) == is_info):
            raise ValueError("frozen_values must be 0.5 exactly on the info set")
        if not np.all(np.isin(fv[~is_info], (0.0, 1.0))):
            raise ValueError("frozen values must be 0 or 1")
        if self.crc_len > len(info):
            raise ValueError("CRC longer than the information set")
        fv.setflags(write=False)
        object.__setattr__(self, "info_set", info)
        object.__setattr__(self, "frozen_values", fv)

    @classmethod
    def from_info_set(cls, N, info_set, crc_len=0, frozen_seed=0, include_bit_reversal=True):
        """Build a design; frozen bits are pseudorandom from ``frozen_seed`` or all zero if None."""
        n = log2_exact(N)
        if frozen_seed is None:
            fv = np.zeros(N)
        else:
            fv = np.random.default_rng(frozen_seed).integers(0, 2, N).astype(float)
        fv[list(info_set)] = 0.5
        return cls(n, tuple(info_set), fv, crc_len, include_bit_reversal)

    @property
    def N(self) -> int:
        return 1 << self.n

    @property
    def K(self) -> int:
        return len(self.info_set)

    @property
    def k(self) -> int:
        return self.K - self.crc_len

    @property
    def info_mask(self) -> np.ndarray:
        return self.frozen_values == 0.5

    @property
    def frozen_set(self) -> np.ndarray:
        return np.flatnonzero(~self.info_mask)

    def with_crc(self, crc_len):
        return CodeDesign(self.n, self.info_set, self.frozen_values, crc_len, self.include_bit_reversal)

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "info_set": list(self.info_set),
            "frozen_values": [int(v) if v != 0.5 else 0.5 for v in self.frozen_values],
            "crc_len": self.crc_len,
            "include_bit_reversal": self.include_bit_reversal,
        }

    @classmethod
    def from_dict(cls, d: dict):
        return cls(log2_exact(d["N"]), tuple(d["info_set"]), np.asarray(d["frozen_values"], float),
                   int(d.get("crc_len", 0)), bool(d.get("include_bit_reversal", True)))


def encode(payload, design: CodeDesign) -> np.ndarray:
    """Payload bits (..., k) -> codeword x (..., N), attaching the CRC first."""
    payload = np.asarray(payload, dtype=np.uint8)
    if payload.shape[-1] != design.k:
        raise ValueError(f"payload has {payload.shape[-1]} bits, design expects {design.k}")
    word = crc_attach(payload, design.crc_len)
    fv = design.frozen_values
    u = np.broadcast_to(np.where(fv == 0.5, 0, fv).astype(np.uint8), word.shape[:-1] + (design.N,)).copy()
    u[..., list(design.info_set)] = word
    return polar_transform(u, design.include_bit_reversal)


def extract_payload(u_hat, design: CodeDesign):
    """Split decoded u (..., N) into (payload, crc_ok)."""
    word = np.asarray(u_hat)[..., list(design.info_set)]
    ok = crc_check(word, design.crc_len) if design.crc_len else np.ones(word.shape[:-1], bool)
    return word[..., : design.k], ok


# --------------------------------------------------------------------------- kernels

def check_node(e1, e2):
    """-2 atanh(tanh(e1/2) tanh(e2/2)), evaluated without overflow."""
    a = np.clip(e1, -LLR_CLIP, LLR_CLIP)
    b = np.clip(e2, -LLR_CLIP, LLR_CLIP)
    core = np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))
    corr = np.log1p(np.exp(-np.abs(a + b))) - np.log1p(np.exp(-np.abs(a - b)))
    return -(core + corr)


def bit_node(e1, e2, u):
    return e2 + (1.0 - 2.0 * np.asarray(u, dtype=float)) * e1


def _path_penalty(llr, bit):
    # -log P(bit) for LLR = log P(1)/P(0)
    return np.logaddexp(0.0, -(2.0 * bit - 1.0) * llr)


def _branch(pm, llr, L):
    """Split every path on an information bit and keep the ``L`` best.

    Equal metrics are broken toward the hard decision ``llr > 0`` so that a
    list of one reproduces SC exactly. Returns (bits, metrics, parents).
    """
    B, P = pm.shape
    cand = np.stack([pm + _path_penalty(llr, 0), pm + _path_penalty(llr, 1)], axis=2).reshape(B, 2 * P)
    hard = (llr > 0).astype(np.uint8)
    off = np.stack([hard, 1 - hard], axis=2).reshape(B, 2 * P)
    keep = min(2 * P, L)
    order = np.lexsort((off, cand), axis=1)[:, :keep]
    return (order % 2).astype(np.uint8), np.take_along_axis(cand, order, axis=1), order // 2


# --------------------------------------------------------------------------- SC

def _prepare(llrs, design):
    llrs = np.clip(np.asarray(llrs, dtype=float), -LLR_CLIP, LLR_CLIP)
    if llrs.shape[-1] != design.N:
        raise ValueError(f"got {llrs.shape[-1]} LLRs for a length-{design.N} design")
    lead = llrs.shape[:-1]
    flat = llrs.reshape(-1, design.N)
    if not design.include_bit_reversal:
        # x F = (u B) F B ... with B F = F B, so reorder channel LLRs by B
        flat = flat[:, bit_reversal_perm(design.n)]
    return flat, lead


def _sc(l, fv):
    M = l.shape[1]
    if M == 1:
        if fv[0] == 0.5:
            u = (l[:, 0] > 0).astype(np.uint8)
        else:
            u = np.full(l.shape[0], int(fv[0]), dtype=np.uint8)
        return u[:, None], u[:, None], l
    lo, le = l[:, 0::2], l[:, 1::2]
    h = M // 2
    u1, x1, d1 = _sc(check_node(lo, le), fv[:h])
    u2, x2, d2 = _sc(bit_node(lo, le, x1), fv[h:])
    x = np.empty((l.shape[0], M), dtype=np.uint8)
    x[:, 0::2] = x1 ^ x2
    x[:, 1::2] = x2
    return np.concatenate([u1, u2], 1), x, np.concatenate([d1, d2], 1)


def sc_decode(llrs, design: CodeDesign):
    """Successive-cancellation decoding.

    Returns ``(u_hat, decision_llrs)`` with shapes matching ``llrs``. The
    decision LLRs are the synthetic-channel statistics ``L(u_i | u^{i-1}, y)``
    evaluated along the decoded prefix.
    """
    flat, lead = _prepare(llrs, design)
    u, _, d = _sc(flat, design.frozen_values)
    return u.reshape(*lead, design.N), d.reshape(*lead, design.N)


# --------------------------------------------------------------------------- SCL

def _gather(a, idx):
    """a: (B, P, ...), idx: (B, P') -> a[b, idx[b, p']]."""
    extra = a.ndim - 2
    return np.take_along_axis(a, idx.reshape(idx.shape + (1,) * extra), axis=1)


def _scl(l, fv, pm, L):
    B, P, M = l.shape
    if M == 1:
        li = l[:, :, 0]
        if fv[0] != 0.5:
            bit = int(fv[0])
            pm = pm + _path_penalty(li, bit)
            u = np.full((B, P, 1), bit, dtype=np.uint8)
            return u, u, pm, np.broadcast_to(np.arange(P), (B, P))
        bits, pm, parent = _branch(pm, li, L)
        u = bits[:, :, None]
        return u, u, pm, parent
    h = M // 2
    lo, le = l[:, :, 0::2], l[:, :, 1::2]
    u1, x1, pm, p1 = _scl(check_node(lo, le), fv[:h], pm, L)
    lo, le = _gather(lo, p1), _gather(le, p1)
    u2, x2, pm, p2 = _scl(bit_node(lo, le, x1), fv[h:], pm, L)
    u1, x1 = _gather(u1, p2), _gather(x1, p2)
    x = np.empty(x2.shape[:2] + (M,), dtype=np.uint8)
    x[:, :, 0::2] = x1 ^ x2
    x[:, :, 1::2] = x2
    return np.concatenate([u1, u2], 2), x, pm, np.take_along_axis(p1, p2, axis=1)


def select_path(paths, pm, design: CodeDesign) -> np.ndarray:
    """Pick the best-metric CRC-passing path per block, or the best path if none passes."""
    order = np.argsort(pm, axis=1, kind="stable")
    paths = _gather(paths, order)
    if design.crc_len:
        ok = crc_check(paths[:, :, list(design.info_set)], design.crc_len)
        first = np.where(ok.any(axis=1), ok.argmax(axis=1), 0)
    else:
        first = np.zeros(paths.shape[0], dtype=int)
    return paths[np.arange(paths.shape[0]), first]


def ca_scl_decode(llrs, design: CodeDesign, list_size: int = 8) -> np.ndarray:
    """CRC-aided SC list decoding; returns u_hat with the shape of ``llrs``."""
    if list_size < 1:
        raise ValueError("list_size must be >= 1")
    flat, lead = _prepare(llrs, design)
    B = flat.shape[0]
    u, _, pm, _ = _scl(flat[:, None, :], design.frozen_values, np.zeros((B, 1)), list_size)
    return select_path(u, pm, design).reshape(*lead, design.N)


# --------------------------------------------------------------------------- oracle

def exact_llr_oracle(y, loglik, design: CodeDesign):
    """Synthetic-channel LLRs by exhaustive enumeration over all 2**N inputs.

    ``loglik(y, x)`` must return ``log W(y_i | x_i)`` for a (2**N, N) array of
    codewords. Decisions follow the SC rule (frozen value or ``l > 0``), so the
    output is directly comparable with :func:`sc_decode`.
    """
    N = design.N
    if N > 16:
        raise ValueError("exhaustive oracle limited to N <= 16")
    U = ((np.arange(1 << N)[:, None] >> np.arange(N - 1, -1, -1)) & 1).astype(np.uint8)
    X = polar_transform(U, design.include_bit_reversal)
    total = np.sum(loglik(y, X), axis=1)
    alive = np.ones(1 << N, dtype=bool)
    u_hat = np.zeros(N, dtype=np.uint8)
    llr = np.zeros(N)
    for i in range(N):
        one = alive & (U[:, i] == 1)
        zero = alive & (U[:, i] == 0)
        llr[i] = np.logaddexp.reduce(total[one]) - np.logaddexp.reduce(total[zero])
        fv = design.frozen_values[i]
        u_hat[i] = (llr[i] > 0) if fv == 0.5 else int(fv)
        alive &= U[:, i] == u_hat[i]
    return u_hat, llr


# --------------------------------------------------------------------------- classical design

def bit_channel_mi(llrs, bits) -> np.ndarray:
    """Per-index MI estimate 1 - mean binary cross-entropy (bits) over the batch axis."""
    llrs = np.asarray(llrs, dtype=float)
    s = 2.0 * np.asarray(bits, dtype=float) - 1.0
    ce = np.logaddexp(0.0, -s * llrs) / np.log(2.0)
    return 1.0 - ce.mean(axis=0)


def mc_design(N: int, K: int, n0: float, blocks: int = 2000, seed: int = 0, crc_len: int = 0,
              frozen_seed=0, include_bit_reversal: bool = True) -> CodeDesign:
    """Classical Monte-Carlo construction for BPSK over complex AWGN of variance ``n0``.

    Runs genie-aided SC on the all-zero codeword (valid by channel symmetry),
    ranks synthetic channels by estimated MI and keeps the best ``K`` (payload
    plus CRC) as the information set.
    """
    rng = np.random.default_rng(seed)
    n = log2_exact(N)
    genie = CodeDesign(n, (), np.zeros(N), 0, include_bit_reversal)
    y = 1.0 + rng.normal(scale=np.sqrt(n0 / 2), size=(blocks, N))
    _, d = sc_decode(-4.0 * y / n0, genie)
    mi = bit_channel_mi(d, np.zeros_like(d))
    info = np.argsort(-mi, kind="stable")[:K]
    return CodeDesign.from_info_set(N, info, crc_len, frozen_seed, include_bit_reversal)
