import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from npdcomm.polar import (CRC_POLYNOMIALS, CodeDesign, PunctureConfig, bit_channel_mi, bit_node, bit_reversal_perm,
                           ca_scl_decode, check_node, crc_attach, crc_check, encode, exact_llr_oracle,
                           extract_payload, log2_exact, mc_design, polar_transform, puncture_set, sc_decode)

from .oracles import ml_decode, naive_polar_transform, sc_reference

bit_arrays = st.integers(0, 8).flatmap(
    lambda n: st.lists(st.integers(0, 1), min_size=1 << n, max_size=1 << n).map(np.array))


def test_log2_exact():
    assert log2_exact(1) == 0
    assert log2_exact(64) == 6
    for bad in (0, 3, 12, -4):
        with pytest.raises(ValueError):
            log2_exact(bad)


def test_bit_reversal_small_cases():
    assert list(bit_reversal_perm(3) + 1) == [1, 5, 3, 7, 2, 6, 4, 8]
    assert list(bit_reversal_perm(0)) == [0]
    assert list(bit_reversal_perm(1)) == [0, 1]


@given(st.integers(0, 10))
def test_bit_reversal_is_involution(n):
    p = bit_reversal_perm(n)
    assert np.array_equal(p[p], np.arange(1 << n))


def test_transform_hand_values():
    assert list(polar_transform([1, 0], include_bit_reversal=False)) == [1, 0]
    assert list(polar_transform([1, 1], include_bit_reversal=False)) == [0, 1]


@given(bit_arrays, st.booleans())
def test_transform_matches_kronecker_and_is_involution(u, flag):
    x = polar_transform(u, flag)
    assert np.array_equal(x, naive_polar_transform(u, flag))
    assert np.array_equal(polar_transform(x, flag), u)


def test_transform_rejects_bad_length():
    with pytest.raises(ValueError):
        polar_transform(np.zeros(6, int))


@pytest.mark.parametrize("crc_len", sorted(CRC_POLYNOMIALS))
def test_crc_round_trip_and_single_error(crc_len, rng):
    b = rng.integers(0, 2, 100)
    w = crc_attach(b, crc_len)
    assert w.size == 100 + crc_len
    assert crc_check(w, crc_len)
    for pos in rng.choice(w.size, 20, replace=False):
        bad = w.copy()
        bad[pos] ^= 1
        assert not crc_check(bad, crc_len)
    assert not np.any(crc_attach(np.zeros(100, int), crc_len)[100:])


@given(st.lists(st.integers(0, 1), min_size=1, max_size=60), st.lists(st.integers(0, 1), min_size=1, max_size=60))
def test_crc_is_linear(a, b):
    n = min(len(a), len(b))
    a, b = np.array(a[:n]), np.array(b[:n])
    assert np.array_equal(crc_attach(a ^ b, 11), crc_attach(a, 11) ^ crc_attach(b, 11))


def test_crc_batched():
    w = crc_attach(np.eye(5, 40, dtype=int), 6)
    assert w.shape == (5, 46)
    assert crc_check(w, 6).all()


def test_puncture_sets():
    assert sorted(puncture_set(8, 3, 1) + 1) == [1, 3, 5]
    assert puncture_set(8, 0, 1).size == 0
    with pytest.raises(ValueError):
        puncture_set(8, 3, 2)
    with pytest.raises(ValueError):
        puncture_set(8, 8, 1)


@given(st.integers(1, 8), st.sampled_from([1, 2, 4]), st.data())
def test_puncture_groups_whole_symbols(n, m, data):
    N = 1 << n
    if m > N:
        return
    P = m * data.draw(st.integers(0, N // m - 1))
    s = puncture_set(N, P, m)
    assert s.size == P == np.unique(s).size
    assert np.all((0 <= s) & (s < N))
    syms = s // m
    for sym in np.unique(syms):
        assert np.array_equal(np.sort(s[syms == sym]), sym * m + np.arange(m))


def test_puncture_config_recovers_positions(rng):
    cfg = PunctureConfig(16, 12, 2)
    assert cfg.P == 4
    llr = rng.normal(size=(3, 12))
    full = cfg.recover_llrs(llr)
    assert np.all(full[:, cfg.positions] == 0)
    assert np.array_equal(full[:, cfg.kept], llr)
    x = rng.integers(0, 2, (3, 16))
    assert np.array_equal(cfg.puncture(x), x[:, cfg.kept])


def test_code_design_invariants():
    d = CodeDesign.from_info_set(8, [7, 3, 5, 6], crc_len=0, frozen_seed=3)
    assert d.info_set == (3, 5, 6, 7)
    assert set(d.info_set) | set(d.frozen_set) == set(range(8))
    assert not set(d.info_set) & set(d.frozen_set)
    assert np.all(d.frozen_values[list(d.info_set)] == 0.5)
    assert CodeDesign.from_dict(d.to_dict()).to_dict() == d.to_dict()
    with pytest.raises(ValueError):
        CodeDesign(3, (1, 2), np.full(8, 0.5))
    with pytest.raises(ValueError):
        CodeDesign.from_info_set(8, [1, 1])


def test_encode_extract_round_trip(rng):
    d = CodeDesign.from_info_set(32, rng.permutation(32)[:20], crc_len=6, frozen_seed=1)
    payload = rng.integers(0, 2, (5, d.k))
    u = polar_transform(encode(payload, d))
    got, ok = extract_payload(u, d)
    assert np.array_equal(got, payload) and ok.all()
    assert np.array_equal(u[:, d.frozen_set], np.broadcast_to(d.frozen_values[d.frozen_set], (5, 12)))


def test_kernels_match_definitions(rng):
    a, b = rng.normal(scale=4, size=(2, 200))
    exact = -2 * np.arctanh(np.tanh(a / 2) * np.tanh(b / 2))
    assert np.allclose(check_node(a, b), exact, atol=1e-9)
    assert np.allclose(bit_node(a, b, 0), b + a)
    assert np.allclose(bit_node(a, b, 1), b - a)
    assert np.all(np.isfinite(check_node(np.array([1e6, -1e6]), np.array([1e6, 1e6]))))


def test_sc_matches_textbook_recursion(rng):
    N = 32
    design = CodeDesign.from_info_set(N, rng.permutation(N)[:16], frozen_seed=2)
    perm = bit_reversal_perm(5)
    frozen = [None if v == 0.5 else int(v) for v in design.frozen_values]
    for _ in range(20):
        llr = rng.normal(scale=3, size=N)
        u, leaf = sc_decode(llr, design)
        u_ref, leaf_ref, _ = sc_reference(list(llr[perm]), frozen)
        assert list(u) == u_ref
        assert np.allclose(leaf, leaf_ref, atol=1e-9)


@pytest.mark.parametrize("N", [2, 4, 8])
def test_sc_llrs_match_exhaustive_oracle(N, rng):
    design = CodeDesign.from_info_set(N, rng.permutation(N)[: N // 2], frozen_seed=4)
    s2 = 0.7
    for _ in range(10):
        x = polar_transform(rng.integers(0, 2, N))
        y = 1 - 2.0 * x + rng.normal(scale=np.sqrt(s2), size=N)
        u, llr = sc_decode(-2 * y / s2, design)
        u_ex, llr_ex = exact_llr_oracle(y, lambda yy, X: -((yy - (1 - 2.0 * X)) ** 2) / (2 * s2), design)
        assert np.array_equal(u, u_ex)
        assert np.max(np.abs(llr - llr_ex)) < 1e-9


def test_all_frozen_design_returns_frozen_values(rng):
    d = CodeDesign.from_info_set(16, [], frozen_seed=9)
    u, _ = sc_decode(rng.normal(size=16), d)
    assert np.array_equal(u, d.frozen_values)
    assert np.array_equal(ca_scl_decode(rng.normal(size=16), d, 4), d.frozen_values)


def test_scl_list_one_equals_sc(rng):
    d = CodeDesign.from_info_set(64, rng.permutation(64)[:32], frozen_seed=0)
    llr = rng.normal(scale=2, size=(40, 64))
    assert np.array_equal(ca_scl_decode(llr, d, 1), sc_decode(llr, d)[0])


def test_scl_approaches_ml_for_small_codes(rng):
    # with L >= 2^K the list holds every candidate, so the best metric is the ML codeword
    d = CodeDesign.from_info_set(8, [3, 5, 6, 7], frozen_seed=None)
    n0 = 1.0
    for _ in range(30):
        x = polar_transform(np.where(d.info_mask, rng.integers(0, 2, 8), 0))
        y = 1 - 2.0 * x + rng.normal(scale=np.sqrt(n0 / 2), size=8)
        u = ca_scl_decode(-4 * y / n0, d, 16)
        assert np.array_equal(u, ml_decode(y, d, n0))


def test_ca_scl_uses_crc_to_pick_path(rng):
    d = mc_design(64, 32 + 6, n0=10 ** -0.2, blocks=500, seed=1, crc_len=6)
    payload = rng.integers(0, 2, (300, d.k))
    x = encode(payload, d)
    n0 = 10 ** -0.1
    y = 1 - 2.0 * x + rng.normal(scale=np.sqrt(n0 / 2), size=x.shape)
    llr = -4 * y / n0
    sc_err = np.any(extract_payload(sc_decode(llr, d)[0], d)[0] != payload, axis=1).sum()
    scl_err = np.any(extract_payload(ca_scl_decode(llr, d, 8), d)[0] != payload, axis=1).sum()
    assert scl_err < sc_err


def test_bit_channel_mi_limits():
    bits = np.array([[0, 1], [1, 0]])
    assert np.allclose(bit_channel_mi(np.zeros((2, 2)), bits), 0.0)
    assert np.allclose(bit_channel_mi(np.where(bits, 60.0, -60.0), bits), 1.0)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2 ** 31))
def test_sc_noiseless_recovers_u(n, seed):
    r = np.random.default_rng(seed)
    N = 1 << n
    d = CodeDesign.from_info_set(N, r.permutation(N)[: N // 2], frozen_seed=seed)
    u = np.where(d.info_mask, r.integers(0, 2, N), d.frozen_values).astype(np.uint8)
    x = polar_transform(u)
    assert np.array_equal(sc_decode(np.where(x == 1, 20.0, -20.0), d)[0], u)
