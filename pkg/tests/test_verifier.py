import hashlib

import numpy as np
import pytest

from helpers import dkw_band_95, dkw_sup_uniform
from wmprop.errors import DomainError, EmptyDataset
from wmprop.fileio import generate_key
from wmprop.rng import make_rng
from wmprop.verifier import (PAD_TOKEN, TokenRecord, VerifierKey, derive_xi,
                             pivotal_sequence)
from wmprop.watermarks import Scheme, green_size, pit, pivotal

GUM = Scheme.gumbel_max()
INV = Scheme.inverse_transform()
GR = Scheme.green_red(0.5, 2.0)


def manual_digest(key: bytes, context, tag: bytes) -> bytes:
    h = hashlib.sha256()
    h.update(key)
    h.update(b"\x01")
    for t in context:
        h.update(int(t).to_bytes(4, "big"))
    h.update(tag)
    return h.digest()


def manual_philox(digest: bytes, vocab: int):
    prng = np.random.Generator(
        np.random.Philox(key=int.from_bytes(digest[:8], "big")))
    u = float(prng.random())
    shuffled = prng.permutation(vocab)
    rank_of = np.empty(vocab, dtype=np.int64)
    rank_of[shuffled] = np.arange(vocab)
    return u, rank_of


class TestVerifierKey:
    def test_defaults(self):
        vkey = VerifierKey(b"\x00" * 32)
        assert vkey.m == 4
        assert vkey.key == b"\x00" * 32

    @pytest.mark.parametrize("kw", [
        dict(key=b"\x00" * 31), dict(key=b"\x00" * 33),
        dict(key="00" * 32), dict(key=b"\x00" * 32, m=0),
        dict(key=b"\x00" * 32, m=-1), dict(key=b"\x00" * 32, m=1.5),
    ])
    def test_rejects(self, kw):
        with pytest.raises(DomainError):
            VerifierKey(**kw)


class TestTokenRecord:
    def test_tokens_frozen_as_int64(self):
        rec = TokenRecord([3, 1, 2], 5)
        assert rec.tokens.dtype == np.int64
        with pytest.raises(ValueError):
            rec.tokens[0] = 0

    def test_empty_sequence_allowed(self):
        rec = TokenRecord([], 5)
        assert rec.tokens.size == 0

    @pytest.mark.parametrize("tokens, vocab", [
        ([[1, 2]], 5), ([1], 1), ([1], 2.0), ([-1], 5), ([5], 5),
    ])
    def test_rejects(self, tokens, vocab):
        with pytest.raises(DomainError):
            TokenRecord(tokens, vocab)

    def test_pad_token_value(self):
        assert PAD_TOKEN == 0xFFFFFFFF


class TestDeriveXi:
    def test_gumbel_matches_hash_recompute(self):
        key = generate_key(7)
        vkey = VerifierKey(key, m=2)
        xi = derive_xi(GUM, vkey, [5, 9], 50)
        digest = manual_digest(key, [5, 9], b"gumbel")
        for w in (0, 17, 49):
            raw = hashlib.sha256(digest + w.to_bytes(4, "big")).digest()
            want = (int.from_bytes(raw[:8], "big") + 0.5) / 2.0 ** 64
            assert xi.gumbel_us[w] == want

    def test_inverse_matches_philox_recompute(self):
        key = generate_key(7)
        vkey = VerifierKey(key, m=2)
        xi = derive_xi(INV, vkey, [5, 9], 50)
        u, rank_of = manual_philox(manual_digest(key, [5, 9], b"inverse"), 50)
        assert xi.inv_u == u
        assert np.array_equal(xi.inv_perm, rank_of)
        assert np.array_equal(np.sort(xi.inv_perm), np.arange(50))

    def test_greenred_matches_philox_recompute(self):
        key = generate_key(7)
        vkey = VerifierKey(key, m=2)
        xi = derive_xi(GR, vkey, [5, 9], 50)
        _, rank_of = manual_philox(manual_digest(key, [5, 9], b"greenred"), 50)
        assert np.array_equal(xi.green_mask, rank_of < green_size(0.5, 50))
        assert int(xi.green_mask.sum()) == 25
        assert xi.gr_u is None

    def test_deterministic_and_tag_separated(self):
        vkey = VerifierKey(generate_key(8), m=2)
        a = derive_xi(GUM, vkey, [1, 2], 30)
        b = derive_xi(GUM, vkey, [1, 2], 30)
        assert a.gumbel_us[3] == b.gumbel_us[3]
        # same key and context, different scheme tag: fresh randomness
        c = derive_xi(INV, vkey, [1, 2], 30)
        assert c.inv_u != a.gumbel_us[0]

    def test_rejects_oversized_context_token(self):
        vkey = VerifierKey(generate_key(8), m=1)
        with pytest.raises(DomainError):
            derive_xi(GUM, vkey, [2 ** 32], 30)


class TestU0Calibration:
    def make_u0(self, ctxs, vkey):
        return np.array([derive_xi(GUM, vkey, c, 1000).gumbel_us[0]
                         for c in ctxs])

    def test_uniform_over_contexts_and_collision_free(self):
        vkey = VerifierKey(generate_key(77), m=4)
        ctxs = np.random.default_rng(77).integers(0, 1000, size=(10_000, 4))
        u0 = self.make_u0(ctxs, vkey)
        sup = dkw_sup_uniform(u0)
        assert sup == pytest.approx(0.00564, abs=5e-6)
        assert sup <= dkw_band_95(10_000)
        # a one-token change in the window re-keys every uniform
        bumped = ctxs.copy()
        bumped[:, 0] = (bumped[:, 0] + 1) % 1000
        u0b = self.make_u0(bumped, vkey)
        assert int(np.sum(u0 == u0b)) == 0


class TestPivotalSequence:
    def test_length_and_range(self):
        vkey = VerifierKey(generate_key(9), m=4)
        rec = TokenRecord(make_rng(9).integers(0, 50, size=12), 50)
        piv = pivotal_sequence(rec, vkey, GUM)
        assert piv.shape == (8,)
        assert np.all((piv >= 0.0) & (piv <= 1.0))

    @pytest.mark.parametrize("n", [4, 3, 0])
    def test_too_short_raises(self, n):
        vkey = VerifierKey(generate_key(9), m=4)
        rec = TokenRecord(np.arange(n), 50)
        with pytest.raises(EmptyDataset):
            pivotal_sequence(rec, vkey, GUM)

    @pytest.mark.parametrize("scheme", [GUM, INV, GR],
                             ids=["gumbel", "inverse", "greenred"])
    def test_matches_stepwise_recompute(self, scheme):
        vkey = VerifierKey(generate_key(10), m=3)
        toks = make_rng(10).integers(0, 40, size=25)
        rec = TokenRecord(toks, 40)
        piv = pivotal_sequence(rec, vkey, scheme)
        manual = np.array([
            pit(scheme, pivotal(scheme, int(toks[t]),
                                derive_xi(scheme, vkey, toks[t - 3:t], 40)))
            for t in range(3, toks.size)])
        assert np.array_equal(piv, manual)

    def test_repeat_call_is_bit_identical(self):
        vkey = VerifierKey(generate_key(10), m=3)
        rec = TokenRecord(make_rng(10).integers(0, 40, size=25), 40)
        assert np.array_equal(pivotal_sequence(rec, vkey, GUM),
                              pivotal_sequence(rec, vkey, GUM))

    @pytest.mark.parametrize("scheme, sup_pin", [
        (GUM, 0.00789), (INV, 0.00866),
    ], ids=["gumbel", "inverse"])
    def test_unwatermarked_tokens_score_uniform(self, scheme, sup_pin):
        vkey = VerifierKey(generate_key(83), m=4)
        toks = make_rng(83, 1).integers(0, 500, size=10_004)
        piv = pivotal_sequence(TokenRecord(toks, 500), vkey, scheme)
        assert piv.size == 10_000
        sup = dkw_sup_uniform(piv)
        assert sup == pytest.approx(sup_pin, abs=5e-6)
        assert sup <= dkw_band_95(piv.size)

    def test_unwatermarked_tokens_greenred_rate(self):
        vkey = VerifierKey(generate_key(83), m=4)
        toks = make_rng(83, 1).integers(0, 500, size=10_004)
        piv = pivotal_sequence(TokenRecord(toks, 500), vkey, GR)
        assert set(np.unique(piv)) <= {0.0, 1.0}
        # random tokens land green at exactly the list fraction 1/2
        assert abs(piv.mean() - 0.5) <= 3.0 * 0.5 / np.sqrt(piv.size)
