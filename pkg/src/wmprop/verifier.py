"""Keyed reconstruction of step pseudorandomness and pivotal statistics.

Generation and verification share xi_t = A(key, w_(t-m):(t-1), scheme):
anyone holding the 32-byte key recomputes the same xi from the m tokens
preceding position t and scores Y_t = pit(pivotal(scheme, w_t, xi_t)).

The derivation is SHA-256 over

    key-bytes || 0x01 || big-endian uint32 context tokens || scheme tag

with the ASCII scheme name ('gumbel', 'inverse', 'greenred') as tag.
From the 32-byte step digest:

* Gumbel-max: U_w = (u64(SHA-256(digest || uint32-be(w))[:8]) + 0.5) / 2^64,
  computed lazily per queried token so a step never materializes the
  whole vocabulary.
* Inverse transform and green-red: the first 8 digest bytes (big-endian)
  key a Philox stream; one uniform is drawn first (the inverse
  transform's U; green-red ignores it), then a Fisher-Yates shuffle of
  the vocabulary (NumPy's ``Generator.permutation``).  The shuffle's
  rank array is pi, and the green set is the first round(gamma |W|)
  tokens of the shuffled order.

The byte layout is a convention of this implementation, documented so
that an independent verifier can reproduce it bit for bit.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EmptyDataset
from .watermarks import (PseudoRandomness, Scheme, SchemeKind, green_size,
                         pit, pivotal)

PAD_TOKEN = 0xFFFFFFFF  # left-padding for windows before position m

_TAGS = {
    SchemeKind.GUMBEL_MAX: b"gumbel",
    SchemeKind.INVERSE_TRANSFORM: b"inverse",
    SchemeKind.GREEN_RED_LIST: b"greenred",
}

_TWO64 = float(2 ** 64)


@dataclass(frozen=True)
class VerifierKey:
    """A 32-byte shared secret plus the context width m."""

    key: bytes
    m: int = 4

    def __post_init__(self):
        if not (isinstance(self.key, bytes) and len(self.key) == 32):
            raise DomainError("key must be exactly 32 bytes")
        if not (isinstance(self.m, int) and self.m >= 1):
            raise DomainError("m must be a positive integer")


def _encode_context(context) -> bytes:
    out = bytearray()
    for t in context:
        t = int(t)
        if not (0 <= t <= 0xFFFFFFFF):
            raise DomainError("context tokens must fit in uint32")
        out += t.to_bytes(4, "big")
    return bytes(out)


def _step_digest(scheme: Scheme, key: VerifierKey, context) -> bytes:
    h = hashlib.sha256()
    h.update(key.key)
    h.update(b"\x01")
    h.update(_encode_context(context))
    h.update(_TAGS[scheme.kind])
    return h.digest()


class _HashUniforms:
    """Lazy per-token uniforms U_w derived from a step digest."""

    __slots__ = ("digest",)

    def __init__(self, digest: bytes):
        self.digest = digest

    def _one(self, w: int) -> float:
        raw = hashlib.sha256(self.digest + int(w).to_bytes(4, "big")).digest()
        u64 = int.from_bytes(raw[:8], "big")
        return (u64 + 0.5) / _TWO64

    def __getitem__(self, w) -> float:
        return self._one(int(w))

    def take(self, indices) -> np.ndarray:
        return np.array([self._one(int(w)) for w in np.asarray(indices).ravel()],
                        dtype=np.float64)


def derive_xi(scheme: Scheme, key: VerifierKey, context, vocab: int) -> PseudoRandomness:
    """xi for one step from the key and the m-token context window.

    Deterministic; green-red xi carries no sampling uniform (verifiers
    never decode), so simulation attaches one before calling decode.
    """
    digest = _step_digest(scheme, key, context)
    if scheme.kind is SchemeKind.GUMBEL_MAX:
        return PseudoRandomness(gumbel_us=_HashUniforms(digest))

    prng = np.random.Generator(np.random.Philox(key=int.from_bytes(digest[:8], "big")))
    u = float(prng.random())
    shuffled = prng.permutation(vocab)
    rank_of = np.empty(vocab, dtype=np.int64)
    rank_of[shuffled] = np.arange(vocab)
    if scheme.kind is SchemeKind.INVERSE_TRANSFORM:
        return PseudoRandomness(inv_u=u, inv_perm=rank_of)
    if scheme.kind is SchemeKind.GREEN_RED_LIST:
        gsize = green_size(scheme.greenred.gamma, vocab)
        return PseudoRandomness(green_mask=rank_of < gsize)
    raise DomainError(f"unknown scheme kind {scheme.kind!r}")


@dataclass(frozen=True)
class TokenRecord:
    """A token sequence plus the vocabulary size it was drawn from."""

    tokens: np.ndarray
    vocab: int

    def __post_init__(self):
        toks = np.asarray(self.tokens, dtype=np.int64)
        if toks.ndim != 1:
            raise DomainError("tokens must be a 1-d sequence")
        if not (isinstance(self.vocab, int) and self.vocab >= 2):
            raise DomainError("vocab must be an integer >= 2")
        if toks.size and (toks.min() < 0 or toks.max() >= self.vocab):
            raise DomainError("tokens must lie in [0, vocab)")
        toks.setflags(write=False)
        object.__setattr__(self, "tokens", toks)


def pivotal_sequence(rec: TokenRecord, key: VerifierKey, scheme: Scheme) -> np.ndarray:
    """Post-PIT pivotal statistics Y_(m+1)..Y_len for a token record.

    Position t (0-based t = m..len-1) is scored with xi derived from the
    m tokens immediately before it; the first m positions have no full
    window and yield nothing.
    """
    toks = rec.tokens
    if toks.size <= key.m:
        raise EmptyDataset("token sequence no longer than the context width m")

    out = np.empty(toks.size - key.m, dtype=np.float64)
    for t in range(key.m, toks.size):
        xi = derive_xi(scheme, key, toks[t - key.m:t], rec.vocab)
        out[t - key.m] = pit(scheme, pivotal(scheme, int(toks[t]), xi))
    return out
