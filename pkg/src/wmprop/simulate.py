"""Desk-scale simulation of watermarked text at the pivotal-statistic level.

Next-token distributions come from a Zipf-head generator: a head of
k ~ DU[5, 15] tokens with mass proportional to (i + b)^(-a) for
a ~ U(0.95, 1.5), b ~ U(0.01, 0.1), a uniform tail, and a dominance
parameter delta_dom in (0, 1) that keeps the largest probability below
1 - delta_dom (the largest probability is drawn uniformly from
(0, 1 - delta_dom), so larger delta_dom means flatter distributions and
a more detectable watermark).  Entries are then placed in uniformly
random vocabulary order.

Pivot-level sampling is vectorized in chunks; each draw still uses a
fresh next-token distribution and fresh pseudorandomness, exactly as
the per-step ``decode``/``pivotal`` path would.  The pure kernels are
shared with the single-step operations and unit-tested against them.

Token-stream simulation is autoregressive: per-step pseudorandomness is
hash-derived from the key and the previous m tokens (see ``verifier``),
so a stream generated here can be verified by any key holder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace as _dc_replace

import numpy as np

from . import verifier as _verifier
from .core import NtpDistribution
from .errors import DomainError
from .rng import make_rng
from .watermarks import Scheme, SchemeKind, decode, green_size, pit

_CHUNK = 4096

# substream tags (see rng.make_rng); fixed so runs are reproducible
_S_WM, _S_NULL, _S_SHUFFLE, _S_STREAM = 1, 2, 3, 4

_K_MIN, _K_MAX = 5, 15
_A_LO, _A_HI = 0.95, 1.5
_B_LO, _B_HI = 0.01, 0.1


@dataclass(frozen=True)
class NtpSimConfig:
    """Vocabulary size, dominance parameter, and the run seed."""

    vocab: int = 1000
    delta_dom: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if not (isinstance(self.vocab, int) and self.vocab >= 2):
            raise DomainError("vocab must be an integer >= 2")
        if not (0.0 < self.delta_dom < 1.0):
            raise DomainError("delta_dom must lie in (0, 1)")
        if not (isinstance(self.seed, int) and self.seed >= 0):
            raise DomainError("seed must be a nonnegative integer")


@dataclass(frozen=True)
class MixtureSpec:
    """A mixed dataset: round(n * eps) watermarked pivots, the rest null."""

    eps: float
    n: int
    scheme: Scheme
    ntp: NtpSimConfig

    def __post_init__(self):
        if not (0.0 <= self.eps <= 1.0):
            raise DomainError("eps must lie in [0, 1]")
        if not (isinstance(self.n, int) and self.n >= 1):
            raise DomainError("n must be a positive integer")


@dataclass(frozen=True)
class TokenStream:
    """Tokens plus per-position flags marking watermark-decoder steps."""

    tokens: np.ndarray   # int64
    wm_flags: np.ndarray  # bool

    def __post_init__(self):
        t = np.asarray(self.tokens, dtype=np.int64)
        f = np.asarray(self.wm_flags, dtype=bool)
        if t.ndim != 1 or f.shape != t.shape:
            raise DomainError("tokens and wm_flags must be 1-d and equal length")
        object.__setattr__(self, "tokens", t)
        object.__setattr__(self, "wm_flags", f)

    def __len__(self) -> int:
        return int(self.tokens.size)


@dataclass(frozen=True)
class EditSpec:
    """One edit pass: kind in {substitution, deletion, insertion} at ``rate``."""

    kind: str
    rate: float
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("substitution", "deletion", "insertion"):
            raise DomainError("kind must be substitution, deletion, or insertion")
        if not (0.0 <= self.rate <= 1.0):
            raise DomainError("rate must lie in [0, 1]")


@dataclass(frozen=True)
class EditOutcome:
    """Edited stream, the bookkept watermarked fraction, and provenance.

    ``origin[t]`` is the original index of the token now at position t,
    or -1 if the token was inserted or substituted.  ``true_eps`` is the
    fraction of positions t >= m whose (m+1)-token window consists of
    consecutive surviving originals ending in a watermark-decoded token:
    exactly the positions whose pivotal statistic a verifier will see as
    watermarked.
    """

    stream: TokenStream
    true_eps: float
    origin: np.ndarray


# ---------------------------------------------------------------------------
# next-token distribution generation


def _gen_ntp_rows(delta_dom: float, vocab: int, size: int,
                  rng: np.random.Generator) -> np.ndarray:
    """``size`` fresh next-token distributions as rows of a (size, vocab) array."""
    if vocab < _K_MAX + 2:
        raise DomainError(f"vocab must be >= {_K_MAX + 2} so head and tail never collide")
    a = rng.uniform(_A_LO, _A_HI, size)
    b = rng.uniform(_B_LO, _B_HI, size)
    k = rng.integers(_K_MIN, _K_MAX + 1, size)
    top = rng.uniform(0.0, 1.0 - delta_dom, size)  # target for the largest entry

    idx = np.arange(1, _K_MAX + 1, dtype=np.float64)
    h = (idx[None, :] + b[:, None]) ** (-a[:, None])
    h[idx[None, :] > k[:, None]] = 0.0
    h /= h.sum(axis=1, keepdims=True)

    out = np.empty((size, vocab), dtype=np.float64)
    scale = top / h[:, 0]  # h_1 is the largest head mass
    for i in range(size):
        ki = int(k[i])
        head = h[i, :ki]
        if scale[i] <= 1.0:
            # scaled head peaks at `top`, uniform tail carries the rest
            out[i, :ki] = scale[i] * head
            out[i, ki:] = (1.0 - scale[i]) / (vocab - ki)
        else:
            # spike at `top`, half the remainder to the head, half to the tail
            rest = 0.5 * (1.0 - top[i])
            out[i, 0] = top[i]
            out[i, 1:ki + 1] = rest * head
            out[i, ki + 1:] = rest / (vocab - ki - 1)

    ranks = _random_rank_rows(rng, size, vocab)
    return np.take_along_axis(out, ranks, axis=1)


def gen_ntp(cfg: NtpSimConfig) -> NtpDistribution:
    """One next-token distribution; identical cfg (seed included) gives identical output."""
    row = _gen_ntp_rows(cfg.delta_dom, cfg.vocab, 1, make_rng(cfg.seed))[0]
    return NtpDistribution(row)


# ---------------------------------------------------------------------------
# pure per-row kernels (shared with decode/pivotal; see tests for the parity)


def _random_rank_rows(rng: np.random.Generator, size: int, vocab: int) -> np.ndarray:
    """Each row an independent uniform permutation of 0..vocab-1 (rank arrays)."""
    ranks = np.tile(np.arange(vocab, dtype=np.int64), (size, 1))
    rng.permuted(ranks, axis=1, out=ranks)
    return ranks


def _categorical_rows(p_rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw per row: first index whose cumulative prob >= u."""
    csum = np.cumsum(p_rows, axis=1)
    w = (csum < u[:, None]).sum(axis=1)
    return np.minimum(w, p_rows.shape[1] - 1)


def _gumbel_wm(p_rows: np.ndarray, us: np.ndarray):
    """Gumbel-max decode + pivotal for each row, given per-token uniforms."""
    with np.errstate(divide="ignore", invalid="ignore"):
        scores = np.where(p_rows > 0.0, np.log(us) / p_rows, -np.inf)
    w = np.argmax(scores, axis=1)
    rows = np.arange(p_rows.shape[0])
    return w, us[rows, w]


def _inverse_wm(p_rows: np.ndarray, ranks: np.ndarray, u: np.ndarray):
    """Inverse-transform decode + pivotal per row, given rank arrays and uniforms."""
    order = np.argsort(ranks, axis=1)
    csum = np.cumsum(np.take_along_axis(p_rows, order, axis=1), axis=1)
    ridx = (csum < u[:, None]).sum(axis=1)
    ridx = np.minimum(ridx, p_rows.shape[1] - 1)
    rows = np.arange(p_rows.shape[0])
    w = order[rows, ridx]
    eta = ridx / (p_rows.shape[1] - 1)
    return w, 1.0 - np.abs(u - eta)


def _greenred_wm(p_rows: np.ndarray, green: np.ndarray, u: np.ndarray, delta: float):
    """Tilted green-red decode + pivotal per row, given green masks and uniforms."""
    tilted = np.where(green, p_rows * math.exp(delta), p_rows)
    csum = np.cumsum(tilted, axis=1)
    w = (csum < (u * csum[:, -1])[:, None]).sum(axis=1)
    w = np.minimum(w, p_rows.shape[1] - 1)
    rows = np.arange(p_rows.shape[0])
    return w, green[rows, w].astype(np.float64)


def _wm_pivot_rows(scheme: Scheme, p_rows: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Watermarked pivotal statistics (raw, pre-PIT) for each row of p_rows."""
    size, vocab = p_rows.shape
    if scheme.kind is SchemeKind.GUMBEL_MAX:
        _, y = _gumbel_wm(p_rows, rng.random((size, vocab)))
        return y
    if scheme.kind is SchemeKind.INVERSE_TRANSFORM:
        ranks = _random_rank_rows(rng, size, vocab)
        _, y = _inverse_wm(p_rows, ranks, rng.random(size))
        return y
    if scheme.kind is SchemeKind.GREEN_RED_LIST:
        gsize = green_size(scheme.greenred.gamma, vocab)
        green = _random_rank_rows(rng, size, vocab) < gsize
        _, y = _greenred_wm(p_rows, green, rng.random(size), scheme.greenred.delta_gr)
        return y
    raise DomainError(f"unknown scheme kind {scheme.kind!r}")


def _null_pivot_rows(scheme: Scheme, p_rows: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Null pivotal statistics: the token is drawn from P independently of xi."""
    size, vocab = p_rows.shape
    w = _categorical_rows(p_rows, rng.random(size))
    rows = np.arange(size)
    if scheme.kind is SchemeKind.GUMBEL_MAX:
        return rng.random((size, vocab))[rows, w]
    if scheme.kind is SchemeKind.INVERSE_TRANSFORM:
        ranks = _random_rank_rows(rng, size, vocab)
        eta = ranks[rows, w] / (vocab - 1)
        return 1.0 - np.abs(rng.random(size) - eta)
    if scheme.kind is SchemeKind.GREEN_RED_LIST:
        gsize = green_size(scheme.greenred.gamma, vocab)
        green = _random_rank_rows(rng, size, vocab) < gsize
        return green[rows, w].astype(np.float64)
    raise DomainError(f"unknown scheme kind {scheme.kind!r}")


def _chunked(total: int):
    done = 0
    while done < total:
        step = min(_CHUNK, total - done)
        yield step
        done += step


def simulate_watermarked_pivots(scheme: Scheme, cfg: NtpSimConfig, n: int,
                                rng: np.random.Generator | None = None) -> np.ndarray:
    """n post-PIT watermarked pivotal samples, a fresh NTP per draw."""
    if n < 0:
        raise DomainError("n must be nonnegative")
    if rng is None:
        rng = make_rng(cfg.seed, _S_WM)
    parts = []
    for step in _chunked(n):
        p_rows = _gen_ntp_rows(cfg.delta_dom, cfg.vocab, step, rng)
        parts.append(pit(scheme, _wm_pivot_rows(scheme, p_rows, rng)))
    if not parts:
        return np.empty(0, dtype=np.float64)
    return np.concatenate(parts)


def sample_null_pivots(scheme: Scheme, cfg: NtpSimConfig, n: int,
                       rng: np.random.Generator | None = None) -> np.ndarray:
    """n post-PIT null pivotal samples via the full token-then-xi path.

    Used for calibration checks; mixture construction draws the null law
    directly (see build_mixture) because post-PIT it is known exactly.
    """
    if n < 0:
        raise DomainError("n must be nonnegative")
    if rng is None:
        rng = make_rng(cfg.seed, _S_NULL)
    parts = []
    for step in _chunked(n):
        p_rows = _gen_ntp_rows(cfg.delta_dom, cfg.vocab, step, rng)
        parts.append(pit(scheme, _null_pivot_rows(scheme, p_rows, rng)))
    if not parts:
        return np.empty(0, dtype=np.float64)
    return np.concatenate(parts)


def watermarked_pivots_fixed_p(scheme: Scheme, p: NtpDistribution, n: int,
                               rng: np.random.Generator) -> np.ndarray:
    """n post-PIT watermarked pivots holding P fixed (for CDF diagnostics)."""
    parts = []
    for step in _chunked(n):
        p_rows = np.repeat(p.probs[None, :], step, axis=0)
        parts.append(pit(scheme, _wm_pivot_rows(scheme, p_rows, rng)))
    if not parts:
        return np.empty(0, dtype=np.float64)
    return np.concatenate(parts)


def build_mixture(spec: MixtureSpec, return_parts: bool = False):
    """A shuffled dataset with exactly round(n * eps) watermarked samples.

    Null samples are drawn from the post-PIT null law directly: U(0, 1)
    for the continuous schemes, Bernoulli(|G|/|W|) for green-red (the
    pivotal statistic there is binary, so its null is the green-hit rate
    of unwatermarked text, not a uniform).
    """
    n_wm = round(spec.eps * spec.n)
    n_null = spec.n - n_wm
    wm = simulate_watermarked_pivots(spec.scheme, spec.ntp, n_wm)
    null_rng = make_rng(spec.ntp.seed, _S_NULL)
    if spec.scheme.kind is SchemeKind.GREEN_RED_LIST:
        rate = green_size(spec.scheme.greenred.gamma, spec.ntp.vocab) / spec.ntp.vocab
        null = (null_rng.random(n_null) < rate).astype(np.float64)
    else:
        null = null_rng.random(n_null)
    data = np.concatenate([wm, null])
    perm = make_rng(spec.ntp.seed, _S_SHUFFLE).permutation(spec.n)
    data = data[perm]
    if return_parts:
        return data, wm
    return data


# ---------------------------------------------------------------------------
# autoregressive token streams


def simulate_token_stream(eps: float, length: int, scheme: Scheme, cfg: NtpSimConfig,
                          key: "_verifier.VerifierKey", masking: bool = False) -> TokenStream:
    """Generate a token stream, watermarking each step with probability eps.

    Step t draws a fresh next-token distribution P_t; with probability
    eps (and, under ``masking``, only when the previous-m-token window
    has not been seen before in this stream) the token comes from the
    watermarked decoder with hash-derived xi_t = A(key, window); other
    steps sample from P_t directly.  Windows for the first m steps are
    left-padded with the fixed pad token, so eps = 1 without masking
    flags every position.  The context window is recorded as seen
    whether or not the step was watermarked.
    """
    if not (0.0 <= eps <= 1.0):
        raise DomainError("eps must lie in [0, 1]")
    m = key.m
    if length <= m:
        raise DomainError("length must exceed the context width m")

    rng = make_rng(cfg.seed, _S_STREAM)
    p_rows = []
    for step in _chunked(length):
        p_rows.append(_gen_ntp_rows(cfg.delta_dom, cfg.vocab, step, rng))
    p_rows = np.concatenate(p_rows) if len(p_rows) > 1 else p_rows[0]

    tokens = np.empty(length, dtype=np.int64)
    flags = np.zeros(length, dtype=bool)
    seen: set[tuple[int, ...]] = set()
    pad = _verifier.PAD_TOKEN
    for t in range(length):
        if t < m:
            ctx = (pad,) * (m - t) + tuple(int(x) for x in tokens[:t])
        else:
            ctx = tuple(int(x) for x in tokens[t - m:t])
        coin = rng.random() < eps
        if coin and not (masking and ctx in seen):
            xi = _verifier.derive_xi(scheme, key, ctx, cfg.vocab)
            if scheme.kind is SchemeKind.GREEN_RED_LIST:
                xi = _dc_replace(xi, gr_u=rng.random())
            tokens[t] = decode(scheme, NtpDistribution(p_rows[t]), xi)
            flags[t] = True
        else:
            tokens[t] = _categorical_rows(p_rows[t:t + 1], rng.random(1))[0]
        seen.add(ctx)
    return TokenStream(tokens, flags)


# ---------------------------------------------------------------------------
# edits


def apply_edits(stream: TokenStream, edit: EditSpec, vocab: int, m: int) -> EditOutcome:
    """Apply one edit pass and bookkeep the surviving watermarked fraction.

    ``m`` is the verification context-window length used for the
    bookkeeping.  The edit count is exactly round(rate * len) positions
    chosen without replacement, so stated bounds on true_eps hold
    deterministically: a fully watermarked stream under substitution at
    rate r keeps true_eps >= 1 - (m+1) r - O(1/len), since each
    substituted token can break at most m+1 windows.
    """
    if not (isinstance(m, int) and m >= 1):
        raise DomainError("m must be a positive integer")
    if not (isinstance(vocab, int) and vocab >= 2):
        raise DomainError("vocab must be an integer >= 2")
    rng = make_rng(edit.seed)
    tokens = stream.tokens.copy()
    flags = stream.wm_flags.copy()
    origin = np.arange(len(stream), dtype=np.int64)
    count = round(edit.rate * len(stream))

    if edit.kind == "substitution":
        pos = rng.choice(len(stream), size=count, replace=False)
        tokens[pos] = rng.integers(0, vocab, size=count)
        flags[pos] = False
        origin[pos] = -1
    elif edit.kind == "deletion":
        pos = rng.choice(len(stream), size=count, replace=False)
        keep = np.ones(len(stream), dtype=bool)
        keep[pos] = False
        tokens, flags, origin = tokens[keep], flags[keep], origin[keep]
    else:  # insertion
        slots = np.sort(rng.choice(len(stream) + 1, size=count, replace=False))
        new_tokens = rng.integers(0, vocab, size=count)
        tokens = np.insert(tokens, slots, new_tokens)
        flags = np.insert(flags, slots, False)
        origin = np.insert(origin, slots, -1)

    true_eps = _intact_fraction(origin, stream.wm_flags, m)
    return EditOutcome(TokenStream(tokens, flags), true_eps, origin)


def _intact_fraction(origin: np.ndarray, orig_flags: np.ndarray, m: int) -> float:
    """Fraction of positions t >= m whose window of m+1 tokens is intact.

    Intact means: every token in positions t-m..t survives from the
    original with consecutive original indices, and the original token
    at position t was watermark-decoded.  Exactly these positions yield
    watermarked pivotal statistics under verification.
    """
    length = origin.size
    if length <= m:
        return 0.0
    ok = origin >= 0
    step = ok[:-1] & ok[1:] & (origin[1:] == origin[:-1] + 1)
    wm_at = np.zeros(length, dtype=bool)
    wm_at[ok] = orig_flags[origin[ok]]
    runs = np.lib.stride_tricks.sliding_window_view(step, m).all(axis=1)
    intact = runs & wm_at[m:]
    return float(intact.mean())
