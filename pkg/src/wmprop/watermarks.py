"""Decoders, pivotal statistics, and reference CDFs for three watermark schemes.

Each scheme couples a next-token distribution P with step-level
pseudorandomness xi.  Unwatermarked text corresponds to sampling the
token independently of xi, so the pivotal statistic computed from
(token, xi) has a known null law; watermarked text ties the token to xi
and shifts that law.

Gumbel-max
    xi is a vector of per-token uniforms U_w.  The decoder emits
    argmax_w log(U_w) / P_w, which is distributed exactly according to P
    (the Gumbel-max trick).  The pivotal statistic is U_w for the emitted
    token: U(0, 1) under the null, CDF F_P(r) = sum_w P_w r^(1/P_w)
    under the watermark.

Inverse transform
    xi = (U, pi) with U uniform and pi a uniformly random permutation.
    The decoder inverts the pi-permuted CDF of P at U.  The pivotal
    statistic is 1 - |U - eta_pi(w)| with eta_pi(w) = (pi(w) - 1)/(|W| - 1)
    for 1-based ranks pi(w).  In the large-vocabulary limit its null CDF
    is r^2 and its watermarked CDF is ((1 - (1 - r)/P_(1)) clamped)^2,
    where P_(1) is the largest entry of P.  The PIT below uses the
    asymptotic null law.

Green-red list
    xi is a green subset G with |G| = round(gamma |W|).  The decoder
    samples from the tilted distribution proportional to
    P_w exp(delta 1{w in G}).  The pivotal statistic 1{w in G} is
    Bernoulli under both laws, which is exactly why proportion
    estimation degenerates for this scheme.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import NtpDistribution
from .errors import DomainError


class SchemeKind(enum.Enum):
    GUMBEL_MAX = "gumbel"
    INVERSE_TRANSFORM = "inverse"
    GREEN_RED_LIST = "greenred"


@dataclass(frozen=True)
class GreenRedParams:
    """Green-list fraction gamma in (0, 1) and tilt delta_gr >= 0."""

    gamma: float = 0.5
    delta_gr: float = 2.0

    def __post_init__(self):
        if not (0.0 < self.gamma < 1.0):
            raise DomainError("gamma must lie in (0, 1)")
        if not (self.delta_gr >= 0.0 and math.isfinite(self.delta_gr)):
            raise DomainError("delta_gr must be a finite nonnegative tilt")


@dataclass(frozen=True)
class Scheme:
    """A watermark scheme tag plus any scheme parameters it needs."""

    kind: SchemeKind
    greenred: GreenRedParams | None = None

    def __post_init__(self):
        if self.kind is SchemeKind.GREEN_RED_LIST and self.greenred is None:
            object.__setattr__(self, "greenred", GreenRedParams())

    @staticmethod
    def gumbel_max() -> "Scheme":
        return Scheme(SchemeKind.GUMBEL_MAX)

    @staticmethod
    def inverse_transform() -> "Scheme":
        return Scheme(SchemeKind.INVERSE_TRANSFORM)

    @staticmethod
    def green_red(gamma: float = 0.5, delta_gr: float = 2.0) -> "Scheme":
        return Scheme(SchemeKind.GREEN_RED_LIST, GreenRedParams(gamma, delta_gr))


@dataclass(frozen=True)
class PseudoRandomness:
    """Step-level xi; only the fields relevant to one scheme are set.

    gumbel_us
        Per-token uniforms.  Either a dense float array of length |W| or
        a lazy hash-backed provider exposing ``take(indices)`` and
        ``__getitem__`` (see ``verifier.derive_xi``), so a verification
        step never materializes the whole vocabulary.
    inv_u, inv_perm
        The decoder uniform and the 0-based rank array of pi
        (``inv_perm[w]`` is the rank of token w, so the 1-based pi(w) of
        the formulas equals ``inv_perm[w] + 1``).
    green_mask
        Boolean vocabulary mask of the green set.
    gr_u
        The sampling uniform consumed by the stochastic green-red
        decoder.  Hash-derived xi leaves it None because a verifier
        never decodes; simulation must populate it before decoding.
    """

    gumbel_us: object | None = None
    inv_u: float | None = None
    inv_perm: np.ndarray | None = None
    green_mask: np.ndarray | None = None
    gr_u: float | None = None


def _take_us(us, indices: np.ndarray) -> np.ndarray:
    return np.asarray(us.take(indices), dtype=np.float64)


def decode(scheme: Scheme, p: NtpDistribution, xi: PseudoRandomness) -> int:
    """Emit one token from P under the scheme's watermarked decoder.

    Gumbel-max and inverse transform are deterministic given xi; the
    green-red decoder consumes the sampling uniform ``xi.gr_u``.
    Argmax ties (measure zero under continuous xi) go to the lowest
    token index.
    """
    probs = p.probs
    if scheme.kind is SchemeKind.GUMBEL_MAX:
        if xi.gumbel_us is None:
            raise DomainError("gumbel decoding needs xi.gumbel_us")
        if isinstance(xi.gumbel_us, np.ndarray) and xi.gumbel_us.size != probs.size:
            raise DomainError("xi.gumbel_us length must equal the vocabulary size")
        support = np.flatnonzero(probs)
        us = _take_us(xi.gumbel_us, support)
        with np.errstate(divide="ignore"):
            scores = np.log(us) / probs[support]
        return int(support[np.argmax(scores)])

    if scheme.kind is SchemeKind.INVERSE_TRANSFORM:
        if xi.inv_perm is None or xi.inv_u is None:
            raise DomainError("inverse-transform decoding needs xi.inv_u and xi.inv_perm")
        if xi.inv_perm.size != probs.size:
            raise DomainError("xi.inv_perm length must equal the vocabulary size")
        order = np.argsort(xi.inv_perm)  # token at each rank
        csum = np.cumsum(probs[order])
        r = int(np.searchsorted(csum, xi.inv_u, side="left"))
        r = min(r, order.size - 1)  # guard float round-off at the top
        return int(order[r])

    if scheme.kind is SchemeKind.GREEN_RED_LIST:
        if xi.green_mask is None:
            raise DomainError("green-red decoding needs xi.green_mask")
        if xi.green_mask.size != probs.size:
            raise DomainError("xi.green_mask length must equal the vocabulary size")
        if xi.gr_u is None:
            raise DomainError("green-red decoding is stochastic: set xi.gr_u")
        tilt = math.exp(scheme.greenred.delta_gr)
        tilted = np.where(xi.green_mask, probs * tilt, probs)
        csum = np.cumsum(tilted)
        r = int(np.searchsorted(csum, xi.gr_u * csum[-1], side="left"))
        return min(r, probs.size - 1)

    raise DomainError(f"unknown scheme kind {scheme.kind!r}")


def pivotal(scheme: Scheme, w: int, xi: PseudoRandomness) -> float:
    """The pivotal statistic Y computed from an emitted token and xi."""
    if scheme.kind is SchemeKind.GUMBEL_MAX:
        return float(xi.gumbel_us[w])
    if scheme.kind is SchemeKind.INVERSE_TRANSFORM:
        vocab = xi.inv_perm.size
        if vocab < 2:
            raise DomainError("inverse-transform pivots need a vocabulary of size >= 2")
        eta = float(xi.inv_perm[w]) / (vocab - 1)
        return 1.0 - abs(float(xi.inv_u) - eta)
    if scheme.kind is SchemeKind.GREEN_RED_LIST:
        return float(bool(xi.green_mask[w]))
    raise DomainError(f"unknown scheme kind {scheme.kind!r}")


def pit(scheme: Scheme, y):
    """Map a pivotal value through its null CDF so the null law is U(0, 1).

    Gumbel-max pivots are already uniform under the null; inverse
    transform uses the asymptotic null CDF r^2; green-red pivots are
    binary and pass through unchanged.
    """
    if scheme.kind is SchemeKind.INVERSE_TRANSFORM:
        return y * y
    return y


def green_size(gamma: float, vocab: int) -> int:
    """|G| = round(gamma * vocab) with round-half-to-even; never empty or full."""
    size = round(gamma * vocab)
    if not (0 < size < vocab):
        raise DomainError("green set would be empty or the whole vocabulary")
    return size


def green_red_mu(p: NtpDistribution, green_mask: np.ndarray, delta_gr: float) -> float:
    """P(emitted token is green) under the tilted green-red decoder."""
    g = float(p.probs[green_mask].sum())
    tilt = math.exp(delta_gr)
    return g * tilt / (g * tilt + (1.0 - g))


def alt_cdf(scheme: Scheme, p: NtpDistribution, r, green_mask: np.ndarray | None = None):
    """CDF of the watermarked pivotal statistic at r, in the raw pivotal domain.

    Gumbel-max: sum_w P_w r^(1/P_w) over the support of P (exact).
    Inverse transform: ((1 - (1 - r)/P_(1)) clamped to [0, 1])^2, the
    large-vocabulary limit.
    Green-red: the Bernoulli(mu) CDF for the supplied green set, with
    mu = green_red_mu(p, green_mask, delta_gr).

    Accepts scalar or array r in [0, 1].
    """
    r_arr = np.asarray(r, dtype=np.float64)
    if np.any(r_arr < 0.0) or np.any(r_arr > 1.0):
        raise DomainError("r must lie in [0, 1]")

    if scheme.kind is SchemeKind.GUMBEL_MAX:
        support = p.probs[p.probs > 0.0]
        powers = np.power(r_arr[..., None], 1.0 / support)
        out = powers @ support
    elif scheme.kind is SchemeKind.INVERSE_TRANSFORM:
        p1 = p.max_prob()
        base = np.clip(1.0 - (1.0 - r_arr) / p1, 0.0, 1.0)
        out = base * base
    elif scheme.kind is SchemeKind.GREEN_RED_LIST:
        if green_mask is None:
            raise DomainError("green-red alt_cdf needs the realized green set")
        mu = green_red_mu(p, green_mask, scheme.greenred.delta_gr)
        out = np.where(r_arr >= 1.0, 1.0, 1.0 - mu)
    else:
        raise DomainError(f"unknown scheme kind {scheme.kind!r}")

    if np.ndim(r) == 0:
        return float(out)
    return out
