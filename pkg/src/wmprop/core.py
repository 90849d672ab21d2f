"""Core value types: next-token distributions and empirical CDFs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EmptyDataset

_SUM_TOL = 1e-12


@dataclass(frozen=True)
class NtpDistribution:
    """A next-token probability vector over a vocabulary of size >= 2.

    Entries are validated to lie in [0, 1] and sum to 1 within 1e-12;
    the backing array is made read-only so instances can be shared
    across threads.
    """

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 1 or p.size < 2:
            raise DomainError("need a 1-d probability vector over >= 2 tokens")
        if not np.all(np.isfinite(p)) or np.any(p < 0.0) or np.any(p > 1.0):
            raise DomainError("probabilities must lie in [0, 1]")
        total = float(p.sum())
        if abs(total - 1.0) > _SUM_TOL:
            raise DomainError(f"probabilities sum to {total!r}, not 1")
        p = p.copy()
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def vocab(self) -> int:
        return int(self.probs.size)

    def max_prob(self) -> float:
        return float(self.probs.max())


@dataclass(frozen=True)
class Ecdf:
    """Right-continuous empirical CDF with O(log n) point queries.

    Construct through :func:`ecdf_build`, which sorts and validates.
    """

    samples: np.ndarray  # sorted ascending, values in [0, 1]

    @property
    def n(self) -> int:
        return int(self.samples.size)

    def query(self, x):
        """F(x) = #{samples <= x} / n.  Scalar in, float out; array in, array out."""
        pos = np.searchsorted(self.samples, x, side="right")
        out = pos / self.n
        if np.ndim(x) == 0:
            return float(out)
        return out


def ecdf_query(e: Ecdf, x):
    """Free-function alias of :meth:`Ecdf.query`."""
    return e.query(x)


def ecdf_build(values) -> Ecdf:
    """Sort ``values`` into an :class:`Ecdf`.

    Raises EmptyDataset on zero samples and DomainError on values
    outside [0, 1] (pivotal statistics always live there).
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise DomainError("expected a 1-d sample array")
    if v.size == 0:
        raise EmptyDataset("cannot build an empirical CDF from zero samples")
    if not np.all(np.isfinite(v)) or np.any(v < 0.0) or np.any(v > 1.0):
        raise DomainError("samples must lie in [0, 1]")
    s = np.sort(v)
    s.setflags(write=False)
    return Ecdf(s)
