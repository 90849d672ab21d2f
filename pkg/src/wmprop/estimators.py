"""Estimators for the watermarked proportion of a mixed pivotal sample.

All samples arrive post-PIT, so the null law is U(0, 1) and F0(x) = x on
[0, 1].  Given data Y_1..Y_n from (1 - eps) F0 + eps F_P-bar and a
reference sample of purely watermarked pivots:

* estimate_ini: 1 - F-hat(delta)/F0(delta).  Biased upward-left by the
  watermarked mass below delta; cheap and reference-free.
* estimate_rfn: (F0(delta) - F-hat(delta)) / (F0(delta) - F-hat_P(delta)),
  the bias-corrected one-cutoff estimator.
* estimate_opt: the fixed point of the operator

      T(eps) = proj[(int v dF0 - int v dF-hat) / (int v dF0 - int v dF-hat_P)]

  with the variance-optimal weight v(eps, x) = (1 - g(x)) / ((1 - eps) + eps g(x))
  built from the density ratio g = dF-hat_P/dF0, fitted as a 500-bin
  histogram.  Because g is piecewise constant, every integral reduces to
  an exact sum over bins; a Monte Carlo mode for int v dF0 is kept for
  parity checks.  T is a contraction on [eps_min, 1 - eps_min] for
  healthy data, so the solver composes T from 0.9 and then switches to
  bracketing (the projected operator pins h(x) = x - T(x) to opposite
  signs at the interval ends), with a golden-section polish as fallback.

variance_bounds reports the plug-in standard deviations sigma* (for the
one-cutoff estimators at a given delta) and tau* (the optimal-weight
bound), plus the total variation distance between F0 and F-hat_P;
sigma* >= tau* always, and their gap is the efficiency left on the
table by a single cutoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Ecdf, ecdf_build
from .errors import (ConvergenceError, DegenerateDenominator, DomainError,
                     EmptyDataset)
from .rng import make_rng

_FP_TOL = 1e-6
_FP_INIT = 0.9
_FP_COMPOSITIONS = 20
_MC_PARITY_SEED = 741101


@dataclass(frozen=True)
class EstimatorConfig:
    deltas: tuple[float, ...] = (0.1, 0.01, 0.001)
    eps_min: float = 1e-3
    bins: int = 500
    mc_parity: bool = False
    mc_n: int = 1_000_000

    def __post_init__(self):
        object.__setattr__(self, "deltas", tuple(float(d) for d in self.deltas))
        if not self.deltas or any(not (0.0 < d <= 1.0) for d in self.deltas):
            raise DomainError("each delta must lie in (0, 1]")
        if not (0.0 < self.eps_min < 0.5):
            raise DomainError("eps_min must lie in (0, 0.5)")
        if not (isinstance(self.bins, int) and self.bins >= 2):
            raise DomainError("bins must be an integer >= 2")
        if not (isinstance(self.mc_n, int) and self.mc_n >= 1):
            raise DomainError("mc_n must be a positive integer")


@dataclass(frozen=True)
class DensityRatioHistogram:
    """Piecewise-constant g = dF-hat_P/dF0 on uniform bins over [0, 1]."""

    edges: np.ndarray
    heights: np.ndarray


@dataclass(frozen=True)
class Diagnostics:
    sigma_star: float
    tau_star: float
    tv: float


@dataclass(frozen=True)
class FixedPointSolution:
    eps: float
    residual: float
    evals: int


@dataclass(frozen=True)
class EstimateReport:
    """Estimates at every configured delta plus the fixed-point estimate.

    ``delta_star`` is the cutoff whose plug-in sigma* is smallest; the
    diagnostics are reported at that cutoff.
    """

    eps_ini: dict[float, float]
    eps_rfn: dict[float, float]
    eps_opt: float
    diagnostics: Diagnostics
    fixed_point_residual: float
    delta_star: float

    def to_json_dict(self) -> dict:
        return {
            "eps_ini": {format_delta(d): v for d, v in self.eps_ini.items()},
            "eps_rfn": {format_delta(d): v for d, v in self.eps_rfn.items()},
            "eps_opt": self.eps_opt,
            "sigma_star": self.diagnostics.sigma_star,
            "tau_star": self.diagnostics.tau_star,
            "tv": self.diagnostics.tv,
            "residual": self.fixed_point_residual,
            "delta_star": format_delta(self.delta_star),
        }


def format_delta(d: float) -> str:
    """Decimal (never scientific) rendering used for JSON keys and CSV cells."""
    return np.format_float_positional(d, unique=True, trim="-")


def is_binary_sample(values) -> bool:
    """True when every value is 0 or 1 (green-red pivotal statistics)."""
    return bool(np.isin(np.unique(np.asarray(values)), (0.0, 1.0)).all())


def estimate_ini(data: Ecdf, delta: float) -> float:
    """1 - F-hat(delta)/F0(delta); unprojected, may be negative."""
    _check_delta(delta)
    return 1.0 - data.query(delta) / delta


def estimate_rfn(data: Ecdf, wm_ref: Ecdf, delta: float) -> float:
    """(F0 - F-hat)(delta) / (F0 - F-hat_P)(delta); unprojected."""
    _check_delta(delta)
    den = delta - wm_ref.query(delta)
    if den == 0.0:
        raise DegenerateDenominator(
            "reference CDF equals the null CDF at delta; the watermark is "
            "indistinguishable at this cutoff")
    return (delta - data.query(delta)) / den


def _check_delta(delta: float):
    if not (0.0 < delta <= 1.0):
        raise DomainError("delta must lie in (0, 1]")


def fit_density_ratio(samples, bins: int) -> DensityRatioHistogram:
    """Histogram density of the reference sample w.r.t. the uniform null.

    Heights are count / (n * binwidth), so the fitted g integrates to 1
    exactly.
    """
    if not (isinstance(bins, int) and bins >= 2):
        raise DomainError("bins must be an integer >= 2")
    v = np.asarray(samples, dtype=np.float64)
    if v.size == 0:
        raise EmptyDataset("cannot fit a density ratio to zero samples")
    if not np.all(np.isfinite(v)) or np.any(v < 0.0) or np.any(v > 1.0):
        raise DomainError("samples must lie in [0, 1]")
    counts, edges = np.histogram(v, bins=bins, range=(0.0, 1.0))
    heights = counts * (bins / v.size)
    return DensityRatioHistogram(edges, heights)


# ---------------------------------------------------------------------------
# the fixed-point operator


@dataclass(frozen=True)
class _Weights:
    g: np.ndarray       # bin heights of the fitted density ratio
    w_null: np.ndarray  # null measure of each bin (exact widths or MC fractions)
    w_data: np.ndarray  # data sample fraction per bin
    w_ref: np.ndarray   # reference sample fraction per bin
    eps_min: float


def _bin_fracs(samples: np.ndarray, edges: np.ndarray) -> np.ndarray:
    counts, _ = np.histogram(samples, bins=edges)
    return counts / samples.size


def _make_weights(data: Ecdf, g_hat: DensityRatioHistogram, wm_ref: Ecdf,
                  cfg: EstimatorConfig,
                  mc_rng: np.random.Generator | None = None) -> _Weights:
    if cfg.mc_parity:
        rng = mc_rng if mc_rng is not None else make_rng(_MC_PARITY_SEED)
        w_null = _bin_fracs(rng.random(cfg.mc_n), g_hat.edges)
    else:
        w_null = np.diff(g_hat.edges)
    return _Weights(
        g=g_hat.heights,
        w_null=w_null,
        w_data=_bin_fracs(data.samples, g_hat.edges),
        w_ref=_bin_fracs(wm_ref.samples, g_hat.edges),
        eps_min=cfg.eps_min,
    )


def _clamp(x: float, eps_min: float) -> float:
    return min(max(x, eps_min), 1.0 - eps_min)


def _t_value(w: _Weights, eps: float) -> float:
    e = _clamp(eps, w.eps_min)
    v = (1.0 - w.g) / ((1.0 - e) + e * w.g)
    num = float((w.w_null - w.w_data) @ v)
    den = float((w.w_null - w.w_ref) @ v)
    if den == 0.0:
        raise DegenerateDenominator(
            "the reference is indistinguishable from the null at the bin "
            "level (density ratio identically 1)")
    return _clamp(num / den, w.eps_min)


def operator_T(eps: float, data: Ecdf, g_hat: DensityRatioHistogram, wm_ref: Ecdf,
               cfg: EstimatorConfig, mc_rng: np.random.Generator | None = None) -> float:
    """One application of the projected operator T at eps.

    Inputs outside [eps_min, 1 - eps_min] are clamped to the interval,
    matching the projection of the output.
    """
    return _t_value(_make_weights(data, g_hat, wm_ref, cfg, mc_rng), eps)


def estimate_opt(data: Ecdf, g_hat: DensityRatioHistogram, wm_ref: Ecdf,
                 cfg: EstimatorConfig, mc_rng: np.random.Generator | None = None,
                 max_evals: int = 200) -> FixedPointSolution:
    """Solve eps = T(eps) on [eps_min, 1 - eps_min].

    Composes T twenty times from 0.9, then bisects h(x) = x - T(x)
    (projection makes h <= 0 at the left end and >= 0 at the right end),
    finishing with a golden-section polish of |h| if bracketing stalls.
    Raises ConvergenceError with the best iterate attached if the
    residual never reaches tolerance within ``max_evals`` evaluations.
    """
    w = _make_weights(data, g_hat, wm_ref, cfg, mc_rng)
    state = {"evals": 0, "best": None, "best_r": math.inf}

    def t_of(x: float) -> float:
        if state["evals"] >= max_evals:
            raise ConvergenceError(
                f"fixed-point residual {state['best_r']:.3g} after {max_evals} "
                "operator evaluations",
                best=state["best"], residual=state["best_r"])
        state["evals"] += 1
        return _t_value(w, x)

    def h_of(x: float) -> float:
        h = x - t_of(x)
        if abs(h) < state["best_r"]:
            state["best"], state["best_r"] = x, abs(h)
        return h

    e = _FP_INIT
    for _ in range(_FP_COMPOSITIONS):
        e = t_of(e)
    h = h_of(e)
    if abs(h) <= _FP_TOL:
        return FixedPointSolution(e, abs(h), state["evals"])

    lo, hi = cfg.eps_min, 1.0 - cfg.eps_min
    if h < 0.0:
        lo = e
    else:
        hi = e
    while hi - lo > 1e-15:
        mid = 0.5 * (lo + hi)
        hm = h_of(mid)
        if abs(hm) <= _FP_TOL:
            return FixedPointSolution(mid, abs(hm), state["evals"])
        if hm < 0.0:
            lo = mid
        else:
            hi = mid

    # h jumped across zero without getting small: polish |h| locally
    span = max(hi - lo, 1e-9)
    a = max(cfg.eps_min, lo - 100 * span)
    b = min(1.0 - cfg.eps_min, hi + 100 * span)
    x, r = _golden_min(lambda t: abs(h_of(t)), a, b)
    if r <= _FP_TOL:
        return FixedPointSolution(x, r, state["evals"])
    raise ConvergenceError(
        f"fixed-point residual stalled at {state['best_r']:.3g}",
        best=state["best"], residual=state["best_r"])


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_min(f, a: float, b: float) -> tuple[float, float]:
    """Golden-section minimization; returns (argmin, min). May raise through f."""
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > 1e-12:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


# ---------------------------------------------------------------------------
# diagnostics


def variance_bounds(eps_hat: float, delta: float, data: Ecdf,
                    g_hat: DensityRatioHistogram, wm_ref: Ecdf) -> Diagnostics:
    """Plug-in sigma* (cutoff delta), tau* (optimal weight), and TV distance.

    sigma*^2 = F-bar(delta)(1 - F-bar(delta)) / (F0(delta) - F-hat_P(delta))^2
    tau*^2   = [ int (1 - g)^2 / ((1 - eps) + eps g) dF0 ]^(-1)
    tv       = (1/2) int |1 - g| dF0
    """
    if not (0.0 <= eps_hat < 1.0):
        raise DomainError("eps_hat must lie in [0, 1)")
    _check_delta(delta)
    fbar = data.query(delta)
    den = delta - wm_ref.query(delta)
    if den == 0.0:
        raise DegenerateDenominator(
            "reference CDF equals the null CDF at delta")
    sigma2 = fbar * (1.0 - fbar) / (den * den)

    widths = np.diff(g_hat.edges)
    g = g_hat.heights
    integ = float(widths @ ((1.0 - g) ** 2 / ((1.0 - eps_hat) + eps_hat * g)))
    if integ == 0.0:
        raise DegenerateDenominator("density ratio is 1 almost everywhere")
    tv = 0.5 * float(widths @ np.abs(1.0 - g))
    return Diagnostics(math.sqrt(sigma2), math.sqrt(1.0 / integ), tv)


# ---------------------------------------------------------------------------
# full pipeline


def estimate_report(data_samples, ref_samples, cfg: EstimatorConfig,
                    mc_rng: np.random.Generator | None = None) -> EstimateReport:
    """Run every estimator on a data sample against a watermarked reference.

    Raises DegenerateDenominator up front when the reference is binary
    (green-red pivots): both mixture components then live on {0, 1} and
    the proportion is not identifiable from pivotal statistics.
    """
    data = ecdf_build(data_samples)
    ref = ecdf_build(ref_samples)
    if is_binary_sample(ref.samples):
        raise DegenerateDenominator(
            "binary pivotal reference: null and watermarked laws share the "
            "two-point support {0, 1}, so the mixture proportion is not "
            "identifiable from these statistics")

    g_hat = fit_density_ratio(ref.samples, cfg.bins)
    eps_ini = {d: estimate_ini(data, d) for d in cfg.deltas}
    eps_rfn = {d: estimate_rfn(data, ref, d) for d in cfg.deltas}
    sol = estimate_opt(data, g_hat, ref, cfg, mc_rng)

    sig: dict[float, float] = {}
    for d in cfg.deltas:
        den = d - ref.query(d)
        if den == 0.0:
            continue
        fb = data.query(d)
        sig[d] = fb * (1.0 - fb) / (den * den)
    if not sig:
        raise DegenerateDenominator(
            "every configured delta has a degenerate sigma* denominator")
    delta_star = min(sig, key=sig.get)
    diag = variance_bounds(sol.eps, delta_star, data, g_hat, ref)
    return EstimateReport(eps_ini, eps_rfn, sol.eps, diag, sol.residual, delta_star)
