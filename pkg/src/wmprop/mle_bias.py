"""Ridge-regularized maximum likelihood for binary pivotal mixtures.

Green-red pivotal statistics are Bernoulli under both the null (rate
gamma) and the watermark (rate mu), so a proportion-eps mixture is
Ber(p) with p = (1 - eps) * gamma + eps * mu and only p is identifiable:
every (eps, mu) on the level set {(1 - eps) gamma + eps mu = p} fits the
data equally well.  Adding a ridge penalty makes the optimum unique but
pins it to a deterministic point of the level set that generally differs
from the truth.  With e_hat the observed frequency of ones and
d = e_hat - gamma > 0, the penalized minimizer converges, as the ridge
weight tends to zero, to

    eps = x * sqrt(x^2 + gamma),   mu = x^2 + gamma,

where x >= 0 solves x^3 * sqrt(x^2 + gamma) = d.  regularized_mle solves
the penalized problem directly and limit_solution evaluates the closed
form, so the systematic bias can be demonstrated and cross-checked from
two independent routes.

Eliminating one first-order condition against the other shows every
interior stationary point of the penalized objective satisfies
eps^2 = mu * (mu - gamma) exactly, for every ridge weight.  The solver
therefore enumerates candidates: scalar root-finding along that curve,
exact convex minimization on the box edges, and a dense-grid seed
polished by damped projected Newton as an independent check, returning
the candidate with the smallest objective.  The enumeration matters for
tiny weights, where the objective is nearly flat along the level set
{(1 - eps) gamma + eps mu = e_hat} and 2-D descent can stall anywhere
on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError
from .rng import derive_key, make_rng

_GRID = 200
_NEWTON_ITERS = 50
_KKT_TOL = 1e-10
_P_TINY = 1e-12
_S_MLE = 7


@dataclass(frozen=True)
class BinaryMixtureParams:
    """One binary-mixture experiment: Ber((1 - eps) gamma + eps mu), n draws."""

    gamma: float
    mu: float
    eps: float
    n: int
    lam: float = 1e-2

    def __post_init__(self):
        if not (0.0 < self.gamma < self.mu < 1.0):
            raise DomainError("need 0 < gamma < mu < 1")
        if not (0.0 <= self.eps <= 1.0):
            raise DomainError("eps must lie in [0, 1]")
        if not (isinstance(self.n, int) and self.n >= 1):
            raise DomainError("n must be a positive integer")
        if not self.lam > 0.0:
            raise DomainError("lam must be positive")


@dataclass(frozen=True)
class MleSolution:
    eps: float
    mu: float
    objective: float
    kkt_residual: float
    no_signal: bool


@dataclass(frozen=True)
class LimitSolution:
    eps: float
    mu: float
    x: float
    residual: float
    clamped: bool


@dataclass(frozen=True)
class MleBiasRow:
    true_eps: float
    e_hat: float
    mle_eps: float
    mle_mu: float
    limit_eps: float
    limit_mu: float


def sample_binary_mixture(params: BinaryMixtureParams, seed: int) -> float:
    """Mean of n draws of Ber((1 - eps) gamma + eps mu)."""
    p = (1.0 - params.eps) * params.gamma + params.eps * params.mu
    rng = make_rng(seed, _S_MLE)
    return float((rng.random(params.n) < p).mean())


def _nll(e_hat: float, p):
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(e_hat > 0.0, -e_hat * np.log(p), 0.0)
        b = np.where(e_hat < 1.0, -(1.0 - e_hat) * np.log1p(-np.asarray(p)), 0.0)
    return a + b


def _objective(e_hat: float, gamma: float, lam: float, eps, mu):
    p = (1.0 - np.asarray(eps)) * gamma + np.asarray(eps) * np.asarray(mu)
    return _nll(e_hat, p) + lam * (np.asarray(mu) ** 2 + np.asarray(eps) ** 2)


def _grad_hess(e_hat, gamma, lam, eps, mu):
    p = min(max((1.0 - eps) * gamma + eps * mu, _P_TINY), 1.0 - _P_TINY)
    d1 = e_hat / p - (1.0 - e_hat) / (1.0 - p)
    d2 = -e_hat / p**2 - (1.0 - e_hat) / (1.0 - p) ** 2
    g = np.array([-d1 * (mu - gamma) + 2.0 * lam * eps,
                  -d1 * eps + 2.0 * lam * mu])
    h = np.array([[-d2 * (mu - gamma) ** 2 + 2.0 * lam,
                   -d2 * (mu - gamma) * eps - d1],
                  [-d2 * (mu - gamma) * eps - d1,
                   -d2 * eps**2 + 2.0 * lam]])
    return g, h


def _kkt_residual(z: np.ndarray, g: np.ndarray) -> float:
    # projected-gradient norm: the right first-order measure on a box
    return float(np.max(np.abs(z - np.clip(z - g, 0.0, 1.0))))


def _d_value(e_hat: float, p: float) -> float:
    p = min(max(p, _P_TINY), 1.0 - _P_TINY)
    return e_hat / p - (1.0 - e_hat) / (1.0 - p)


def _bisect_increasing(fn, lo: float, hi: float, iters: int = 200) -> float:
    """Root of an increasing scalar function with fn(lo) < 0 < fn(hi)."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if fn(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _curve_roots(e_hat: float, gamma: float, lam: float) -> list[tuple[float, float]]:
    """Interior stationary points, all on eps^2 = mu (mu - gamma).

    Parametrized by mu = x^2 + gamma, eps = x sqrt(x^2 + gamma); the
    remaining condition is r(x) = 2 lam sqrt(x^2 + gamma) - D(p(x)) x = 0
    with p(x) = gamma + x^3 sqrt(x^2 + gamma).  A dense scan brackets
    every sign change and bisection resolves each root.
    """

    def r(x: float) -> float:
        s = math.sqrt(x * x + gamma)
        return 2.0 * lam * s - _d_value(e_hat, gamma + x**3 * s) * x

    x_max = math.sqrt(1.0 - gamma)
    xs = np.linspace(1e-9, x_max, 512)
    vals = [r(float(x)) for x in xs]
    roots = []
    for a, b, va, vb in zip(xs[:-1], xs[1:], vals[:-1], vals[1:]):
        if va == 0.0:
            roots.append(float(a))
        elif va * vb < 0.0:
            sign = 1.0 if vb > va else -1.0
            roots.append(_bisect_increasing(lambda x: sign * r(x),
                                            float(a), float(b)))
    out = []
    for x in roots:
        mu = x * x + gamma
        eps = x * math.sqrt(x * x + gamma)
        if 0.0 <= eps <= 1.0 and 0.0 <= mu <= 1.0:
            out.append((eps, mu))
    return out


def _edge_candidates(e_hat: float, gamma: float, lam: float) -> list[tuple[float, float]]:
    """Exact minimizers of the objective restricted to the box edges.

    Each restriction is strictly convex in the free coordinate, so its
    derivative is increasing and bisection is exact.  The eps = 0 edge
    reduces to the corner (0, 0); the mu = 0 edge only worsens the fit,
    so its minimum also sits at (0, 0).
    """
    cands = [(0.0, 0.0)]

    def fp_mu1(eps: float) -> float:
        p = (1.0 - eps) * gamma + eps
        return -_d_value(e_hat, p) * (1.0 - gamma) + 2.0 * lam * eps

    cands.append((1.0, 1.0) if fp_mu1(1.0) <= 0.0
                 else (_bisect_increasing(fp_mu1, 0.0, 1.0), 1.0))

    def fp_eps1(mu: float) -> float:
        return -_d_value(e_hat, mu) + 2.0 * lam * mu

    if fp_eps1(1.0) <= 0.0:
        cands.append((1.0, 1.0))
    else:
        cands.append((1.0, _bisect_increasing(fp_eps1, _P_TINY, 1.0)))
    return cands


def regularized_mle(e_hat: float, gamma: float, lam: float) -> MleSolution:
    """Minimize -e_hat log p - (1 - e_hat) log(1 - p) + lam (mu^2 + eps^2).

    Minimization runs over (eps, mu) in [0, 1]^2 with p = (1 - eps) gamma
    + eps mu.  Candidates are enumerated exhaustively: every interior
    stationary point lies on the curve eps^2 = mu (mu - gamma) and is
    found by scalar root-finding, the box-edge restrictions are convex
    and solved by bisection, and a dense grid polished with damped
    projected Newton cross-checks the enumeration.  The returned point is
    the candidate with the smallest objective; its projected-gradient
    residual (the correct first-order measure when the minimizer sits on
    a box edge; mu = 1 is common for large e_hat) is reported.  When
    e_hat <= gamma the observed rate carries no evidence of watermarking;
    the conventional value (0, gamma) is returned with ``no_signal`` set,
    skipping the optimization.

    ``lam`` weighs the ridge against the per-sample average log
    likelihood.  A weight stated against the joint likelihood of n draws
    must be divided by n before calling (run_mle_bias does this).
    """
    if not (0.0 <= e_hat <= 1.0):
        raise DomainError("e_hat must lie in [0, 1]")
    if not (0.0 < gamma < 1.0):
        raise DomainError("gamma must lie in (0, 1)")
    if not lam > 0.0:
        raise DomainError("lam must be positive")
    if e_hat <= gamma:
        z = np.array([0.0, gamma])
        g, _ = _grad_hess(e_hat, gamma, lam, z[0], z[1])
        return MleSolution(0.0, gamma,
                           float(_objective(e_hat, gamma, lam, 0.0, gamma)),
                           _kkt_residual(z, g), no_signal=True)

    grid = np.linspace(0.0, 1.0, _GRID)
    eg, mg = np.meshgrid(grid, grid, indexing="ij")
    vals = _objective(e_hat, gamma, lam, eg, mg)
    i, j = np.unravel_index(np.argmin(vals), vals.shape)
    z = np.array([grid[i], grid[j]])

    f_z = float(_objective(e_hat, gamma, lam, z[0], z[1]))
    for _ in range(_NEWTON_ITERS):
        g, h = _grad_hess(e_hat, gamma, lam, z[0], z[1])
        if _kkt_residual(z, g) <= _KKT_TOL:
            break
        det = h[0, 0] * h[1, 1] - h[0, 1] * h[1, 0]
        if det > 0.0 and h[0, 0] > 0.0:
            step = -np.linalg.solve(h, g)
        else:
            step = -g
        t = 1.0
        for _ in range(40):
            cand = np.clip(z + t * step, 0.0, 1.0)
            f_c = float(_objective(e_hat, gamma, lam, cand[0], cand[1]))
            if f_c < f_z or np.array_equal(cand, z):
                break
            t *= 0.5
        if f_c >= f_z:
            break
        z, f_z = cand, f_c

    best = (float(z[0]), float(z[1]))
    for cand in _curve_roots(e_hat, gamma, lam) + _edge_candidates(e_hat, gamma, lam):
        f_c = float(_objective(e_hat, gamma, lam, cand[0], cand[1]))
        if f_c < f_z:
            best, f_z = cand, f_c

    g, _ = _grad_hess(e_hat, gamma, lam, best[0], best[1])
    return MleSolution(best[0], best[1], f_z,
                       _kkt_residual(np.array(best), g), no_signal=False)


def limit_solution(e_hat: float, gamma: float) -> LimitSolution:
    """Vanishing-ridge limit of the penalized MLE, in closed form.

    Solves the strictly increasing scalar equation x^3 sqrt(x^2 + gamma)
    = e_hat - gamma by bisection on [0, x_hi], with x_hi the smallest
    power of two whose left-hand side exceeds the target, then maps x to
    (eps, mu) = (x sqrt(x^2 + gamma), x^2 + gamma).  Coordinates that
    land outside [0, 1] are clipped and flagged.  Requires e_hat >= gamma
    (at equality x = 0 and the limit is (0, gamma)).
    """
    if not (0.0 <= e_hat <= 1.0):
        raise DomainError("e_hat must lie in [0, 1]")
    if not (0.0 < gamma < 1.0):
        raise DomainError("gamma must lie in (0, 1)")
    d = e_hat - gamma
    if d < 0.0:
        raise DomainError("limit requires e_hat >= gamma (no watermark signal)")

    def q(x: float) -> float:
        return x**3 * math.sqrt(x * x + gamma)

    x_hi = 1.0
    while q(x_hi) <= d:
        x_hi *= 2.0
    while x_hi > 2.0**-30 and q(x_hi / 2.0) > d:
        x_hi /= 2.0
    lo, hi = 0.0, x_hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if q(mid) < d:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    eps = x * math.sqrt(x * x + gamma)
    mu = x * x + gamma
    clamped = eps > 1.0 or mu > 1.0
    return LimitSolution(min(eps, 1.0), min(mu, 1.0), x, abs(q(x) - d), clamped)


def run_mle_bias(params: BinaryMixtureParams, eps_values, seed: int) -> list[MleBiasRow]:
    """Penalized MLE vs its vanishing-ridge limit across true proportions.

    One dataset of params.n draws per entry of eps_values, each from its
    own derived stream, so rows are reproducible independently of
    ordering.  params.lam weighs the ridge against the joint negative
    log likelihood of all n draws, so the per-sample weight handed to
    regularized_mle is params.lam / params.n.  When a dataset shows no
    signal (e_hat <= gamma) both the MLE and the limit columns take the
    conventional value (0, gamma).
    """
    rows = []
    for i, eps in enumerate(float(e) for e in eps_values):
        e_hat = sample_binary_mixture(replace(params, eps=eps),
                                      derive_key(seed, _S_MLE, i))
        sol = regularized_mle(e_hat, params.gamma, params.lam / params.n)
        if sol.no_signal:
            lim_eps, lim_mu = 0.0, params.gamma
        else:
            lim = limit_solution(e_hat, params.gamma)
            lim_eps, lim_mu = lim.eps, lim.mu
        rows.append(MleBiasRow(eps, e_hat, sol.eps, sol.mu, lim_eps, lim_mu))
    return rows
