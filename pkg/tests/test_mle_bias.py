import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wmprop.errors import DomainError
from wmprop.mle_bias import (BinaryMixtureParams, MleBiasRow, limit_solution,
                             regularized_mle, run_mle_bias,
                             sample_binary_mixture)


def objective(e_hat, gamma, lam, eps, mu):
    p = (1 - eps) * gamma + eps * mu
    nll = 0.0
    if e_hat > 0:
        nll -= e_hat * math.log(p)
    if e_hat < 1:
        nll -= (1 - e_hat) * math.log(1 - p)
    return nll + lam * (mu * mu + eps * eps)


class TestParams:
    def test_defaults(self):
        p = BinaryMixtureParams(gamma=0.3, mu=0.9, eps=0.5, n=100)
        assert p.lam == 1e-2

    @pytest.mark.parametrize("kw", [
        dict(gamma=0.0, mu=0.9, eps=0.5, n=10),
        dict(gamma=0.9, mu=0.3, eps=0.5, n=10),   # mu below gamma
        dict(gamma=0.3, mu=1.0, eps=0.5, n=10),
        dict(gamma=0.3, mu=0.9, eps=1.5, n=10),
        dict(gamma=0.3, mu=0.9, eps=0.5, n=0),
        dict(gamma=0.3, mu=0.9, eps=0.5, n=10, lam=0.0),
    ])
    def test_rejects(self, kw):
        with pytest.raises(DomainError):
            BinaryMixtureParams(**kw)


class TestSampleBinaryMixture:
    def test_deterministic(self):
        p = BinaryMixtureParams(gamma=0.3, mu=0.9, eps=0.5, n=1000)
        assert sample_binary_mixture(p, seed=1) == sample_binary_mixture(p, seed=1)

    @pytest.mark.parametrize("eps,target,pinned", [
        (0.0, 0.3, 0.30232),
        (1.0, 0.9, 0.90107),
        (0.5, 0.6, 0.60158),
    ])
    def test_rate_tracks_mixture(self, eps, target, pinned):
        p = BinaryMixtureParams(gamma=0.3, mu=0.9, eps=eps, n=100_000)
        e_hat = sample_binary_mixture(p, seed=42)
        assert e_hat == pytest.approx(pinned, abs=5e-6)
        assert abs(e_hat - target) <= 3 * math.sqrt(target * (1 - target) / 100_000)


class TestRegularizedMle:
    def test_no_signal_short_circuit(self):
        sol = regularized_mle(0.25, 0.3, 1e-2)
        assert sol.no_signal
        assert sol.eps == 0.0
        assert sol.mu == 0.3
        sol = regularized_mle(0.3, 0.3, 1e-2)
        assert sol.no_signal

    def test_objective_field_is_consistent(self):
        sol = regularized_mle(0.6, 0.3, 1e-2)
        want = objective(0.6, 0.3, 1e-2, sol.eps, sol.mu)
        assert sol.objective == pytest.approx(want, abs=1e-12)

    def test_beats_other_feasible_points(self):
        sol = regularized_mle(0.6, 0.3, 1e-2)
        lim = limit_solution(0.6, 0.3)
        for eps, mu in [(0.5, 0.9), (lim.eps, lim.mu), (1.0, 0.6), (0.62, 0.78)]:
            assert sol.objective <= objective(0.6, 0.3, 1e-2, eps, mu) + 1e-12

    def test_eps06_near_limit(self):
        sol = regularized_mle(0.6, 0.3, 1e-2)
        lim = limit_solution(0.6, 0.3)
        gap = max(abs(sol.eps - lim.eps), abs(sol.mu - lim.mu))
        assert gap <= 0.02
        assert sol.kkt_residual <= 1e-4

    def test_gap_shrinks_with_ridge_weight(self):
        lim = limit_solution(0.5, 0.25)
        gaps = [abs(regularized_mle(0.5, 0.25, lam).eps - lim.eps)
                for lam in (1e-1, 1e-2, 1e-3)]
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[2] <= 1e-3

    def test_small_ridge_fits_level_set(self):
        sol = regularized_mle(0.5, 0.25, 1e-3)
        p = (1 - sol.eps) * 0.25 + sol.eps * sol.mu
        assert p == pytest.approx(0.5, abs=2e-3)

    @pytest.mark.parametrize("kw", [
        dict(e_hat=-0.1, gamma=0.3, lam=1e-2),
        dict(e_hat=1.1, gamma=0.3, lam=1e-2),
        dict(e_hat=0.5, gamma=0.0, lam=1e-2),
        dict(e_hat=0.5, gamma=1.0, lam=1e-2),
        dict(e_hat=0.5, gamma=0.3, lam=0.0),
    ])
    def test_rejects(self, kw):
        with pytest.raises(DomainError):
            regularized_mle(**kw)


class TestLimitSolution:
    def test_defining_equation(self):
        lim = limit_solution(0.6, 0.3)
        assert lim.residual <= 1e-12
        assert not lim.clamped
        assert lim.mu == pytest.approx(lim.x ** 2 + 0.3, abs=1e-15)
        assert lim.eps == pytest.approx(lim.x * math.sqrt(lim.x ** 2 + 0.3),
                                        abs=1e-15)
        assert lim.x ** 3 * math.sqrt(lim.x ** 2 + 0.3) == pytest.approx(0.3,
                                                                         abs=1e-12)

    @given(st.floats(0.11, 0.99), st.floats(0.05, 0.5))
    def test_residual_tiny_everywhere(self, e_hat, gamma):
        if e_hat < gamma:
            e_hat, gamma = gamma, e_hat
        lim = limit_solution(e_hat, gamma)
        assert lim.residual <= 1e-12
        assert 0.0 <= lim.eps <= 1.0
        assert 0.0 <= lim.mu <= 1.0

    def test_monotone_in_e_hat(self):
        eps = [limit_solution(e, 0.3).eps for e in np.linspace(0.31, 0.99, 20)]
        assert all(a < b for a, b in zip(eps, eps[1:]))

    def test_at_gamma(self):
        lim = limit_solution(0.3, 0.3)
        assert lim.eps <= 1e-12
        assert lim.mu == pytest.approx(0.3, abs=1e-12)
        assert not lim.clamped

    def test_clamps_mu(self):
        lim = limit_solution(1.0, 0.25)
        assert lim.clamped
        assert lim.mu == 1.0
        assert lim.eps == pytest.approx(0.92629, abs=1e-5)

    def test_below_gamma_raises(self):
        with pytest.raises(DomainError):
            limit_solution(0.2, 0.3)


class TestRunMleBias:
    def test_row_structure(self):
        params = BinaryMixtureParams(gamma=0.3, mu=0.9, eps=0.0, n=2000)
        eps_values = [0.0, 0.5, 1.0]
        rows = run_mle_bias(params, eps_values, seed=5)
        assert [r.true_eps for r in rows] == eps_values
        assert all(isinstance(r, MleBiasRow) for r in rows)
        assert all(0.0 <= r.e_hat <= 1.0 for r in rows)

    def test_ridge_weight_is_joint_likelihood_scale(self):
        params = BinaryMixtureParams(gamma=0.3, mu=0.9, eps=0.0, n=2000,
                                     lam=1e-2)
        row = run_mle_bias(params, [0.7], seed=5)[0]
        direct = regularized_mle(row.e_hat, 0.3, 1e-2 / 2000)
        assert row.mle_eps == direct.eps
        assert row.mle_mu == direct.mu

    def test_no_signal_rows_take_convention(self):
        params = BinaryMixtureParams(gamma=0.3, mu=0.9, eps=0.0, n=100_000)
        rows = run_mle_bias(params, np.linspace(0.0, 1.0, 21), seed=52)
        assert rows[0].e_hat == pytest.approx(0.29947, abs=5e-6)
        assert rows[0].mle_eps == 0.0
        assert rows[0].limit_eps == 0.0
        assert rows[0].limit_mu == 0.3

    def test_first_rows_regression(self):
        params = BinaryMixtureParams(gamma=0.3, mu=0.9, eps=0.0, n=100_000)
        rows = run_mle_bias(params, np.linspace(0.0, 1.0, 21), seed=51)
        want = [(0.0, 0.30109, 0.07006, 0.07007),
                (0.05, 0.33451, 0.24752, 0.24752),
                (0.1, 0.35942, 0.30822, 0.30822),
                (0.15, 0.3873, 0.36157, 0.36157)]
        for row, (te, eh, me, le) in zip(rows, want):
            assert row.true_eps == pytest.approx(te, abs=1e-12)
            assert row.e_hat == pytest.approx(eh, abs=5e-6)
            assert row.mle_eps == pytest.approx(me, abs=5e-6)
            assert row.limit_eps == pytest.approx(le, abs=5e-6)
