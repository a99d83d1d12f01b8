import math

import pytest

from satlms import (IntegratorConfig, MacroState, StabilityError,
                    SystemParams, asymptotic_cos_theta, asymptotic_mse,
                    critical_S, dqdt, drdt, integrate, steady_state, sweep_S)
from satlms.steadystate import (REGIME_CONVERGED, REGIME_DIVERGENT,
                                REGIME_UNSTABLE, SteadyResult)


def params(**kw):
    base = dict(rho2=1.0, sigma_g2=1.0, sigma_xi2=0.0, S=1.0, mu=0.5)
    base.update(kw)
    return SystemParams(**base)


SQRT_PI_2 = math.sqrt(math.pi / 2.0)


class TestCriticalS:
    def test_unit_params_machine_precision(self):
        got = critical_S(params())
        assert abs(got - SQRT_PI_2) <= math.ulp(SQRT_PI_2)

    def test_proportional_to_rho(self):
        assert critical_S(params(rho2=4.0)) == pytest.approx(2.0 * SQRT_PI_2, rel=1e-15)

    def test_proportional_to_sigma_g(self):
        assert critical_S(params(sigma_g2=0.25)) == pytest.approx(0.5 * SQRT_PI_2, rel=1e-15)


class TestAsymptoticMse:
    def test_minimum_location_and_value(self):
        p = params(S=math.sqrt(2.0 / math.pi))
        assert asymptotic_mse(p) == pytest.approx(1.0 - 2.0 / math.pi, rel=1e-14)

    def test_at_zero(self):
        assert asymptotic_mse(params(S=0.0)) == 1.0

    def test_with_noise(self):
        p = params(S=0.8, sigma_xi2=1.0)
        want = 0.64 - 1.6 * math.sqrt(2.0 / math.pi) + 2.0
        assert asymptotic_mse(p) == pytest.approx(want, rel=1e-14)

    def test_floor_inequality(self):
        floor = 1.0 - 2.0 / math.pi
        for S in [0.05 * k for k in range(0, 40)]:
            assert asymptotic_mse(params(S=S)) >= floor - 1e-12


def test_asymptotic_cos_theta_is_exactly_one():
    assert asymptotic_cos_theta() == 1.0


class TestSteadyState:
    def test_linear_noiseless(self):
        res = steady_state(params(S=math.inf))
        assert res.regime == REGIME_CONVERGED
        assert res.Q_star == pytest.approx(1.0, abs=1e-12)
        assert res.r_star == pytest.approx(1.0, abs=1e-12)
        assert res.mse_star == pytest.approx(0.0, abs=1e-12)
        assert res.msd_norm_star == pytest.approx(0.0, abs=1e-12)

    def test_linear_noisy(self):
        res = steady_state(params(S=math.inf, sigma_xi2=1.0))
        assert res.regime == REGIME_CONVERGED
        assert res.r_star == pytest.approx(1.0, abs=1e-12)
        assert res.Q_star == pytest.approx(4.0 / 3.0, rel=1e-12)
        assert res.mse_star == pytest.approx(4.0 / 3.0, rel=1e-12)

    def test_linear_noisy_matches_integration(self):
        p = params(S=math.inf, sigma_xi2=1.0)
        res = steady_state(p)
        traj = integrate(p, MacroState(0.0, 0.0),
                         IntegratorConfig(t_end=200.0, dt=0.01, record_stride=1000))
        assert traj.Q[-1] == pytest.approx(res.Q_star, abs=1e-4)
        assert traj.mse[-1] == pytest.approx(res.mse_star, abs=1e-4)

    def test_divergent_below_critical(self):
        res = steady_state(params(S=1.0))
        assert res.regime == REGIME_DIVERGENT
        assert res.cos_theta_limit == 1.0
        assert res.mse_asymptotic == pytest.approx(asymptotic_mse(params(S=1.0)), rel=1e-15)
        assert res.Q_star is None

    def test_at_critical_value_divergent(self):
        res = steady_state(params(S=SQRT_PI_2))
        assert res.regime == REGIME_DIVERGENT

    def test_s_zero_divergent(self):
        res = steady_state(params(S=0.0))
        assert res.regime == REGIME_DIVERGENT
        assert res.mse_asymptotic == pytest.approx(1.0, rel=1e-15)

    def test_converged_residuals(self):
        for S in (1.3, 1.5, 3.0, 10.0):
            for mu in (0.1, 0.5, 1.0):
                p = params(S=S, mu=mu)
                res = steady_state(p)
                assert res.regime == REGIME_CONVERGED
                st = MacroState(Q=res.Q_star, r=res.r_star)
                assert abs(drdt(p, st)) <= 1e-10
                assert abs(dqdt(p, st)) <= 1e-10

    def test_r_star_at_least_sigma_g2(self):
        for S in (1.3, 2.0, 5.0):
            res = steady_state(params(S=S))
            assert res.r_star >= params().sigma_g2

    def test_converged_matches_long_integration(self):
        p = params(S=3.0, mu=0.1)
        res = steady_state(p)
        traj = integrate(p, MacroState(0.0, 0.0),
                         IntegratorConfig(t_end=1e4, dt=0.05, record_stride=10 ** 9))
        assert traj.mse[-1] == pytest.approx(res.mse_star, abs=1e-4)
        assert traj.Q[-1] == pytest.approx(res.Q_star, abs=1e-4)
        assert traj.r[-1] == pytest.approx(res.r_star, abs=1e-4)

    def test_unstable_step_size(self):
        with pytest.raises(StabilityError):
            steady_state(params(S=math.inf, mu=2.0))
        with pytest.raises(StabilityError):
            steady_state(params(S=math.inf, mu=1.1, rho2=2.0))


class TestSweep:
    def test_regime_flips_once_at_critical(self):
        grid = [0.5 + 0.05 * k for k in range(0, 41)]
        entries = sweep_S(params(), grid)
        regimes = [r.regime for _, r in entries]
        flips = sum(1 for a, b in zip(regimes, regimes[1:]) if a != b)
        assert flips == 1
        last_div = max(S for S, r in entries if r.regime == REGIME_DIVERGENT)
        first_conv = min(S for S, r in entries if r.regime == REGIME_CONVERGED)
        assert last_div < SQRT_PI_2 < first_conv

    def test_Q_decreases_toward_linear_value(self):
        grid = [1.3, 1.5, 2.0, 3.0, 5.0, 10.0]
        entries = sweep_S(params(), grid)
        qs = [r.Q_star for _, r in entries]
        assert all(b < a for a, b in zip(qs, qs[1:]))
        assert qs[-1] == pytest.approx(1.0, abs=1e-2)

    def test_divergent_mse_mu_independent_converged_not(self):
        grid = [0.8, 2.0]
        by_mu = {mu: dict(sweep_S(params(mu=mu), grid)) for mu in (0.1, 1.0)}
        div_a = by_mu[0.1][0.8].mse_asymptotic
        div_b = by_mu[1.0][0.8].mse_asymptotic
        assert div_a == div_b
        conv_a = by_mu[0.1][2.0].mse_star
        conv_b = by_mu[1.0][2.0].mse_star
        assert abs(conv_a - conv_b) > 1e-4

    def test_non_increasing_grid_rejected(self):
        with pytest.raises(ValueError):
            sweep_S(params(), [1.0, 1.0])

    def test_unstable_points_do_not_abort(self, monkeypatch):
        import satlms.steadystate as ss

        real = ss.steady_state

        def flaky(p):
            if p.S == 2.0:
                raise StabilityError("injected")
            return real(p)

        monkeypatch.setattr(ss, "steady_state", flaky)
        entries = ss.sweep_S(params(), [1.0, 2.0, 3.0])
        assert [r.regime for _, r in entries] == [
            REGIME_DIVERGENT, REGIME_UNSTABLE, REGIME_CONVERGED]


class TestBracketCertificate:
    def test_residual_changes_sign_across_root(self):
        from satlms.steadystate import _residual
        p = params(S=2.0)
        res = steady_state(p)
        lo = res.Q_star * (1.0 - 1e-6)
        hi = res.Q_star * (1.0 + 1e-6)
        assert _residual(p, lo) * _residual(p, hi) < 0
