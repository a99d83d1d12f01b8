import math

import numpy as np
import pytest

from satlms import (IntegratorConfig, MacroState, NonFiniteError, SystemParams,
                    dqdt, drdt, integrate, mse)


def params(**kw):
    base = dict(rho2=1.0, sigma_g2=1.0, sigma_xi2=0.0, S=1.0, mu=0.5)
    base.update(kw)
    return SystemParams(**base)


ORIGIN = MacroState(Q=0.0, r=0.0)


class TestDrdt:
    def test_q_zero_limit(self):
        assert drdt(params(), MacroState(Q=0.0, r=0.0)) == 0.5

    def test_linear_fixed_point(self):
        assert drdt(params(S=math.inf), MacroState(Q=1.0, r=1.0)) == 0.0

    def test_generic_value(self):
        p = params(mu=0.1)
        want = 0.1 * (1.0 - 0.5 * math.erf(1.0 / math.sqrt(2.0)))
        assert drdt(p, MacroState(Q=1.0, r=0.5)) == pytest.approx(want, rel=1e-14)


class TestDqdt:
    def test_origin(self):
        assert dqdt(params(), ORIGIN) == pytest.approx(0.25, rel=1e-14)

    def test_origin_equals_mu2_mse(self):
        # At w = 0 the cross term vanishes, so dQ/dt = mu^2 rho2 * MSE.
        for S in (0.5, 1.0, 3.0, math.inf):
            for sx2 in (0.0, 1.0):
                p = params(S=S, sigma_xi2=sx2)
                want = p.mu ** 2 * p.rho2 * mse(p, ORIGIN)
                assert dqdt(p, ORIGIN) == pytest.approx(want, rel=1e-12)

    def test_linear_fixed_point(self):
        assert dqdt(params(S=math.inf), MacroState(Q=1.0, r=1.0)) == 0.0

    def test_s_zero_at_origin_matches_limit(self):
        p0 = params(S=0.0, sigma_xi2=0.5)
        want = p0.mu ** 2 * p0.rho2 * (p0.rho2 * p0.sigma_g2 + p0.sigma_xi2)
        assert dqdt(p0, ORIGIN) == pytest.approx(want, rel=1e-14)
        p1 = params(S=1.0, sigma_xi2=0.5)
        assert dqdt(p1, ORIGIN) == pytest.approx(want, rel=1e-14)


class TestIntegratorConfig:
    @pytest.mark.parametrize("kw", [
        dict(t_end=1.0, dt=0.0), dict(t_end=0.0), dict(t_end=1.0, dt=2.0),
        dict(t_end=1.0, record_stride=0),
    ])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            IntegratorConfig(**kw)


class TestIntegrate:
    def test_linear_limit_converges(self):
        p = params(S=math.inf)
        traj = integrate(p, ORIGIN, IntegratorConfig(t_end=50.0, dt=0.01, record_stride=100))
        assert traj.Q[-1] == pytest.approx(1.0, abs=1e-6)
        assert traj.r[-1] == pytest.approx(1.0, abs=1e-6)
        assert abs(traj.mse[-1]) <= 1e-6
        assert abs(traj.msd_norm[-1]) <= 1e-6

    def test_matches_steady_state(self):
        from satlms import steady_state
        p = params(S=3.0)
        traj = integrate(p, ORIGIN, IntegratorConfig(t_end=50.0, dt=0.01, record_stride=100))
        res = steady_state(p)
        assert traj.mse[-1] == pytest.approx(res.mse_star, abs=1e-4)
        assert traj.Q[-1] == pytest.approx(res.Q_star, abs=1e-4)

    def test_divergent_msd_still_growing(self):
        from satlms import asymptotic_mse
        p = params(S=1.0, mu=1.0)
        traj = integrate(p, ORIGIN, IntegratorConfig(t_end=50.0, dt=0.01, record_stride=50))
        slope = (traj.msd_norm[-1] - traj.msd_norm[-2]) / (traj.t[-1] - traj.t[-2])
        assert slope > 0
        assert traj.mse[-1] == pytest.approx(asymptotic_mse(p), abs=0.05)

    def test_grid_structure(self):
        traj = integrate(params(), ORIGIN, IntegratorConfig(t_end=1.0, dt=0.01, record_stride=7))
        assert traj.t[0] == 0.0
        assert all(b > a for a, b in zip(traj.t, traj.t[1:]))
        assert traj.t[-1] == pytest.approx(1.0, rel=1e-12)
        assert math.isnan(traj.cos_theta[0])
        assert all(not math.isnan(c) for c in traj.cos_theta[1:])

    def test_state_stays_in_cone(self):
        for S, mu in ((0.5, 1.0), (1.0, 0.5), (3.0, 0.5), (math.inf, 0.5)):
            p = params(S=S, mu=mu)
            traj = integrate(p, ORIGIN, IntegratorConfig(t_end=20.0, dt=0.01, record_stride=20))
            for Q, r in zip(traj.Q, traj.r):
                assert Q >= 0.0
                assert r >= 0.0
                tol = 1e-6 * p.sigma_g2 * max(Q, 1.0)
                assert r * r <= p.sigma_g2 * Q + tol

    def test_step_halving_order(self):
        p = params(S=3.0)

        def end(dt):
            traj = integrate(p, ORIGIN, IntegratorConfig(t_end=5.0, dt=dt,
                                                         record_stride=10 ** 9))
            return np.array([traj.r[-1], traj.Q[-1]])

        e1 = np.max(np.abs(end(0.04) - end(0.02)))
        e2 = np.max(np.abs(end(0.02) - end(0.01)))
        order = math.log2(e1 / e2)
        assert order >= 3.5

    def test_linear_limit_matches_reference_rk4(self):
        # Independent integrator with the erf/tail terms substituted
        # symbolically (E = 1, T = 0); agreement must be near-bitwise.
        p = params(S=math.inf, sigma_xi2=1.0)
        mu, rho2, sg2, sx2 = p.mu, p.rho2, p.sigma_g2, p.sigma_xi2

        def f(r, Q):
            dr = mu * rho2 * (sg2 - r)
            dq = mu * rho2 * (mu * (rho2 * Q - 2 * rho2 * r) - 2 * Q
                              + mu * (rho2 * sg2 + sx2) + 2 * r)
            return dr, dq

        dt = 0.01
        n = 500
        r = Q = 0.0
        ref = []
        for _ in range(n):
            k1r, k1q = f(r, Q)
            k2r, k2q = f(r + 0.5 * dt * k1r, Q + 0.5 * dt * k1q)
            k3r, k3q = f(r + 0.5 * dt * k2r, Q + 0.5 * dt * k2q)
            k4r, k4q = f(r + dt * k3r, Q + dt * k3q)
            r += dt * (k1r + 2 * k2r + 2 * k3r + k4r) / 6.0
            Q += dt * (k1q + 2 * k2q + 2 * k3q + k4q) / 6.0
            ref.append((r, Q))

        traj = integrate(p, ORIGIN, IntegratorConfig(t_end=5.0, dt=dt, record_stride=1))
        for i, (rr, qq) in enumerate(ref):
            assert abs(traj.r[i + 1] - rr) <= 1e-10
            assert abs(traj.Q[i + 1] - qq) <= 1e-10

    def test_linear_r_closed_form(self):
        p = params(S=math.inf)
        traj = integrate(p, ORIGIN, IntegratorConfig(t_end=10.0, dt=0.01, record_stride=100))
        for t, r in zip(traj.t, traj.r):
            want = p.sigma_g2 * (1.0 - math.exp(-p.mu * p.rho2 * t))
            assert r == pytest.approx(want, abs=1e-7)

    def test_nonfinite_raises(self):
        p = params(S=math.inf, mu=3.0)  # mu*rho2 > 2: Q grows without bound
        with pytest.raises(NonFiniteError) as exc:
            integrate(p, ORIGIN, IntegratorConfig(t_end=400.0, dt=0.01, record_stride=100))
        assert exc.value.t > 0
        assert math.isfinite(exc.value.last_state.Q)

    def test_negative_initial_Q_rejected(self):
        with pytest.raises(ValueError):
            integrate(params(), MacroState(Q=-1.0, r=0.0),
                      IntegratorConfig(t_end=1.0))
