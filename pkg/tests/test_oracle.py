import math

import pytest

from satlms import (CovarianceError, MacroState, QuadConfig, SystemParams,
                    check_all, m_dfy, quad_moment, quad_moment_full2d)
from satlms.oracle import KINDS, default_grid


def params(**kw):
    base = dict(rho2=1.0, sigma_g2=1.0, sigma_xi2=0.0, S=1.0, mu=0.5)
    base.update(kw)
    return SystemParams(**base)


class TestQuadMoment:
    def test_dy_exact(self):
        got = quad_moment("dy", params(), MacroState(Q=1.0, r=0.3))
        assert got == pytest.approx(0.3, abs=1e-10)

    def test_fy2_standard_normal(self):
        got = quad_moment("fy2", params(S=math.inf), MacroState(Q=1.0, r=0.0))
        assert got == pytest.approx(1.0, abs=1e-10)

    def test_dfy_agrees_with_closed_form(self):
        st = MacroState(Q=1.0, r=0.9)
        got = quad_moment("dfy", params(), st)
        assert got == pytest.approx(m_dfy(params(), st), rel=1e-8)

    def test_d2(self):
        got = quad_moment("d2", params(rho2=2.0, sigma_g2=3.0), MacroState(Q=1.0, r=0.0))
        assert got == pytest.approx(6.0, rel=1e-12)

    def test_degenerate_Q_zero(self):
        for kind in ("fy2", "dfy", "dy", "yfy"):
            assert quad_moment(kind, params(), MacroState(Q=0.0, r=0.0)) == 0.0

    def test_covariance_error(self):
        with pytest.raises(CovarianceError):
            quad_moment("dfy", params(), MacroState(Q=1.0, r=1.5))

    def test_rank_one_boundary_ok(self):
        # r^2 == sigma_g2 * Q exactly: d is a deterministic multiple of y.
        st = MacroState(Q=4.0, r=2.0)
        got = quad_moment("dy", params(), st)
        assert got == pytest.approx(2.0, rel=1e-10)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            quad_moment("nope", params(), MacroState(Q=1.0, r=0.0))


class TestCheckAll:
    def test_default_grid_passes(self):
        report = check_all()
        assert report.passed, report.as_dict()
        for kind in KINDS:
            assert report.kinds[kind].max_rel_err <= 1e-8

    def test_s_zero_slice_exact(self):
        grid = [(p, s) for p, s in default_grid() if p.S == 0.0]
        report = check_all(grid=grid)
        for kind in ("fy2", "dfy", "yfy"):
            assert report.kinds[kind].max_rel_err == 0.0

    def test_linear_limit_slice(self):
        pts = [(params(S=math.inf, rho2=rho2), MacroState(Q=Q, r=0.5 * math.sqrt(Q)))
               for rho2 in (0.5, 2.0) for Q in (0.5, 4.0)]
        report = check_all(grid=pts)
        assert report.passed

    def test_node_doubling_stable(self):
        st = MacroState(Q=1.0, r=0.9)
        for kind in KINDS:
            a = quad_moment(kind, params(), st, QuadConfig(nodes=200))
            b = quad_moment(kind, params(), st, QuadConfig(nodes=400))
            assert a == pytest.approx(b, rel=1e-11, abs=1e-13)

    def test_report_dict_shape(self):
        report = check_all(grid=default_grid()[:9])
        d = report.as_dict()
        assert set(d) == {"tolerance", "passed", "kinds"}
        assert set(d["kinds"]) == set(KINDS)


class TestMethodCrossChecks:
    def test_split_vs_adaptive_single_integral(self):
        # The piecewise scheme against one adaptive pass over the same
        # integrand (the clipping-decomposition consistency check).
        for S in (0.5, 1.0, 2.0):
            for Q in (0.3, 1.0, 5.0):
                p = params(S=S)
                st = MacroState(Q=Q, r=0.0)
                for kind in ("fy2", "yfy"):
                    a = quad_moment(kind, p, st, QuadConfig(method="gauss"))
                    b = quad_moment(kind, p, st, QuadConfig(method="adaptive"))
                    assert a == pytest.approx(b, rel=1e-10, abs=1e-12)

    def test_full2d_matches_reduction(self):
        # Validates the conditional-mean reduction E[d|y] = (r/Q) y against
        # a direct tensor sum over the explicit joint density.
        for frac in (-0.9, -0.5, 0.5, 0.9):
            for Q in (0.5, 1.0, 4.0):
                p = params(rho2=1.3, sigma_g2=0.8, S=1.0)
                r = frac * math.sqrt(p.sigma_g2 * Q)
                st = MacroState(Q=Q, r=r)
                for kind in ("dy", "dfy"):
                    a = quad_moment(kind, p, st)
                    b = quad_moment_full2d(kind, p, st)
                    assert a == pytest.approx(b, rel=1e-9, abs=1e-10)

    def test_full2d_rejects_other_kinds(self):
        with pytest.raises(ValueError):
            quad_moment_full2d("fy2", params(), MacroState(Q=1.0, r=0.0))


class TestQuadConfig:
    def test_bad_nodes(self):
        with pytest.raises(ValueError):
            QuadConfig(nodes=0)

    def test_bad_method(self):
        with pytest.raises(ValueError):
            QuadConfig(method="monte-carlo")
