"""Critical-point search, frozen-descent limits, scalar extremes.

Quartic landscapes have closed-form critical points: at t = 1.0 the 1-d
family has {0, +-sqrt(0.5)} with energies {0, -1/16}; the sextic witness
F = (0.5 - t) x^2/2 - x^4/4 + x^6/6 at t = 0.4 has inner wells at
x^2 = (1 - sqrt(0.6))/2 and outer ones at x^2 = (1 + sqrt(0.6))/2.
"""

import math

import numpy as np
import pytest

import delayflow as df

SQ_HALF = math.sqrt(0.5)
SEXTIC_INNER = math.sqrt((1.0 - math.sqrt(0.6)) / 2.0)
SEXTIC_OUTER = math.sqrt((1.0 + math.sqrt(0.6)) / 2.0)


@pytest.fixture(scope="module")
def quartic1d():
    return df.make_quartic_family(1, 0.5, 1.5)


@pytest.fixture(scope="module")
def quartic2d():
    return df.make_quartic_family(2, 0.5, 1.5)


@pytest.fixture(scope="module")
def sextic():
    return df.make_polynomial_model(1, 1.5, [
        ([0.25, -0.5], (2,), 1.0),
        ([1.0], (4,), -0.25),
        ([1.0], (6,), 1.0 / 6.0),
    ], name="sextic")


class TestFindCriticalPoints:
    def test_quartic_1d_at_delayed_time(self, quartic1d):
        cps = df.find_critical_points(quartic1d, 1.0, (-2.0, 2.0))
        assert len(cps) == 3
        locs = [float(p.location[0]) for p in cps]
        assert locs == pytest.approx([-SQ_HALF, 0.0, SQ_HALF], abs=1e-10)
        assert [p.kind for p in cps] == \
            ["strict-local-min", "saddle", "strict-local-min"]
        assert [p.energy for p in cps] == \
            pytest.approx([-0.0625, 0.0, -0.0625], abs=1e-12)
        # Hessian there is (t_c - t) + 3 x^2: -0.5 at 0 and 1.0 at the wells
        assert cps[0].hess_eigs[0] == pytest.approx(1.0, abs=1e-9)
        assert cps[1].hess_eigs[0] == pytest.approx(-0.5, abs=1e-12)
        assert cps.converged_fraction == 1.0

    def test_quartic_2d_at_delayed_time(self, quartic2d):
        cps = df.find_critical_points(quartic2d, 1.0, (-2.0, 2.0))
        assert len(cps) == 3
        wells = cps.nonzero()
        assert len(wells) == 2
        for p in wells:
            assert abs(p.location[0]) == pytest.approx(SQ_HALF, abs=1e-10)
            assert p.location[1] == pytest.approx(0.0, abs=1e-10)
            assert p.kind == "strict-local-min"
            assert p.hess_eigs == pytest.approx([1.0, 1.5], abs=1e-9)
        origin = cps.origin()
        assert origin is not None and origin.kind == "saddle"
        assert origin.hess_eigs == pytest.approx([-0.5, 1.0], abs=1e-12)

    def test_only_origin_before_critical_time(self, quartic2d):
        cps = df.find_critical_points(quartic2d, 0.3, (-2.0, 2.0))
        assert len(cps) == 1
        assert cps[0].is_origin
        assert cps[0].kind == "strict-local-min"

    def test_degenerate_at_critical_time(self, quartic1d):
        cps = df.find_critical_points(quartic1d, 0.5, (-2.0, 2.0))
        origin = cps.origin()
        assert origin is not None and origin.kind == "degenerate"

    def test_nearest_lookup(self, quartic2d):
        cps = df.find_critical_points(quartic2d, 1.0, (-2.0, 2.0))
        p = cps.nearest([0.6, 0.1])
        assert p.location[0] == pytest.approx(SQ_HALF, abs=1e-10)

    def test_sextic_five_points(self, sextic):
        cps = df.find_critical_points(sextic, 0.4, (-2.0, 2.0),
                                      seeds_per_dim=41)
        locs = [float(p.location[0]) for p in cps]
        assert locs == pytest.approx(
            [-SEXTIC_OUTER, -SEXTIC_INNER, 0.0, SEXTIC_INNER, SEXTIC_OUTER],
            abs=1e-9)

    def test_high_dimension_is_rejected(self):
        m = df.make_quartic_family(5, 0.5, 1.5)
        with pytest.raises(df.DomainError):
            df.find_critical_points(m, 1.0, (-2.0, 2.0))


class TestOmegaLimit:
    def test_descent_reaches_the_well(self, quartic2d):
        lim = df.omega_limit(quartic2d, 1.0, [0.3, 0.4])
        assert lim.point == pytest.approx([SQ_HALF, 0.0], abs=1e-8)
        assert lim.kind == "strict-local-min"
        assert lim.settle_time <= 64.0

    def test_sign_of_the_seed_selects_the_well(self, quartic1d):
        lim = df.omega_limit(quartic1d, 1.0, [-0.05])
        assert lim.point[0] == pytest.approx(-SQ_HALF, abs=1e-8)

    def test_zero_seed_settles_at_the_origin(self, quartic1d):
        lim = df.omega_limit(quartic1d, 1.0, [0.0])
        assert lim.point == pytest.approx([0.0], abs=1e-12)
        assert lim.critical_point.kind == "saddle"


class TestOneDExtremes:
    def test_sextic_inner_wells(self, sextic):
        ex = df.one_d_extremes(sextic, 0.4)
        assert ex.u_plus == pytest.approx(0.3357106870197288, abs=1e-10)
        assert ex.u_minus == pytest.approx(-0.3357106870197288, abs=1e-10)

    def test_quartic_wells(self, quartic1d):
        ex = df.one_d_extremes(quartic1d, 1.0)
        assert ex.u_plus == pytest.approx(SQ_HALF, abs=1e-10)

    def test_needs_scalar_model(self, quartic2d):
        with pytest.raises(df.DomainError):
            df.one_d_extremes(quartic2d, 1.0)

    def test_not_found_before_critical_time(self, quartic1d):
        with pytest.raises(df.NotFoundError):
            df.one_d_extremes(quartic1d, 0.2)
