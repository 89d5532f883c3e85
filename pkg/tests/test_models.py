"""Evaluator oracles and hypothesis validators for the energy models.

Expected values are hand-derived from the closed forms and frozen here;
derivative consistency is checked against central finite differences on
seeded random samples.
"""

import math

import numpy as np
import pytest

import delayflow as df

SQ_HALF = math.sqrt(0.5)


@pytest.fixture(scope="module")
def quartic1d():
    return df.make_quartic_family(1, 0.5, 1.5)


@pytest.fixture(scope="module")
def quartic2d():
    return df.make_quartic_family(2, 0.5, 1.5)


def all_models():
    return [
        df.make_quartic_family(1, 0.5, 1.5),
        df.make_quartic_family(2, 0.5, 1.5),
        df.make_quartic_family(3, 0.5, 1.5),
        df.make_commuting_family(np.diag([2.0, 1.0]), [0.2, 1.0], T=1.0),
        df.make_rotating_family(1.0, 1.5),
        df.make_polynomial_model(1, 1.5, [
            ([0.25, -0.5], (2,), 1.0),
            ([1.0], (4,), -0.25),
            ([1.0], (6,), 1.0 / 6.0),
        ], name="sextic"),
    ]


class TestQuarticValues:
    def test_energy_at_origin_is_zero(self, quartic1d):
        # F(t, 0) = 0 for every built-in family
        assert quartic1d.energy(0.3, [0.0]) == 0.0

    def test_energy_frozen_values(self, quartic1d, quartic2d):
        # (0.5 - 0) * 1/2 + 1/4 = 0.5
        assert quartic1d.energy(0.0, [1.0]) == pytest.approx(0.5, abs=1e-15)
        # at the frozen post-jump point: -0.5 * 0.5/2 + 0.25/4 = -0.0625
        assert quartic2d.energy(1.0, [SQ_HALF, 0.0]) == pytest.approx(
            -0.0625, abs=1e-15)

    def test_gradient_frozen_values(self, quartic1d, quartic2d):
        assert quartic1d.gradient(0.0, [1.0])[0] == pytest.approx(1.5, abs=1e-15)
        g = quartic2d.gradient(1.0, [SQ_HALF, 0.0])
        assert np.linalg.norm(g) < 1e-14  # critical point of F(1, .)

    def test_remainder_is_cubic(self, quartic1d, quartic2d):
        assert quartic1d.remainder(0.7, [0.1])[0] == pytest.approx(1e-3, rel=1e-12)
        r = quartic2d.remainder(0.2, [0.1, 0.1])
        assert r == pytest.approx([0.002, 0.002], rel=1e-12)

    def test_stiffness_matrix(self, quartic2d):
        a = quartic2d.stiffness(0.8)
        assert a == pytest.approx(np.diag([-0.3, 1.0]), abs=1e-15)

    def test_time_derivative(self, quartic2d):
        # dF/dt = -x1^2 / 2
        assert quartic2d.dt(0.4, [0.6, 0.9]) == pytest.approx(-0.18, abs=1e-15)


class TestDerivativeConsistency:
    @pytest.mark.parametrize("model", all_models(), ids=lambda m: m.name)
    def test_gradient_matches_finite_differences(self, model):
        rng = np.random.default_rng(42)
        h = 1e-6
        for _ in range(100):
            t = rng.uniform(0.0, model.T)
            x = rng.uniform(-1.5, 1.5, model.n)
            g = model.gradient(t, x)
            fd = np.zeros(model.n)
            for j in range(model.n):
                e = np.zeros(model.n)
                e[j] = h
                fd[j] = (model.energy(t, x + e) - model.energy(t, x - e)) / (2 * h)
            assert np.linalg.norm(g - fd) <= 1e-5 * (1.0 + np.linalg.norm(g))

    @pytest.mark.parametrize("model", all_models(), ids=lambda m: m.name)
    def test_hessian_matches_gradient_differences(self, model):
        rng = np.random.default_rng(7)
        h = 1e-6
        for _ in range(20):
            t = rng.uniform(0.0, model.T)
            x = rng.uniform(-1.0, 1.0, model.n)
            hess = model.hessian(t, x)
            for j in range(model.n):
                e = np.zeros(model.n)
                e[j] = h
                col = (model.gradient(t, x + e) - model.gradient(t, x - e)) / (2 * h)
                assert np.linalg.norm(hess[:, j] - col) <= 1e-5 * (
                    1.0 + np.linalg.norm(hess))

    @pytest.mark.parametrize("model", all_models(), ids=lambda m: m.name)
    def test_time_derivative_matches_finite_differences(self, model):
        rng = np.random.default_rng(11)
        h = 1e-6
        for _ in range(20):
            t = rng.uniform(h, model.T - h)
            x = rng.uniform(-1.0, 1.0, model.n)
            fd = (model.energy(t + h, x) - model.energy(t - h, x)) / (2 * h)
            assert model.dt(t, x) == pytest.approx(fd, abs=1e-6, rel=1e-6)

    @pytest.mark.parametrize("model", all_models(), ids=lambda m: m.name)
    def test_remainder_vanishes_to_first_order(self, model):
        rng = np.random.default_rng(5)
        for r in (1e-2, 1e-3):
            for _ in range(10):
                d = rng.normal(size=model.n)
                d /= np.linalg.norm(d)
                t = rng.uniform(0.0, model.T)
                b = model.remainder(t, r * d)
                assert np.linalg.norm(b) <= 10.0 * r ** 2


class TestRotatingFamily:
    def test_spectrum_is_rotation_invariant(self):
        m = df.make_rotating_family(2.0, 1.5)
        for t in (0.0, 0.4, 1.1):
            eigs = np.linalg.eigvalsh(m.stiffness(t))
            assert eigs == pytest.approx([0.5 - t, 1.0], abs=1e-12)

    def test_omega_zero_degrades_to_quartic(self):
        m = df.make_rotating_family(0.0, 1.5)
        assert m.name == "quartic-2d"


class TestConstruction:
    def test_commuting_needs_symmetric_base(self):
        with pytest.raises(df.ConstructionError):
            df.make_commuting_family(np.array([[1.0, 2.0], [0.0, 1.0]]),
                                     [0.0, 1.0], T=1.0)

    def test_callable_phi_needs_derivative(self):
        with pytest.raises(df.ConstructionError):
            df.make_commuting_family(np.eye(2), lambda t: t, T=1.0)

    def test_polynomial_rejects_bad_multi_index(self):
        with pytest.raises(df.ConstructionError):
            df.make_polynomial_model(2, 1.0, [([1.0], (2,), 1.0)])
        with pytest.raises(df.ConstructionError):
            df.make_polynomial_model(1, 1.0, [([1.0], (-1,), 1.0)])

    def test_model_from_spec_roundtrip(self):
        m = df.model_from_spec("quartic", {"n": 2, "t_c": 0.5, "T": 1.5})
        assert m.n == 2 and m.name == "quartic-2d"
        with pytest.raises(df.ConstructionError):
            df.model_from_spec("nonsense", {})
        with pytest.raises(df.ConstructionError):
            df.model_from_spec("polynomial", {"n": 1})  # missing keys

    def test_non_finite_evaluation_is_reported(self):
        bad = df.EnergyModel(
            n=1, T=1.0,
            f=lambda t, x: float("nan"),
            grad_f=lambda t, x: x,
            hess_f=lambda t, x: np.eye(1),
            dt_f=lambda t, x: 0.0)
        with pytest.raises(df.EvaluationError):
            bad.energy(0.0, [1.0])

    def test_wrong_state_shape_is_rejected(self, quartic2d):
        with pytest.raises(df.EvaluationError):
            quartic2d.energy(0.0, [1.0, 2.0, 3.0])


class TestValidateAssumptions:
    def test_quartic_satisfies_everything(self, quartic1d):
        grid = np.linspace(0.0, 1.5, 301)
        rep = df.validate_assumptions(quartic1d, grid, (-2.0, 2.0))
        assert rep.mandatory_ok
        assert rep.equilibrium_ok and rep.equilibrium_residual == 0.0
        assert rep.coercivity_ok
        assert rep.isolation_ok
        assert rep.eigenspace_ok and rep.eigen_drift_max == 0.0
        assert rep.nondegenerate_ok
        assert rep.t_c == pytest.approx(0.5, abs=1e-8)
        assert rep.t_star == pytest.approx(1.0, abs=1e-6)
        # |dF/dt| = x^2/2 peaks at 2.0 on [-2, 2]; the least-slack fit puts
        # everything into the constant term.
        assert rep.growth_constants == pytest.approx((0.0, 2.0), abs=1e-9)
        assert rep.growth_slack == pytest.approx(0.0, abs=1e-9)

    def test_growth_fit_is_a_valid_envelope(self, quartic2d):
        grid = np.linspace(0.0, 1.5, 101)
        rep = df.validate_assumptions(quartic2d, grid, (-2.0, 2.0))
        c1, c2 = rep.growth_constants
        assert c1 >= 0.0 and c2 >= 0.0
        assert rep.growth_slack >= 0.0
        # The fit must dominate |dF/dt| on the lattice it was built from.
        axis = np.linspace(-2.0, 2.0, 5)
        for t in grid[:: len(grid) // 16]:
            for x1 in axis:
                for x2 in axis:
                    x = np.array([x1, x2])
                    assert abs(quartic2d.dt(t, x)) <= \
                        c1 * quartic2d.energy(t, x) + c2 + 1e-9

    def test_rotating_family_fails_eigenspace(self):
        m = df.make_rotating_family(1.0, 1.5)
        grid = np.linspace(0.0, 1.5, 301)
        rep = df.validate_assumptions(m, grid, (-2.0, 2.0))
        assert not rep.eigenspace_ok
        assert not rep.mandatory_ok
        assert rep.eigen_drift_max > 0.1

    def test_short_horizon_skips_tstar_checks(self):
        m = df.make_quartic_family(1, 0.5, 0.8)
        grid = np.linspace(0.0, 0.8, 161)
        rep = df.validate_assumptions(m, grid, (-2.0, 2.0))
        assert rep.t_star is None
        assert rep.isolation_ok is None
        assert rep.nondegenerate_ok is None
        assert "skipped" in rep.notes
        assert rep.mandatory_ok  # only the applicable checks count
