"""Stiff integrator: convergence order, closed-form checks, events, guards.

The pure-quadratic model F(t, x) = (0.5 - t) x^2 / 2 decays exactly as
u(t) = u0 * exp(-Lambda(t)/eps) with Lambda(t) = 0.5 t - t^2/2, which gives
closed forms for both trajectories and event times.
"""

import math

import numpy as np
import pytest

import delayflow as df


def make_linear_model(T=1.5):
    # F = (0.25 - 0.5 t) x^2  ==  (0.5 - t) x^2 / 2
    return df.make_polynomial_model(1, T, [([0.25, -0.5], (2,), 1.0)],
                                    name="linear-decay")


def exact_log_radius(u0, eps, t):
    return math.log(u0) - (0.5 * t - 0.5 * t * t) / eps


@pytest.fixture(scope="module")
def quartic1d():
    return df.make_quartic_family(1, 0.5, 1.5)


class TestConvergence:
    def test_fixed_step_is_second_order(self, quartic1d):
        # frozen-time descent toward sqrt(0.75): smooth, non-stiff
        ref = df.solve_autonomous(
            quartic1d, 1.25, [0.1], (0.0, 2.0),
            df.SolveOptions(rtol=1e-12, atol=1e-14)).final_state[0]
        errs = []
        for h in (0.1, 0.05, 0.025):
            traj = df.solve_autonomous(
                quartic1d, 1.25, [0.1], (0.0, 2.0),
                df.SolveOptions(fixed_step=h))
            errs.append(abs(traj.final_state[0] - ref))
        r1 = errs[0] / errs[1]
        r2 = errs[1] / errs[2]
        assert 3.2 < r1 < 4.8
        assert 3.2 < r2 < 4.8

    def test_adaptive_matches_linear_closed_form(self):
        m = make_linear_model()
        traj = df.solve_singular(m, 1e-2, [0.01], (0.0, 0.8))
        for t in (0.2, 0.5, 0.8):
            assert traj.log_radius_at(t) == pytest.approx(
                exact_log_radius(0.01, 1e-2, t), abs=1e-6)

    def test_charts_agree(self, quartic1d):
        # The cartesian chart only controls ABSOLUTE error near zero, so
        # deep in the trough its log-radius is good to atol-level relative
        # accuracy, not rtol-level; that asymmetry is the polar chart's
        # reason to exist.
        opts_p = df.SolveOptions(rtol=1e-10, atol=1e-12,
                                 coordinates="log-polar")
        opts_c = df.SolveOptions(rtol=1e-10, atol=1e-14,
                                 coordinates="cartesian")
        a = df.solve_singular(quartic1d, 1e-2, [0.01], (0.0, 0.9), opts_p)
        b = df.solve_singular(quartic1d, 1e-2, [0.01], (0.0, 0.9), opts_c)
        for t in (0.3, 0.6, 0.9):
            assert abs(a.state_at(t)[0] - b.state_at(t)[0]) < 1e-10
            assert abs(a.log_radius_at(t) - b.log_radius_at(t)) < 1e-3
            assert a.direction_at(t)[0] == pytest.approx(
                b.direction_at(t)[0], abs=1e-9)

    def test_deep_decay_is_tracked_in_the_log(self, quartic1d):
        # at eps = 1e-4 the trough is below exp(-1000): far underneath the
        # smallest subnormal double, yet exactly representable in the log
        eps = 1e-4
        res = df.first_hitting(quartic1d, eps, [eps], math.sqrt(2.0) / 8.0,
                               (0.0, 1.25))
        assert float(np.min(res.trajectory.log_radius)) < -1000.0
        assert res.time == pytest.approx(1.0014996839, abs=5e-7)


class TestEvents:
    def test_downward_norm_crossing_matches_closed_form(self):
        m = make_linear_model()
        eps = 0.1
        c = eps * math.log(2.0)  # Lambda at the half-radius time
        # Lambda(t) = c  <=>  t^2 - t + 2c = 0, smaller root
        t_exact = 0.5 * (1.0 - math.sqrt(1.0 - 8.0 * c))
        ev = df.EventSpec(kind="norm", threshold=0.005, direction=-1,
                          name="down")
        traj = df.solve_singular(m, eps, [0.01], (0.0, 0.4),
                                 df.SolveOptions(events=(ev,)))
        rec = traj.first_event("down")
        assert rec is not None
        assert rec.time == pytest.approx(t_exact, abs=1e-7)
        assert rec.log_radius == pytest.approx(math.log(0.005), abs=1e-8)

    def test_first_hitting_truncates_at_the_event(self, quartic1d):
        mu = math.sqrt(2.0) / 8.0
        res = df.first_hitting(quartic1d, 1e-2, [1e-2], mu, (0.0, 1.25))
        assert res.trajectory.t_end == pytest.approx(res.time, abs=1e-12)
        assert np.linalg.norm(res.state) == pytest.approx(mu, rel=1e-8)
        assert res.time == pytest.approx(1.0550116, abs=5e-7)

    def test_first_hitting_not_found(self, quartic1d):
        with pytest.raises(df.NotFoundError):
            df.first_hitting(quartic1d, 1e-2, [1e-2], 0.1, (0.0, 0.6))

    def test_relax_after_saves_steps(self, quartic1d):
        mu = math.sqrt(2.0) / 8.0

        def run(relax):
            ev = df.EventSpec(kind="norm", threshold=mu, direction=1,
                              relax_after=relax, name="hit")
            return df.solve_singular(quartic1d, 1e-3, [1e-3], (0.0, 1.25),
                                     df.SolveOptions(events=(ev,)))

        relaxed = run(True)
        strict = run(False)
        assert relaxed.first_event("hit") is not None
        assert relaxed.first_event("hit").time == pytest.approx(
            strict.first_event("hit").time, abs=1e-6)
        assert relaxed.stats["accepted"] < strict.stats["accepted"]

    def test_coordinate_event(self, quartic1d):
        ev = df.EventSpec(kind="coord", index=0, threshold=0.3, direction=1,
                          terminal=True, name="cross")
        traj = df.solve_singular(quartic1d, 1e-2, [1e-2], (0.0, 1.25),
                                 df.SolveOptions(events=(ev,)))
        rec = traj.first_event("cross")
        assert rec is not None
        assert rec.state[0] == pytest.approx(0.3, abs=1e-8)


class TestTrivialAndGuards:
    def test_zero_initial_state_stays_zero(self, quartic1d):
        traj = df.solve_singular(quartic1d, 1e-3, [0.0], (0.0, 1.5))
        assert traj.stats["accepted"] == 0
        assert traj.state_at(0.7) == pytest.approx([0.0], abs=0.0)
        assert traj.log_radius_at(0.7) == -math.inf

    def test_blow_up_is_reported_in_polar(self):
        runaway = df.make_polynomial_model(1, 2.0, [([1.0], (4,), -0.25)],
                                           name="runaway")
        with pytest.raises(df.BlowUpError):
            df.solve_singular(runaway, 0.1, [1.0], (0.0, 2.0))

    def test_blow_up_is_reported_in_cartesian(self):
        runaway = df.make_polynomial_model(1, 2.0, [([1.0], (4,), -0.25)],
                                           name="runaway")
        with pytest.raises(df.BlowUpError):
            df.solve_autonomous(runaway, 0.0, [1.0], (0.0, 2.0))

    def test_unresolvable_step_fails_loudly(self, quartic1d):
        opts = df.SolveOptions(rtol=1e-12, atol=1e-14, coordinates="cartesian",
                               first_step=0.3, max_step=0.3, min_step=0.29)
        with pytest.raises(df.StiffFailureError):
            df.solve_singular(quartic1d, 1e-3, [1.5], (0.0, 1.0), opts)

    def test_domain_errors(self, quartic1d):
        with pytest.raises(df.DomainError):
            df.solve_singular(quartic1d, -1.0, [0.1], (0.0, 1.0))
        with pytest.raises(df.DomainError):
            df.solve_singular(quartic1d, 1e-2, [0.1], (1.0, 1.0))
        with pytest.raises(df.DomainError):
            df.solve_singular(quartic1d, 1e-2, [0.1], (0.0, 1.0),
                              df.SolveOptions(coordinates="spherical"))
        with pytest.raises(df.DomainError):
            df.first_hitting(quartic1d, 1e-2, [0.1], -0.5, (0.0, 1.0))


class TestEnergyBookkeeping:
    def test_balance_residual_tracks_tolerance(self, quartic1d):
        u0, eps = [1e-2], 1e-2
        traj = df.solve_singular(quartic1d, eps, u0, (0.0, 1.05))
        rep = df.energy_balance_residual(quartic1d, traj, eps)
        assert rep.relative < 1e-6
        tight = df.SolveOptions(rtol=0.5e-8, atol=0.5e-10)
        traj2 = df.solve_singular(quartic1d, eps, u0, (0.0, 1.05), tight)
        rep2 = df.energy_balance_residual(quartic1d, traj2, eps)
        assert rep2.max_residual < 0.75 * rep.max_residual

    def test_frozen_flow_balance_has_no_drive(self, quartic1d):
        traj = df.solve_autonomous(quartic1d, 1.25, [0.1], (0.0, 6.0))
        rep = df.energy_balance_residual(quartic1d, traj, 1.0)
        assert rep.relative < 1e-6

    def test_dissipation_equals_energy_drop_when_frozen(self, quartic1d):
        traj = df.solve_autonomous(quartic1d, 1.25, [0.1], (0.0, 6.0))
        drop = quartic1d.energy(1.25, [0.1]) - \
            quartic1d.energy(1.25, traj.final_state)
        total = df.dissipation_integral(quartic1d, traj, (0.0, 6.0), eps=1.0)
        assert total == pytest.approx(drop, abs=1e-6)

    def test_descent_is_monotone(self, quartic1d):
        traj = df.solve_autonomous(quartic1d, 1.25, [0.1], (0.0, 6.0))
        ts = np.linspace(0.0, 6.0, 101)
        vals = [quartic1d.energy(1.25, traj.state_at(t)) for t in ts]
        diffs = np.diff(vals)
        assert np.max(diffs) <= 1e-10

    def test_dissipation_window_is_validated(self, quartic1d):
        traj = df.solve_autonomous(quartic1d, 1.25, [0.1], (0.0, 2.0))
        with pytest.raises(df.DomainError):
            df.dissipation_integral(quartic1d, traj, (1.0, 3.0))
