"""Spectral profile, stability times, and hypothesis checks.

The benchmark families have closed-form spectra, so every expected value
below is exact: quartic gives lambda_1(t) = t_c - t with primitive
t_c*t - t^2/2, and the commuting family with base diag(2, 1) and
phi(t) = 0.2 + t gives lambda_1(t) = 0.6 - 2t.
"""

import math

import numpy as np
import pytest

import delayflow as df


@pytest.fixture(scope="module")
def quartic2d_profile():
    m = df.make_quartic_family(2, 0.5, 1.5)
    return df.spectral_profile(m, np.linspace(0.0, 1.5, 301))


@pytest.fixture(scope="module")
def quartic1d_profile():
    m = df.make_quartic_family(1, 0.5, 1.5)
    return df.spectral_profile(m, np.linspace(0.0, 1.5, 301))


class TestProfile:
    def test_lambda1_curve_is_exact(self, quartic2d_profile):
        p = quartic2d_profile
        assert np.max(np.abs(p.lambda1 - (0.5 - p.grid))) < 1e-12

    def test_gap_and_perp_curves(self, quartic2d_profile):
        p = quartic2d_profile
        assert np.max(np.abs(p.gap - (0.5 + p.grid))) < 1e-12
        assert np.max(np.abs(p.lambda_perp - 1.0)) < 1e-12

    def test_leading_vector_is_constant(self, quartic2d_profile):
        p = quartic2d_profile
        assert np.max(p.drift) == 0.0
        assert p.e1[0] == pytest.approx([1.0, 0.0], abs=1e-14)

    def test_one_d_profile_uses_inf_gap(self, quartic1d_profile):
        p = quartic1d_profile
        assert np.all(np.isinf(p.gap))
        assert np.all(np.isinf(p.lambda_perp))
        assert p.lambda_perp_at(0.7) == np.inf

    def test_rotating_frame_is_tracked(self):
        m = df.make_rotating_family(1.0, 1.5)
        p = df.spectral_profile(m, np.linspace(0.0, 1.4, 281))
        # spectrum is rotation invariant ...
        assert np.max(np.abs(p.lambda1 - (0.5 - p.grid))) < 1e-10
        # ... but the leading vector follows the rotating frame
        v = p.e1_at(0.3)
        frame = np.array([math.cos(0.3), math.sin(0.3)])
        assert abs(float(v @ frame)) == pytest.approx(1.0, abs=1e-10)

    def test_grid_validation(self):
        m = df.make_quartic_family(1, 0.5, 1.5)
        with pytest.raises(df.SpectralError):
            df.spectral_profile(m, [0.0, 1.0])
        with pytest.raises(df.SpectralError):
            df.spectral_profile(m, [0.0, 0.5, 0.5, 1.0])

    def test_int_grid_means_uniform(self):
        m = df.make_quartic_family(1, 0.5, 1.5)
        p = df.spectral_profile(m, 11)
        assert p.grid == pytest.approx(np.linspace(0.0, 1.5, 11))


class TestPrimitive:
    def test_matches_closed_form(self, quartic1d_profile):
        for t in (0.2, 0.5, 0.9, 1.0, 1.37):
            val, err = df.lambda1_primitive(quartic1d_profile, t)
            assert val == pytest.approx(0.5 * t - 0.5 * t * t, abs=1e-9)
            assert err < 1e-6

    def test_rejects_time_before_grid(self, quartic1d_profile):
        with pytest.raises(df.SpectralError):
            df.lambda1_primitive(quartic1d_profile, -0.5)


class TestStabilityTimes:
    def test_quartic_times(self, quartic1d_profile):
        times = df.blowup_time(quartic1d_profile)
        assert times.t_c == pytest.approx(0.5, abs=1e-9)
        assert times.t_star == pytest.approx(1.0, abs=1e-6)
        assert times.lambda1_at_tstar == pytest.approx(-0.5, abs=1e-6)
        assert times.primitive_error < 1e-6
        assert times.note == ""

    def test_commuting_times(self):
        m = df.make_commuting_family(np.diag([2.0, 1.0]), [0.2, 1.0], T=1.0)
        p = df.spectral_profile(m, np.linspace(0.0, 1.0, 201))
        times = df.blowup_time(p)
        assert times.t_c == pytest.approx(0.3, abs=1e-9)
        assert times.t_star == pytest.approx(0.6, abs=1e-6)
        assert np.max(np.abs(p.gap - (0.2 + p.grid))) < 1e-12

    def test_unstable_left_end_is_a_hypothesis_failure(self):
        m = df.make_commuting_family([[1.0]], [2.0], T=1.0)  # A(t) = -1
        p = df.spectral_profile(m, np.linspace(0.0, 1.0, 101))
        with pytest.raises(df.HypothesisError):
            df.critical_time(p)

    def test_no_vanishing_on_short_horizon(self):
        m = df.make_quartic_family(1, 0.5, 0.4)
        p = df.spectral_profile(m, np.linspace(0.0, 0.4, 81))
        assert df.critical_time(p) is None
        times = df.blowup_time(p)
        assert times.t_c is None and times.t_star is None
        assert "never vanishes" in times.note

    def test_primitive_stays_positive(self):
        m = df.make_quartic_family(1, 0.5, 0.8)
        p = df.spectral_profile(m, np.linspace(0.0, 0.8, 161))
        times = df.blowup_time(p)
        assert times.t_c == pytest.approx(0.5, abs=1e-9)
        assert times.t_star is None
        assert "stays positive" in times.note

    def test_degenerate_tangency_gives_no_delayed_time(self):
        # lambda_1(t) = (1 - t)(1 - 3t), Lambda(t) = t (1 - t)^2: the
        # primitive touches zero at t = 1 without crossing.
        m = df.make_commuting_family([[1.0]], [0.0, 4.0, -3.0], T=1.2)
        p = df.spectral_profile(m, np.linspace(0.0, 1.2, 301))
        times = df.blowup_time(p)
        assert times.t_c == pytest.approx(1.0 / 3.0, abs=1e-9)
        assert times.t_star is None
        assert "tangency" in times.note


class TestEigenspaceCheck:
    def test_accepts_commuting_family(self):
        m = df.make_commuting_family(np.diag([2.0, 1.0]), [0.2, 1.0], T=1.0)
        p = df.spectral_profile(m, np.linspace(0.0, 1.0, 201))
        rep = df.check_fixed_eigenspace(p)
        assert rep.ok
        assert rep.drift_max <= 1e-12
        assert rep.gap_min == pytest.approx(0.2, abs=1e-12)

    def test_rejects_rotating_family(self):
        m = df.make_rotating_family(1.0, 1.5)
        p = df.spectral_profile(m, np.linspace(0.0, 1.5, 301))
        rep = df.check_fixed_eigenspace(p)
        assert not rep.ok
        # window is [0, t* + 0.1 T] = [0, 1.15]; drift peaks at the end
        assert rep.window_end == pytest.approx(1.15, abs=1e-6)
        assert rep.drift_max == pytest.approx(1.0 - math.cos(1.15), abs=1e-9)

    def test_rejects_closing_gap(self):
        # A(t) = diag(1.5 - t, 2 - 2t): eigenvalue crossing at t = 0.5
        m = df.make_commuting_family(np.diag([1.0, 2.0]), [-0.5, 1.0], T=1.0)
        p = df.spectral_profile(m, np.linspace(0.0, 1.0, 201))
        rep = df.check_fixed_eigenspace(p)
        assert not rep.ok
        assert rep.gap_min == pytest.approx(0.0, abs=1e-12)


class TestNondegeneracy:
    def test_quartic_at_delayed_time(self):
        m = df.make_quartic_family(2, 0.5, 1.5)
        rep = df.check_nondegeneracy(m, 1.0)
        assert rep.ok
        assert rep.det == pytest.approx(-0.5, abs=1e-12)
        assert rep.lambda1 == pytest.approx(-0.5, abs=1e-12)
        assert rep.n_negative == 1

    def test_degenerate_at_critical_time(self):
        m = df.make_quartic_family(2, 0.5, 1.5)
        rep = df.check_nondegeneracy(m, 0.5)
        assert not rep.ok
        assert rep.sv_min == pytest.approx(0.0, abs=1e-14)
        assert rep.n_negative == 0
