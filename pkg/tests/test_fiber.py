import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import gaussian_derivative, three_lobe
from kpnw.fiber import (
    DegenerateFiber,
    FiberMap,
    NoSecondCriticalPoint,
    apply_scaling,
    bisect,
    coscale,
    critical_points_combined,
    critical_t_pure,
    critical_t_pure_supercritical,
    fiber_map,
    psi,
    psi_prime,
    psi_second,
    scale_of,
)
from kpnw.functionals import Combined, FiberIntegrals, PurePower, energy, fiber_integrals, pohozaev
from kpnw.spectral import lp_norm_p, make_grid, x_seminorm_sq


def fm(A, B, q, Bp=0.0, mu=None, p=None):
    nl = PurePower(q) if p is None else Combined(mu, q, p)
    return FiberMap(FiberIntegrals(1.0, A, B, Bp), nl)


class TestPsi:
    def test_identity_scaling(self, grid128):
        u = gaussian_derivative(grid128)
        for nl in (PurePower(3), Combined(1.0, 3.0, 4.0)):
            assert psi(fiber_map(u, nl), 0.0) == pytest.approx(energy(u, nl), rel=1e-14)
            assert psi_prime(fiber_map(u, nl), 0.0) == pytest.approx(pohozaev(u, nl), rel=1e-14)

    def test_subcritical_negative_for_negative_t(self):
        f = fm(1.0, 1.0, 3.0)
        val = psi(f, -10.0)
        assert val < 0
        assert val == pytest.approx(math.exp(-40 / 3) / 2 - math.exp(-10) / 3, rel=1e-14)

    def test_subcritical_vanishes_at_minus_infinity(self):
        f = fm(2.0, 5.0, 3.0)
        val = psi(f, -30.0)
        assert val < 0 and abs(val) < 1e-10 * 2.0

    def test_supercritical_diverges(self):
        assert psi(fm(1.0, 1.0, 4.0), 50.0) < 0
        assert psi(fm(1.0, 1.0, 4.0), 50.0) < psi(fm(1.0, 1.0, 4.0), 40.0)

    def test_vectorized(self):
        ts = np.linspace(-2, 2, 9)
        f = fm(1.0, 2.0, 4.0)
        assert np.allclose(psi(f, ts), [psi(f, t) for t in ts])

    @pytest.mark.parametrize("args", [(1.0, 1.0, 3.0), (2.0, 0.5, 4.5), (1.0, 0.5, 3.0, 0.7, 1.3, 4.0)])
    def test_derivatives_match_differences(self, args):
        f = fm(*args)
        eps = 1e-6
        for t in (-2.0, -0.3, 0.0, 0.8):
            fd = (psi(f, t + eps) - psi(f, t - eps)) / (2 * eps)
            assert psi_prime(f, t) == pytest.approx(fd, rel=1e-8, abs=1e-12)
            fd2 = (psi_prime(f, t + eps) - psi_prime(f, t - eps)) / (2 * eps)
            assert psi_second(f, t) == pytest.approx(fd2, rel=1e-6, abs=1e-10)

    def test_pure_fiber_rejects_bp(self):
        with pytest.raises(ValueError):
            FiberMap(FiberIntegrals(1.0, 1.0, 1.0, 1.0), PurePower(3))


class TestCriticalPure:
    def test_q4_closed_form(self):
        f = fm(1.0, 1.0, 4.0)
        t = critical_t_pure_supercritical(f)
        assert t == pytest.approx(1.5 * math.log(4 / 3), rel=1e-14)
        assert t == pytest.approx(0.43152, abs=1e-5)
        assert bisect(lambda s: psi_prime(f, s), -5, 5) == pytest.approx(t, abs=1e-12)

    def test_sign_structure(self):
        f = fm(1.3, 0.4, 5.0)
        t = critical_t_pure_supercritical(f)
        assert psi_prime(f, t - 0.5) > 0 > psi_prime(f, t + 0.5)

    def test_subcritical_is_minimum(self):
        f = fm(1.3, 0.4, 2.6)
        t = critical_t_pure(f)
        assert psi_second(f, t) > 0
        assert psi(f, t) < psi(f, t - 0.1) and psi(f, t) < psi(f, t + 0.1)

    def test_translation_covariance(self, grid128):
        nl = PurePower(4.0)
        u = gaussian_derivative(grid128)
        t0 = critical_t_pure_supercritical(fiber_map(u, nl))
        for s in (-2.0, 0.7):
            ts = critical_t_pure_supercritical(fiber_map(coscale(u, s), nl))
            assert ts == pytest.approx(t0 - s, abs=1e-10)

    def test_near_critical_rejected(self):
        with pytest.raises(DegenerateFiber):
            critical_t_pure_supercritical(fm(1.0, 1.0, 10 / 3 + 1e-9))

    def test_far_maximum_flagged(self):
        with pytest.warns(RuntimeWarning):
            critical_t_pure_supercritical(fm(1.0, 1e-30, 4.0))

    @pytest.mark.parametrize("A,B", [(0.0, 1.0), (1.0, 0.0)])
    def test_degenerate(self, A, B):
        with pytest.raises(DegenerateFiber):
            critical_t_pure_supercritical(fm(A, B, 4.0))

    def test_wrong_regime(self):
        with pytest.raises(ValueError):
            critical_t_pure_supercritical(fm(1.0, 1.0, 3.0))


class TestCriticalCombined:
    def test_two_roots(self):
        f = fm(1.0, 1.0, 3.0, Bp=0.05, mu=0.2, p=4.0)
        t1, t2 = critical_points_combined(f)
        assert t1 < t2
        assert abs(psi_prime(f, t1)) <= 1e-12 * max(1.0, math.exp(4 * t1 / 3))
        assert abs(psi_prime(f, t2)) <= 1e-12 * math.exp(4 * t2 / 3) * 10
        assert psi_second(f, t1) > 0 > psi_second(f, t2)
        assert psi(f, t1) < 0 <= psi(f, t2)

    def test_no_root(self):
        with pytest.raises(NoSecondCriticalPoint):
            critical_points_combined(fm(1.0, 50.0, 3.0, Bp=50.0, mu=50.0, p=4.0))

    def test_bp_zero_is_error(self):
        with pytest.raises(DegenerateFiber):
            critical_points_combined(fm(1.0, 1.0, 3.0, Bp=0.0, mu=1.0, p=4.0))

    def test_double_root(self):
        # With x = e^{t/3}, psi'/x^3 = (2/3) A x - (mu/3) Bq - (1/2) Bp x^3.
        # A double root needs this and its x-derivative to vanish together.
        A, Bq, mu = 1.0, 1.0, 1.0
        x = 3 * mu * Bq / (4 * A)
        Bp = 4 * A / (9 * x**2)
        with pytest.raises(DegenerateFiber):
            critical_points_combined(fm(A, Bq, 3.0, Bp=Bp, mu=mu, p=4.0))

    def test_resampled_pohozaev_at_t1(self, grid128):
        nl = Combined(1.0, 3.0, 4.0)
        u = gaussian_derivative(grid128, 0.5) * 0.3
        t1, _ = critical_points_combined(fiber_map(u, nl))
        v = coscale(u, t1)
        A = x_seminorm_sq(v)
        assert abs(pohozaev(v, nl)) <= 1e-10 * A


class TestScaling:
    def test_zero_t(self, grid128):
        u = gaussian_derivative(grid128, 0.25)
        assert apply_scaling(u, 0.0) is u

    @pytest.mark.parametrize("t", [-0.3, 0.3])
    def test_identities_by_resampling(self, grid128, t):
        u = three_lobe(grid128)
        v = apply_scaling(u, t)
        assert lp_norm_p(v, 2) == pytest.approx(lp_norm_p(u, 2), rel=1e-6)
        assert lp_norm_p(v, 3) == pytest.approx(math.exp(t) * lp_norm_p(u, 3), rel=1e-6)
        assert x_seminorm_sq(v) == pytest.approx(math.exp(4 * t / 3) * x_seminorm_sq(u), rel=1e-6)

    def test_mass_invariance_gaussian_derivative(self, grid128):
        u = gaussian_derivative(grid128, 0.25)
        v = apply_scaling(u, 0.3)
        assert lp_norm_p(v, 2) == pytest.approx(lp_norm_p(u, 2), rel=1e-6)
        assert lp_norm_p(v, 4) == pytest.approx(math.exp(0.6) * lp_norm_p(u, 4), rel=1e-6)

    def test_fixed_box_moment_correction(self, grid128):
        # A nonzero first x-moment makes the periodic antiderivative subtract a
        # box-wide row mean, which does not follow the fiber scaling on a fixed box.
        u = gaussian_derivative(grid128, 0.25)
        v = apply_scaling(u, 0.3)
        ratio = x_seminorm_sq(v) / (math.exp(0.4) * x_seminorm_sq(u))
        assert abs(ratio - 1) > 1e-3
        w = coscale(u, 0.3)
        assert x_seminorm_sq(w) == pytest.approx(math.exp(0.4) * x_seminorm_sq(u), rel=1e-12)

    def test_energy_via_resampling_matches_fiber(self, grid128):
        nl = PurePower(3.0)
        u = three_lobe(grid128)
        f = fiber_map(u, nl)
        for t in (-0.5, -0.2, 0.3, 0.5):
            assert energy(apply_scaling(u, t), nl) == pytest.approx(psi(f, t), rel=1e-6)

    def test_group_law(self, grid128):
        u = gaussian_derivative(grid128, 0.25)
        for s, t in ((0.3, -0.2), (-0.3, -0.3), (0.1, 0.3)):
            a = apply_scaling(apply_scaling(u, s), t).values
            b = apply_scaling(u, s + t).values
            assert np.max(np.abs(a - b)) <= 1e-6 * np.max(np.abs(b))

    def test_resolution_loss_warns(self, grid128):
        u = gaussian_derivative(grid128, 0.25)
        with pytest.warns(RuntimeWarning):
            apply_scaling(u, 4.0)
        with pytest.warns(RuntimeWarning):
            apply_scaling(u, -4.0)

    def test_coscale_exact(self, grid128):
        nl = Combined(1.0, 3.0, 4.5)
        u = gaussian_derivative(grid128, 0.25)
        fi = fiber_integrals(u, nl)
        for t in (-5.0, 2.0):
            a, b = fiber_integrals(coscale(u, t), nl), fi.scaled(t, nl)
            for name in ("mass2", "A", "Bq", "Bp"):
                assert getattr(a, name) == pytest.approx(getattr(b, name), rel=1e-12)

    def test_translation_covariance_of_fiber(self, grid128):
        nl = PurePower(3.0)
        u = gaussian_derivative(grid128, 0.25)
        f0, f1 = fiber_map(u, nl), fiber_map(coscale(u, 0.8), nl)
        for t in (-1.0, 0.0, 1.5):
            assert psi(f1, t) == pytest.approx(psi(f0, t + 0.8), rel=1e-10)

    def test_scale_of(self, grid128):
        u = gaussian_derivative(grid128, 0.25)
        assert scale_of(coscale(u, -3.2).grid, grid128) == pytest.approx(-3.2, abs=1e-12)
        with pytest.raises(ValueError):
            scale_of(make_grid(128, 128, 20, 40), grid128)
        with pytest.raises(ValueError):
            scale_of(make_grid(64, 64, 40, 40), grid128)


@settings(max_examples=100, deadline=None)
@given(A=st.floats(0.1, 10.0), B=st.floats(0.1, 10.0), q=st.floats(3.5, 5.95))
def test_supercritical_single_sign_change(A, B, q):
    f = fm(A, B, q)
    ts = np.linspace(-50, 50, 20001)
    s = np.sign(psi_prime(f, ts))
    s = s[s != 0]
    assert np.count_nonzero(s[1:] != s[:-1]) == 1
