"""Admissibility arithmetic and the ratio harness on fast unit-scale cases."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracheat import (
    ContaminationError,
    Field,
    GaussianBump,
    PlaneWave,
    PreconditionError,
    RandomBumps,
    Triplet,
    TimeSeries,
    check_admissible,
    check_scaling_relation,
    conjugate,
    decay_fit,
    dilation_sweep,
    homogeneous_ratio,
    inhomogeneous_ratio,
    kernel_mixed_norm_fit,
    make_grid,
    parabolic_ratio,
    synthesize_field,
)
from fracheat.grid import RandomBandlimited

INF = float("inf")


class TestAdmissibility:
    def test_endpoint_triplet_high_dimension(self):
        # (2, 2n/(n-2a), 2) is n/2a-admissible when n > 2a
        n, alpha = 2, 0.5
        sigma = n / (2 * alpha)
        p = 2 * n / (n - 2 * alpha)
        assert abs(check_admissible(Triplet(2, p, 2, sigma))) < 1e-12

    def test_endpoint_triplet_low_dimension(self):
        # (4a/n, inf, 2) is n/2a-admissible when n < 2a
        n, alpha = 1, 1.0
        sigma = n / (2 * alpha)
        assert abs(check_admissible(Triplet(4 * alpha / n, INF, 2, sigma))) < 1e-12

    def test_trivial_triplet(self):
        assert check_admissible(Triplet(INF, 2, 2, 1.7)) == 0.0

    def test_r_above_p_rejected(self):
        with pytest.raises(PreconditionError):
            check_admissible(Triplet(2, 2, 4, 1.0))

    @settings(max_examples=40, deadline=None)
    @given(
        sigma=st.floats(0.25, 4.0),
        p=st.floats(2.0, 40.0),
        p1=st.floats(2.0, 40.0),
    )
    def test_admissible_pairs_satisfy_scaling_relation(self, sigma, p, p1):
        # algebraic identity: two sigma-admissible triplets with r = 2
        # always satisfy the inhomogeneous scaling relation exactly
        def q_of(pp):
            val = sigma * (0.5 - 1.0 / pp)
            return INF if val == 0 else 1.0 / val

        q, q1 = q_of(p), q_of(p1)
        if q < 1 or q1 <= 1:
            return
        alpha, n = 1.0, 2 * sigma  # any pair with n/2a = sigma
        res = check_scaling_relation(q, p, q1, p1, alpha, n)
        assert abs(res) < 1e-9


class TestScalingRelation:
    def test_square_symmetric_case(self):
        # n=4, alpha=1: (1/2 - 1/2) + 2(3/4 - 1/4) - 1 = 0
        assert abs(check_scaling_relation(2, 4, 2, 4, 1.0, 4)) < 1e-12

    def test_violation_value(self):
        # same exponent pattern fails when n/2a drops to 1/2
        assert np.isclose(check_scaling_relation(2, INF, 2, INF, 2.0, 2), -0.5)
        # and holds at n/2a = 1 (direct arithmetic)
        assert np.isclose(check_scaling_relation(2, INF, 2, INF, 1.0, 2), 0.0)


class TestHomogeneousRatio:
    def test_plane_wave_closed_form(self):
        g = make_grid(1, 16, 2 * np.pi)
        k, alpha, q, p, T = 2, 1.0, 2.0, 4.0, 1.0
        f = synthesize_field(g, PlaneWave(k=(k,)))
        mu = float(k) ** (2 * alpha)
        times = np.linspace(0, T, 4001)
        got = homogeneous_ratio(f, q, p, alpha, T, times=times)
        expect = (
            g.L ** (1 / p)
            * ((1 - np.exp(-q * T * mu)) / (q * mu)) ** (1 / q)
            / g.L ** (1 / 2)
        )
        assert abs(got / expect - 1) < 1e-6

    def test_zero_field_rejected(self):
        g = make_grid(1, 16, 2 * np.pi)
        with pytest.raises(PreconditionError):
            homogeneous_ratio(Field(g, np.zeros(16)), 2, 4, 1.0, 1.0)

    def test_forbidden_endpoint(self):
        g = make_grid(2, 16, 2 * np.pi)
        f = synthesize_field(g, GaussianBump(width=0.25))
        with pytest.raises(PreconditionError):
            homogeneous_ratio(f, 2, INF, 1.0, 1.0)  # sigma = 1: excluded triplet

    def test_besov_kind_single_shell_closed_form(self):
        # on a single dyadic shell |k| = 4 the propagator is the scalar
        # e^{-16 t} and both Besov norms collapse to single 2^{2s}-weighted
        # blocks, so the ratio reduces to the Lebesgue closed form
        g = make_grid(1, 256, 2 * np.pi)
        rng = np.random.default_rng(3)
        coef = np.zeros(256, dtype=complex)
        coef[4] = rng.standard_normal() + 1j * rng.standard_normal()
        coef[-4] = np.conj(coef[4])
        f = Field(g, np.fft.ifftn(coef), "physical")
        q, p, alpha, T, s = 4.0, 4.0, 1.0, 0.5, -0.3
        times = np.linspace(0, T, 10001)
        got = homogeneous_ratio(f, q, p, alpha, T, times=times, kind="besov", s=s)
        mu = 4.0 ** (2 * alpha)
        from fracheat import lp_norm

        expect = (
            lp_norm(f, p)
            * ((1 - np.exp(-q * T * mu)) / (q * mu)) ** (1 / q)
            / lp_norm(f, 2)
        )
        assert abs(got / expect - 1) < 1e-6

    def test_bmo_requires_matching_dimension(self):
        g = make_grid(2, 16, 2 * np.pi)
        f = synthesize_field(g, GaussianBump(width=0.25))
        with pytest.raises(PreconditionError):
            homogeneous_ratio(f, 2, 2, 0.75, 1.0, kind="bmo")
        with pytest.raises(PreconditionError):
            homogeneous_ratio(f, 4, 2, 1.0, 1.0, kind="bmo")


class TestInhomogeneousRatio:
    @staticmethod
    def _forcing(g, spatial, profile, T, nodes=48):
        times = np.linspace(0, T, nodes + 1)
        return TimeSeries(
            times, [Field(g, profile(t) * spatial.data) for t in times]
        )

    def test_zero_forcing_rejected(self):
        g = make_grid(2, 16, 2 * np.pi)
        zero = Field(g, np.zeros(g.shape))
        F = self._forcing(g, zero, lambda t: 1.0, 1.0, nodes=4)
        with pytest.raises(PreconditionError):
            inhomogeneous_ratio(F, (4, 4), (4, 4), 1.0)

    def test_single_mode_constant_forcing(self):
        # oracle: dense scalar quadrature of the closed-form mode integrals
        g = make_grid(2, 16, 2 * np.pi)
        k = (1, 1)
        alpha, q, p = 1.0, 4.0, 4.0
        T = 1.0
        pw = synthesize_field(g, PlaneWave(k=k))
        F = self._forcing(g, pw, lambda t: 1.0, T, nodes=256)
        got = inhomogeneous_ratio(F, (q, p), (4, 4), alpha)
        mu = 2.0
        tt = np.linspace(0, T, 200001)
        duh = (1 - np.exp(-mu * tt)) / mu
        num = np.trapezoid(duh**q, tt) ** (1 / q) * g.L ** (2 / p)
        q1c, p1c = conjugate(4), conjugate(4)
        den = T ** (1 / q1c) * g.L ** (2 / p1c)
        assert abs(got / (num / den) - 1) < 1e-5

    def test_window_violations(self):
        g = make_grid(2, 16, 2 * np.pi)
        pw = synthesize_field(g, PlaneWave(k=(1, 0)))
        F = self._forcing(g, pw, lambda t: 1.0, 1.0, nodes=8)
        with pytest.raises(PreconditionError):
            inhomogeneous_ratio(F, (4, 1.2), (4, 4), 1.0)  # p <= p1'
        with pytest.raises(PreconditionError):
            inhomogeneous_ratio(F, (1.2, 4), (4, 4), 1.0)  # q <= q1'
        with pytest.raises(PreconditionError):
            inhomogeneous_ratio(F, (4, 8), (4, 4), 1.0)  # relation violated

    def test_sobolev_pairing_sweep(self):
        # smoothing pairing at n=2, alpha=1/2: numerator L^2_t L^4_x,
        # denominator L^(q1')_t Hdot^(1/2, p1')_x with (q1', p1') = (1.2, 1.2);
        # the ratio is invariant under the parabolic dilation family
        g = make_grid(2, 128, 2 * np.pi)
        alpha, s_ord = 0.5, 0.5
        T = 0.2
        tau = T / 3
        recipe = RandomBumps(seed=3, width=g.L / 30, spread=g.L / 13, count=4)
        params = {
            "alpha": alpha, "q": 2.0, "p": 4.0, "q1": 6.0, "p1": 6.0,
            "kind": "sobolev", "s": s_ord,
            "T": T, "times": np.linspace(0, T, 49),
            "profile": lambda t, tau=tau: (t / tau) * np.exp(-t / tau),
        }
        rep = dilation_sweep(recipe, g, [1, 2], "inhomogeneous", params,
                             drift_tol=0.01)
        assert rep.verdict == "pass", rep.max_drift
        assert all(np.isfinite(r) and r > 0 for r in rep.ratios)

    def test_sobolev_pairing_relation(self):
        # smoothing pairing: residual must equal s / (2 alpha)
        n, alpha = 2, 0.5
        p = 2 * n / (n - 2 * alpha)
        q = 2.0
        # pick (q1', p1') = (q_th, p_th) with 1/q_th + (n/2a)(1/p_th - 1/2) = 3/2
        p_th = 1.2
        q_th = 1.0 / (1.5 - (n / (2 * alpha)) * (1 / p_th - 0.5))
        assert 1 < q_th < 2
        res = check_scaling_relation(
            q, p, conjugate(q_th), conjugate(p_th), alpha, n
        )
        assert abs(res - alpha / (2 * alpha)) < 1e-12


class TestParabolicRatio:
    def test_b_form_stable_under_tail_doubling(self):
        g = make_grid(2, 64, 2 * np.pi)
        f = synthesize_field(
            g, RandomBumps(seed=1, width=g.L / 26, spread=g.L / 20, count=2)
        )
        r1 = parabolic_ratio(f, 4.0, 1.0, s_min=1e-6, s_max=6.0)
        r2 = parabolic_ratio(f, 4.0, 1.0, s_min=1e-6, s_max=12.0)
        assert np.isfinite(r1) and r1 > 0
        assert abs(r2 - r1) < 1e-6 * r1

    def test_b_form_head_and_tail_report(self):
        g = make_grid(2, 64, 2 * np.pi)
        f = synthesize_field(
            g, RandomBumps(seed=2, width=g.L / 26, spread=g.L / 20, count=2)
        )
        val, head_err, tail_est = parabolic_ratio(
            f, INF, 1.0, s_min=1e-6, s_max=8.0, report_truncation=True
        )
        assert np.isfinite(val)
        assert head_err < 1e-6
        assert tail_est < 1e-6

    def test_b_form_rejects_p2_and_wrong_dimension(self):
        g = make_grid(2, 32, 2 * np.pi)
        f = synthesize_field(g, GaussianBump(width=0.25))
        with pytest.raises(PreconditionError):
            parabolic_ratio(f, 2.0, 1.0)
        with pytest.raises(PreconditionError):
            parabolic_ratio(f, 4.0, 0.75)

    def test_a_form_contractivity_bound(self):
        # r = p = 2, n=1 < 2 alpha: the ratio is below 2a/(2a - n) + quadrature slack
        g = make_grid(1, 512, 40.0)
        f = synthesize_field(g, GaussianBump(width=0.5))
        alpha, T = 1.0, 1.0
        val = parabolic_ratio(f, 2.0, alpha, form="a", r=2.0, T=T)
        bound = 2 * alpha / (2 * alpha - 1)
        assert 0 < val <= bound * 1.01

    def test_a_form_needs_low_dimension(self):
        g = make_grid(2, 32, 2 * np.pi)
        f = synthesize_field(g, GaussianBump(width=0.25))
        with pytest.raises(PreconditionError):
            parabolic_ratio(f, 2.0, 1.0, form="a", r=2.0, T=1.0)


class TestDecayFit:
    def test_flat_when_r_equals_p(self):
        # pre-asymptotic window: the norm has barely moved, slope ~ 0
        g = make_grid(1, 1024, 64.0)
        f = synthesize_field(g, GaussianBump(width=1.0))
        times = np.geomspace(1e-4, 1e-3, 8)
        fit = decay_fit(f, 2.0, 2.0, 1.0, times)
        assert fit.predicted == 0.0
        assert abs(fit.slope) < 0.02

    def test_unit_case_heat_sup(self):
        g = make_grid(1, 2048, 128.0)
        f = synthesize_field(g, GaussianBump(width=0.35))
        fit = decay_fit(f, 1.0, INF, 1.0, np.geomspace(3.7, 12.25, 12))
        assert abs(fit.slope / fit.predicted - 1) < 0.02
        assert fit.predicted == -0.5

    def test_gradient_variant(self):
        g = make_grid(1, 2048, 128.0)
        f = synthesize_field(g, GaussianBump(width=0.35))
        fit = decay_fit(f, 1.0, INF, 1.0, np.geomspace(3.7, 12.25, 12), gradient=True)
        assert fit.predicted == -1.0
        assert abs(fit.slope / fit.predicted - 1) < 0.02

    def test_contamination_guard(self):
        g = make_grid(1, 64, 2 * np.pi)
        f = synthesize_field(g, GaussianBump(width=g.L / 5))
        with pytest.raises(ContaminationError):
            decay_fit(f, 1.0, 2.0, 1.0, np.geomspace(0.1, 1.0, 5))

    def test_r_p_order(self):
        g = make_grid(1, 64, 2 * np.pi)
        f = synthesize_field(g, GaussianBump(width=0.2))
        with pytest.raises(PreconditionError):
            decay_fit(f, 4.0, 2.0, 1.0, np.geomspace(0.1, 1.0, 5))


class TestKernelNormFit:
    def test_positive_kernel_r1(self):
        # r=1, alpha=1: ||K_t||_1 = 1, so the norm is T^(1/h) up to quadrature
        fit = kernel_mixed_norm_fit(
            1.0, 1.0, 1.0, 0.03, 2, grid=make_grid(2, 128, 10.0), t_min=0.004
        )
        assert abs(fit.fitted_exponent - 1.0) < 1e-3
        assert abs(fit.norm_T - 0.03) < 1e-4

    def test_window_violation(self):
        with pytest.raises(PreconditionError):
            kernel_mixed_norm_fit(1.0, 2.0, 4.0, 0.03, 2)  # window value 1.5 >= 1


class TestDilationSweep:
    def test_single_lambda_is_driftless(self):
        g = make_grid(2, 64, 2 * np.pi)
        recipe = GaussianBump(width=g.L / 21)
        rep = dilation_sweep(
            recipe,
            g,
            [1],
            "homogeneous",
            {"alpha": 1.0, "q": 4.0, "p": 4.0, "T": 0.05},
        )
        assert rep.max_drift == 0.0
        assert rep.verdict == ""

    def test_contaminated_recipe_rejected(self):
        g = make_grid(2, 64, 2 * np.pi)
        recipe = GaussianBump(width=g.L / 8)  # too wide for the half-box
        with pytest.raises(ContaminationError):
            dilation_sweep(
                recipe, g, [1, 2], "homogeneous",
                {"alpha": 1.0, "q": 4.0, "p": 4.0, "T": 0.05},
            )

    def test_non_dilatable_recipe_rejected(self):
        g = make_grid(2, 64, 2 * np.pi)
        recipe = RandomBandlimited(seed=0, j_min=1, j_max=2)
        with pytest.raises(PreconditionError):
            dilation_sweep(
                recipe, g, [1, 2], "homogeneous",
                {"alpha": 1.0, "q": 4.0, "p": 4.0, "T": 0.05},
            )

    def test_besov_embedding_invariance_small(self):
        g = make_grid(2, 128, 2 * np.pi)
        recipe = RandomBumps(seed=5, width=g.L / 26, spread=g.L / 20, count=2)
        rep = dilation_sweep(
            recipe, g, [1, 2], "besov_embedding", {"alpha": 1.0, "p": 4.0},
            drift_tol=0.01,
        )
        assert rep.verdict == "pass"

    def test_report_serialization(self):
        g = make_grid(2, 64, 2 * np.pi)
        recipe = GaussianBump(width=g.L / 21)
        rep = dilation_sweep(
            recipe, g, [1, 2], "homogeneous",
            {"alpha": 0.5, "q": 2.0, "p": 4.0, "T": 0.05},
            drift_tol=0.05,
        )
        d = rep.to_json_dict()
        assert d["estimate_id"] == "homogeneous"
        assert len(d["ratios"]) == 2
        rows = rep.csv_rows()
        assert rows[0]["lambda"] == 1
