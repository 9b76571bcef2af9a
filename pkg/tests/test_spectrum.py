import math

import numpy as np
import pytest

from swap_purify.spectrum import (
    DepolarizedParams,
    GeneralizedSpectrum,
    PureTailError,
    Spectrum,
    SpectrumError,
    dominates,
    eigen_delta_recurrence,
    f_map,
    f_map_generalized,
    f_orbit,
    flat_tail_spectrum,
    gamma,
    gammas,
    progress_measure,
    random_spectrum,
    s_projection,
    s_restricted_partials,
    s_restricted_step,
    stage_of,
    success_probability,
    to_depolarized_params,
)


class TestSpectrumConstruction:
    def test_sorts_descending(self):
        s = Spectrum([0.2, 0.7, 0.1])
        np.testing.assert_array_equal(s.values, [0.7, 0.2, 0.1])

    def test_accessors(self):
        s = Spectrum([0.6, 0.3, 0.1])
        assert s.dim == 3
        assert s.lambda1 == 0.6 and s.lambda2 == 0.3
        assert s.gap == pytest.approx(0.3)
        assert s.eta == pytest.approx(0.4)
        assert s.purity == pytest.approx(0.46)

    @pytest.mark.parametrize("vals", [[0.5, 0.5], [0.4, 0.4, 0.2]])
    def test_rejects_degenerate_principal(self, vals):
        with pytest.raises(SpectrumError, match="degenerate"):
            Spectrum(vals)

    @pytest.mark.parametrize("vals", [[0.7, 0.2], [1.1, -0.1], [1.0], [np.nan, 0.5]])
    def test_rejects_invalid(self, vals):
        with pytest.raises(SpectrumError):
            Spectrum(vals)

    def test_sum_tolerance(self):
        Spectrum([0.7, 0.3 + 5e-13])
        with pytest.raises(SpectrumError):
            Spectrum([0.7, 0.3 + 5e-12])

    def test_values_are_read_only(self):
        s = Spectrum([0.7, 0.3])
        with pytest.raises(ValueError):
            s.values[0] = 0.1

    def test_equality_ignores_zero_padding(self):
        assert Spectrum([1.0, 0.0]) == Spectrum([1.0, 0.0, 0.0])
        assert Spectrum([0.7, 0.3]) != Spectrum([0.6, 0.4])

    def test_depolarized(self):
        s = Spectrum.depolarized(4, 0.9)
        np.testing.assert_allclose(s.values, [0.325, 0.225, 0.225, 0.225], atol=1e-15)

    def test_general_noisy(self):
        s = Spectrum.general_noisy(0.4, [0.5, 0.3, 0.2])
        np.testing.assert_allclose(s.values, [0.6, 0.2, 0.12, 0.08])
        with pytest.raises(SpectrumError):
            Spectrum.general_noisy(0.6, [1.0])


class TestFMap:
    def test_pure_is_fixed(self):
        assert f_map(Spectrum([1.0, 0.0])) == Spectrum([1.0, 0.0])

    def test_qubit_example(self):
        np.testing.assert_allclose(f_map(Spectrum([0.75, 0.25])).values,
                                   [0.8076923076923077, 0.1923076923076923], atol=1e-15)

    def test_degenerate_tail_stays_degenerate(self):
        out = f_map(Spectrum([0.5, 0.25, 0.25])).values
        assert out[0] > 0.5
        assert out[1] == out[2]

    def test_near_uniform_barely_moves(self):
        for gap in (1e-2, 1e-4, 1e-6):
            s = Spectrum([0.5 + gap / 2, 0.5 - gap / 2])
            assert np.max(np.abs(f_map(s).values - s.values)) < gap

    def test_orbit_length_and_monotone(self):
        orbit = f_orbit(Spectrum([0.4, 0.35, 0.25]), 12)
        assert len(orbit) == 13
        l1 = [s.lambda1 for s in orbit]
        assert all(b > a for a, b in zip(l1, l1[1:]))


class TestSuccessProbability:
    def test_values(self):
        assert success_probability(Spectrum([1.0, 0.0])) == 1.0
        assert success_probability(Spectrum([0.75, 0.25])) == 0.8125
        assert success_probability(Spectrum([0.5000001, 0.4999999])) == pytest.approx(0.75)


class TestRecurrence:
    def test_worked_point(self):
        delta, p = eigen_delta_recurrence(0.5, 2)
        assert delta == pytest.approx(5 / 13, abs=1e-15)
        assert p == pytest.approx(0.8125, abs=1e-15)

    def test_small_delta_limit(self):
        delta, p = eigen_delta_recurrence(1e-8, 5)
        assert delta == pytest.approx(5e-9, rel=1e-6)
        assert p == pytest.approx(1.0, abs=1e-7)

    def test_matches_f_map_d4(self):
        nxt, p = eigen_delta_recurrence(0.9, 4)
        s = Spectrum.depolarized(4, 0.9)
        np.testing.assert_allclose(Spectrum.depolarized(4, nxt).values, f_map(s).values, atol=1e-12)
        assert p == pytest.approx(success_probability(s), abs=1e-12)

    def test_real_dimension_allowed(self):
        eigen_delta_recurrence(0.5, 2.7)

    @pytest.mark.parametrize("delta, d", [(0.0, 2), (1.0, 2), (0.5, 1.5)])
    def test_rejects(self, delta, d):
        with pytest.raises(SpectrumError):
            eigen_delta_recurrence(delta, d)


class TestProgressMeasure:
    def test_examples(self):
        assert progress_measure(Spectrum([1.0, 0.0])) == 0.0
        assert progress_measure(Spectrum([0.5, 0.25, 0.25])) == pytest.approx(2.0)
        assert progress_measure(Spectrum([0.75, 0.25])) == pytest.approx(0.5)

    def test_gamma(self):
        assert gamma(Spectrum([0.75, 0.25]), 2) == pytest.approx(0.5)
        assert gamma(Spectrum([0.5, 0.25, 0.25]), 3) == pytest.approx(1.0)
        assert gamma(Spectrum([1.0, 0.0, 0.0]), 3) == 0.0

    @pytest.mark.parametrize("j", [0, 1, 4])
    def test_gamma_index_range(self, j):
        with pytest.raises(IndexError):
            gamma(Spectrum([0.5, 0.3, 0.2]), j)

    def test_bounded_between(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            s = random_spectrum(int(rng.integers(2, 30)), rng)
            e = progress_measure(s)
            assert 1 / s.lambda1 - 1 <= e + 1e-9
            assert e <= (1 - s.lambda1) / s.gap + 1e-9
            assert gammas(s).sum() == pytest.approx(e, abs=1e-12)

    def test_stage_labels(self):
        s = Spectrum([0.34, 0.33, 0.33])
        assert stage_of(s, s.lambda1) == 1
        assert stage_of(Spectrum([0.75, 0.25]), 0.75) == 3
        assert stage_of(Spectrum([0.6, 0.3, 0.1]), 0.6) == 2


class TestGeneralized:
    def test_validation(self):
        GeneralizedSpectrum([1, 2.5], [0.5, 0.2])
        with pytest.raises(SpectrumError):
            GeneralizedSpectrum([2, 1], [0.3, 0.4])
        with pytest.raises(SpectrumError):
            GeneralizedSpectrum([1, 1], [0.7, 0.2])
        with pytest.raises(SpectrumError):
            GeneralizedSpectrum([1, 1], [0.5, 0.5])

    def test_projection_examples(self):
        p = s_projection(GeneralizedSpectrum([1, 1, 1], [0.5, 0.3, 0.2]))
        assert p == GeneralizedSpectrum([1, 5 / 3], [0.5, 0.3])
        g = GeneralizedSpectrum([1, 1], [0.8, 0.2])
        assert s_projection(g) == g

    def test_projection_idempotent(self):
        p = s_projection(GeneralizedSpectrum([1, 2, 2], [0.4, 0.2, 0.1]))
        assert s_projection(p) == p

    def test_projection_pure_tail(self):
        assert s_projection(GeneralizedSpectrum([1, 3], [1.0, 0.0])) == GeneralizedSpectrum([1, 0], [1, 0])

    def test_f_generalized_example(self):
        g = GeneralizedSpectrum([1, 5 / 3], [0.5, 0.3])
        out = f_map_generalized(g)
        z = 1 + 0.25 + (5 / 3) * 0.09
        np.testing.assert_array_equal(out.q, g.q)
        np.testing.assert_allclose(out.lam, [0.75 / z, 0.39 / z], atol=1e-15)

    def test_f_generalized_matches_f_map(self):
        s = Spectrum([0.5, 0.3, 0.15, 0.05])
        np.testing.assert_allclose(f_map_generalized(s.as_generalized()).lam, f_map(s).values, atol=1e-15)

    def test_f_generalized_fixed_point(self):
        g = GeneralizedSpectrum([1, 0], [1, 0])
        assert f_map_generalized(g) == g

    def test_f_generalized_keeps_image_of_projection(self):
        g = s_projection(GeneralizedSpectrum([1, 1, 1], [0.5, 0.3, 0.2]))
        out = f_map_generalized(g)
        assert s_projection(out) == out

    def test_dominates(self):
        a = GeneralizedSpectrum([1, 1], [0.8, 0.2])
        assert dominates(a, a)
        assert dominates(a, GeneralizedSpectrum([1, 2], [0.6, 0.2]))
        assert not dominates(GeneralizedSpectrum([1, 1], [0.6, 0.4]), a)


class TestDepolarizedParams:
    def test_examples(self):
        p = to_depolarized_params(GeneralizedSpectrum([1, 5 / 3], [0.5, 0.3]))
        assert p.d_eff == pytest.approx(8 / 3, abs=1e-12)
        assert p.delta == pytest.approx(0.8, abs=1e-12)
        assert p.delta == pytest.approx(p.d_eff * 0.3, abs=1e-12)
        q = to_depolarized_params(GeneralizedSpectrum([1, 1], [0.75, 0.25]))
        assert (q.d_eff, q.delta) == pytest.approx((2, 0.5), abs=1e-12)

    def test_round_trip(self):
        g = GeneralizedSpectrum([1, 5 / 3], [0.5, 0.3])
        back = to_depolarized_params(g).to_generalized()
        np.testing.assert_allclose(back.q, g.q, atol=1e-12)
        np.testing.assert_allclose(back.lam, g.lam, atol=1e-12)

    def test_rejects(self):
        with pytest.raises(PureTailError):
            to_depolarized_params(GeneralizedSpectrum([1, 0], [1.0, 0.0]))
        with pytest.raises(SpectrumError):
            to_depolarized_params(GeneralizedSpectrum([1, 1, 1], [0.5, 0.3, 0.2]))
        with pytest.raises(SpectrumError):
            DepolarizedParams(1.5, 0.3)


class TestRestrictedDynamics:
    def test_step_matches_f_map(self):
        g = GeneralizedSpectrum([1, 5 / 3], [0.5, 0.3])
        out = f_map_generalized(g)
        l1, gap = s_restricted_step(0.5, 0.2)
        assert l1 == pytest.approx(out.lambda1, abs=1e-14)
        assert gap == pytest.approx(out.gap, abs=1e-14)

    def test_partials_by_finite_differences(self):
        h = 1e-6
        for l1 in np.linspace(0.05, 0.99, 15):
            for gap in np.linspace(0.01, 0.99, 15) * l1:
                jac = s_restricted_partials(l1, gap)
                assert np.all(jac >= 0)
                num = np.column_stack([
                    (np.array(s_restricted_step(l1 + h, gap)) - s_restricted_step(l1 - h, gap)) / (2 * h),
                    (np.array(s_restricted_step(l1, gap + h)) - s_restricted_step(l1, gap - h)) / (2 * h),
                ])
                np.testing.assert_allclose(jac, num, atol=1e-4)


def test_flat_tail_spectrum():
    s = flat_tail_spectrum(0.5, 0.2)
    np.testing.assert_allclose(s.values, [0.5, 0.2, 0.2, 0.1], atol=1e-15)
    s = flat_tail_spectrum(0.5, 0.25)
    assert s.dim == 3
    assert progress_measure(s) == pytest.approx((1 - s.lambda1) / s.gap)
    assert math.isclose(flat_tail_spectrum(0.9, 0.05).lambda2, 0.05)
