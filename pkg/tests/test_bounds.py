import math

import pytest

from swap_purify import bounds as bd
from swap_purify.spectrum import Spectrum

E4 = math.e ** 4
LN2 = math.log(2)


class TestLevelsUpperBound:
    def test_high_gap_case(self):
        r = bd.levels_upper_bound(0.9, 0.05, 1e-4)
        assert r.case_taken == "gap>=2/3"
        assert r.value == pytest.approx(math.log2(0.1 / (0.7 * 1e-4)), abs=1e-12)
        assert r.value == pytest.approx(10.48, abs=0.005)
        assert r.integral_value == 11

    def test_middle_case(self):
        r = bd.levels_upper_bound(0.75, 0.25, 0.01)
        assert r.case_taken == "1/3<=gap<2/3"
        assert r.value == pytest.approx(math.log2(0.25 / (0.5 * 0.01)) + 5, abs=1e-12)
        assert r.value == pytest.approx(10.64, abs=0.005)

    def test_small_gap_case(self):
        r = bd.levels_upper_bound(0.4, 0.3, 0.01)
        assert r.case_taken == "gap<1/3"
        gap = 0.4 - 0.3
        first = 1 / gap + 2 * math.log(1 / gap)
        second = (0.6 / 0.3 + 3) * math.log(1 + 0.3 / (gap * (1 - gap))) + 5 * math.log((1 - gap) / 0.3)
        f = min(first, second)
        assert r.details["f"] == pytest.approx(f, abs=1e-12)
        assert r.value == pytest.approx(math.log2(0.6 / (0.9 * 0.01)) + 5 + f, abs=1e-12)

    def test_f_picks_second_branch_when_smaller(self):
        # Many small near-degenerate eigenvalues: the second expression wins.
        l1, l2 = 0.02, 0.0198
        gap = l1 - l2
        first = 1 / gap + 2 * math.log(1 / gap)
        second = ((1 - l1) / l2 + 3) * math.log(1 + l2 / (gap * (1 - gap))) + 5 * math.log((1 - gap) / l2)
        assert second < first
        assert bd.f_penalty(l1, l2) == pytest.approx(second)

    def test_boundaries_select_adjacent_cases(self):
        for edge in (2 / 3, 1 / 3):
            l1 = 0.8 if edge == 2 / 3 else 0.5
            below = bd.levels_upper_bound(l1, l1 - (edge - 1e-9), 1e-3)
            above = bd.levels_upper_bound(l1, l1 - (edge + 1e-9), 1e-3)
            assert below.case_taken != above.case_taken
            assert math.isfinite(below.value) and math.isfinite(above.value)

    @pytest.mark.parametrize("args", [(0.5, 0.5, 0.1), (0.5, 0.0, 0.1), (0.7, 0.4, 0.01),
                                      (0.9, 0.05, 0.2), (0.9, 0.05, 0.0)])
    def test_domain(self, args):
        with pytest.raises(bd.BoundDomainError):
            bd.levels_upper_bound(*args)


class TestProof1:
    def test_high_gap(self):
        r = bd.sample_upper_bound_proof1(0.9, 0.05, 0.01)
        assert r.value == pytest.approx(90)
        assert r.constants_instantiated
        levels = bd.levels_upper_bound(0.9, 0.05, 0.01).value
        assert r.integral_value == pytest.approx(90 * 2 ** (math.ceil(levels) - levels))

    def test_shrinks_with_infidelity(self):
        # At fixed epsilon the bound is proportional to 1 - lambda1.
        vals = [bd.sample_upper_bound_proof1(1 - eta, eta / 10, 1e-8).value for eta in (1e-2, 1e-4, 1e-6)]
        assert vals[0] / vals[1] == pytest.approx(100)
        assert vals[1] / vals[2] == pytest.approx(100)

    def test_low_gap(self):
        r = bd.sample_upper_bound_proof1(0.75, 0.25, 0.01)
        f = bd.f_penalty(0.75, 0.25)
        assert r.case_taken == "gap<2/3"
        assert r.value == pytest.approx(9 * 0.25 * 4 ** (5 + f) / 0.01)


class TestProof2:
    def test_case_one(self):
        r = bd.sample_upper_bound_proof2(0.9, 0.85, 0.01)
        assert r.case_taken == "lambda1>=2/3"
        assert r.value == pytest.approx(2 * E4 * (0.1 / 0.85) / 0.01)
        assert not r.loose

    def test_case_selection(self):
        assert bd.sample_upper_bound_proof2(0.6, 0.2, 0.01).case_taken == "X>1/lambda1"
        assert bd.sample_upper_bound_proof2(0.65, 0.5, 0.01).case_taken == "X<=1/lambda1"

    def test_case_two_formula(self):
        x = 0.35 / 0.5
        exponent = 2 * LN2 * x + (2.5 + 1 / LN2) * math.log(x) + 2 + 5 * LN2
        assert bd.sample_upper_bound_proof2(0.65, 0.5, 0.01).value == pytest.approx(E4 / 0.01 * 4 ** exponent)

    def test_case_three_formula(self):
        l1, x = 0.6, 0.4 / 0.2
        exponent = (1 / l1 - 1) * (math.log(x * l1) + 2 * LN2) + 2.5 * math.log(x) \
            + math.log2(1 / l1) + 3 + 7 * LN2
        assert bd.sample_upper_bound_proof2(0.6, 0.2, 0.01).value == pytest.approx(E4 / 0.01 * 4 ** exponent)

    def test_x_boundary(self):
        l1 = 0.5
        gap_at_edge = (1 - l1) * l1  # X = 1/lambda1
        lo = bd.sample_upper_bound_proof2(l1, gap_at_edge * (1 + 1e-9), 0.01)
        hi = bd.sample_upper_bound_proof2(l1, gap_at_edge * (1 - 1e-9), 0.01)
        assert lo.case_taken == "X<=1/lambda1" and hi.case_taken == "X>1/lambda1"
        assert math.isfinite(lo.value) and math.isfinite(hi.value)

    def test_lambda1_boundary(self):
        a = bd.sample_upper_bound_proof2(2 / 3 + 1e-9, 0.5, 0.01)
        b = bd.sample_upper_bound_proof2(2 / 3 - 1e-9, 0.5, 0.01)
        assert a.case_taken == "lambda1>=2/3" and b.case_taken != a.case_taken

    def test_loose_flag(self):
        r = bd.sample_upper_bound_proof2(0.2, 0.1, 0.5)
        assert r.loose
        assert any("loose" in c for c in r.caveats)

    def test_serializes(self):
        d = bd.sample_upper_bound_proof2(0.9, 0.85, 0.01).to_dict()
        assert d["constants_instantiated"] is True
        assert d["name"] == "sample_upper_bound_proof2"


class TestStageLengths:
    def test_stage_three_only(self):
        sl = bd.stage_lengths(Spectrum([0.75, 0.25]), 0.01)
        assert sl == (0, 0.0, math.ceil(math.log2(math.e ** 2 * 0.5 / 0.01)))

    def test_all_stages(self):
        s = Spectrum([0.34, 0.33, 0.33])
        sl = bd.stage_lengths(s, 0.01)
        assert sl.l1 == 14
        e2 = 1 / 0.34
        assert sl.l2 == pytest.approx(2 * e2 * LN2 + (1 + 2.5 * LN2) * math.ceil(1 + math.log(e2) / LN2))
        assert sl.t3 == math.ceil(math.log2(math.e ** 2 * 0.5 / 0.01))

    def test_pure_input(self):
        assert bd.stage_lengths(Spectrum([1.0, 0.0]), 0.01) == (0, 0.0, 0)


class TestLowerBounds:
    def test_lambda1(self):
        assert bd.lower_bound_lambda1(0.75, 0.01).value == pytest.approx(100)
        assert bd.lower_bound_lambda1(0.6, 0.001).value == pytest.approx(10000)
        assert bd.lower_bound_lambda1(1.0, 0.01).value == 0
        with pytest.raises(bd.BoundDomainError):
            bd.lower_bound_lambda1(0.5, 0.01)

    def test_gap(self):
        assert bd.lower_bound_gap(1.0, 0.01).value == 0
        assert bd.lower_bound_gap(0.5, 0.01).value == pytest.approx(100)
        assert bd.lower_bound_gap(0.1, 0.01).value == pytest.approx(4500)
        assert bd.lower_bound_gap(0.5, 0.01).caveats

    def test_two_eigs(self):
        r = bd.lower_bound_two_eigs(0.5, 0.25, 0.01)
        assert r.value == pytest.approx(200)
        assert r.details["d_prime"] == 3
        r = bd.lower_bound_two_eigs(0.9, 0.05, 0.01)
        assert r.details["d_prime"] == 3
        assert r.details["delta"] == pytest.approx(0.15)
        assert 0 <= r.details["mu"] <= 1

    def test_two_eigs_nearly_pure(self):
        assert bd.lower_bound_two_eigs(1 - 1e-9, 1e-10, 0.01).value < 1e-4

    def test_embedding_condition(self):
        assert bd.embedding_condition(0.5, 0.25)
        assert not bd.embedding_condition(0.5, 0.2, dim=3)

    def test_all_bounds_marks_inapplicable(self):
        out = bd.all_bounds(Spectrum([0.4, 0.35, 0.25]), 0.01)
        assert out["lower_bound_lambda1"] is None
        assert out["levels_upper_bound"] is not None
