import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decfusion import analysis, rules
from decfusion.analysis import (
    EnumerationSizeError,
    ZeroVarianceError,
    deflection_brute_force,
    deflection_closed_form,
    deflection_pair,
    enumerate_outcomes,
    fisher_information,
    outcome_pmf,
    score,
)
from decfusion.model import SensorBank, log_likelihood
from decfusion.rules import RuleContext, RuleId


def random_config(rng, k_max=10):
    K = int(rng.integers(2, k_max + 1))
    pe = rng.uniform(0.0, 0.5, K)
    pf = rng.uniform(0.01, 0.4)
    pd = min(pf + rng.uniform(0.05, 0.5), 0.999)
    return K, pe, pf, pd


class TestScore:
    def test_bernoulli(self):
        assert score([1], 0.5, [0.0]) == pytest.approx(2.0, rel=1e-14)

    def test_hand_value(self):
        # alpha = (0.14, 0.23)
        expected = 0.8 * 0.86 / 0.1204 + 0.6 * 0.77 / 0.1771
        assert score([1, 1], 0.05, [0.1, 0.2]) == pytest.approx(expected, rel=1e-13)
        assert score([1, 1], 0.05, [0.1, 0.2]) == pytest.approx(8.322981, abs=1e-6)

    @pytest.mark.parametrize("K", [1, 3, 7])
    def test_zero_mean(self, K, rng):
        pe = rng.uniform(0, 0.5, K)
        p1 = rng.uniform(0.05, 0.95)
        outcomes = enumerate_outcomes(K)
        s = np.array([score(y, p1, pe) for y in outcomes])
        assert outcome_pmf(outcomes, p1, pe) @ s == pytest.approx(0.0, abs=1e-10)

    def test_finite_difference(self, rng):
        h = 1e-6
        for _ in range(100):
            K = int(rng.integers(1, 11))
            pe = rng.uniform(0, 0.45, K)
            p1 = rng.uniform(0.05, 0.95)
            y = rng.integers(0, 2, K)
            fd = (log_likelihood(y, p1 + h, pe) - log_likelihood(y, p1 - h, pe)) / (2 * h)
            assert fd == pytest.approx(score(y, p1, pe), rel=1e-6, abs=1e-6)


class TestFisherInformation:
    def test_bernoulli(self):
        assert fisher_information(0.5, [0.0]) == pytest.approx(4.0)

    def test_erased(self):
        assert fisher_information(0.3, [0.5, 0.5, 0.5]) == 0.0

    def test_hand_value(self):
        assert fisher_information(0.05, [0.1, 0.2]) == pytest.approx(0.64 / 0.1204 + 0.36 / 0.1771, rel=1e-14)
        assert fisher_information(0.05, [0.1, 0.2]) == pytest.approx(7.348365, abs=1e-6)

    def test_matches_score_second_moment(self, rng):
        for _ in range(100):
            K = int(rng.integers(1, 11))
            pe = rng.uniform(0, 0.5, K)
            p1 = rng.uniform(0.02, 0.98)
            outcomes = enumerate_outcomes(K)
            s = np.array([score(y, p1, pe) for y in outcomes])
            assert outcome_pmf(outcomes, p1, pe) @ s**2 == pytest.approx(fisher_information(p1, pe), abs=1e-10, rel=1e-12)


class TestEnumeration:
    def test_order(self):
        assert enumerate_outcomes(2).tolist() == [[0, 0], [0, 1], [1, 0], [1, 1]]

    def test_size_cap(self):
        with pytest.raises(EnumerationSizeError):
            enumerate_outcomes(analysis.MAX_ENUM_K + 1)
        with pytest.raises(EnumerationSizeError):
            deflection_brute_force(RuleId.CR, 0, SensorBank.iid(21, 0.05, 0.5), [0.1] * 21)

    def test_pmf_sums_to_one(self):
        pe = [0.1, 0.3, 0.45, 0.0]
        assert outcome_pmf(enumerate_outcomes(4), 0.2, pe).sum() == pytest.approx(1.0, abs=1e-15)


class TestDeflection:
    bank = SensorBank.iid(2, 0.05, 0.5)

    def test_coefficients(self):
        co = analysis.deflection_coefficients(0.05, 0.5, [0.1, 0.4])
        assert np.allclose(co.m, [0.36, 0.09])
        assert np.allclose(co.n, [1.2, 1.8])
        # alpha(0.4, 0.05) = 0.2 * 0.05 + 0.4 = 0.41
        assert np.allclose(co.c0, [0.14 * 0.86, 0.41 * 0.59])

    def test_hand_values(self):
        d_cr = 0.45**2 / (0.1204 + 0.2419)
        d_wu = (1.2 * 0.36 + 1.8 * 0.09) ** 2 / (1.44 * 0.1204 + 3.24 * 0.2419)
        assert deflection_closed_form(RuleId.CR, 0, self.bank, [0.1, 0.4]) == pytest.approx(d_cr, rel=1e-14)
        assert deflection_closed_form(RuleId.WU, 0, self.bank, [0.1, 0.4]) == pytest.approx(d_wu, rel=1e-14)
        assert d_cr == pytest.approx(0.558929064, abs=1e-9)
        assert d_wu == pytest.approx(0.368638808, abs=1e-9)

    def test_gap_examples(self):
        assert analysis.deflection_gap(self.bank, [0.2, 0.2]) == pytest.approx(0.0, abs=1e-15)
        assert analysis.deflection_gap(self.bank, [0.1, 0.4]) == pytest.approx(0.190290256, abs=1e-9)
        assert analysis.deflection_gap(self.bank, [0.1, 0.4], 1) == pytest.approx(0.103430769, abs=1e-9)

    @pytest.mark.parametrize("pe", [0.0, 0.1, 0.33, 0.49])
    def test_equal_bep_equivalence(self, pe):
        bank = SensorBank.iid(5, 0.1, 0.7)
        for i in (0, 1):
            a = deflection_closed_form(RuleId.CR, i, bank, [pe] * 5)
            b = deflection_closed_form(RuleId.WU, i, bank, [pe] * 5)
            assert a == pytest.approx(b, rel=1e-13)

    def test_dominance_and_bound(self, rng):
        for _ in range(1000):
            K, pe, pf, pd = random_config(rng)
            bank = SensorBank.iid(K, pf, pd)
            for i in (0, 1):
                pair = deflection_pair(bank, pe, i)
                assert pair.d_wu <= pair.bound * (1 + 1e-12) + 1e-12
                assert pair.bound <= pair.d_cr * (1 + 1e-12) + 1e-12
                assert pair.gap >= -1e-12

    def test_closed_form_matches_enumeration(self, rng):
        for _ in range(200):
            K, pe, pf, pd = random_config(rng)
            bank = SensorBank.iid(K, pf, pd)
            for rule in (RuleId.CR, RuleId.WU):
                for i in (0, 1):
                    exact = deflection_brute_force(rule, i, bank, pe)
                    assert deflection_closed_form(rule, i, bank, pe) == pytest.approx(exact, rel=1e-10, abs=1e-10)

    def test_brute_force_other_rules(self):
        bank = SensorBank.iid(4, 0.05, 0.5)
        pe = [0.1] * 4
        # with equal BEPs every rule is an increasing affine map of the count
        ref = deflection_brute_force(RuleId.CR, 0, bank, pe)
        for rule in (RuleId.LRT, RuleId.IS, RuleId.LOD, RuleId.WU):
            assert deflection_brute_force(rule, 0, bank, pe) == pytest.approx(ref, rel=1e-10)

    def test_zero_variance(self):
        bank = SensorBank.iid(3, 0.05, 0.5)
        with pytest.raises(ZeroVarianceError):
            deflection_brute_force(RuleId.IS, 0, bank, [0.5] * 3)
        # perfect sensors over perfect links: the count is deterministic under H1
        with pytest.raises(ZeroVarianceError):
            deflection_closed_form(RuleId.CR, 1, SensorBank.iid(2, 0.05, 1.0), [0.0, 0.0])

    def test_inid_brute_force(self):
        bank = SensorBank([0.05, 0.2, 0.1], [0.5, 0.7, 0.4])
        pe = [0.1, 0.2, 0.3]
        assert deflection_brute_force(RuleId.LOD_INID, 0, bank, pe) > 0
        with pytest.raises(rules.ScenarioError):
            deflection_brute_force(RuleId.WU, 0, bank, pe)

    def test_rejects_other_rules_in_closed_form(self):
        with pytest.raises(ValueError):
            deflection_closed_form(RuleId.LRT, 0, self.bank, [0.1, 0.2])

    def test_surface(self):
        grid = np.linspace(0, 0.5, 26)
        surface = analysis.deflection_surface(grid)
        assert surface.shape == (26 * 26, 5)
        assert np.all(surface[:, 4] >= -1e-12)
        diag = surface[surface[:, 0] == surface[:, 1]]
        assert np.all(np.abs(diag[:, 4]) <= 1e-12)


class TestWuEstimatorMean:
    @pytest.mark.parametrize("pd, pe, expected", [(0.5, [0.0, 0.0], 0.5), (0.5, [0.3], 0.5), (0.8, [0.3], 0.692)])
    def test_examples(self, pd, pe, expected):
        assert analysis.wu_estimator_mean(pd, pe) == pytest.approx(expected, abs=1e-15)

    def test_matches_enumeration(self, rng):
        for _ in range(100):
            K = int(rng.integers(1, 11))
            pe = rng.uniform(0, 0.5, K)
            pd = rng.uniform(0.01, 1.0)
            outcomes = enumerate_outcomes(K)
            ctx = RuleContext(pe)
            est = np.array([rules.wu_estimate(y, ctx) for y in outcomes])
            exact = outcome_pmf(outcomes, pd, pe) @ est
            assert analysis.wu_estimator_mean(pd, pe) == pytest.approx(exact, abs=1e-12)

    @settings(max_examples=50)
    @given(st.floats(0.0, 1.0), st.lists(st.floats(0.0, 0.5), min_size=1, max_size=8))
    def test_biased_toward_half(self, pd, pe):
        m = analysis.wu_estimator_mean(pd, pe)
        assert min(pd, 0.5) - 1e-12 <= m <= max(pd, 0.5) + 1e-12
        if all(p == 0 for p in pe):
            assert m == pytest.approx(pd, abs=1e-15)
        else:
            assert math.isfinite(m)
