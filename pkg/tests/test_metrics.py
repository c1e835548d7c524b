import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from codecalib.metrics import (
    Bin,
    ReliabilityBins,
    Scheme,
    ScoredSample,
    auc_roc,
    bin_samples,
    brier,
    brier_ref,
    check_scores,
    ece,
    report,
    report_from_samples,
    skill_score,
)
from oracles import auc_by_pairs, ece_by_direct_sum

grid_conf = st.sampled_from([i / 20 for i in range(21)])
any_conf = st.floats(0.0, 1.0, allow_nan=False)
corpus = st.lists(st.tuples(st.one_of(grid_conf, any_conf), st.booleans()), min_size=1, max_size=40)


def split(pairs):
    return [c for c, _ in pairs], [y for _, y in pairs]


class TestBinning:
    def test_constant_confidence_lands_in_one_bin(self):
        bins = bin_samples([0.7] * 8, [True, False] * 4, "equal_width", 10)
        nonempty = [b for b in bins.bins if b.count]
        assert len(nonempty) == 1
        assert (nonempty[0].lo, nonempty[0].hi, nonempty[0].count) == pytest.approx((0.7, 0.8, 8))

    def test_one_goes_to_last_bin(self):
        bins = bin_samples([1.0, 0.0], [True, False], "equal_width", 10)
        assert bins.bins[-1].count == 1
        assert bins.bins[0].count == 1

    def test_quantile_distinct_values_split_evenly(self):
        conf = [0.05, 0.93, 0.41, 0.12, 0.77, 0.58, 0.3, 0.66, 0.21, 0.88]
        bins = bin_samples(conf, [True] * 10, "quantile", 5)
        assert [b.count for b in bins.bins] == [2, 2, 2, 2, 2]
        # sorted by hand: .05 .12 | .21 .30 | .41 .58 | .66 .77 | .88 .93
        assert [(b.lo, b.hi) for b in bins.bins] == [(0.05, 0.12), (0.21, 0.3), (0.41, 0.58), (0.66, 0.77), (0.88, 0.93)]

    def test_quantile_keeps_ties_together(self):
        conf = [0.1, 0.2, 0.2, 0.2, 0.2, 0.9]
        bins = bin_samples(conf, [False] * 6, "quantile", 3)
        counts = [b.count for b in bins.bins]
        assert sum(counts) == 6
        for b in bins.bins:
            if b.count:
                assert not (b.lo < 0.2 < b.hi)
        assert max(counts) - min(counts) <= 4

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            bin_samples([], [], "equal_width", 10)

    @given(corpus, st.integers(1, 10), st.sampled_from(["equal_width", "quantile"]))
    def test_counts_sum_to_n(self, pairs, m, scheme):
        conf, corr = split(pairs)
        bins = bin_samples(conf, corr, scheme, m)
        assert len(bins.bins) == m
        assert bins.n == len(pairs)
        for b in bins.bins:
            if b.count:
                assert 0 <= b.conf <= 1 and 0 <= b.corr <= 1


class TestEce:
    def test_perfect_bin(self):
        bins = ReliabilityBins(Scheme.EQUAL_WIDTH, 1, (Bin(0, 1, 10, 0.7, 0.7),))
        assert ece(bins, 10) == 0

    def test_two_bin_direct_sum(self):
        bins = ReliabilityBins(
            Scheme.EQUAL_WIDTH, 2, (Bin(0, 0.5, 4, 0.2, 0.5), Bin(0.5, 1, 6, 0.9, 0.5))
        )
        assert ece(bins, 10) == pytest.approx(0.36, abs=1e-12)

    def test_constant_base_rate_predictor(self):
        correct = [True] * 28 + [False] * 72
        rep = report([0.28] * 100, correct)
        assert rep.ece == pytest.approx(0.0, abs=1e-12)

    def test_count_mismatch(self):
        bins = bin_samples([0.2, 0.4], [True, False])
        with pytest.raises(ValueError):
            ece(bins, 3)

    @given(corpus, st.integers(1, 10), st.sampled_from(["equal_width", "quantile"]))
    def test_matches_direct_sum(self, pairs, m, scheme):
        conf, corr = split(pairs)
        got = ece(bin_samples(conf, corr, scheme, m), len(conf))
        assert got == pytest.approx(ece_by_direct_sum(conf, corr, scheme, m), abs=1e-12)
        assert 0 <= got <= 1

    @given(corpus)
    def test_single_bin_is_gap_of_means(self, pairs):
        conf, corr = split(pairs)
        expected = abs(np.mean(corr) - np.mean(conf))
        assert ece(bin_samples(conf, corr, "equal_width", 1)) == pytest.approx(expected, abs=1e-12)


class TestBrier:
    def test_perfect_predictor(self):
        assert brier([1.0, 0.0, 1.0], [True, False, True]) == 0

    def test_coinflip(self):
        assert brier([0.5] * 4, [True, False, True, False]) == 0.25

    def test_hand_computed(self):
        assert brier([0.8, 0.4], [True, False]) == pytest.approx(0.10, abs=1e-15)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            brier([], [])

    @pytest.mark.parametrize("rate,expected", [(0.5, 0.25), (0.72, 0.2016), (0.0, 0.0), (1.0, 0.0)])
    def test_reference(self, rate, expected):
        assert brier_ref(rate) == pytest.approx(expected, abs=1e-15)

    def test_constant_base_rate_matches_reference(self):
        correct = [True] * 18 + [False] * 7
        rate = 18 / 25
        assert brier([rate] * 25, correct) == pytest.approx(brier_ref(rate), abs=1e-15)

    @given(corpus)
    def test_nonnegative_and_zero_only_when_exact(self, pairs):
        conf, corr = split(pairs)
        b = brier(conf, corr)
        assert 0 <= b <= 1
        exact = all(c == float(y) for c, y in pairs)
        assert (b == 0) == exact


class TestSkill:
    def test_unskilled(self):
        assert skill_score(0.2, 0.2) == 0

    def test_perfect(self):
        assert skill_score(0.0, 0.25) == 1.0

    def test_hand_computed(self):
        assert skill_score(0.20, 0.25) == pytest.approx(0.2, abs=1e-15)

    def test_degenerate_reference(self):
        with pytest.raises(ValueError):
            skill_score(0.1, 0.0)


class TestAuc:
    def test_perfect_ranking(self):
        assert auc_roc([0.9, 0.8, 0.3, 0.1], [True, True, False, False]) == 1.0

    def test_all_ties(self):
        assert auc_roc([0.4] * 6, [True, False, True, False, False, True]) == 0.5

    def test_six_sample_instance(self):
        conf = [0.9, 0.4, 0.4, 0.7, 0.2, 0.4]
        corr = [True, True, False, False, False, True]
        # positives .9 .4 .4 vs negatives .4 .7 .2: 3 + (0.5+0+1)*2 = 6 of 9
        assert auc_by_pairs(conf, corr) == pytest.approx(6 / 9)
        assert auc_roc(conf, corr) == pytest.approx(6 / 9, abs=1e-12)

    def test_single_class(self):
        with pytest.raises(ValueError, match="AUC undefined"):
            auc_roc([0.2, 0.5], [True, True])

    @given(st.lists(st.tuples(grid_conf, st.booleans()), min_size=2, max_size=30))
    def test_matches_pair_counting(self, pairs):
        conf, corr = split(pairs)
        if all(corr) or not any(corr):
            return
        assert auc_roc(conf, corr) == pytest.approx(auc_by_pairs(conf, corr), abs=1e-12)

    @given(st.lists(st.tuples(any_conf, st.booleans()), min_size=2, max_size=30))
    def test_invariant_under_monotone_map(self, pairs):
        conf, corr = split(pairs)
        if all(corr) or not any(corr):
            return
        squashed = [c**3 for c in conf]
        ranks_kept = all((a < b) == (a**3 < b**3) and (a == b) == (a**3 == b**3) for a in conf for b in conf)
        if ranks_kept:
            assert auc_roc(squashed, corr) == auc_roc(conf, corr)


class TestReport:
    def test_unskilled_corpus(self):
        correct = [True] * 30 + [False] * 70
        rep = report([0.3] * 100, correct)
        assert rep.skill == pytest.approx(0.0, abs=1e-12)
        assert rep.ece == pytest.approx(0.0, abs=1e-12)
        assert rep.auc == 0.5

    def test_perfect_corpus(self):
        rep = report([1.0, 0.0, 1.0, 0.0], [True, False, True, False])
        assert (rep.brier, rep.skill, rep.auc) == (0.0, 1.0, 1.0)

    def test_fixture_against_components(self):
        conf = [0.15, 0.35, 0.35, 0.62, 0.8, 0.95, 0.05, 0.5]
        corr = [False, True, False, True, True, True, False, False]
        rep = report(conf, corr, "equal_width", 4)
        assert rep.n == 8
        assert rep.base_rate == 0.5
        assert rep.brier == pytest.approx(sum((c - y) ** 2 for c, y in zip(conf, corr)) / 8)
        assert rep.brier_ref == 0.25
        assert rep.skill == pytest.approx((0.25 - rep.brier) / 0.25)
        assert rep.ece == pytest.approx(ece_by_direct_sum(conf, corr, "equal_width", 4), abs=1e-12)
        assert rep.auc == pytest.approx(auc_by_pairs(conf, corr), abs=1e-12)

    def test_single_class_corpus_has_no_skill_or_auc(self):
        rep = report([0.3, 0.6], [True, True])
        assert rep.skill is None and rep.auc is None and rep.brier_ref == 0

    def test_from_scored_samples(self):
        samples = [ScoredSample(0.8, True), ScoredSample(0.4, False)]
        assert report_from_samples(samples).brier == pytest.approx(0.10)

    def test_scored_sample_range(self):
        with pytest.raises(ValueError):
            ScoredSample(1.5, True)

    @settings(max_examples=50)
    @given(corpus, st.randoms(use_true_random=False))
    def test_order_independent(self, pairs, rnd):
        shuffled = list(pairs)
        rnd.shuffle(shuffled)
        a = report(*split(pairs), scheme="quantile", m=3)
        b = report(*split(shuffled), scheme="quantile", m=3)
        for field in ("brier", "brier_ref", "base_rate", "n"):
            assert getattr(a, field) == pytest.approx(getattr(b, field), abs=1e-12)
        assert a.ece == pytest.approx(b.ece, abs=1e-12)
        if a.auc is not None:
            assert a.auc == pytest.approx(b.auc, abs=1e-12)


def test_check_scores_rejects_bad_input():
    with pytest.raises(ValueError):
        check_scores([0.2, 1.2], [True, False])
    with pytest.raises(ValueError):
        check_scores([0.2], [True, False])
    with pytest.raises(ValueError):
        check_scores([math.nan], [True])
    conf, corr = check_scores([0.1, 0.9], [0, 1])
    assert corr.dtype == bool
