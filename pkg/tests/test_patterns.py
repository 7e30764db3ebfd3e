import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tpamtl.errors import EmptyTrainingSet, ParseError, ValidationError
from tpamtl.intervals import AllenRelation, normalize_activity
from tpamtl.patterns import (
    FeatureSpace,
    MiningConfig,
    TemporalPattern,
    featurize,
    find_instances,
    format_patterns,
    is_subpattern,
    mine,
    parse_patterns,
    pattern_of,
    pattern_support,
    resolve_window,
)

from oracles import A, B, C, act, brute_force_frequent, enumerate_patterns, random_activity, sweep_support

R = AllenRelation
P = TemporalPattern
A_OVER_B = P((A, B), (R.OVERLAPS,))
TWO = act((0, A, 4), (2, B, 6))
TWIN_A = act((0, A, 1), (5, A, 6))


class TestSupport:
    def test_single_action(self):
        # visibility (-2, 4) over L = 2 + 6
        assert pattern_support(P((A,)), TWO, 2) == 0.75

    def test_overlap_pair(self):
        assert pattern_support(A_OVER_B, TWO, 2) == 0.5

    def test_instances_unioned_not_double_counted(self):
        assert pattern_support(P((A,)), TWIN_A, 1) == pytest.approx(4 / 7, abs=1e-15)

    def test_overlapping_visibility_merged(self):
        a = act((0, A, 3), (2, A, 5))
        # windows see A from t=-2 up to t=5, once
        assert pattern_support(P((A,)), a, 2) == pytest.approx(7 / 7)

    def test_absent_id(self):
        assert pattern_support(P((C,)), TWO, 2) == 0.0

    def test_gap_wider_than_window(self):
        a = act((0, A, 1), (5, B, 6))
        p = P((A, B), (R.BEFORE,))
        assert pattern_support(p, a, 2) == 0.0
        assert pattern_support(p, a, 5) == pytest.approx(1 / 11)

    def test_bad_window(self):
        with pytest.raises(ValidationError):
            pattern_support(P((A,)), TWO, 0)

    def test_matches_sweep_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            a = random_activity(rng)
            w = int(rng.integers(1, 8))
            for p in enumerate_patterns(a, 3):
                assert pattern_support(p, a, w) == sweep_support(p, a, w)


class TestInstances:
    def test_two_singletons(self):
        inst = find_instances(P((A,)), TWIN_A)
        assert [i.action_indices for i in inst] == [(0,), (1,)]

    def test_before_pair(self):
        inst = find_instances(P((A, A), (R.BEFORE,)), TWIN_A)
        assert [i.action_indices for i in inst] == [(0, 1)]

    def test_wrong_relation(self):
        assert find_instances(P((A, B), (R.MEETS,)), TWO) == []

    def test_equal_actions_identified_by_id_only(self):
        a = act((0, A, 2), (10, A, 15))
        assert len(find_instances(P((A,)), a)) == 2


class TestSubpattern:
    def test_singleton_in_pair(self):
        assert is_subpattern(P((A,)), A_OVER_B)

    def test_relation_mismatch(self):
        assert not is_subpattern(P((A, B), (R.BEFORE,)), A_OVER_B)

    def test_same_dimension_excluded(self):
        assert not is_subpattern(A_OVER_B, A_OVER_B)

    def test_embedding_skips_middle_element(self):
        a = act((0, A, 2), (3, B, 4), (5, C, 6))
        big = pattern_of(a.actions)
        assert is_subpattern(P((A, C), (R.BEFORE,)), big)
        assert not is_subpattern(P((C, A), (R.BEFORE,)), big)


class TestPatternType:
    def test_relation_accessor_row_major(self):
        a = act((0, A, 4), (2, B, 6), (8, C, 9))
        p = pattern_of(a.actions)
        assert p.relations == (R.OVERLAPS, R.BEFORE, R.BEFORE)
        assert p.relation(2, 0) is R.AFTER
        assert p.sub((1, 2)) == P((B, C), (R.BEFORE,))

    def test_relation_count_checked(self):
        with pytest.raises(ValidationError):
            P((A, B), ())


class TestMine:
    def test_two_action_corpus(self):
        fs = mine([TWO], MiningConfig(minsup=0.4, window=2, max_dim=2))
        assert fs.patterns == (P((A,)), P((B,)), A_OVER_B)

    def test_higher_minsup_prunes_pair(self):
        fs = mine([TWO], MiningConfig(minsup=0.6, window=2, max_dim=2))
        assert fs.patterns == (P((A,)), P((B,)))

    def test_threshold_above_everything(self):
        a = act((0, A, 1), (50, B, 51))
        fs = mine([a], MiningConfig(minsup=1.0, window=1, max_dim=3))
        assert len(fs) == 0

    def test_empty_training(self):
        with pytest.raises(EmptyTrainingSet):
            mine([], MiningConfig(window=2))

    def test_config_validation(self):
        for bad in (dict(minsup=0), dict(minsup=1.01), dict(window=0), dict(max_dim=0), dict(aggregation="sum")):
            with pytest.raises(ValidationError):
                MiningConfig(**bad)

    def test_default_window_twice_mean_length(self):
        # lengths 4 and 4 -> 2 * 4
        assert resolve_window(MiningConfig(), [TWO]) == 8
        assert resolve_window(MiningConfig(window_mode="avg"), [TWO]) == 4
        # lengths 1, 2 -> mean 1.5, twice is 3; avg rounds half to even -> 2
        a = act((0, A, 1), (0, B, 2))
        assert resolve_window(MiningConfig(window_mode="avg"), [a]) == 2
        assert resolve_window(MiningConfig(window_mode="max"), [a]) == 2

    def test_mean_aggregation(self):
        other = act((0, C, 3))
        fs_max = mine([TWO, other], MiningConfig(minsup=0.6, window=2, max_dim=2))
        fs_mean = mine([TWO, other], MiningConfig(minsup=0.6, window=2, max_dim=2, aggregation="mean"))
        assert P((A,)) in fs_max.index
        # A has 0.75 in one activity and 0 in the other
        assert P((A,)) not in fs_mean.index

    def test_deterministic(self):
        rng = np.random.default_rng(3)
        corpus = [random_activity(rng) for _ in range(6)]
        cfg = MiningConfig(minsup=0.1, window=3)
        assert mine(corpus, cfg).patterns == mine(list(corpus), cfg).patterns

    def test_brute_force_equivalence(self):
        rng = np.random.default_rng(5)
        for _ in range(15):
            corpus = [random_activity(rng) for _ in range(int(rng.integers(1, 9)))]
            w = int(rng.integers(1, 6))
            for minsup in (0.05, 0.3):
                fs = mine(corpus, MiningConfig(minsup=minsup, window=w, max_dim=3))
                assert set(fs.patterns) == brute_force_frequent(corpus, w, minsup, 3)

    def test_leakage_guard(self):
        rng = np.random.default_rng(9)
        train = [random_activity(rng) for _ in range(5)]
        test = [random_activity(rng, n_ids=6) for _ in range(3)]
        cfg = MiningConfig(minsup=0.2, window=3)
        assert mine(train, cfg) == mine([a for a in train + test if a not in test], cfg)
        assert mine(train, cfg) != mine(train + test, cfg)


@st.composite
def activities(draw, max_actions=5):
    n = draw(st.integers(1, max_actions))
    triples = []
    for _ in range(n):
        s = draw(st.integers(0, 10))
        triples.append((s, draw(st.integers(0, 3)), s + draw(st.integers(1, 6))))
    return normalize_activity(triples)


@settings(max_examples=60, deadline=None)
@given(activities(), st.integers(1, 6))
def test_monotonicity_property(a, w):
    pats = enumerate_patterns(a, 3)
    sup = {p: pattern_support(p, a, w) for p in pats}
    for p in pats:
        assert 0.0 <= sup[p] <= 1.0
        for keep_len in range(1, p.dim):
            for keep in itertools.combinations(range(p.dim), keep_len):
                q = p.sub(keep)
                assert is_subpattern(q, p)
                assert sup[q] >= sup[p]


class TestFeaturize:
    def test_own_supports(self):
        fs = mine([TWO], MiningConfig(minsup=0.4, window=2, max_dim=2))
        np.testing.assert_array_equal(featurize(TWO, fs), [0.75, 0.75, 0.5])

    def test_zero_vector(self):
        fs = mine([TWO], MiningConfig(minsup=0.4, window=2, max_dim=2))
        np.testing.assert_array_equal(featurize(act((0, C, 5)), fs), [0.0, 0.0, 0.0])

    def test_pure(self):
        fs = mine([TWO, TWIN_A], MiningConfig(minsup=0.1, window=2))
        assert featurize(TWIN_A, fs).tobytes() == featurize(TWIN_A, fs).tobytes()

    def test_equals_pattern_support(self):
        rng = np.random.default_rng(21)
        corpus = [random_activity(rng) for _ in range(6)]
        fs = mine(corpus, MiningConfig(minsup=0.05, window=3))
        for a in [random_activity(rng) for _ in range(10)]:
            expected = [pattern_support(p, a, 3) for p in fs.patterns]
            np.testing.assert_array_equal(featurize(a, fs), expected)


class TestPatternFile:
    def test_round_trip(self):
        rng = np.random.default_rng(2)
        fs = mine([random_activity(rng) for _ in range(5)], MiningConfig(minsup=0.1, window=4))
        text = format_patterns(fs)
        assert text.startswith("#patterns\twindow=4\tminsup=0.1\n")
        back = parse_patterns(text)
        assert back.patterns == fs.patterns and back.window == 4 and back.minsup == 0.1

    def test_line_format(self):
        fs = FeatureSpace((P((A,)), A_OVER_B), window=2, minsup=0.4)
        lines = format_patterns(fs).splitlines()
        assert lines[1] == "1\t0\t"
        assert lines[2] == "2\t0,1\toverlaps"

    def test_errors_carry_line_numbers(self):
        with pytest.raises(ParseError, match="line 3"):
            parse_patterns("#patterns\twindow=2\tminsup=0.1\n1\t0\t\n2\t0,1\tsideways\n")
        with pytest.raises(ParseError):
            parse_patterns("1\t0\t\n")
        with pytest.raises(ParseError):
            parse_patterns("#patterns\twindow=2\tminsup=0.1\n3\t0,1\toverlaps\n")
