import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from nsimplex import quality as qm

rng = np.random.default_rng(99)


class TestIsotonic:
    def test_monotone_is_own_fit(self):
        d = np.array([1.0, 2.0, 2.0, 5.0])
        assert np.array_equal(qm.isotonic_fit([0.1, 0.2, 0.3, 0.4], d), d)

    def test_single_violation(self):
        assert qm.isotonic_fit([1, 2], [5, 3]).tolist() == [4.0, 4.0]

    def test_matches_brute_force(self):
        z = rng.random(100)
        d = rng.random(100)
        got = qm.isotonic_fit(z, d)
        ref = oracles.isotonic_by_key(z.tolist(), d.tolist())
        assert np.max(np.abs(got - ref)) < 1e-9

    def test_ties_pooled(self):
        z = np.array([1.0, 1.0, 2.0, 2.0, 3.0])
        d = np.array([5.0, 1.0, 2.0, 6.0, 0.0])
        got = qm.isotonic_fit(z, d)
        assert got[0] == got[1] and got[2] == got[3]
        assert np.allclose(got, oracles.isotonic_by_key(z.tolist(), d.tolist()), atol=1e-12)

    def test_input_order_preserved(self):
        z = np.array([3.0, 1.0, 2.0])
        d = np.array([3.0, 1.0, 2.0])
        assert qm.isotonic_fit(z, d).tolist() == [3.0, 1.0, 2.0]

    def test_errors(self):
        with pytest.raises(ValueError):
            qm.isotonic_fit([], [])
        with pytest.raises(ValueError):
            qm.isotonic_fit([1, 2], [1])


class TestKruskal:
    def test_identity_and_scaling(self):
        d = rng.random(50) + 0.1
        assert qm.kruskal_stress(d, d) == 0.0
        assert qm.kruskal_stress(d, 2 * d) == 0.0

    @pytest.mark.parametrize("f", [np.sqrt, np.exp, lambda x: 3 * x + 1, lambda x: x**3])
    def test_monotone_zero(self, f):
        d = rng.random(300) + 0.01
        assert qm.kruskal_stress(d, f(d)) < 1e-9

    def test_reversed_hand_value(self):
        # disparities pool to 2.5: sqrt(5 / 30)
        s = qm.kruskal_stress([1.0, 2.0, 3.0, 4.0], [4.0, 3.0, 2.0, 1.0])
        assert abs(s - 1 / math.sqrt(6)) < 1e-12

    def test_matches_literal_oracle(self):
        d, z = rng.random(60), rng.random(60)
        assert abs(qm.kruskal_stress(d, z) - oracles.kruskal(d.tolist(), z.tolist())) < 1e-12

    @pytest.mark.parametrize("g", [np.sqrt, lambda x: 3 * x + 1, np.square])
    def test_invariant_under_monotone_delta(self, g):
        d, z = rng.random(200) + 0.1, rng.random(200) + 0.1
        assert abs(qm.kruskal_stress(d, z) - qm.kruskal_stress(g(d), z)) < 1e-9

    def test_invariant_under_zeta_rescale(self):
        d, z = rng.random(200), rng.random(200)
        assert abs(qm.kruskal_stress(d, z) - qm.kruskal_stress(d, 7.5 * z)) < 1e-12

    def test_all_zero_zeta(self):
        with pytest.raises(ValueError):
            qm.kruskal_stress([1.0, 2.0], [0.0, 0.0])


class TestSammonQuadratic:
    def test_sammon(self):
        d = rng.random(20) + 0.1
        assert qm.sammon_stress(d, d) == 0.0
        assert qm.sammon_stress([1.0, 1.0], [2.0, 0.0]) == 1.0
        assert qm.sammon_stress(d, 2 * d) > 0

    def test_sammon_excludes_zero_delta(self):
        v, n = qm.sammon_stress([0.0, 1.0, 1.0], [0.5, 2.0, 0.0], return_excluded=True)
        assert n == 1 and v == 1.0
        with pytest.raises(ValueError):
            qm.sammon_stress([0.0], [1.0])

    def test_quadratic(self):
        d = rng.random(10)
        assert qm.quadratic_loss(d, d) == 0.0
        assert qm.quadratic_loss([1.0], [3.0]) == 4.0
        assert qm.quadratic_loss(d, 2 * d) > 0
        assert qm.normalize_quadratic([0, 2, 4]).tolist() == [1.0, 0.5, 0.0]
        assert qm.normalize_quadratic([0.0, 0.0]).tolist() == [1.0, 1.0]


class TestSpearman:
    def test_extremes(self):
        d = rng.random(30)
        assert qm.spearman_rho(d, d) == 1.0
        assert qm.spearman_rho(d, -d + 5) == -1.0

    def test_oracle(self):
        d, z = rng.random(10), rng.random(10)
        assert abs(qm.spearman_rho(d, z) - oracles.spearman(d.tolist(), z.tolist())) < 1e-12

    def test_ties_oracle(self):
        d = np.array([1, 2, 2, 3, 4, 4, 4, 5], dtype=float)
        z = np.array([2, 1, 3, 3, 5, 4, 6, 6], dtype=float)
        assert abs(qm.spearman_rho(d, z) - oracles.spearman(d.tolist(), z.tolist())) < 1e-12

    def test_monotone_invariance(self):
        d, z = rng.random(40) + 0.1, rng.random(40) + 0.1
        assert qm.spearman_rho(d, z) == qm.spearman_rho(np.exp(d), z**3)

    def test_constant_warns(self):
        with pytest.warns(qm.DegenerateMeasureWarning):
            assert qm.spearman_rho([1.0, 2.0, 3.0], [1.0, 1.0, 1.0]) == 0.0
        with pytest.raises(ValueError):
            qm.spearman_rho([1.0], [1.0])


class TestRecall:
    def test_relevance(self):
        assert qm.relevance(500) == 0.5
        assert abs(qm.relevance(1) - 0.9932403394892868) < 1e-15
        r = qm.relevance(np.arange(1, 1001))
        assert np.all(np.diff(r) < 0)

    def test_ideal_constant(self):
        assert abs(qm.dcg(np.arange(1000), np.arange(1000)) - 66.0435) < 1e-3
        assert abs(qm.ideal_dcg() - oracles.dcg(list(range(1000)), list(range(1000)))) < 1e-9
        assert qm.dcg_recall(np.arange(1000), np.arange(1000)) == 1.0

    def test_disjoint(self):
        assert qm.dcg_recall(np.arange(1000), np.arange(1000, 2000)) == 0.0

    def test_swap_first_two(self):
        t = list(range(1000))
        r = [1, 0] + t[2:]
        got = qm.dcg_recall(t, r)
        # frozen from the literal-formula oracle
        assert abs(got - 0.9999994848323942) < 1e-12
        assert abs(got - oracles.dcg(t, r) / oracles.dcg(t, t)) < 1e-12
        assert got < 1.0

    def test_random_permutation_null(self):
        r = np.random.default_rng(3)
        t = r.permutation(10**6)[:1000]
        vals = [qm.dcg_recall(t, r.permutation(10**6)[:1000]) for _ in range(20)]
        assert np.mean(vals) < 0.01

    def test_moving_top_neighbour_out_decreases(self):
        t = rng.permutation(5000)[:1000]
        r = t.copy()
        base = qm.dcg_recall(t, r)
        r[3] = 10**7
        assert qm.dcg_recall(t, r) < base

    def test_other_lengths(self):
        t = np.arange(100)
        assert qm.dcg_recall(t, t) == 1.0
        assert qm.relevance(50, 100) == 0.5

    def test_matches_oracle_random(self):
        t = rng.permutation(3000)[:1000]
        r = np.r_[t[rng.permutation(600)], rng.permutation(np.arange(3000, 4000))[:400]]
        assert abs(qm.dcg(t, r) - oracles.dcg(t.tolist(), r.tolist())) < 1e-9

    def test_errors(self):
        with pytest.raises(ValueError):
            qm.dcg([1, 2], [1])
        with pytest.raises(ValueError):
            qm.dcg([1, 1], [1, 2])


class TestAngles:
    def test_concentration(self):
        mean, sd, th = qm.angle_distribution(100, 20_000, seed=1)
        assert abs(mean - math.pi / 2) < 0.02
        assert 0.08 <= sd <= 0.12
        assert th.size == 20_000

    def test_dimension_order(self):
        sds = [qm.angle_distribution(m, 5000, seed=2)[1] for m in (10, 100, 1000)]
        assert sds[0] > sds[1] > sds[2]

    def test_chords_mode_and_errors(self):
        mean, sd, _ = qm.angle_distribution(100, 5000, seed=4, mode="chords")
        assert abs(mean - math.pi / 2) < 0.02
        with pytest.raises(ValueError):
            qm.angle_distribution(1, 1000)
        with pytest.raises(ValueError):
            qm.angle_distribution(10, 1000, mode="cube")


class TestReport:
    def test_evaluate_and_normalize(self):
        d = rng.random(100) + 0.1
        z = d * 0.9 + 0.01 * rng.random(100)
        rep = qm.evaluate("zen", 10, qm.DistancePairSample(d, z), recall=0.7)
        n = rep.normalized(q_max=rep.quadratic_raw * 2)
        assert n["quadloss"] == pytest.approx(0.5)
        assert all(0 <= v <= 1 for v in n.values())
        assert rep.as_dict()["method"] == "zen"

    def test_clamping(self):
        assert qm.kruskal_quality(1.7) == 0.0
        assert qm.spearman_quality(-0.3) == 0.0
        rep = qm.QualityReport("pca", 2, 0.5, 2.0, 10.0, -0.5)
        n = rep.normalized(0.0)
        assert n["sammon"] == 0.0 and n["spearman"] == 0.0 and n["quadloss"] == 1.0

    def test_sample_validation(self):
        with pytest.raises(ValueError):
            qm.DistancePairSample([1.0], [1.0, 2.0])
        with pytest.raises(ValueError):
            qm.DistancePairSample([], [])
        with pytest.raises(ValueError):
            qm.DistancePairSample([np.nan], [1.0])
        with pytest.raises(ValueError):
            qm.DistancePairSample([-1.0], [1.0])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.0, 100.0), min_size=2, max_size=12), st.integers(0, 2**31))
def test_hypothesis_pava_against_maxmin(values, seed):
    z = np.random.default_rng(seed).random(len(values))
    got = qm.isotonic_fit(z, values)
    ref = oracles.isotonic_by_key(z.tolist(), values)
    assert np.allclose(got, ref, atol=1e-9)
    order = np.argsort(z)
    assert np.all(np.diff(got[order]) >= -1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.01, 10.0), min_size=3, max_size=30, unique=True))
def test_hypothesis_kruskal_zero_for_monotone(d):
    d = np.array(d)
    assert qm.kruskal_stress(d, np.log1p(d) + d**2) < 1e-9
