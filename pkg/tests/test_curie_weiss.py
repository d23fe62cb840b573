import itertools
import math

import numpy as np
import pytest
from scipy import stats

from tensor_ising import curie_weiss as cw
from tensor_ising import landscape as ls


def enumerate_law(n, beta, p):
    """Brute force over all 2^n configurations: (mass per k up-spins, Z)."""
    mass = np.zeros(n + 1)
    for x in itertools.product((-1, 1), repeat=n):
        s = sum(x)
        mass[(s + n) // 2] += math.exp(n * beta * (s / n) ** p)
    z = mass.sum() / 2**n
    return mass / mass.sum(), z


def dist(n, beta, p):
    return cw.build_dist(ls.ModelSpec(p=p, beta=beta, n=n))


class TestBuild:
    def test_single_spin_uniform(self):
        d = dist(1, 0.0, 2)
        np.testing.assert_array_equal(d.support, [-1.0, 1.0])
        np.testing.assert_allclose(d.probs, [0.5, 0.5])
        assert d.log_Z == pytest.approx(0.0, abs=1e-15)

    def test_beta_zero_partition(self):
        for p in (2, 3, 5):
            assert dist(10, 0.0, p).log_Z == pytest.approx(0.0, abs=1e-13)

    @pytest.mark.parametrize("n", [1, 2, 5, 8, 12])
    @pytest.mark.parametrize("p", [2, 3, 4])
    @pytest.mark.parametrize("beta", [0.0, 0.5, 0.7, 1.0])
    def test_enumeration(self, n, p, beta):
        probs, z = enumerate_law(n, beta, p)
        d = dist(n, beta, p)
        assert len(d.support) == n + 1
        np.testing.assert_allclose(d.probs, probs, rtol=1e-10, atol=0)
        assert math.exp(d.log_Z) == pytest.approx(z, rel=1e-10)
        m = d.support
        for k in range(1, 5):
            ref = float(np.dot(probs, m**k))
            got = cw.moment(d, k)
            assert got == pytest.approx(ref, rel=1e-10, abs=1e-14)

    def test_normalization_large(self):
        for n, beta, p in [(1000, 1.0, 2), (10_000, 0.9, 3), (1_000_000, 0.75, 4)]:
            d = dist(n, beta, p)
            assert abs(d.probs.sum() - 1) <= 1e-12
            assert np.all(np.isfinite(d.log_weights))

    def test_even_symmetry_exact(self):
        for n in (7, 50, 301):
            d = dist(n, 0.8, 4)
            np.testing.assert_array_equal(d.probs, d.probs[::-1])

    def test_log_z_convex_in_beta(self):
        betas = np.linspace(0.0, 2.0, 81)
        logz = np.array([dist(60, b, 3).log_Z for b in betas])
        assert np.all(np.diff(logz, 2) > 0)

    def test_csv(self, tmp_path):
        d = dist(4, 0.8, 3)
        path = tmp_path / "d.csv"
        d.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "m,prob,log_weight"
        assert len(lines) == 6
        assert float(lines[1].split(",")[1]) == d.probs[0]


class TestSample:
    def test_symmetric_at_zero_beta(self):
        d = dist(1000, 0.0, 2)
        means = np.array([s.mean for s in cw.sample(d, 10_000, 1)])
        se = math.sqrt(1 / 1000 / 10_000)
        assert abs(means.mean()) < 4 * se

    def test_second_moment(self):
        d = dist(500, 1.0, 2)
        means = cw.sample_means(d, 10_000, 2)
        ref = cw.moment(d, 2)
        se = np.std(means**2, ddof=1) / math.sqrt(len(means))
        assert abs(np.mean(means**2) - ref) < 4 * se

    def test_determinism_and_shared_stream(self):
        d = dist(30, 0.9, 3)
        a = cw.sample(d, 50, 123)
        b = cw.sample(d, 50, 123)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.spins, y.spins)
        np.testing.assert_array_equal([s.mean for s in a], cw.sample_means(d, 50, 123))

    def test_spin_parity_and_mean(self):
        d = dist(11, 0.9, 2)
        for s in cw.sample(d, 100, 5):
            assert s.spins.shape == (11,)
            assert set(np.unique(s.spins)) <= {-1, 1}
            assert s.spins.sum() == round(s.mean * 11)
            assert (round(s.mean * 11) - 11) % 2 == 0

    def test_uniform_subset(self):
        # given the magnetization, every coordinate is equally likely to be up
        d = dist(6, 0.0, 2)
        spins = np.array([s.spins for s in cw.sample(d, 20_000, 9)])
        frac = (spins > 0).mean(axis=0)
        assert np.all(np.abs(frac - 0.5) < 0.02)

    def test_chi_squared(self):
        d = dist(40, 0.9, 2)
        means = cw.sample_means(d, 100_000, 11)
        k = np.rint((means + 1) * 40 / 2).astype(int)
        obs = np.bincount(k, minlength=41)
        exp = d.probs * len(means)
        keep = exp >= 5
        obs_k = np.append(obs[keep], obs[~keep].sum())
        exp_k = np.append(exp[keep], exp[~keep].sum())
        stat, pval = stats.chisquare(obs_k, exp_k * obs_k.sum() / exp_k.sum())
        assert pval > 1e-3


class TestMoments:
    def test_odd_at_zero(self):
        for p in (2, 3):
            assert cw.moment(dist(21, 0.0, p), 3) == pytest.approx(0.0, abs=1e-15)

    def test_trend_to_m_star(self):
        m2 = ls.find_m_star(ls.ModelSpec(p=2, beta=1.0)).m_star ** 2
        gaps = [abs(cw.moment(dist(n, 1.0, 2), 2) - m2) for n in (200, 400, 800, 1600)]
        assert all(a > b for a, b in zip(gaps, gaps[1:]))

    def test_power_p_drift(self):
        land = ls.find_m_star(ls.ModelSpec(p=3, beta=0.9))
        for n in (2000, 8000):
            assert abs(cw.moment(dist(n, 0.9, 3), 3) - land.m_star**3) < 5 / math.sqrt(n)


class TestTail:
    def test_trivial(self):
        d = dist(12, 0.7, 2)
        assert cw.tail_prob(d, lambda m: m > -2) == pytest.approx(1.0)
        assert cw.tail_prob(d, lambda m: m > 1) == 0.0

    def test_enumeration(self):
        probs, _ = enumerate_law(12, 0.7, 2)
        m = cw.support(12)
        d = dist(12, 0.7, 2)
        assert cw.tail_prob(d, lambda v: v >= 0.5) == pytest.approx(probs[m >= 0.5].sum(), rel=1e-12)

    def test_scalar_predicate(self):
        d = dist(12, 0.7, 3)
        vec = cw.tail_prob(d, lambda v: v >= 0.5)
        # math.isfinite rejects arrays, forcing the per-point fallback
        scal = cw.tail_prob(d, lambda v: math.isfinite(v) and v >= 0.5)
        assert scal == vec


class TestLdp:
    def test_beta_zero(self):
        rows = cw.ldp_rate_check(0.0, 2, (0.5, 1.0), [200, 400, 800])
        target = -ls.entropy(0.5)
        gaps = [abs(r - target) for _, r in rows]
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[2] < 0.01

    def test_typical_set(self):
        m = ls.find_m_star(ls.ModelSpec(p=2, beta=1.0)).m_star
        rows = cw.ldp_rate_check(1.0, 2, (m - 0.05, m + 0.05), [200, 800, 3200])
        assert abs(rows[-1][1]) < abs(rows[0][1]) and abs(rows[-1][1]) < 1e-3

    def test_empty_interval(self):
        rows = cw.ldp_rate_check(1.0, 2, (0.101, 0.102), [10])
        assert rows[0][1] == -math.inf
