import io
import math

import numpy as np
import pytest
from scipy import stats

from groupdyn.analytic import GroupScalingParams, integer_mode, ladder, psi
from groupdyn.fitting import (
    FitConfig,
    FitError,
    Observations,
    UnidentifiableError,
    fit,
    goodness_of_fit,
    log_likelihood,
    model_mass,
    pearson_chi_square,
    pool_bins,
    sample_groups,
)

TRUE = GroupScalingParams(1.0, 8.0)


def brute_log_likelihood(counts, beta, n_t, cut):
    z = math.fsum(psi(float(n), GroupScalingParams(beta, n_t)) for n in range(2, cut + 1))
    return math.fsum(c * math.log(psi(float(n), GroupScalingParams(beta, n_t)) / z) for n, c in counts.items())


class TestObservations:
    def test_drops_zero_counts(self):
        obs = Observations({2: 3, 5: 0, 4: 1})
        assert obs.counts == {2: 3, 4: 1} and obs.total_groups == 4

    @pytest.mark.parametrize("counts", [{1: 3}, {2: -1}, {2: 1.5}, {2: 0}, {}])
    def test_invalid(self, counts):
        with pytest.raises(FitError):
            Observations(counts)

    def test_from_weights_sums_exactly(self):
        obs = Observations.from_weights(np.arange(2, 9), [0.1, 0.3, 0.2, 0.15, 0.15, 0.07, 0.03], 1001)
        assert obs.total_groups == 1001

    def test_csv(self):
        obs = Observations.read_csv(io.StringIO("n,count\n2,5\n3,7\n\n9,1\n"))
        assert obs.counts == {2: 5, 3: 7, 9: 1}
        buf = io.StringIO()
        obs.write_csv(buf)
        assert Observations.read_csv(io.StringIO(buf.getvalue())) == obs

    @pytest.mark.parametrize(
        "text, line",
        [
            ("", "line 1"),
            ("size,count\n2,1\n", "line 1"),
            ("n,count\n2,1\n3,x\n", "line 3"),
            ("n,count\n2,1\n1,4\n", "line 3"),
            ("n,count\n2,1,4\n", "line 2"),
            ("n,count\n2.5,1\n", "line 2"),
        ],
    )
    def test_csv_errors_name_line(self, text, line):
        with pytest.raises(FitError, match=line):
            Observations.read_csv(io.StringIO(text))


class TestLogLikelihood:
    def test_against_brute_force(self):
        counts = {2: 4, 3: 9, 7: 2, 20: 1}
        for beta, n_t in [(1, 8), (0.5, 30), (0.9, 3)]:
            got = log_likelihood(Observations(counts), GroupScalingParams(beta, n_t), 400)
            assert got == pytest.approx(brute_log_likelihood(counts, beta, n_t, 400), rel=1e-12)

    def test_mode_maximizes_single_observation(self):
        p = GroupScalingParams(0.875, 45.5)
        mode = integer_mode(p)
        best = log_likelihood(Observations({mode: 1}), p)
        for n in range(2, 200):
            assert log_likelihood(Observations({n: 1}), p) <= best

    def test_linear_in_counts(self):
        obs = sample_groups(TRUE, 500, np.random.default_rng(0))
        assert log_likelihood(obs.scaled(2), TRUE) == pytest.approx(2 * log_likelihood(obs, TRUE), rel=1e-13)

    def test_order_independent(self):
        sizes = sample_groups(TRUE, 300, np.random.default_rng(1))
        flat = np.repeat(sizes.sizes, sizes.values)
        shuffled = np.random.default_rng(2).permutation(flat)
        assert Observations.from_sizes(shuffled) == Observations.from_sizes(flat)
        assert log_likelihood(Observations.from_sizes(shuffled), TRUE) == log_likelihood(sizes, TRUE)

    def test_true_params_beat_wrong_scale(self):
        wins = 0
        for seed in range(20):
            obs = sample_groups(TRUE, 10_000, np.random.default_rng(seed))
            wins += log_likelihood(obs, TRUE) > log_likelihood(obs, GroupScalingParams(1, 16))
        assert wins == 20

    def test_cut_too_small(self):
        with pytest.raises(FitError):
            log_likelihood(Observations({50: 1}), TRUE, 40)

    def test_flat_along_ratio(self):
        # the normalized mass depends on beta / n_t only
        obs = sample_groups(TRUE, 2000, np.random.default_rng(3))
        a = log_likelihood(obs, GroupScalingParams(1.0, 8.0), 5000)
        b = log_likelihood(obs, GroupScalingParams(0.5, 4.0), 5000)
        assert a == pytest.approx(b, rel=1e-12)


class TestSampling:
    def test_frequencies_match_mass(self):
        obs = sample_groups(TRUE, 200_000, np.random.default_rng(4), n_max_cut=200)
        mass = model_mass(TRUE, 200)
        freq = np.zeros(199)
        freq[obs.sizes - 2] = obs.values / obs.total_groups
        assert 0.5 * np.abs(freq - mass).sum() < 0.01

    def test_reproducible(self):
        a = sample_groups(TRUE, 1000, np.random.default_rng(5))
        b = sample_groups(TRUE, 1000, np.random.default_rng(5))
        assert a == b


class TestGoodnessOfFit:
    def test_zero_when_exact(self):
        expected = np.array([5.0, 10.0, 20.0, 7.5])
        assert pearson_chi_square(expected, expected) == 0

    def test_pooling(self):
        o, e = pool_bins([1, 2, 3, 4, 5, 0], [1.0, 2.0, 3.0, 4.0, 5.0, 0.5])
        assert e.tolist() == [6.0, 9.0 + 0.5]
        assert o.tolist() == [6.0, 9.0]
        assert np.all(e >= 5)

    def test_near_zero_for_rounded_expectation(self):
        mass = model_mass(TRUE, 300)
        counts = {n: int(round(10**6 * m)) for n, m in zip(range(2, 301), mass)}
        stat, dof = goodness_of_fit(Observations(counts), TRUE, 300)
        # only rounding noise of at most 0.5 per bin remains
        assert stat < 1.0 and dof > 10

    def test_calibration(self):
        passes = 0
        trials = 40
        for seed in range(trials):
            obs = sample_groups(TRUE, 10_000, np.random.default_rng(100 + seed))
            stat, dof = goodness_of_fit(obs, TRUE)
            passes += stat <= stats.chi2.ppf(0.99, dof)
        assert passes >= 0.95 * trials

    def test_power(self):
        obs = sample_groups(TRUE, 10_000, np.random.default_rng(6))
        stat, dof = goodness_of_fit(obs, GroupScalingParams(1, 80))
        assert stats.chi2.sf(stat, dof) < 1e-3

    def test_too_few(self):
        with pytest.raises(FitError):
            goodness_of_fit(Observations({2: 1, 3: 1}), TRUE)


class TestFit:
    def test_unidentifiable(self):
        with pytest.raises(UnidentifiableError):
            fit(Observations({5: 100}))

    def test_result_fields(self):
        obs = sample_groups(TRUE, 5000, np.random.default_rng(7))
        res = fit(obs)
        cfg = res.config
        assert cfg.beta_range[0] <= res.beta_hat <= cfg.beta_range[1]
        assert cfg.n_t_range[0] <= res.n_t_hat <= cfg.n_t_range[1]
        assert res.implied_mode == integer_mode(res.params, 2, res.n_max_cut)
        assert res.implied_ladder == ladder(res.params, res.n_t_hat, 4)
        assert res.log_likelihood >= res.runner_up[2]
        stat, dof = res.chi_square
        assert dof > 0 and stat >= 0
        doc = res.to_json()
        assert set(doc) >= {"beta_hat", "n_t_hat", "log_likelihood", "chi_square", "dof", "implied_mode", "ladder", "config"}

    def test_ratio_recovered(self):
        # beta / n_t is the identified combination
        true = GroupScalingParams(0.93, 52)
        for seed in range(5):
            res = fit(sample_groups(true, 10_000, np.random.default_rng(seed)))
            assert res.ratio_hat == pytest.approx(true.ratio, rel=0.03)
            assert res.implied_mode == 15

    def test_mode_recovered(self):
        true = GroupScalingParams(1, 108)
        res = fit(sample_groups(true, 100_000, np.random.default_rng(8)))
        assert res.implied_mode == 28

    def test_scale_invariant(self):
        obs = sample_groups(GroupScalingParams(0.875, 45.5), 3000, np.random.default_rng(9))
        a, b = fit(obs), fit(obs.scaled(10))
        assert (a.beta_hat, a.n_t_hat) == pytest.approx((b.beta_hat, b.n_t_hat), rel=1e-6)

    def test_deterministic(self):
        obs = sample_groups(TRUE, 2000, np.random.default_rng(10))
        assert fit(obs).to_json() == fit(obs).to_json()

    def test_least_squares_mode(self):
        obs = sample_groups(TRUE, 20_000, np.random.default_rng(11))
        res = fit(obs, FitConfig(method="lsq"))
        assert res.ratio_hat == pytest.approx(TRUE.ratio, rel=0.05)

    @pytest.mark.parametrize(
        "kw",
        [
            {"beta_range": (0.0, 1.0)},
            {"beta_range": (0.9, 0.8)},
            {"n_t_range": (5.0, 5.0)},
            {"grid_points": 7},
            {"refine_tolerance": 0.5},
            {"method": "bayes"},
        ],
    )
    def test_config_invalid(self, kw):
        with pytest.raises(FitError):
            FitConfig(**kw)
