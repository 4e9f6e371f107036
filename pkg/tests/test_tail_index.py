import json
import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fractalgen.processes import Trajectory, simulate_levy
from fractalgen.stable import MultivariateStableSpec, StableParams, sample_sas
from fractalgen.tail_index import (
    TailIndexReport,
    default_k1,
    estimate_alpha,
    estimate_beta,
    preprocess_increments,
)

K = 100_000


def mae(alpha, size, seeds=50):
    est = [estimate_alpha(sample_sas(StableParams(alpha), np.random.default_rng(s), size))
           for s in range(seeds)]
    return np.mean(np.abs(np.array(est) - alpha))


def path(points):
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    t = np.arange(len(points), dtype=float)
    return Trajectory(t, points, 1.0, t[-1])


class TestPreprocess:
    def test_constant_is_zero(self):
        out = preprocess_increments(path(np.ones((5, 2))), ["a", "a"])
        np.testing.assert_array_equal(out["a"], 0.0)
        assert np.isnan(estimate_beta(path(np.ones((5, 2))), ["a", "a"]).beta_s)

    def test_centering(self):
        out = preprocess_increments(path([0.0, 1.0, 3.0]), ["g"])
        np.testing.assert_allclose(out["g"], [-0.5, 0.5])

    def test_group_lengths(self):
        m = 7
        pts = np.random.default_rng(0).normal(size=(20, 4))
        out = preprocess_increments(path(pts), ["x", "x", "y", "y"], window=(5, 5 + m))
        assert list(out) == ["x", "y"]
        assert all(v.size == 2 * (m - 1) for v in out.values())

    def test_groups_keep_first_appearance_order(self):
        pts = np.random.default_rng(0).normal(size=(5, 3))
        assert list(preprocess_increments(path(pts), ["b", "a", "b"])) == ["b", "a"]

    def test_frozen_coordinate_dropped(self):
        pts = np.column_stack([np.random.default_rng(0).normal(size=10), np.zeros(10)])
        out = preprocess_increments(path(pts), ["g", "g"])
        assert out["g"].size == 9
        assert preprocess_increments(path(pts), ["g", "g"], drop_frozen=False)["g"].size == 18

    def test_coordinate_scaling(self):
        rng = np.random.default_rng(1)
        pts = np.cumsum(rng.normal(size=(200, 2)) * [1.0, 100.0], axis=0)
        out = preprocess_increments(path(pts), ["g", "g"], scale="coordinate")
        block = out["g"].reshape(-1, 2)
        np.testing.assert_allclose(np.abs(block).mean(axis=0), 1.0, rtol=1e-6)

    @pytest.mark.parametrize("window", [(0, 1), (3, 2), (0, 50)])
    def test_bad_window(self, window):
        with pytest.raises(ValueError):
            preprocess_increments(path(np.zeros((10, 1))), ["g"], window=window)

    def test_group_map_length(self):
        with pytest.raises(ValueError):
            preprocess_increments(path(np.zeros((10, 2))), ["g"])


class TestEstimateAlpha:
    def test_gaussian(self, rng):
        a = estimate_alpha(rng.standard_normal(K), k1=316)
        assert 1.85 <= a <= 2.15

    def test_stable_12(self, rng):
        a = estimate_alpha(sample_sas(StableParams(1.2), rng, K))
        assert 1.05 <= a <= 1.35

    def test_cauchy(self, rng):
        assert 0.9 <= estimate_alpha(rng.standard_cauchy(K)) <= 1.1

    def test_default_k1(self):
        assert default_k1(K) == 316
        assert default_k1(3) == 2

    @given(c=st.floats(1e-6, 1e6), seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_scale_invariance(self, c, seed):
        x = sample_sas(StableParams(1.5), np.random.default_rng(seed), 10_000)
        assert abs(estimate_alpha(c * x) - estimate_alpha(x)) < 1e-9

    def test_prefix_used(self, rng):
        x = rng.standard_normal(1010)
        assert estimate_alpha(x, 100) == estimate_alpha(x[:1000], 100)

    def test_zeros_perturbed(self, rng, caplog):
        x = rng.standard_normal(10_000)
        x[::100] = 0.0
        with caplog.at_level(logging.WARNING, logger="fractalgen"):
            a = estimate_alpha(x)
        assert np.isfinite(a)
        assert "zeros" in caplog.text

    def test_all_zero_is_nan(self):
        assert np.isnan(estimate_alpha(np.zeros(100)))

    def test_too_few_samples(self):
        with pytest.raises(ValueError):
            estimate_alpha(np.ones(3), k1=2)

    def test_permutation_within_band(self, rng):
        x = sample_sas(StableParams(1.5), rng, K)
        assert abs(estimate_alpha(rng.permutation(x)) - estimate_alpha(x)) < 0.15

    @pytest.mark.parametrize("alpha", [1.2, 1.8])
    def test_consistency(self, alpha):
        assert mae(alpha, 100_000) < mae(alpha, 1_000)


class TestEstimateBeta:
    def test_two_groups(self, rng):
        spec = MultivariateStableSpec.independent([1.3] * 10 + [1.7] * 10)
        traj = simulate_levy(spec, 1.0, 1e-4, rng)
        rep = estimate_beta(traj, ["a"] * 10 + ["b"] * 10)
        assert 1.55 <= rep.beta_s <= 1.85
        assert rep.beta_s == rep.alpha_hats.max()
        np.testing.assert_array_equal(rep.sample_counts, [100_000, 100_000])

    def test_single_group(self, rng):
        traj = simulate_levy(MultivariateStableSpec.independent([1.4] * 5), 1.0, 1e-4, rng)
        rep = estimate_beta(traj, ["only"] * 5)
        assert rep.beta_s == rep.alpha_hats[0]

    def test_gaussian_groups(self, rng):
        traj = simulate_levy(MultivariateStableSpec.independent([2.0] * 6), 1.0, 1e-4, rng)
        rep = estimate_beta(traj, ["a", "a", "b", "b", "c", "c"])
        assert abs(rep.beta_s - 2.0) < 0.15
        assert rep.clipped_beta() <= 2.0

    def test_fixed_k1(self, rng):
        traj = simulate_levy(MultivariateStableSpec.independent([1.5] * 2), 1.0, 1e-3, rng)
        rep = estimate_beta(traj, ["a", "a"], k1_policy=10)
        assert rep.alpha_hats[0] == estimate_alpha(preprocess_increments(traj, ["a", "a"])["a"], 10)

    def test_degenerate_group(self, rng):
        pts = np.column_stack([np.cumsum(rng.standard_cauchy(500)), np.zeros(500)])
        rep = estimate_beta(path(pts), ["moving", "frozen"])
        assert rep.degenerate == ["frozen"]
        assert rep.beta_s == rep.alpha_hats[0]

    def test_report_serialization(self):
        rep = TailIndexReport(["a", "b"], [1.5, 2.1], [100, 100])
        doc = json.loads(rep.to_json())
        assert doc["beta_s"] == 2.1 and doc["above_two"] is True
        assert rep.clipped_beta() == 2.0
        assert "beta_S" in rep.table()
