import numpy as np
import pytest
from scipy import stats

from gradlens.stochastics import (
    Rng,
    StableParams,
    TargetNoiseSpec,
    noise_class_targets,
    noise_inputs,
    noise_targets,
    sample_gaussian,
    sample_stable,
    sample_uniform,
)


class TestRng:
    def test_same_seed_same_stream(self):
        a = Rng(123).gen.random(10)
        b = Rng(123).gen.random(10)
        assert np.array_equal(a, b)

    def test_different_seeds_differ(self):
        assert not np.array_equal(Rng(1).gen.random(10), Rng(2).gen.random(10))

    def test_substream_reproducible(self):
        a = Rng(5).substream("masks").gen.random(4)
        b = Rng(5).substream("masks").gen.random(4)
        assert np.array_equal(a, b)

    def test_substreams_independent_of_sibling_use(self):
        root = Rng(5)
        root.substream("other").gen.random(1000)
        a = root.substream("masks").gen.random(4)
        b = Rng(5).substream("masks").gen.random(4)
        assert np.array_equal(a, b)

    def test_distinct_labels_distinct_streams(self):
        a = Rng(5).substream("a").gen.random(8)
        b = Rng(5).substream("b").gen.random(8)
        assert not np.array_equal(a, b)

    def test_nested_labels(self):
        a = Rng(5).substream("eval", 3, 1).gen.random(3)
        b = Rng(5).substream("eval").substream(3, 1).gen.random(3)
        assert np.array_equal(a, b)

    def test_label_types(self):
        with pytest.raises(TypeError):
            Rng(0).substream(1.5).gen.random()


class TestSampleUniform:
    def test_degenerate_interval(self):
        assert sample_uniform(Rng(0), 2.5, 2.5) == 2.5

    def test_reversed_bounds(self):
        with pytest.raises(ValueError):
            sample_uniform(Rng(0), 1.0, 0.0)

    def test_mean(self):
        draws = sample_uniform(Rng(11), 0.0, 1.0, size=100_000)
        assert 0.497 <= draws.mean() <= 0.503

    def test_support(self):
        draws = sample_uniform(Rng(12), -2.0, 3.0, size=10_000)
        assert draws.min() >= -2.0 and draws.max() < 3.0

    def test_reproducible(self):
        assert sample_uniform(Rng(1), 0, 1) == sample_uniform(Rng(1), 0, 1)


class TestSampleGaussian:
    def test_moments(self):
        draws = sample_gaussian(Rng(21), size=1_000_000)
        assert abs(draws.mean()) < 0.005
        assert 0.995 <= draws.var() <= 1.005

    def test_skewness(self):
        draws = sample_gaussian(Rng(22), size=1_000_000)
        assert abs(stats.skew(draws)) < 0.01

    def test_reproducible(self):
        assert sample_gaussian(Rng(3)) == sample_gaussian(Rng(3))


class TestStableParams:
    @pytest.mark.parametrize("alpha", [0.0, -0.5, 2.5])
    def test_bad_alpha(self, alpha):
        with pytest.raises(ValueError):
            StableParams(alpha, 0.0)

    @pytest.mark.parametrize("beta", [-1.5, 1.01])
    def test_bad_beta(self, beta):
        with pytest.raises(ValueError):
            StableParams(1.5, beta)


class TestSampleStable:
    def test_alpha2_is_gaussian_variance_2(self):
        draws = sample_stable(Rng(31), StableParams(2.0, 0.0), size=1_000_000)
        assert 1.97 <= draws.var() <= 2.03

    def test_alpha1_is_cauchy(self):
        draws = sample_stable(Rng(32), StableParams(1.0, 0.0), size=1_000_000)
        q25, q50, q75 = np.percentile(draws, [25, 50, 75])
        assert -0.01 <= q50 <= 0.01
        assert 1.98 <= q75 - q25 <= 2.02

    def test_alpha2_matches_scaled_normal_ks(self):
        draws = sample_stable(Rng(33), StableParams(2.0, 0.0), size=100_000)
        ref = np.sqrt(2.0) * Rng(34).gen.standard_normal(100_000)
        assert stats.ks_2samp(draws, ref).pvalue > 0.01

    @pytest.mark.parametrize("alpha", [0.7, 1.25, 1.75])
    def test_symmetric_when_beta_zero(self, alpha):
        draws = sample_stable(Rng(35), StableParams(alpha, 0.0), size=100_000)
        half = draws.size // 2
        assert stats.ks_2samp(draws[:half], -draws[half:]).pvalue > 0.01

    def test_scalar_draw(self):
        x = sample_stable(Rng(36), StableParams(1.5, 0.5))
        assert isinstance(x, float) and np.isfinite(x)


class TestNoiseInputs:
    def test_zero_amplitude_identity(self):
        x = Rng(41).gen.normal(0, 1, (30, 4))
        out = noise_inputs(x, 0.0, Rng(42))
        assert np.array_equal(out, x)
        assert out is not x

    def test_negative_amplitude(self):
        with pytest.raises(ValueError):
            noise_inputs(np.zeros((2, 2)), -0.1, Rng(0))

    def test_support_bound(self):
        x = np.zeros((100, 10))
        out = noise_inputs(x, 0.7, Rng(43))
        assert np.abs(out).max() <= 0.7

    def test_mean_perturbation(self):
        amplitude = 1.5
        x = np.zeros((1000, 100))
        out = noise_inputs(x, amplitude, Rng(44))
        bound = 3.0 * amplitude / np.sqrt(3.0 * x.size)
        assert abs(out.mean()) <= bound


class TestTargetNoiseSpec:
    def test_parse_nonoise(self):
        assert TargetNoiseSpec.parse("NoNoise").kind == "none"

    @pytest.mark.parametrize("name,x", [("TDS3", 3.0), ("TDS10", 10.0), ("TDS0.5", 0.5)])
    def test_parse_white(self, name, x):
        spec = TargetNoiseSpec.parse(name)
        assert spec.kind == "white" and spec.x == x

    def test_parse_stable(self):
        spec = TargetNoiseSpec.parse("StableA1.75B0F0.03")
        assert spec.kind == "stable"
        assert spec.stable.alpha == 1.75
        assert spec.stable.beta == 0.0
        assert spec.factor == 0.03

    def test_parse_stable_default_factor(self):
        assert TargetNoiseSpec.parse("StableA1B1").factor == 0.03

    def test_parse_negative_beta(self):
        assert TargetNoiseSpec.parse("StableA1.5B-1F0.1").stable.beta == -1.0

    @pytest.mark.parametrize("bad", ["", "nonoise", "TDS", "StableA3B0", "Stable1.25"])
    def test_parse_rejects(self, bad):
        with pytest.raises(ValueError):
            TargetNoiseSpec.parse(bad)

    @pytest.mark.parametrize(
        "name", ["NoNoise", "TDS3", "TDS6", "TDS9", "TDS10", "StableA1.25B0F0.03",
                 "StableA1.75B0F0.03", "StableA1B1F0.03"]
    )
    def test_name_round_trip(self, name):
        assert TargetNoiseSpec.parse(name).name == name


class TestNoiseTargets:
    def test_nonoise_identity(self):
        y = Rng(51).gen.normal(0, 1, 100)
        out = noise_targets(y, TargetNoiseSpec.none(), 2.0, Rng(52))
        assert np.array_equal(out, y)

    def test_white_zero_amplitude_identity(self):
        y = Rng(53).gen.normal(0, 1, 100)
        out = noise_targets(y, TargetNoiseSpec.white(0.0), 2.0, Rng(54))
        assert np.array_equal(out, y)

    def test_white_noise_scale(self):
        y = np.zeros(100_000)
        out = noise_targets(y, TargetNoiseSpec.white(3.0), 2.0, Rng(55))
        assert abs(out.std() - 6.0) <= 0.1

    def test_stable_noise_scale_at_alpha2(self):
        y = np.zeros(200_000)
        spec = TargetNoiseSpec.stable_noise(2.0, 0.0, factor=0.03)
        out = noise_targets(y, spec, 1.0, Rng(56))
        # alpha=2 stable has variance 2, so std = 0.03 * sqrt(2)
        assert abs(out.std() - 0.03 * np.sqrt(2.0)) < 0.002

    def test_fresh_draws_per_stream(self):
        y = np.zeros(10)
        spec = TargetNoiseSpec.white(1.0)
        a = noise_targets(y, spec, 1.0, Rng(57).substream(0))
        b = noise_targets(y, spec, 1.0, Rng(57).substream(1))
        assert not np.array_equal(a, b)


class TestNoiseClassTargets:
    def test_round_and_clamp(self):
        y = np.array([0, 1, 2, 3])
        spec = TargetNoiseSpec.white(10.0)
        out = noise_class_targets(y, spec, 1.0, 4, Rng(61))
        assert out.dtype == np.int64
        assert out.min() >= 0 and out.max() <= 3

    def test_nonoise_keeps_labels(self):
        y = np.array([2, 0, 1, 3])
        out = noise_class_targets(y, TargetNoiseSpec.none(), 1.0, 4, Rng(62))
        assert np.array_equal(out, y)
