import numpy as np
import pytest

from gradlens.bench import (
    SweepConfig,
    TrainingDiverged,
    cell_grid,
    evaluate_clean,
    evaluate_under_noise,
    network_spec_for,
    prepare_splits,
    run_sweep,
    train,
)
from gradlens.data import Dataset, DatasetSchema
from gradlens.lens import NetworkSpec, init_params
from gradlens.optim import Adam, SGD
from gradlens.stochastics import Rng, TargetNoiseSpec
from gradlens.synth import synth_classification, synth_regression, write_csv

NO_NOISE = TargetNoiseSpec.none()


def tiny_regression(n=120, d=4, seed=0):
    x, y = synth_regression(n, d, Rng(seed))
    return Dataset(x, y, "regression")


def tiny_spec(d=4):
    return NetworkSpec(input_dim=d, output_dim=1, hidden_layers=2, hidden_width=8)


class TestTrain:
    def test_p1_equals_unmasked_reference_exactly(self):
        ds = tiny_regression()
        spec = tiny_spec()
        masked, _ = train(spec, ds, 1.0, NO_NOISE, SGD(0.01), 10, 32, Rng(5))
        plain, _ = train(spec, ds, None, NO_NOISE, SGD(0.01), 10, 32, Rng(5))
        for a, b in zip(masked, plain):
            assert np.array_equal(a.weights, b.weights)
            assert np.array_equal(a.bias, b.bias)

    def test_p0_freezes_parameters(self):
        ds = tiny_regression()
        spec = tiny_spec()
        params, _ = train(spec, ds, 0.0, NO_NOISE, SGD(0.01), 10, 32, Rng(6))
        init = init_params(spec, Rng(6).substream("init"))
        for a, b in zip(params, init):
            assert np.array_equal(a.weights, b.weights)
            assert np.array_equal(a.bias, b.bias)

    def test_p0_freezes_parameters_with_adam(self):
        ds = tiny_regression()
        spec = tiny_spec()
        params, _ = train(spec, ds, 0.0, NO_NOISE, Adam(1e-3), 5, 32, Rng(7))
        init = init_params(spec, Rng(7).substream("init"))
        for a, b in zip(params, init):
            assert np.array_equal(a.weights, b.weights)

    def test_linear_problem_converges(self):
        # y = 2x is exactly representable; loss should become tiny
        gen = Rng(8).gen
        x = gen.uniform(-1, 1, (256, 1))
        ds = Dataset(x, 2.0 * x[:, 0], "regression")
        spec = NetworkSpec(input_dim=1, output_dim=1, hidden_layers=1, hidden_width=16)
        _, losses = train(spec, ds, 1.0, NO_NOISE, Adam(0.01), 120, 64, Rng(9))
        assert losses[-1] < 1e-3
        tail = losses[3:]
        drops = sum(b <= a + 1e-12 for a, b in zip(tail, tail[1:]))
        assert drops >= 0.9 * (len(tail) - 1)

    def test_loss_history_length(self):
        ds = tiny_regression()
        _, losses = train(tiny_spec(), ds, 0.9, NO_NOISE, SGD(0.01), 7, 32, Rng(10))
        assert len(losses) == 7

    def test_target_noise_does_not_touch_init_or_masks(self):
        ds = tiny_regression()
        spec = tiny_spec()
        noisy = TargetNoiseSpec.parse("StableA1.75B0F0.03")
        a, _ = train(spec, ds, 1.0, NO_NOISE, SGD(0.0001), 2, 64, Rng(11))
        b, _ = train(spec, ds, 1.0, noisy, SGD(0.0001), 2, 64, Rng(11))
        init = init_params(spec, Rng(11).substream("init"))
        # same init stream regardless of noise strategy
        for pa, pb, pi in zip(a, b, init):
            assert pa.weights.shape == pb.weights.shape == pi.weights.shape
        # trajectories differ because the targets differ, nothing else
        assert not np.array_equal(a[0].weights, b[0].weights)

    def test_classification_training_improves_accuracy(self):
        x, y = synth_classification(300, 4, 3, Rng(12), spread=0.5)
        ds = Dataset(x, y, "classification", num_classes=3)
        spec = NetworkSpec(input_dim=4, output_dim=3, hidden_layers=1,
                           hidden_width=16, task="classification")
        params, _ = train(spec, ds, 1.0, NO_NOISE, Adam(0.01), 30, 64, Rng(13))
        clean = evaluate_clean(spec, params, ds)
        assert clean["accuracy"] > 0.9

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_divergence_detected(self):
        ds = tiny_regression()
        spec = tiny_spec()
        with pytest.raises(TrainingDiverged):
            train(spec, ds, 1.0, NO_NOISE, SGD(1e6), 10, 32, Rng(14))

    def test_invalid_p(self):
        with pytest.raises(ValueError):
            train(tiny_spec(), tiny_regression(), 1.5, NO_NOISE, SGD(0.1), 1, 32, Rng(0))


@pytest.fixture(scope="module")
def trained():
    ds = tiny_regression(200)
    spec = tiny_spec()
    params, _ = train(spec, ds, 1.0, NO_NOISE, Adam(0.01), 15, 64, Rng(20))
    return spec, params, ds


class TestEvaluateUnderNoise:

    def test_amplitude_zero_equals_clean_metrics(self, trained):
        spec, params, ds = trained
        curves = evaluate_under_noise(spec, params, ds, [0.0], 4, Rng(21))
        clean = evaluate_clean(spec, params, ds)
        for curve in curves:
            amp, value, stderr = curve.points[0]
            assert value == clean[curve.metric_name]
            assert stderr == 0.0

    def test_curve_shape_and_names(self, trained):
        spec, params, ds = trained
        curves = evaluate_under_noise(spec, params, ds, [0.0, 0.5, 1.0], 3, Rng(22))
        assert [c.metric_name for c in curves] == ["mse", "smape"]
        for c in curves:
            assert len(c.points) == 3
            assert np.isfinite(c.values).all()

    def test_constant_model_flat_mse(self):
        # zero weights ignore the input entirely
        ds = tiny_regression(150)
        spec = tiny_spec()
        params = [
            type(p)(np.zeros_like(p.weights), np.zeros_like(p.bias))
            for p in init_params(spec, Rng(23).substream("init"))
        ]
        curves = evaluate_under_noise(spec, params, ds, [0.0, 1.0, 2.0], 4, Rng(24))
        mse_curve = curves[0]
        assert np.ptp(mse_curve.values) == 0.0

    def test_stderr_scales_with_repetitions(self, trained):
        spec, params, ds = trained
        ratios = []
        for trial in range(30):
            rng = Rng(100 + trial)
            c4 = evaluate_under_noise(spec, params, ds, [1.0], 4, rng.substream("a"))
            c16 = evaluate_under_noise(spec, params, ds, [1.0], 16, rng.substream("b"))
            s4 = c4[0].points[0][2]
            s16 = c16[0].points[0][2]
            ratios.append(s4 / s16)
        mean_ratio = np.mean(ratios)  # expect about sqrt(16/4) = 2
        assert 1.5 <= mean_ratio <= 2.7

    def test_single_class_test_set_marks_auc_missing(self):
        x, y = synth_classification(60, 3, 2, Rng(25))
        ds = Dataset(x, np.zeros_like(y), "classification", num_classes=2)
        spec = NetworkSpec(input_dim=3, output_dim=2, hidden_layers=1,
                           hidden_width=8, task="classification")
        params = init_params(spec, Rng(26).substream("init"))
        curves = evaluate_under_noise(spec, params, ds, [0.0], 2, Rng(27))
        by_name = {c.metric_name: c for c in curves}
        assert np.isnan(by_name["roc_auc"].values[0])
        assert np.isfinite(by_name["accuracy"].values[0])


@pytest.fixture
def sweep_setup(tmp_path):
    x, y = synth_regression(220, 3, Rng(30))
    csv_path = write_csv(tmp_path / "toy.csv", x, y, target_name="y")
    registry = {"toy": {"path": str(csv_path), "target": "y", "task": "regression"}}
    config = SweepConfig(
        dataset="toy",
        p_grid=(0.0, 0.9),
        target_noises=(NO_NOISE,),
        seeds=(1,),
        amplitudes=(0.0, 0.5),
        repetitions=2,
        epochs=3,
        batch_size=64,
        hidden_layers=1,
        hidden_width=8,
    )
    return config, registry, tmp_path


class TestSweep:
    def test_cell_grid_product_count(self):
        config = SweepConfig(dataset="d", p_grid=(0.0, 0.9), seeds=(1, 2),
                             target_noises=(NO_NOISE,))
        assert len(cell_grid(config)) == 4

    def test_run_sweep_outputs(self, sweep_setup):
        config, registry, tmp_path = sweep_setup
        out = tmp_path / "out"
        results = run_sweep(config, registry, out)
        assert len(results) == 2
        text = (out / "results.csv").read_text()
        lines = text.strip().splitlines()
        assert lines[0] == "dataset,seed,p,target_noise,amplitude,metric,value,stderr"
        # 2 cells x 2 amplitudes x 2 metrics
        assert len(lines) == 1 + 8
        losses = (out / "losses.csv").read_text().strip().splitlines()
        assert losses[0] == "dataset,seed,p,target_noise,epoch,train_loss"
        assert len(losses) == 1 + 2 * 3

    def test_rerun_byte_identical(self, sweep_setup):
        config, registry, tmp_path = sweep_setup
        run_sweep(config, registry, tmp_path / "a")
        run_sweep(config, registry, tmp_path / "b")
        assert (tmp_path / "a/results.csv").read_bytes() == \
            (tmp_path / "b/results.csv").read_bytes()
        assert (tmp_path / "a/losses.csv").read_bytes() == \
            (tmp_path / "b/losses.csv").read_bytes()

    def test_interrupt_and_resume_matches_uninterrupted(self, sweep_setup, monkeypatch):
        config, registry, tmp_path = sweep_setup
        run_sweep(config, registry, tmp_path / "full")

        import gradlens.bench as bench_mod
        original = bench_mod._run_cell_to_files
        calls = {"n": 0}

        def dying(args):
            if calls["n"] >= 1:
                raise KeyboardInterrupt
            calls["n"] += 1
            return original(args)

        monkeypatch.setattr(bench_mod, "_run_cell_to_files", dying)
        with pytest.raises(KeyboardInterrupt):
            run_sweep(config, registry, tmp_path / "part")
        monkeypatch.setattr(bench_mod, "_run_cell_to_files", original)

        results = run_sweep(config, registry, tmp_path / "part", resume=True)
        assert len(results) == 2
        assert (tmp_path / "part/results.csv").read_bytes() == \
            (tmp_path / "full/results.csv").read_bytes()
        assert (tmp_path / "part/losses.csv").read_bytes() == \
            (tmp_path / "full/losses.csv").read_bytes()

    def test_resume_on_complete_sweep_runs_nothing(self, sweep_setup):
        config, registry, tmp_path = sweep_setup
        out = tmp_path / "out"
        run_sweep(config, registry, out)
        seen = []
        run_sweep(config, registry, out, resume=True, progress=seen.append)
        assert seen == []

    def test_parallel_jobs_byte_identical(self, sweep_setup):
        config, registry, tmp_path = sweep_setup
        run_sweep(config, registry, tmp_path / "seq", jobs=1)
        run_sweep(config, registry, tmp_path / "par", jobs=2)
        assert (tmp_path / "seq/results.csv").read_bytes() == \
            (tmp_path / "par/results.csv").read_bytes()

    def test_missing_dataset_fails_fast(self, sweep_setup):
        config, registry, tmp_path = sweep_setup
        with pytest.raises(ValueError, match="unknown dataset"):
            run_sweep(config, {}, tmp_path / "x")

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_diverged_cell_recorded_and_skipped(self, sweep_setup):
        config, registry, tmp_path = sweep_setup
        bad = SweepConfig(
            dataset="toy", p_grid=(1.0,), target_noises=(NO_NOISE,), seeds=(1,),
            amplitudes=(0.0,), repetitions=1, epochs=3, batch_size=64,
            optimizer="sgd", learning_rate=1e9, hidden_layers=1, hidden_width=8,
        )
        out = tmp_path / "diverge"
        results = run_sweep(bad, registry, out)
        assert results == []
        failed = list((out / "cells").glob("*.failed.json"))
        assert len(failed) == 1
        rows = (out / "results.csv").read_text().strip().splitlines()
        assert len(rows) == 1  # header only

    def test_cells_paired_across_p_share_initialization(self, sweep_setup):
        config, registry, _ = sweep_setup
        path = registry["toy"]["path"]
        from gradlens.data import DatasetSchema, load_csv
        dataset = load_csv(path, DatasetSchema("y", "regression"))
        tr_a, _ = prepare_splits(dataset, config, seed=1)
        tr_b, _ = prepare_splits(dataset, config, seed=1)
        assert np.array_equal(tr_a.features, tr_b.features)
        spec = network_spec_for(tr_a, config)
        init_a = init_params(spec, Rng(1).substream("init"))
        init_b = init_params(spec, Rng(1).substream("init"))
        for a, b in zip(init_a, init_b):
            assert np.array_equal(a.weights, b.weights)


class TestSweepConfigValidation:
    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError):
            SweepConfig(dataset="d", p_grid=())

    def test_bad_p(self):
        with pytest.raises(ValueError):
            SweepConfig(dataset="d", p_grid=(2.0,))

    def test_amplitudes_strictly_increasing(self):
        with pytest.raises(ValueError):
            SweepConfig(dataset="d", amplitudes=(0.0, 0.0, 1.0))

    def test_noise_strings_parsed(self):
        cfg = SweepConfig(dataset="d", target_noises=("TDS3", "NoNoise"))
        assert cfg.target_noises[0].kind == "white"
