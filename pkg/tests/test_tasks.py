import math

import numpy as np
import pytest

from optbench.params import ParamStore
from optbench.rng import Prng, derive_rng
from optbench.tasks import (
    BUILTIN_TASK_REGIMES,
    BUILTIN_TASKS,
    RECOMMENDED_S_MAX,
    TaskInstance,
    evaluate_test_error,
    export_dataset_csv,
    infer_regime,
    make_cluster_classification,
    make_intermediate_regression,
    make_quadratic,
    make_rosenbrock,
    make_sine_regression,
    next_batch,
)


def test_quadratic_minimum_and_hand_values():
    task = make_quadratic(6, Prng(2))
    obj = task.objective
    assert obj.loss(obj.centers.copy()) == 0.0
    assert np.all(obj.grad(obj.centers.copy()) == 0.0)
    assert np.all((0.5 <= obj.curvatures) & (obj.curvatures <= 5.0))
    assert np.all(np.abs(obj.centers) <= 1.0)
    # dim=1 style check: c=1, a=0, w=3 -> L=9, grad=6
    from optbench.tasks import QuadraticObjective

    obj1 = QuadraticObjective(np.array([1.0]), np.array([0.0]))
    assert obj1.loss(np.array([3.0])) == 9.0
    assert obj1.grad(np.array([3.0]))[0] == 6.0


def test_rosenbrock_hand_values():
    task = make_rosenbrock()
    obj = task.objective
    assert obj.loss(np.array([1.0, 1.0])) == 0.0
    assert np.all(obj.grad(np.array([1.0, 1.0])) == 0.0)
    assert obj.loss(np.array([0.0, 0.0])) == 1.0
    assert np.array_equal(obj.grad(np.array([0.0, 0.0])), np.array([-2.0, 0.0]))
    assert obj.loss(task.start) == pytest.approx(24.2, abs=1e-12)


def test_sine_regression_shape_and_targets():
    task = make_sine_regression(Prng(4))
    assert len(task.train_set) == 100 and len(task.test_set) == 100
    assert task.regime == "batch"
    assert task.model_spec.layer_sizes == (1, 16, 16, 1)
    x = task.train_set.inputs[:, 0]
    assert np.all((-math.pi <= x) & (x <= math.pi))
    assert np.allclose(task.train_set.targets[:, 0], np.sin(x), atol=1e-15)
    noisy = make_sine_regression(Prng(4), noise_sigma=0.02)
    resid = noisy.train_set.targets[:, 0] - np.sin(noisy.train_set.inputs[:, 0])
    assert 0.01 < resid.std() < 0.03


def test_sine_zero_model_rmse_is_target_rms():
    task = make_sine_regression(Prng(4))
    layout = task.model_spec.layout()
    params = ParamStore(np.zeros(layout.total), layout)
    rms = float(np.sqrt(np.mean(task.test_set.targets**2)))
    assert evaluate_test_error(task, params) == pytest.approx(rms, abs=1e-12)
    assert rms == pytest.approx(1.0 / math.sqrt(2.0), abs=0.08)  # RMS of sine


def test_intermediate_regression_fraction_and_regime():
    task = make_intermediate_regression(Prng(9))
    assert len(task.train_set) == 200
    assert task.resolved_batch_size() == 20
    assert task.regime == "intermediate"
    assert RECOMMENDED_S_MAX[task.regime] == 1e-2
    assert task.batches_per_epoch() == 10


def test_cluster_classification_construction():
    task = make_cluster_classification(Prng(12))
    assert len(task.train_set) == 512 and len(task.test_set) == 512
    assert task.regime == "mini_batch"
    assert task.batches_per_epoch() == 64
    assert set(np.unique(task.train_set.targets)) == {0, 1, 2, 3}
    # points cluster around their labeled means
    for k, (mx, my) in enumerate(((1.5, 1.5), (-1.5, 1.5), (-1.5, -1.5), (1.5, -1.5))):
        rows = task.train_set.inputs[task.train_set.targets == k]
        assert np.all(np.abs(rows.mean(axis=0) - [mx, my]) < 0.2)


def test_untrained_classifier_near_chance():
    rates = []
    for seed in range(8):
        task = make_cluster_classification(Prng(seed))
        rng = derive_rng(99, "init", seed)
        params = task.initial_params(rng)
        rates.append(evaluate_test_error(task, params))
    assert 0.30 <= float(np.mean(rates)) <= 0.95  # around 4-way chance


def test_perfect_sine_predictor_hits_noise_floor():
    # with noisy targets, an oracle predicting sin(x) exactly is left
    # with the irreducible noise
    task = make_sine_regression(Prng(21), noise_sigma=0.02)
    oracle_pred = np.sin(task.test_set.inputs[:, 0])
    rmse = float(np.sqrt(np.mean((oracle_pred - task.test_set.targets[:, 0]) ** 2)))
    assert rmse == pytest.approx(0.02, abs=0.006)


def monte_carlo_bayes_rate(n=200_000, seed=0):
    """Bayes error of the cluster mixture via the true densities.

    Equal priors and equal isotropic covariances make the optimal rule
    `nearest mean`; misclassification is estimated on generative draws.
    """
    rng = np.random.default_rng(seed)
    means = np.array([(1.5, 1.5), (-1.5, 1.5), (-1.5, -1.5), (1.5, -1.5)])
    labels = rng.integers(0, 4, size=n)
    points = means[labels] + 0.5 * rng.standard_normal((n, 2))
    d2 = ((points[:, None, :] - means[None, :, :]) ** 2).sum(axis=2)
    return float(np.mean(np.argmin(d2, axis=1) != labels))


def test_trained_model_approaches_bayes_rate():
    from optbench.bench import run_training
    from optbench.optimizers import OptimizerSpec

    bayes = monte_carlo_bayes_rate()
    assert 0.001 < bayes < 0.01  # ~3-sigma separated corners
    rng = derive_rng(1, "clusters", 0)
    task = make_cluster_classification(rng)
    trace = run_training(task, OptimizerSpec("adam", {"gamma": 0.01}), rng)
    assert not trace.failed
    assert float(np.min(trace.errors)) <= bayes + 0.03


def test_trained_models_classify_cluster_means():
    from optbench.bench import run_training
    from optbench.nets import forward
    from optbench.optimizers import OptimizerSpec

    means = np.array([(1.5, 1.5), (-1.5, 1.5), (-1.5, -1.5), (1.5, -1.5)])
    votes = np.zeros((4, 4), dtype=int)
    for seed in range(3):
        rng = derive_rng(7, "clusters", seed)
        task = make_cluster_classification(rng, epochs=15)
        captured = {}

        def grab(opt, params, grad):
            captured["params"] = params

        trace = run_training(
            task, OptimizerSpec("core", {"s_max": 1e-2}), rng, on_step=grab
        )
        assert not trace.failed
        pred = np.argmax(forward(task.model_spec, captured["params"], means), axis=1)
        for k in range(4):
            votes[k, pred[k]] += 1
    for k in range(4):
        assert votes[k, k] >= 2  # majority over seeds


def test_evaluate_order_independent_over_test_rows():
    task = make_sine_regression(Prng(31))
    rng = derive_rng(2, "sine_batch", 0)
    params = task.initial_params(rng)
    base = evaluate_test_error(task, params)
    perm = np.random.default_rng(0).permutation(len(task.test_set))
    shuffled = TaskInstance(
        name=task.name,
        kind=task.kind,
        regime=task.regime,
        error_metric=task.error_metric,
        epochs=task.epochs,
        batch_size=task.batch_size,
        model_spec=task.model_spec,
        train_set=task.train_set,
        test_set=task.test_set.take(perm),
    )
    assert abs(evaluate_test_error(shuffled, params) - base) < 1e-12


def test_infer_regime_bands():
    assert infer_regime(64 / 60000) == "mini_batch"
    assert infer_regime(8 / 512) == "mini_batch"
    assert infer_regime(0.05) == "intermediate"
    assert infer_regime(0.10) == "intermediate"
    assert infer_regime(1.0) == "batch"


def test_task_validation_errors():
    with pytest.raises(ValueError):
        make_quadratic(0, Prng(1))
    task = make_cluster_classification(Prng(1))
    with pytest.raises(ValueError):
        TaskInstance(
            name="bad",
            kind="supervised",
            regime="batch",  # inconsistent with 8/512
            error_metric="misclassification_rate",
            epochs=10,
            batch_size=8,
            model_spec=task.model_spec,
            train_set=task.train_set,
            test_set=task.test_set,
        )
    with pytest.raises(ValueError):
        next_batch(make_rosenbrock(), Prng(0), 0)


def test_next_batch_partitions_training_set():
    task = make_cluster_classification(Prng(3))
    epoch_rng = Prng(555)
    seen = []
    for pos in range(task.batches_per_epoch()):
        b = next_batch(task, epoch_rng, pos)
        assert len(b) == 8
        seen.extend(b.inputs[:, 0].tolist())
    assert len(seen) == 512
    assert sorted(seen) == sorted(task.train_set.inputs[:, 0].tolist())
    # deterministic and independent of call order
    again = next_batch(task, Prng(555), 3)
    assert np.array_equal(again.inputs, next_batch(task, epoch_rng, 3).inputs)


def test_next_batch_keeps_short_final_batch():
    task = make_sine_regression(Prng(5), train_size=103, batch_size=10, epochs=10)
    sizes = [len(next_batch(task, Prng(1), p)) for p in range(task.batches_per_epoch())]
    assert sizes == [10] * 10 + [3]


def test_full_batch_is_whole_training_set_unshuffled():
    task = make_sine_regression(Prng(6))
    b = next_batch(task, Prng(123), 0)
    assert np.array_equal(b.inputs, task.train_set.inputs)


def test_dataset_generation_deterministic_and_disjoint():
    a = make_sine_regression(Prng(42))
    b = make_sine_regression(Prng(42))
    assert np.array_equal(a.train_set.inputs, b.train_set.inputs)
    assert np.array_equal(a.test_set.inputs, b.test_set.inputs)
    # train and test are separate draws
    assert not np.array_equal(a.train_set.inputs, a.test_set.inputs)


def test_evaluate_misclassification_extremes():
    task = make_cluster_classification(Prng(2))
    layout = task.model_spec.layout()
    # craft an output head that always predicts class 0
    params = ParamStore(np.zeros(layout.total), layout)
    params.view("b2")[:] = np.array([10.0, 0.0, 0.0, 0.0])
    rate = evaluate_test_error(task, params)
    wrong = float(np.mean(task.test_set.targets != 0))
    assert rate == pytest.approx(wrong, abs=1e-12)


def test_export_dataset_csv(tmp_path):
    task = make_sine_regression(Prng(8), train_size=10, test_size=5, epochs=5)
    path = tmp_path / "sine.csv"
    export_dataset_csv(task, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "x0,target,split"
    assert len(lines) == 1 + 15
    assert sum(1 for ln in lines[1:] if ln.endswith(",train")) == 10


def test_builtin_task_registry():
    assert set(BUILTIN_TASKS) == set(BUILTIN_TASK_REGIMES)
    assert len(BUILTIN_TASKS) == 5
    for name, builder in BUILTIN_TASKS.items():
        task = builder(Prng(1))
        assert task.name == name
        assert task.regime == BUILTIN_TASK_REGIMES[name]
