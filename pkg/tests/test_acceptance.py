"""Acceptance suite: one test per criterion, each printing a PASS/FAIL
line (see conftest).  Tolerances are fixed here, not calibrated."""

import json
import math
import time

import numpy as np
import pytest

import scalar_reference as sr
from optbench.bench import (
    SuiteConfig,
    TaskConfig,
    accuracy_scores,
    overall_score,
    run_suite,
    run_training,
)
from optbench.cli import main as cli_main
from optbench.nets import MlpSpec, loss_and_grad, run_gradient_check
from optbench.optimizers import OptimizerSpec, beta1_schedule, make_optimizer
from optbench.params import GroupLayout, ParamStore
from optbench.rng import Prng, derive_rng
from optbench.tasks import make_quadratic, make_sine_regression

MASTER_SEED = 1


@pytest.mark.criterion(1, "analytic gradients match central differences < 1e-6")
def test_criterion_1_gradient_oracle():
    t0 = time.perf_counter()
    families = [
        MlpSpec((2, 4, 3), "tanh", "linear", "mse"),
        MlpSpec((2, 4, 3), "relu", "linear", "mse"),
        MlpSpec((2, 4, 3), "tanh", "softmax", "cross_entropy"),
    ]
    for i, spec in enumerate(families):
        dev, _ = run_gradient_check(spec, Prng(MASTER_SEED + i), draws=20, h=1e-6)
        assert dev < 1e-6, f"{spec.hidden_activation}/{spec.loss_kind}: {dev:.3e}"
    assert time.perf_counter() - t0 < 5.0


@pytest.mark.criterion(2, "reduced CoRe reproduces Adam to 1e-12 over 100 steps")
def test_criterion_2_adam_reduction():
    gamma = 0.01
    core_overrides = {
        "beta1_a": 0.9, "beta1_b": 0.9, "eta_minus": 1.0, "eta_plus": 1.0,
        "s0": gamma, "s_min": gamma, "s_max": gamma, "d": 0.0, "p_frozen": 0.0,
    }
    task = make_quadratic(10, derive_rng(MASTER_SEED, "quadratic", 0))
    layout = task.layout()
    # warm the compiled kernels outside the timed window
    warm = ParamStore(task.start.copy(), layout)
    make_optimizer(OptimizerSpec("core", core_overrides), layout).step(
        warm, task.objective.grad(warm.values)
    )
    make_optimizer(OptimizerSpec("adam", {"gamma": gamma}), layout).step(
        warm, task.objective.grad(warm.values)
    )

    t0 = time.perf_counter()
    p_core = ParamStore(task.start.copy(), layout)
    p_adam = ParamStore(task.start.copy(), layout)
    o_core = make_optimizer(OptimizerSpec("core", core_overrides), layout)
    o_adam = make_optimizer(
        OptimizerSpec("adam", {"gamma": gamma, "beta1": 0.9, "beta2": 0.99}), layout
    )
    for _ in range(100):
        o_core.step(p_core, task.objective.grad(p_core.values))
        o_adam.step(p_adam, task.objective.grad(p_adam.values))
        assert np.all(np.abs(p_core.values - p_adam.values) <= 1e-12)
    assert time.perf_counter() - t0 < 1.0


@pytest.mark.criterion(3, "all ten algorithms match the scalar reference to 1e-15")
def test_criterion_3_scalar_oracle_steps():
    layout = GroupLayout([("w", 1)])

    def run(algorithm, overrides, grads, w0=0.5):
        params = ParamStore(np.array([w0]), layout)
        opt = make_optimizer(OptimizerSpec(algorithm, overrides), layout)
        out = []
        for g in grads:
            opt.step(params, np.array([g]))
            out.append(float(params.values[0]))
        return out

    grads = [1.0, 0.5, -0.3, -0.1, 0.2]
    flip = [1.0, -1.0, 1.0, 1.0, -0.5]  # exercises RPROP backtracking
    cases = [
        ("core", {}, grads, sr.core_trajectory(0.5, grads)),
        ("sgd", {"gamma": 0.1}, grads, sr.sgd_trajectory(0.5, grads, 0.1)),
        ("momentum", {"gamma": 0.1}, grads, sr.momentum_trajectory(0.5, grads, 0.1)),
        ("nag", {"gamma": 0.1}, grads, sr.nag_trajectory(0.5, grads, 0.1)),
        ("adam", {"gamma": 0.001}, grads, sr.adam_trajectory(0.5, grads, 0.001)),
        ("adamax", {"gamma": 0.002}, grads, sr.adamax_trajectory(0.5, grads, 0.002)),
        ("rmsprop", {"gamma": 0.01}, grads, sr.rmsprop_trajectory(0.5, grads, 0.01)),
        ("adagrad", {"gamma": 0.01}, grads, sr.adagrad_trajectory(0.5, grads, 0.01)),
        ("adadelta", {"gamma": 1.0}, grads, sr.adadelta_trajectory(0.5, grads, 1.0)),
        ("rprop", {}, grads, sr.rprop_trajectory(0.5, grads)),
        # sign-flip/zeroing sequence and AdaDelta pre-update convention
        ("rprop", {}, flip, sr.rprop_trajectory(0.5, flip)),
        ("adadelta", {"gamma": 1.0}, flip, sr.adadelta_trajectory(0.5, flip, 1.0)),
        ("core", {}, flip, sr.core_trajectory(0.5, flip)),
    ]
    for algorithm, overrides, grads_used, ref in cases:
        got = run(algorithm, overrides, grads_used)
        for a, b in zip(got, ref):
            assert abs(a - b) <= 1e-15, (algorithm, a, b)


# trajectory recorder for the structural invariants
class CoreInvariantMonitor:
    def __init__(self, hyper_smin, hyper_smax, d, w0):
        self.s_min, self.s_max, self.d = hyper_smin, hyper_smax, d
        self.bound = np.maximum(np.abs(w0), 1.0 / d) if d > 0 else None
        self.u_precondition = True
        self.steps = 0
        self.violations = []

    def __call__(self, opt, params, grad):
        self.steps += 1
        st = opt.state
        if not (np.all(st.s >= self.s_min) and np.all(st.s <= self.s_max)):
            self.violations.append(f"s out of bounds at step {self.steps}")
        if self.steps == 1:
            strong = np.abs(grad) >= 1e-2
            u = np.abs(opt.last_u[strong])
            if u.size and not (np.all(u > 1.0 - 1e-6) and np.all(u < 1.0)):
                self.violations.append("first-step |u| outside (1-1e-6, 1)")
        self.u_precondition &= bool(np.all(np.abs(opt.last_u) <= 1.0))
        if (
            self.bound is not None
            and self.d * self.s_max <= 1.0
            and self.u_precondition
            and not np.all(np.abs(params.values) <= self.bound + 1e-12)
        ):
            self.violations.append(f"weight bound broken at step {self.steps}")


DEFAULT_TASKS = [
    ("quadratic", {"dim": 10}),
    ("rosenbrock", {}),
    ("sine_batch", {}),
    ("sine_intermediate", {}),
    ("clusters", {}),
]


@pytest.mark.criterion(4, "CoRe structural invariants hold on default-suite trajectories")
def test_criterion_4_core_structural_invariants():
    # beta1 schedule endpoints (tau-form is analytic)
    assert beta1_schedule(1, 0.7375, 0.8125, 250.0) == 0.7375
    assert abs(beta1_schedule(1251, 0.7375, 0.8125, 250.0) - 0.8125) < 1e-6
    taus = [beta1_schedule(t, 0.7375, 0.8125, 250.0) for t in range(1, 1252)]
    assert all(a <= b + 1e-18 for a, b in zip(taus, taus[1:]))  # monotone

    # CoRe cells of the default suite (all tasks and grid values, two
    # seeds each to stay within test runtime)
    for name, overrides in DEFAULT_TASKS:
        for s_max in (1e-4, 1e-3, 1e-2, 1e-1, 1.0):
            for seed in range(2):
                tc = TaskConfig(name, overrides)
                rng = derive_rng(MASTER_SEED, name, seed)
                task = tc.build(rng)
                spec = OptimizerSpec("core").with_step_parameter(s_max)
                w0 = task.initial_params(Prng(rng.state)).values
                monitor = CoreInvariantMonitor(1e-6, s_max, 0.1, w0)
                run_training(task, spec, rng, on_step=monitor)
                assert monitor.steps > 0
                assert not monitor.violations, (name, s_max, seed, monitor.violations[:3])


@pytest.mark.criterion(5, "freezing picks exactly the top importance scores per group")
def test_criterion_5_freezing_correctness():
    rng = derive_rng(MASTER_SEED, "sine_batch", 0)
    task = make_sine_regression(rng, epochs=300)
    layout = task.layout()
    expected_counts = {g.name: math.floor(0.1 * g.length) for g in layout}
    assert expected_counts == {"W1": 1, "b1": 1, "W2": 25, "b2": 1, "W3": 1, "b3": 0}

    state = {"prev_S": None, "checked": 0}

    def monitor(opt, params, grad):
        tau = opt.tau
        prev_S = state["prev_S"]
        if tau > 250:
            assert prev_S is not None
            for g in layout:
                scores = prev_S[g.offset : g.offset + g.length]
                frozen = np.flatnonzero(
                    opt.state.frozen_mask[g.offset : g.offset + g.length]
                )
                n_frozen = expected_counts[g.name]
                assert len(frozen) == n_frozen, (g.name, tau)
                # brute-force re-ranking, ties to the lower index
                order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
                assert set(frozen) == set(order[:n_frozen]), (g.name, tau)
                # no unfrozen weight strictly outscores a frozen one
                if n_frozen and len(scores) > n_frozen:
                    unfrozen = [i for i in range(len(scores)) if i not in set(frozen)]
                    assert max(scores[unfrozen]) <= min(scores[list(frozen)])
            state["checked"] += 1
        state["prev_S"] = opt.state.S.copy()

    spec = OptimizerSpec("core", {"p_frozen": 0.1, "t_hist": 250, "s_max": 1.0})
    trace = run_training(task, spec, rng, on_step=monitor)
    assert not trace.failed
    assert state["checked"] == 50  # epochs 251..300, one step per epoch


@pytest.mark.criterion(6, "importance score equals running mean up to t_hist")
def test_criterion_6_importance_running_mean():
    spec = MlpSpec((3, 8, 2))  # exactly 50 weights
    layout = spec.layout()
    assert layout.total == 50
    rng = Prng(MASTER_SEED)
    from optbench.nets import init_params

    params = init_params(spec, rng)
    opt = make_optimizer(OptimizerSpec("core", {"t_hist": 250, "s_max": 1.0}), layout)
    acc = np.zeros(50)
    draw = np.random.default_rng(0)
    for tau in range(1, 251):
        x = draw.normal(size=(6, 3))
        t = 0.5 * draw.normal(size=(6, 2))
        from optbench.nets import Batch

        _, grad = loss_and_grad(spec, params, Batch(x, t))
        opt.step(params, grad)
        acc += opt.state.g * opt.last_u * opt._P * opt.state.s
        assert np.all(np.abs(opt.state.S - acc / 250.0) <= 1e-12), tau


@pytest.mark.criterion(7, "all ten optimizers converge on the 10-d quadratic")
def test_criterion_7_convergence_floor():
    t0 = time.perf_counter()
    config = SuiteConfig(
        tasks=[TaskConfig("quadratic", {"dim": 10, "epochs": 2000, "stop_below": 1e-12})],
        optimizers=[OptimizerSpec(a) for a in (
            "core", "sgd", "momentum", "nag", "adam", "adamax",
            "rmsprop", "adagrad", "adadelta", "rprop",
        )],
        master_seed=MASTER_SEED,
        seeds=20,
    )
    report = run_suite(config)
    for summary in report.summaries:
        cells = [
            r for r in report.cells
            if r.optimizer == summary.optimizer and r.lr == summary.selected_lr
        ]
        assert len(cells) == 20
        floor = 1e-8 if summary.optimizer in ("core", "adam") else 1e-3
        bad = [r.e_min for r in cells if not r.e_min < floor]
        assert not bad, (summary.optimizer, summary.selected_lr, bad[:3])
    # scoring sanity rides along: the best optimizer scores exactly 1
    assert max(s.accuracy for s in report.summaries) == 1.0
    assert time.perf_counter() - t0 < 30.0


@pytest.mark.criterion(8, "grid-selected s_max follows the batch regime")
def test_criterion_8_regime_behavior():
    config = SuiteConfig(
        tasks=[TaskConfig("clusters"), TaskConfig("sine_batch")],
        optimizers=[OptimizerSpec("core")],
        master_seed=MASTER_SEED,
        seeds=20,
    )
    report = run_suite(config)
    mini = report.summary_for("clusters", "core")
    batch = report.summary_for("sine_batch", "core")
    assert mini.selected_lr <= 1e-2, f"mini-batch selected {mini.selected_lr}"
    assert batch.selected_lr >= 1e-1, f"batch selected {batch.selected_lr}"
    assert report.regime_warnings == []


@pytest.mark.criterion(9, "accuracy scoring reproduces the hand-computed fixture")
def test_criterion_9_scoring_math():
    scores = accuracy_scores({"k1": (2.0, 0.1), "k2": (4.0, 0.4)})
    assert scores["k1"] == (1.0, 0.05)
    assert scores["k2"][0] == 0.5
    assert scores["k2"][1] == pytest.approx(0.05, abs=1e-15)
    a, da = overall_score({"t1": (1.0, 0.03), "t2": (0.5, 0.04)})
    assert a == 0.75
    assert da == pytest.approx(0.025, abs=1e-15)
    three = accuracy_scores({"a": (2.0, 0.2), "b": (4.0, 0.4), "c": (8.0, 0.8)})
    assert [three[k][0] for k in ("a", "b", "c")] == [1.0, 0.5, 0.25]
    assert max(v for v, _ in three.values()) == 1.0


@pytest.mark.criterion(10, "reruns and worker counts produce byte-identical CSVs")
def test_criterion_10_determinism(tmp_path, capsys):
    cfg = {
        "master_seed": MASTER_SEED,
        "tasks": [{"name": "quadratic", "dim": 3, "epochs": 50}],
        "optimizers": ["core", "adam"],
        "lr_grid": [0.01, 0.1],
        "seeds": 3,
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    outputs = []
    for i, workers in enumerate((1, 1, 2)):
        out_dir = tmp_path / f"out{i}"
        code = cli_main([
            "run", "--config", str(cfg_path),
            "--workers", str(workers), "--out", str(out_dir),
        ])
        assert code == 0
        outputs.append({
            name: (out_dir / name).read_bytes()
            for name in ("traces.csv", "summary.csv", "overall.csv")
        })
    capsys.readouterr()
    assert outputs[0] == outputs[1], "rerun changed CSV bytes"
    assert outputs[0] == outputs[2], "worker count changed CSV bytes"


@pytest.mark.criterion(11, "optimizer step cost is small next to a gradient evaluation")
def test_criterion_11_step_cost():
    rng = derive_rng(MASTER_SEED, "sine_batch", 0)
    task = make_sine_regression(rng, epochs=1)
    layout = task.layout()
    params = task.initial_params(rng)
    _, grad = loss_and_grad(task.model_spec, params, task.train_set)

    o_core = make_optimizer(OptimizerSpec("core", {"s_max": 1e-3}), layout)
    o_adam = make_optimizer(OptimizerSpec("adam", {"gamma": 1e-3}), layout)
    scratch = ParamStore(params.values.copy(), layout)

    def median_time(fn, reps=400, rounds=9):
        fn()  # warm (JIT, caches)
        samples = []
        for _ in range(rounds):
            t0 = time.perf_counter()
            for _ in range(reps):
                fn()
            samples.append((time.perf_counter() - t0) / reps)
        return sorted(samples)[len(samples) // 2]

    t_core = median_time(lambda: o_core.step(scratch, grad))
    t_adam = median_time(lambda: o_adam.step(scratch, grad))
    t_grad = median_time(
        lambda: loss_and_grad(task.model_spec, params, task.train_set), reps=200
    )
    assert t_core <= 3.0 * t_adam, f"core {t_core*1e6:.1f}us vs adam {t_adam*1e6:.1f}us"
    assert t_core < 0.10 * t_grad, f"core {t_core*1e6:.1f}us vs grad {t_grad*1e6:.1f}us"
    assert t_adam < 0.10 * t_grad, f"adam {t_adam*1e6:.1f}us vs grad {t_grad*1e6:.1f}us"
