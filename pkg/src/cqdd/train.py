"""Divide-and-conquer training of the backward steps.

Steps are optimized one at a time from ``k = T`` down to ``k = 1``. The step
``k`` objective compares the circuit's output on the frozen chained inputs
with the forward-diffused sets ``S(k-1)``, so the last step optimized
targets the data itself. Gradients are estimated without autodiff (SPSA or
central differences); within one iteration every loss evaluation shares the
same measurement draws.
"""
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import Callable, Mapping

import numpy as np

from . import ansatz as az
from . import distances as dist
from . import statevec as sv
from ._rng import stream
from .diffusion import DiffusionTrajectory


@dataclass
class TrainerConfig:
    learning_rate: float = 0.01
    iterations_per_step: int = 5000
    grad_estimator: str = "spsa"
    spsa_c: float = 0.1
    spsa_gamma: float = 0.0
    fd_step: float = 1e-4
    meas_mode: str = "sample"
    metric: str = "wass"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    threads: int = 1

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.iterations_per_step < 1:
            raise ValueError("iterations_per_step must be >= 1")
        if self.grad_estimator not in ("spsa", "central_fd"):
            raise ValueError(f"unknown gradient estimator {self.grad_estimator!r}")
        if self.meas_mode not in ("sample", "exact_branches"):
            raise ValueError(f"unknown measurement mode {self.meas_mode!r}")
        if self.metric not in dist.METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray

    @classmethod
    def zeros(cls, d: int) -> "AdamState":
        return cls(np.zeros(d), np.zeros(d))


def adam_update(params, grads, state: AdamState, lr: float, iteration: int,
                beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
    """One bias-corrected Adam step; ``iteration`` counts from 1."""
    params = np.asarray(params, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if params.shape != grads.shape or state.m.shape != params.shape:
        raise ValueError("params, grads and moments must have equal shapes")
    if iteration < 1:
        raise ValueError("iteration counts from 1")
    m = beta1 * state.m + (1 - beta1) * grads
    v = beta2 * state.v + (1 - beta2) * grads**2
    m_hat = m / (1 - beta1**iteration)
    v_hat = v / (1 - beta2**iteration)
    return params - lr * m_hat / (np.sqrt(v_hat) + eps), AdamState(m, v)


def estimate_gradient(loss_fn: Callable, params, estimator: str, rng: np.random.Generator,
                      c: float = 0.1, step: float = 1e-4) -> np.ndarray:
    """Derivative-free gradient estimate of ``loss_fn`` at ``params``.

    ``spsa`` uses one Rademacher direction and two evaluations with
    perturbation ``c``; ``central_fd`` uses ``2 d`` evaluations with ``step``.
    ``loss_fn`` must be deterministic across the paired calls.
    """
    params = np.asarray(params, dtype=float)
    if estimator == "spsa":
        delta = rng.choice([-1.0, 1.0], size=params.shape)
        diff = loss_fn(params + c * delta) - loss_fn(params - c * delta)
        if not np.isfinite(diff):
            raise FloatingPointError("non-finite loss in SPSA evaluation")
        return diff / (2 * c) * delta
    if estimator == "central_fd":
        grad = np.empty_like(params)
        for i in range(params.size):
            e = np.zeros_like(params)
            e[i] = step
            grad[i] = (loss_fn(params + e) - loss_fn(params - e)) / (2 * step)
        if not np.all(np.isfinite(grad)):
            raise FloatingPointError("non-finite loss in finite differences")
        return grad
    raise ValueError(f"unknown estimator {estimator!r}")


def step_loss_fn(
    k: int,
    it: int,
    inputs: Mapping[str, np.ndarray],
    references: Mapping[str, np.ndarray],
    conditions: Mapping[str, tuple],
    spec: az.AnsatzSpec,
    config: TrainerConfig,
    norm_constant: float,
    seed: int,
    pool: ThreadPoolExecutor | None = None,
) -> Callable[[np.ndarray], float]:
    """Loss of step ``k`` at iteration ``it`` as a function of its parameters.

    Born-sampling uniforms are fixed here, once per (step, iteration, class).
    """
    labels = list(references)
    uniforms = {
        lab: stream(seed, "train-meas", k, it, j).random(len(inputs[lab])) for j, lab in enumerate(labels)
    }

    def one_class(theta, U, lab):
        mu, basis_index = conditions[lab]
        x = inputs[lab]
        if spec.n_a == 0:
            out = x @ U.T
        else:
            K = az.kraus_operators(theta, spec, mu, basis_index, U)
            if config.meas_mode == "exact_branches":
                out = az.apply_kraus(x, K, "exact_branches")
                return dist.distance(config.metric, out.states, references[lab], wa=out.weights)
            out = az.apply_kraus(x, K, "born", uniforms[lab])
        return dist.distance(config.metric, out, references[lab])

    def loss(theta):
        U = az.circuit_unitary(theta, spec)
        if pool is None:
            values = [one_class(theta, U, lab) for lab in labels]
        else:
            values = list(pool.map(lambda lab: one_class(theta, U, lab), labels))
        return float(sum(values) / len(values) / norm_constant)

    return loss


def train_step(
    k: int,
    inputs: Mapping[str, np.ndarray],
    references: Mapping[str, np.ndarray],
    config: TrainerConfig,
    spec: az.AnsatzSpec,
    conditions: Mapping[str, tuple],
    seed: int,
    norm_constant: float = 1.0,
    callback: Callable | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Optimize the parameters of backward step ``k``.

    Starts from ``Normal(0, 1)`` parameters, runs Adam for
    ``config.iterations_per_step`` loss evaluations and returns the evaluated
    parameters with the smallest loss together with the raw loss curve.
    ``callback(k, it, loss, best)`` is invoked after every evaluation.
    """
    d = spec.num_params
    theta = stream(seed, "theta-init", k).standard_normal(d)
    adam = AdamState.zeros(d)
    curve = np.empty(config.iterations_per_step)
    best, best_theta = np.inf, theta.copy()
    pool = ThreadPoolExecutor(config.threads) if config.threads > 1 else None
    try:
        for it in range(config.iterations_per_step):
            loss_fn = step_loss_fn(k, it, inputs, references, conditions, spec, config, norm_constant, seed, pool)
            value = loss_fn(theta)
            curve[it] = value
            if value < best:
                best, best_theta = value, theta.copy()
            if callback is not None:
                callback(k, it, value, best)
            if it == config.iterations_per_step - 1:
                break
            c = config.spsa_c / (it + 1) ** config.spsa_gamma
            grad = estimate_gradient(loss_fn, theta, config.grad_estimator, stream(seed, "spsa", k, it),
                                     c=c, step=config.fd_step)
            theta, adam = adam_update(theta, grad, adam, config.learning_rate, it + 1,
                                      config.beta1, config.beta2, config.eps)
    finally:
        if pool is not None:
            pool.shutdown()
    return best_theta, curve


@dataclass
class TrainingRecord:
    curves: dict = field(default_factory=dict)
    best_loss: dict = field(default_factory=dict)
    wall_times: dict = field(default_factory=dict)
    seed: int = 0
    norm_constant: float = float("nan")
    final_train_loss: float = float("nan")
    final_test_loss: float = float("nan")


def _result_settings(config: TrainerConfig) -> dict:
    # thread count never changes results, so it stays out of saved models
    d = config.to_dict()
    d.pop("threads")
    return d


def haar_references(targets: Mapping[str, np.ndarray], seed: int, tag: str = "norm-haar") -> dict:
    """One Haar reference set per class, sized like the class."""
    return {
        lab: sv.haar_random(sv.num_qubits(t), stream(seed, f"{tag}/{lab}"), size=len(t))
        for lab, t in targets.items()
    }


def train_all(
    trajectories: Mapping[str, DiffusionTrajectory],
    spec: az.AnsatzSpec,
    conditions: Mapping[str, tuple],
    config: TrainerConfig,
    seed: int,
    callback: Callable | None = None,
    log: Callable | None = None,
    on_step: Callable | None = None,
) -> tuple[az.DenoiseModel, TrainingRecord]:
    """Train all backward steps against per-class forward trajectories.

    ``conditions[label] = (mu, basis_index)``. The chained inputs of step
    ``k`` are the frozen outputs of steps ``T..k+1`` applied to a seeded
    Haar start, using one Born draw per state. ``on_step(k, theta_k)`` is
    called once each step is frozen.
    """
    labels = list(trajectories)
    if set(conditions) != set(labels):
        raise ValueError("conditions and trajectories must cover the same labels")
    sizes = {len(trajectories[lab].sets[0]) for lab in labels}
    if len(sizes) != 1:
        raise ValueError(f"classes must have equal sizes, got {sorted(sizes)}")
    Ts = {trajectories[lab].T for lab in labels}
    if len(Ts) != 1:
        raise ValueError("all trajectories must share one schedule length")
    T = Ts.pop()
    targets = {lab: trajectories[lab].sets[0] for lab in labels}
    haar = haar_references(targets, seed)
    norm = dist.normalization_constant([targets[l] for l in labels], [haar[l] for l in labels], config.metric)

    record = TrainingRecord(seed=seed, norm_constant=norm)
    thetas = np.zeros((T, spec.num_params))
    current = {
        lab: sv.haar_random(spec.n, stream(seed, f"train-haar/{lab}"), size=len(targets[lab])) for lab in labels
    }
    for k in range(T, 0, -1):
        t0 = time.perf_counter()
        refs = {lab: trajectories[lab].sets[k - 1] for lab in labels}
        theta, curve = train_step(k, current, refs, config, spec, conditions, seed, norm, callback)
        thetas[k - 1] = theta
        record.curves[k] = curve
        record.best_loss[k] = float(curve.min())
        record.wall_times[k] = time.perf_counter() - t0
        current = {
            lab: az.run_backward(current[lab], [theta], [k], spec, conditions[lab][0], seed,
                                 f"train-chain/{lab}", conditions[lab][1])[-1]
            for lab in labels
        }
        if on_step is not None:
            on_step(k, theta)
        if log is not None:
            log(f"step {k}: best loss {record.best_loss[k]:.4f} ({record.wall_times[k]:.1f}s)")

    model = az.DenoiseModel(
        spec,
        thetas,
        {lab: float(conditions[lab][0]) for lab in labels},
        {lab: conditions[lab][1] for lab in labels if conditions[lab][1] is not None},
        {"seed": seed, "metric": config.metric, "norm_constant": norm, "trainer": _result_settings(config)},
    )
    record.final_train_loss = dist.class_loss(current, targets, config.metric, norm)
    record.final_test_loss = test_loss(model, targets, config.metric, norm, seed)
    return model, record


def chained_outputs(model: az.DenoiseModel, targets: Mapping[str, np.ndarray], seed: int, split: str) -> dict:
    """Final generated sets for ``split`` = ``train`` (the training chain) or ``test`` (fresh draws)."""
    out = {}
    for lab, t in targets.items():
        if split == "train":
            mu, basis_index = model.condition(lab)
            start = sv.haar_random(model.spec.n, stream(seed, f"train-haar/{lab}"), size=len(t))
            steps = list(range(model.T, 0, -1))
            out[lab] = az.run_backward(start, [model.theta(k) for k in steps], steps, model.spec, mu, seed,
                                       f"train-chain/{lab}", basis_index)[-1]
        elif split == "test":
            out[lab] = az.generate(model, lab, len(t), seed, stream_key=f"test/{lab}")[-1]
        else:
            raise ValueError(f"unknown split {split!r}")
    return out


def test_loss(model: az.DenoiseModel, targets: Mapping[str, np.ndarray], metric: str,
              norm_constant: float, seed: int) -> float:
    """Normalized loss of fresh generations (new Haar draws) against the targets."""
    return dist.class_loss(chained_outputs(model, targets, seed, "test"), targets, metric, norm_constant)
