"""MMD training of IQP circuits through Pauli-Z expectations.

With a Gaussian kernel on Hamming distance the squared MMD between data
``p`` and model ``q`` is ``E_{a ~ P_sigma}[(<Z_a>_p - <Z_a>_q)^2]`` where the
mask bits are i.i.d. Bernoulli(p_sigma), p_sigma = (1 - exp(-1/(2 sigma^2)))/2.
Both expectations are cheap: the data side is a parity average and the model
side uses the Monte-Carlo identity in ``iqpgraph.expval``.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from iqpgraph import rng as rngmod
from iqpgraph.circuit import IqpCircuit
from iqpgraph.expval import (
    bits_to_index,
    cosine_sums,
    data_expvals,
    expvals_exact,
    uniform_z,
)
from iqpgraph.sampler import exact_distribution, fwht_inplace

log = logging.getLogger(__name__)

DEFAULT_MEDIAN_CAP = 1000


class DegenerateBandwidthError(ValueError):
    pass


def p_sigma(sigma_eff: float) -> float:
    if sigma_eff <= 0:
        raise ValueError("bandwidth must be positive")
    return float(-np.expm1(-1.0 / (2.0 * sigma_eff * sigma_eff)) / 2.0)


@dataclass(frozen=True)
class KernelConfig:
    sigma: float
    bandwidth_multiplier: float = 1.0

    def __post_init__(self):
        if self.sigma <= 0 or self.bandwidth_multiplier <= 0:
            raise ValueError("sigma and bandwidth_multiplier must be positive")

    @property
    def sigma_eff(self) -> float:
        return self.sigma * self.bandwidth_multiplier

    @property
    def p_sigma(self) -> float:
        return p_sigma(self.sigma_eff)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    epochs: int = 300
    mask_batch: int = 256
    z_batch: int = 2048
    init_multiplier: float = 1.0
    bandwidth_multiplier: float = 1.0
    seed: int = 0
    unbiased_square: bool = True
    sigma: float | None = None  # overrides the median heuristic
    median_cap: int = DEFAULT_MEDIAN_CAP

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if min(self.mask_batch, self.z_batch, self.median_cap) < 1:
            raise ValueError("batch sizes must be >= 1")
        if self.init_multiplier < 0:
            raise ValueError("init_multiplier must be >= 0")
        if self.bandwidth_multiplier <= 0:
            raise ValueError("bandwidth_multiplier must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


@dataclass(frozen=True)
class AdamState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, size: int, **kw) -> "AdamState":
        return cls(np.zeros(size), np.zeros(size), 0, **kw)


def adam_step(state: AdamState, theta, grad, lr: float):
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if theta.shape != grad.shape or theta.shape != state.first_moment.shape:
        raise ValueError("parameter, gradient and moment shapes differ")
    t = state.step + 1
    m = state.beta1 * state.first_moment + (1.0 - state.beta1) * grad
    v = state.beta2 * state.second_moment + (1.0 - state.beta2) * grad * grad
    m_hat = m / (1.0 - state.beta1 ** t)
    v_hat = v / (1.0 - state.beta2 ** t)
    new_theta = theta - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return new_theta, replace(state, first_moment=m, second_moment=v, step=t)


def _as_samples(samples) -> np.ndarray:
    x = np.asarray(samples, dtype=np.uint8)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("need a nonempty (S, n) sample matrix")
    return x


def hamming_matrix(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    x = x.astype(np.int64)
    y = y.astype(np.int64)
    return x @ (1 - y).T + (1 - x) @ y.T


def median_heuristic(samples, cap: int = DEFAULT_MEDIAN_CAP, rng: np.random.Generator | None = None) -> float:
    """sqrt(median pairwise Hamming distance / 2) over at most ``cap`` points."""
    x = _as_samples(samples)
    if x.shape[0] < 2:
        raise ValueError("median heuristic needs at least two samples")
    if x.shape[0] > cap:
        rng = rngmod.stream(0, rngmod.OP_MEDIAN) if rng is None else rng
        x = x[np.sort(rng.choice(x.shape[0], size=cap, replace=False))]
    d = hamming_matrix(x, x)
    med = float(np.median(d[np.triu_indices(x.shape[0], k=1)]))
    if med == 0.0:
        raise DegenerateBandwidthError(
            "degenerate bandwidth: median pairwise distance is 0; set sigma explicitly")
    return math.sqrt(med / 2.0)


def sample_masks(kc: KernelConfig, n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    if count < 1:
        raise ValueError("count must be >= 1")
    return (rng.random((count, n)) < kc.p_sigma).astype(np.uint8)


def mmd_loss_and_grad(c: IqpCircuit, samples, kc: KernelConfig, tc: TrainConfig,
                      rng: np.random.Generator, exact: bool = False):
    """Stochastic squared MMD and its gradient w.r.t. the circuit angles.

    ``exact=True`` replaces the model-side Monte Carlo with full enumeration
    (small ``n`` only); the masks are still sampled.
    """
    x = _as_samples(samples)
    if x.shape[1] != c.qubit_count:
        raise ValueError(f"samples have {x.shape[1]} bits, circuit has {c.qubit_count} qubits")
    masks = sample_masks(kc, c.qubit_count, tc.mask_batch, rng)
    target = data_expvals(x, masks)

    if exact:
        q, dq = expvals_exact(c, masks, with_grad=True)
        d = target - q
        return float(np.mean(d * d)), (-2.0 * d[:, None] * dq).mean(axis=0)

    b = tc.z_batch
    s1, _, g1 = cosine_sums(c, masks, uniform_z(c.qubit_count, b, rng), with_grad=True)
    d1, dq1 = target - s1 / b, g1 / b
    if not tc.unbiased_square:
        return float(np.mean(d1 * d1)), (-2.0 * d1[:, None] * dq1).mean(axis=0)
    s2, _, g2 = cosine_sums(c, masks, uniform_z(c.qubit_count, b, rng), with_grad=True)
    d2, dq2 = target - s2 / b, g2 / b
    loss = float(np.mean(d1 * d2))
    grad = (-(d1[:, None] * dq2 + d2[:, None] * dq1)).mean(axis=0)
    return loss, grad


def mask_weights(n: int, ps: float) -> np.ndarray:
    """P_sigma(a) for every mask index ``a`` in ``0..2^n-1``."""
    idx = np.arange(1 << n, dtype=np.int64)
    weight = np.zeros(idx.size, dtype=np.int64)
    for k in range(n):
        weight += (idx >> k) & 1
    return np.power(ps, weight) * np.power(1.0 - ps, n - weight)


def exact_mmd(c: IqpCircuit, samples, sigma_eff: float) -> float:
    """Squared MMD summed over every mask, via Walsh transforms of both distributions."""
    x = _as_samples(samples)
    n = c.qubit_count
    if x.shape[1] != n:
        raise ValueError("sample length does not match circuit")
    model = exact_distribution(c).probabilities
    data = np.bincount(bits_to_index(x), minlength=1 << n).astype(np.float64) / x.shape[0]
    diff = fwht_inplace(data - model)
    return float(np.sum(mask_weights(n, p_sigma(sigma_eff)) * diff * diff))


def init_params(c: IqpCircuit, samples, init_multiplier: float) -> np.ndarray:
    """Pair angles from bit covariances, single-qubit angles from centred bit means."""
    x = _as_samples(samples).astype(np.float64)
    if x.shape[1] != c.qubit_count:
        raise ValueError("sample length does not match circuit")
    mean = x.mean(axis=0)
    cov = (x - mean).T @ (x - mean) / x.shape[0]
    theta = np.zeros(c.n_params)
    for j, g in enumerate(c.generators):
        if len(g) == 1:
            theta[j] = mean[g[0]] - 0.5
        else:
            theta[j] = cov[g[0], g[1]]
    return init_multiplier * theta


@dataclass
class TrainResult:
    thetas: np.ndarray
    losses: list[float]
    sigma: float
    sigma_eff: float
    wall_time: float
    config: TrainConfig
    initial_thetas: np.ndarray = field(repr=False, default=None)


def kernel_for(samples, tc: TrainConfig) -> KernelConfig:
    sigma = tc.sigma
    if sigma is None:
        sigma = median_heuristic(samples, tc.median_cap, rngmod.stream(tc.seed, rngmod.OP_MEDIAN))
    return KernelConfig(sigma, tc.bandwidth_multiplier)


def train(c: IqpCircuit, samples, tc: TrainConfig, kc: KernelConfig | None = None,
          exact: bool = False) -> TrainResult:
    start = time.perf_counter()
    x = _as_samples(samples)
    kc = kernel_for(x, tc) if kc is None else kc
    theta0 = init_params(c, x, tc.init_multiplier)
    theta = theta0.copy()
    state = AdamState.zeros(c.n_params)
    losses = []
    for epoch in range(tc.epochs):
        rng = rngmod.stream(tc.seed, rngmod.OP_TRAIN, epoch)
        loss, grad = mmd_loss_and_grad(c.with_thetas(theta), x, kc, tc, rng, exact=exact)
        losses.append(loss)
        theta, state = adam_step(state, theta, grad, tc.learning_rate)
    return TrainResult(theta, losses, kc.sigma, kc.sigma_eff, time.perf_counter() - start, tc, theta0)


# ---------------------------------------------------------------- HPO

DEFAULT_SEARCH_SPACE = {
    "learning_rate": (1e-3, 0.3, "log"),
    "bandwidth_multiplier": (0.5, 3.0, "log"),
    "init_multiplier": (0.1, 2.0, "linear"),
}


def _draw_trial(space: dict, rng: np.random.Generator) -> dict:
    params = {}
    for name in sorted(space):
        low, high, scale = space[name]
        if low == high:
            params[name] = float(low)
        elif scale == "log":
            params[name] = float(math.exp(rng.uniform(math.log(low), math.log(high))))
        else:
            params[name] = float(rng.uniform(low, high))
    return params


def fold_indices(size: int, folds: int, repeat: int, seed: int) -> list[np.ndarray]:
    perm = rngmod.stream(seed, rngmod.OP_HPO_SPLIT, repeat).permutation(size)
    return np.array_split(perm, folds)


@dataclass
class HpoResult:
    best: TrainConfig
    best_score: float
    trial_scores: list[float]
    trial_configs: list[TrainConfig]
    table: list[dict]


def validation_mmd(c: IqpCircuit, held_out: np.ndarray, sigma: float, seed: int,
                   mask_batch: int = 1024, z_batch: int = 4096) -> float:
    """Estimated MMD^2 on held-out data at a fixed reference bandwidth and fixed seed."""
    tc = TrainConfig(mask_batch=mask_batch, z_batch=z_batch, unbiased_square=True)
    loss, _ = mmd_loss_and_grad(c, held_out, KernelConfig(sigma), tc, rngmod.stream(seed, rngmod.OP_HPO_EVAL))
    return loss


def _cv_job(args):
    c, x, train_idx, val_idx, tc, ref_sigma, eval_seed = args
    res = train(c, x[train_idx], tc)
    return validation_mmd(c.with_thetas(res.thetas), x[val_idx], ref_sigma, eval_seed)


def kfold_hpo(c: IqpCircuit, samples, base: TrainConfig, space: dict | None = None,
              folds: int = 3, repeats: int = 2, trials: int = 10, seed: int = 0,
              jobs: int = 1, fixed_trials: list[dict] | None = None) -> HpoResult:
    """Random search scored by repeated k-fold cross-validated MMD.

    ``fixed_trials`` replaces random draws with explicit parameter dicts.
    Validation always uses the median-heuristic bandwidth of the full data so
    scores are comparable across bandwidth multipliers.
    """
    x = _as_samples(samples)
    if folds < 2:
        raise ValueError("need at least two folds")
    if x.shape[0] < folds:
        raise ValueError(f"dataset of {x.shape[0]} samples is smaller than k={folds}")
    space = DEFAULT_SEARCH_SPACE if space is None else space
    ref_sigma = base.sigma or median_heuristic(x, base.median_cap, rngmod.stream(seed, rngmod.OP_MEDIAN))
    if fixed_trials is None:
        if trials < 1:
            raise ValueError("trials must be >= 1")
        params = [_draw_trial(space, rngmod.stream(seed, rngmod.OP_HPO_TRIAL, t)) for t in range(trials)]
    else:
        params = list(fixed_trials)
    configs = [replace(base, **p) for p in params]

    jobs_list, keys = [], []
    for t, tc in enumerate(configs):
        for r in range(repeats):
            split = fold_indices(x.shape[0], folds, r, seed)
            for f in range(folds):
                val = np.sort(split[f])
                tr = np.sort(np.concatenate([split[i] for i in range(folds) if i != f]))
                eval_seed = rngmod.child_seed(seed, r, f)
                jobs_list.append((c, x, tr, val, tc, ref_sigma, eval_seed))
                keys.append((t, r, f, len(tr), len(val)))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            scores = list(pool.map(_cv_job, jobs_list))
    else:
        scores = [_cv_job(j) for j in jobs_list]

    table = []
    for (t, r, f, ntr, nval), score in zip(keys, scores):
        row = {"trial": t, "repeat": r, "fold": f, **params[t], "train_size": ntr,
               "val_size": nval, "val_mmd": score}
        table.append(row)
    trial_scores = [float(np.mean([row["val_mmd"] for row in table if row["trial"] == t]))
                    for t in range(len(configs))]
    best = int(np.argmin(trial_scores))
    log.info("hpo best trial %d score %.5g", best, trial_scores[best])
    return HpoResult(configs[best], trial_scores[best], trial_scores, configs, table)
