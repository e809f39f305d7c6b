"""Natural-policy-gradient solver for gate durations of a fixed sequence.

Durations are parameterized by a sigmoid-Gaussian (logit-normal) policy:
independent Gaussian draws delta_j ~ N(mu_j, sigma_j) pass through the
sigmoid g and are normalized to the duration budget,
alpha_j = T*g(delta_j)/sum_k g(delta_k), which enforces sum alpha = T and
0 < alpha_j < T by construction.

The solver ascends the entropy-regularized smoothed objective
J = E[R(delta)] + beta_inv * sum_j log sigma_j with the natural gradient.
Because the Fisher information of the (mu_j, log sigma_j) blocks is
diag(1/sigma_j^2, 2), the preconditioned estimator per coordinate is

    mu_j:        sigma_j * R(delta) * xi_j
    log sigma_j: R(delta) * (xi_j^2 - 1) / 2 + beta_inv / 2

with delta_j = mu_j + sigma_j*xi_j, xi_j ~ N(0,1), averaged over a batch.
The temperature beta_inv is cut by a fixed factor after each stage of K
iterations and set to zero for the final stage.  Stages also anneal the
upper bound on sigma (``sigma_cap``): wide policies early travel the
duration landscape, narrow ones late lock the mean protocol onto a local
optimum that Gaussian smoothing would otherwise average away.  After
training, the mean protocol (durations from mu) is evaluated
``eval_repeats`` times under the configured noise and the average becomes
the reported reward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .reward import Durations, GateSequence, RewardEvaluator
from .rng import Stream

class NonFinite(FloatingPointError):
    """Policy parameters left the finite range (divergent learning rate)."""


@dataclass(frozen=True)
class PolicyParams:
    mu: np.ndarray
    log_sigma: np.ndarray

    def __post_init__(self) -> None:
        mu = np.ascontiguousarray(self.mu, dtype=np.float64)
        ls = np.ascontiguousarray(self.log_sigma, dtype=np.float64)
        if mu.shape != ls.shape or mu.ndim != 1:
            raise ValueError("mu and log_sigma must be vectors of equal length")
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(ls))):
            raise NonFinite("policy parameters must be finite")
        mu.setflags(write=False)
        ls.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "log_sigma", ls)

    @property
    def sigma(self) -> np.ndarray:
        return np.exp(self.log_sigma)


@dataclass(frozen=True)
class NpgConfig:
    """Solver hyperparameters.

    None of these are dictated by the method itself; defaults are tuned so
    the reference experiments converge within their evaluation budgets.
    ``learning_rate`` is either a constant or a per-stage schedule (one rate
    for each of the ``restarts`` stages).  The clip bounds keep the policy in
    the regime where the sigmoid still responds: mu beyond a few units
    saturates gate durations and kills the gradient signal.
    """

    batch_size: int = 16
    iters_per_stage: int = 600
    restarts: int = 4
    learning_rate: float | tuple[float, ...] = (0.4, 0.15, 0.06, 0.03)
    initial_inv_temp: float = 0.05
    temp_decay: float = 0.5
    eval_repeats: int = 16
    num_inits: int = 2
    init_mu_range: float = 2.0
    init_sigma: float = 0.8
    init_scan: int = 0
    mu_clip: float = 8.0
    sigma_cap: float | tuple[float, ...] = (0.8, 0.3, 0.08, 0.015)
    log_sigma_min: float = -10.0
    plain_gradient: bool = False

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.iters_per_stage < 1:
            raise ValueError("iters_per_stage must be >= 1")
        if self.restarts < 2:
            raise ValueError("restarts must be >= 2 (tempered stages plus a final zero-temperature stage)")
        if not 0.0 < self.temp_decay < 1.0:
            raise ValueError("temp_decay must lie in (0, 1)")
        rates = self.stage_rates()
        if any(r <= 0 for r in rates):
            raise ValueError("learning_rate entries must be positive")
        if isinstance(self.learning_rate, tuple) and len(self.learning_rate) != self.restarts:
            raise ValueError("learning_rate schedule must provide one rate per stage")
        caps = self.stage_sigma_caps()
        if any(c <= 0 for c in caps):
            raise ValueError("sigma_cap entries must be positive")
        if isinstance(self.sigma_cap, tuple) and len(self.sigma_cap) != self.restarts:
            raise ValueError("sigma_cap schedule must provide one cap per stage")
        if self.initial_inv_temp <= 0:
            raise ValueError("initial_inv_temp must be positive")
        if self.eval_repeats < 1:
            raise ValueError("eval_repeats must be >= 1")
        if self.num_inits < 1:
            raise ValueError("num_inits must be >= 1")
        if self.init_sigma <= 0:
            raise ValueError("init_sigma must be positive")
        if self.init_scan < 0:
            raise ValueError("init_scan must be nonnegative")
        if self.mu_clip <= 0:
            raise ValueError("mu_clip must be positive")
        if math.log(min(caps)) <= self.log_sigma_min:
            raise ValueError("log_sigma_min must lie below the smallest sigma cap")

    def stage_rates(self) -> tuple[float, ...]:
        if isinstance(self.learning_rate, tuple):
            return tuple(float(r) for r in self.learning_rate)
        return (float(self.learning_rate),) * self.restarts

    def stage_sigma_caps(self) -> tuple[float, ...]:
        if isinstance(self.sigma_cap, tuple):
            return tuple(float(c) for c in self.sigma_cap)
        return (float(self.sigma_cap),) * self.restarts

    @property
    def evals_per_solve(self) -> int:
        """Objective evaluations consumed by one inner solve."""
        return (
            self.restarts * self.iters_per_stage * self.batch_size
            + self.eval_repeats
            + self.init_scan
        )


@dataclass(frozen=True)
class InnerResult:
    params: PolicyParams
    estimated_reward: float
    clip_events: int


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def durations_from_draws(deltas: np.ndarray, total_duration: float) -> Durations:
    """Map policy draws to the duration simplex: T*g(delta_j)/sum_k g(delta_k)."""
    if total_duration <= 0:
        raise ValueError("total_duration must be positive")
    g = sigmoid(np.atleast_1d(deltas))
    return Durations(total_duration * g / g.sum())


def _durations_batch(deltas: np.ndarray, total_duration: float) -> np.ndarray:
    g = sigmoid(deltas)
    return total_duration * g / g.sum(axis=1, keepdims=True)


def natural_gradient_estimate(
    params: PolicyParams,
    reward_fn,
    inv_temp: float,
    batch_size: int,
    rng: np.random.Generator,
    natural: bool = True,
):
    """Batch-averaged gradient estimate in (mu, log sigma) coordinates.

    ``reward_fn`` maps a (batch, q) matrix of policy draws to a (batch,)
    vector of rewards.  With ``natural`` the estimate is preconditioned by
    the inverse Fisher blocks; otherwise the raw score-function gradient is
    returned (ablation).
    """
    sigma = params.sigma
    xi = rng.standard_normal((batch_size, len(params.mu)))
    deltas = params.mu + sigma * xi
    rewards = np.asarray(reward_fn(deltas), dtype=np.float64)
    r_col = rewards[:, None]
    if natural:
        grad_mu = sigma * np.mean(r_col * xi, axis=0)
        grad_ls = 0.5 * np.mean(r_col * (xi**2 - 1.0), axis=0) + 0.5 * inv_temp
    else:
        grad_mu = np.mean(r_col * xi, axis=0) / sigma
        grad_ls = np.mean(r_col * (xi**2 - 1.0), axis=0) + inv_temp
    return grad_mu, grad_ls, float(rewards.mean())


def _deltas_from_fractions(fractions: np.ndarray, clip: float) -> np.ndarray:
    """Map duration fractions to policy means with the same normalized image."""
    scaled = 0.88 * fractions / np.max(fractions, axis=1, keepdims=True)
    scaled = np.clip(scaled, 1e-9, 1 - 1e-9)
    return np.clip(np.log(scaled / (1.0 - scaled)), -clip, clip)


def _scan_candidates(cfg: NpgConfig, q: int, rng: np.random.Generator) -> np.ndarray:
    """Candidate starting means for the initialization sweep.

    Good long-duration protocols concentrate the budget on a subset of
    gates, so when the budget allows, the sweep enumerates every nonempty
    gate-support subset and draws Dirichlet duration splits on each; the
    remainder (or the whole budget, when supports do not fit) is spent on
    sparse Dirichlet vectors and uniform draws around the origin.
    """
    total = cfg.init_scan
    rows = [np.zeros((1, q))]
    budget = total - 1
    n_supports = 2**q - 1 if q <= 16 else None
    per_support = budget // n_supports if n_supports else 0
    if per_support >= 1:
        fractions = []
        for support in range(1, 2**q):
            members = [j for j in range(q) if (support >> j) & 1]
            k = len(members)
            for draw in range(per_support):
                w = np.full(q, 1e-9)
                if draw == 0:
                    w[members] = 1.0 / k
                else:
                    # alternate between flatter and sharper splits
                    w[members] = rng.dirichlet(np.full(k, 1.0 if draw % 2 else 0.5))
                fractions.append(w)
        rows.append(_deltas_from_fractions(np.array(fractions), cfg.mu_clip))
        budget -= n_supports * per_support
    elif budget > 1:
        n_sparse = budget // 2
        rows.append(
            _deltas_from_fractions(rng.dirichlet(np.full(q, 0.3), size=n_sparse), cfg.mu_clip)
        )
        budget -= n_sparse
    if budget > 0:
        rows.append(rng.uniform(-cfg.init_mu_range, cfg.init_mu_range, size=(budget, q)))
    return np.vstack(rows)


def inner_solve(
    evaluator: RewardEvaluator,
    seq: GateSequence,
    cfg: NpgConfig,
    stream: Stream,
) -> InnerResult:
    """One tempered NPG run; returns the trained policy and its reward estimate.

    The reward estimate is the average of ``eval_repeats`` evaluations of the
    mean protocol (durations from mu) under the evaluator's noise setting.
    With ``init_scan`` > 0, initialization evaluates that many candidate
    means once each (counted against the budget) and starts from the best.
    """
    q = len(seq)
    total_duration = evaluator.model.total_duration
    init_rng = stream.child("init").generator()
    if cfg.init_scan > 0:
        candidates = _scan_candidates(cfg, q, init_rng)
        values = evaluator.evaluate_batch(seq, _durations_batch(candidates, total_duration), init_rng)
        mu = candidates[int(np.argmax(values))].copy()
    else:
        mu = init_rng.uniform(-cfg.init_mu_range, cfg.init_mu_range, size=q)
    log_sigma = np.full(q, math.log(cfg.init_sigma))

    def reward_fn(deltas: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return evaluator.evaluate_batch(seq, _durations_batch(deltas, total_duration), rng)

    beta_inv = cfg.initial_inv_temp
    rates = cfg.stage_rates()
    caps = cfg.stage_sigma_caps()
    stages, k = cfg.restarts, cfg.iters_per_stage
    clip_events = 0
    for t in range(1, stages * k + 1):
        stage = (t - 1) // k
        eta = rates[stage]
        ls_max = math.log(caps[stage])
        rng = stream.child("iter", t).generator()
        grad_mu, grad_ls, _ = natural_gradient_estimate(
            PolicyParams(mu, log_sigma),
            lambda d: reward_fn(d, rng),
            beta_inv,
            cfg.batch_size,
            rng,
            natural=not cfg.plain_gradient,
        )
        mu = mu + eta * grad_mu
        log_sigma = log_sigma + eta * grad_ls
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(log_sigma))):
            raise NonFinite(f"non-finite policy parameters at iteration {t}")
        clipped_mu = np.clip(mu, -cfg.mu_clip, cfg.mu_clip)
        clipped_ls = np.clip(log_sigma, cfg.log_sigma_min, ls_max)
        clip_events += int(np.sum(clipped_mu != mu) + np.sum(clipped_ls != log_sigma))
        mu, log_sigma = clipped_mu, clipped_ls
        if t % k == 0 and t < (stages - 1) * k:
            beta_inv *= cfg.temp_decay
        if t == (stages - 1) * k:
            beta_inv = 0.0

    mean_durations = durations_from_draws(mu, total_duration)
    eval_rng = stream.child("final").generator()
    repeats = np.repeat(mean_durations.values[None, :], cfg.eval_repeats, axis=0)
    estimated = float(np.mean(evaluator.evaluate_batch(seq, repeats, eval_rng)))
    return InnerResult(PolicyParams(mu, log_sigma), estimated, clip_events)


def best_of_inits(
    evaluator: RewardEvaluator,
    seq: GateSequence,
    cfg: NpgConfig,
    stream: Stream,
    pool=None,
) -> InnerResult:
    """Run ``num_inits`` independent solves and keep the highest reward.

    ``pool`` may provide a ``map_solves`` method (see ``parallel``) to run
    the independent initializations concurrently; results are identical to
    the serial path because every solve draws from its own indexed stream.
    """
    streams = [stream.child("init_run", i) for i in range(cfg.num_inits)]
    if pool is not None and cfg.num_inits > 1:
        results = pool.map_solves(seq, cfg, streams)
        for res in results:
            evaluator.count += cfg.evals_per_solve
    else:
        results = [inner_solve(evaluator, seq, cfg, s) for s in streams]
    best = results[0]
    for res in results[1:]:
        if res.estimated_reward > best.estimated_reward:
            best = res
    return best
