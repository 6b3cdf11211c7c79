"""On-policy PPO trainer for one fixed arm-length mode.

The agent interacts with the environment until a fixed-capacity buffer fills,
then runs several epochs of shuffled minibatch updates: clipped-surrogate
loss with an entropy bonus for the actor, mean-squared TD error against
GAE targets for the critic.  Training tricks: orthogonal initialization,
per-minibatch advantage normalization, reward scaling by the running std of
the discounted return, linearly decayed Adam learning rates and global
gradient-norm clipping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .net import (AdamState, MlpSpec, NetParams, adam_step, backward,
                  clip_grad_norm, forward, init_orthogonal)
from .policy import (BetaParams, entropy, entropy_grad, log_density,
                     log_density_grad, sample)

ACTOR_SPEC = MlpSpec("actor")
CRITIC_SPEC = MlpSpec("critic")


@dataclass(frozen=True)
class TrainConfig:
    """PPO hyperparameters (defaults are the nominal full-scale settings)."""

    t_max: int = 50_000_000   # total interaction steps
    n_buffer: int = 2048      # replay buffer capacity between updates
    k_epochs: int = 10        # passes over the buffer per update
    minibatch: int = 64
    c_entropy: float = 0.01
    epsilon_clip: float = 0.2
    gamma: float = 0.99
    gae_lambda: float = 0.95
    eta_a: float = 3e-5       # actor learning rate
    eta_c: float = 3e-5       # critic learning rate
    epsilon_adam: float = 1e-5
    grad_clip: float = 0.5
    reward_scaling: bool = True

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must be in (0, 1)")
        if not 0.0 <= self.gae_lambda <= 1.0:
            raise ValueError("lambda must be in [0, 1]")
        if self.epsilon_clip <= 0.0:
            raise ValueError("epsilon_clip must be positive")
        for name in ("t_max", "n_buffer", "k_epochs", "minibatch"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        for name in ("c_entropy", "eta_a", "eta_c", "epsilon_adam", "grad_clip"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")


@dataclass
class Transition:
    """One interaction record as stored in the replay buffer."""

    s: np.ndarray
    a0: np.ndarray
    logp_old: float
    r: float
    s_next: np.ndarray
    d_c: bool
    d_e: bool


class ReplayBuffer:
    """Fixed-capacity ordered transition store, emptied after each update."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be at least 1")
        self.capacity = capacity
        self._items: list[Transition] = []

    def __len__(self) -> int:
        return len(self._items)

    def push(self, t: Transition) -> None:
        if len(self._items) >= self.capacity:
            raise RuntimeError("buffer is full; update and clear it first")
        self._items.append(t)

    def full(self) -> bool:
        return len(self._items) == self.capacity

    def clear(self) -> None:
        self._items.clear()

    def as_arrays(self) -> dict:
        if not self._items:
            raise ValueError("buffer is empty")
        return {
            "s": np.stack([t.s for t in self._items]),
            "a0": np.stack([t.a0 for t in self._items]),
            "logp_old": np.array([t.logp_old for t in self._items]),
            "r": np.array([t.r for t in self._items]),
            "s_next": np.stack([t.s_next for t in self._items]),
            "d_c": np.array([t.d_c for t in self._items], dtype=bool),
            "d_e": np.array([t.d_e for t in self._items], dtype=bool),
        }


class RunningScale:
    """Reward scaling by the running std of the discounted return.

    Each raw reward updates an internal discounted accumulator (reset when an
    episode ends); the reward is divided by the population std of all
    accumulator values seen so far.  No mean subtraction, so signs are kept.
    """

    def __init__(self, gamma: float):
        self.gamma = gamma
        self.accum = 0.0
        self.count = 0
        self.mean = 0.0
        self.m2 = 0.0

    def scale(self, r: float, done: bool) -> float:
        self.accum = self.gamma * self.accum + r
        self.count += 1
        delta = self.accum - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (self.accum - self.mean)
        std = math.sqrt(self.m2 / self.count)
        scaled = r / std if (self.count > 1 and std > 0.0) else r
        if done:
            self.accum = 0.0
        return scaled


def compute_gae(rewards, v_s, v_next, d_c, d_e, gamma: float, lam: float):
    """Generalized advantage estimation over an ordered transition batch.

    TD errors bootstrap with V(s') except on crash terminations, where the
    successor value is zeroed; the lambda-recursion is cut at every episode
    end (crash or time limit) and at the buffer boundary.  Returns
    (advantages, TD targets).
    """
    rewards = np.asarray(rewards, dtype=float)
    n = rewards.shape[0]
    if n == 0:
        raise ValueError("empty batch")
    v_s = np.asarray(v_s, dtype=float)
    v_next = np.asarray(v_next, dtype=float)
    d_c = np.asarray(d_c, dtype=bool)
    d_e = np.asarray(d_e, dtype=bool)
    delta = rewards + gamma * v_next * (~d_c) - v_s
    done = d_c | d_e
    adv = np.empty(n)
    acc = 0.0
    glam = gamma * lam
    for t in range(n - 1, -1, -1):
        acc = delta[t] + (0.0 if done[t] else glam * acc)
        adv[t] = acc
    return adv, v_s + adv


def normalize_advantages(adv) -> np.ndarray:
    """Shift/scale to zero mean and unit std; constant input maps to zeros."""
    adv = np.asarray(adv, dtype=float)
    std = adv.std()
    if adv.size < 2 or std == 0.0:
        return np.zeros_like(adv)
    return (adv - adv.mean()) / std


def actor_objective(alpha, beta, a0, logp_old, adv, clip_eps: float,
                    ent_coef: float):
    """Clipped-surrogate actor loss with entropy bonus, plus its gradients.

    Advantages must already be normalized.  Returns (loss, galpha, gbeta,
    mean_entropy); the gradients are w.r.t. the Beta parameters, ready to be
    pushed through the actor network.
    """
    bp = BetaParams(alpha, beta)
    logp_new = log_density(bp, a0)
    ratio = np.exp(logp_new - np.asarray(logp_old, dtype=float))
    if not np.all(np.isfinite(ratio)):
        raise FloatingPointError("non-finite probability ratio")
    adv = np.asarray(adv, dtype=float)
    clipped = np.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps)
    s1 = ratio * adv
    s2 = clipped * adv
    ent = entropy(bp)
    n = adv.shape[0]
    loss = -float(np.mean(np.minimum(s1, s2) + ent_coef * ent))
    # min() picks the unclipped branch on ties, where both gradients agree;
    # when the clipped branch is strictly smaller the ratio sits outside the
    # clip band and the surrogate gradient vanishes.
    coeff = np.where(s1 <= s2, s1, 0.0)
    gl_a, gl_b = log_density_grad(bp, a0)
    ge_a, ge_b = entropy_grad(bp)
    galpha = -(coeff[:, None] * gl_a + ent_coef * ge_a) / n
    gbeta = -(coeff[:, None] * gl_b + ent_coef * ge_b) / n
    return loss, galpha, gbeta, float(np.mean(ent))


def critic_loss(v_pred, v_target):
    """Mean squared error and its gradient w.r.t. the predictions."""
    v_pred = np.atleast_1d(np.asarray(v_pred, dtype=float))
    v_target = np.atleast_1d(np.asarray(v_target, dtype=float))
    if v_pred.size == 0:
        raise ValueError("empty input")
    if v_pred.shape != v_target.shape:
        raise ValueError("prediction/target length mismatch")
    diff = v_pred - v_target
    loss = float(np.mean(diff * diff))
    return loss, 2.0 * diff / diff.shape[0]


@dataclass
class UpdateStats:
    step: int
    lr: float
    actor_loss: float
    critic_loss: float
    entropy: float


def update(actor: NetParams, critic: NetParams, adam_a: AdamState,
           adam_c: AdamState, batch: dict, cfg: TrainConfig, progress: float,
           rng: np.random.Generator):
    """One PPO update over a full buffer; returns (actor, critic, stats).

    Values and GAE are computed once with the pre-update critic; the learning
    rate is the configured base rate scaled by (1 - progress).
    """
    v_s, _ = forward(CRITIC_SPEC, critic, batch["s"])
    v_next, _ = forward(CRITIC_SPEC, critic, batch["s_next"])
    adv, targets = compute_gae(batch["r"], v_s, v_next, batch["d_c"],
                               batch["d_e"], cfg.gamma, cfg.gae_lambda)
    decay = 1.0 - progress
    lr_a = cfg.eta_a * decay
    lr_c = cfg.eta_c * decay
    n = adv.shape[0]
    loss_a_sum = loss_c_sum = ent_sum = 0.0
    batches = 0
    for _ in range(cfg.k_epochs):
        perm = rng.permutation(n)
        for start in range(0, n, cfg.minibatch):
            idx = perm[start:start + cfg.minibatch]
            adv_mb = normalize_advantages(adv[idx])
            (alpha, beta), cache = forward(ACTOR_SPEC, actor, batch["s"][idx])
            loss_a, galpha, gbeta, ent = actor_objective(
                alpha, beta, batch["a0"][idx], batch["logp_old"][idx],
                adv_mb, cfg.epsilon_clip, cfg.c_entropy)
            grads_a, _ = backward(ACTOR_SPEC, actor, cache, (galpha, gbeta))
            clip_grad_norm(grads_a, cfg.grad_clip)
            actor = adam_step(actor, grads_a, adam_a, lr_a)
            v_pred, cache_c = forward(CRITIC_SPEC, critic, batch["s"][idx])
            loss_c, gv = critic_loss(v_pred, targets[idx])
            grads_c, _ = backward(CRITIC_SPEC, critic, cache_c, gv)
            clip_grad_norm(grads_c, cfg.grad_clip)
            critic = adam_step(critic, grads_c, adam_c, lr_c)
            loss_a_sum += loss_a
            loss_c_sum += loss_c
            ent_sum += ent
            batches += 1
    stats = UpdateStats(step=0, lr=lr_a, actor_loss=loss_a_sum / batches,
                        critic_loss=loss_c_sum / batches,
                        entropy=ent_sum / batches)
    return actor, critic, stats


@dataclass
class EpisodeRecord:
    index: int
    end_step: int
    steps: int
    reward: float     # accumulated raw (unscaled, undiscounted) reward


@dataclass
class TrainResult:
    actor: NetParams
    critic: NetParams
    adam_actor: AdamState
    adam_critic: AdamState
    episodes: list = field(default_factory=list)
    updates: list = field(default_factory=list)
    total_steps: int = 0


def train(env_factory, l_set, cfg: TrainConfig, seed: int) -> TrainResult:
    """Run the full PPO loop with fixed arm lengths l_set.

    Interaction stops after exactly cfg.t_max steps (a trailing partial
    episode is cut off), so the number of updates is t_max // n_buffer.
    Only completed episodes enter the reward curve.
    """
    ss = np.random.SeedSequence(seed)
    s_actor, s_critic, s_sample, s_shuffle, s_reset = ss.spawn(5)
    actor = init_orthogonal(ACTOR_SPEC, s_actor)
    critic = init_orthogonal(CRITIC_SPEC, s_critic)
    adam_a = AdamState.for_params(actor, cfg.epsilon_adam)
    adam_c = AdamState.for_params(critic, cfg.epsilon_adam)
    sample_rng = np.random.default_rng(s_sample)
    shuffle_rng = np.random.default_rng(s_shuffle)
    reset_rng = np.random.default_rng(s_reset)

    env = env_factory(l_set)
    n_max = env.quad.n_max
    scaler = RunningScale(cfg.gamma) if cfg.reward_scaling else None
    buffer = ReplayBuffer(cfg.n_buffer)
    result = TrainResult(actor, critic, adam_a, adam_c)
    steps = 0
    ep_index = 0
    while steps < cfg.t_max:
        env.reset(int(reset_rng.integers(2 ** 63)))
        s_vec = env.state_vector()
        ep_reward = 0.0
        ep_steps = 0
        done = False
        while not done and steps < cfg.t_max:
            (alpha, beta), _ = forward(ACTOR_SPEC, actor, s_vec)
            act = sample(BetaParams(alpha, beta), sample_rng, n_max)
            res = env.step(act.n)
            s2_vec = env.state_vector()
            ep_reward += res.reward
            r = scaler.scale(res.reward, res.done) if scaler else res.reward
            buffer.push(Transition(s_vec, act.a0, act.log_prob, r, s2_vec,
                                   res.d_c, res.d_e))
            steps += 1
            ep_steps += 1
            done = res.done
            s_vec = s2_vec
            if buffer.full():
                actor, critic, stats = update(
                    actor, critic, adam_a, adam_c, buffer.as_arrays(),
                    cfg, steps / cfg.t_max, shuffle_rng)
                stats.step = steps
                result.updates.append(stats)
                buffer.clear()
        if done:
            ep_index += 1
            result.episodes.append(
                EpisodeRecord(ep_index, steps, ep_steps, ep_reward))
    result.actor = actor
    result.critic = critic
    result.total_steps = steps
    return result


TRAINING_LOG_HEADER = ("step", "episode", "accumulated_reward",
                       "actor_loss", "critic_loss", "entropy", "lr")


def write_training_log(path, result: TrainResult) -> None:
    """One CSV row per completed episode with the latest update statistics."""
    with open(path, "w", newline="") as fh:
        fh.write(",".join(TRAINING_LOG_HEADER) + "\n")
        ui = 0
        last = None
        for ep in result.episodes:
            while ui < len(result.updates) and result.updates[ui].step <= ep.end_step:
                last = result.updates[ui]
                ui += 1
            if last is None:
                stats = ("nan", "nan", "nan", "nan")
            else:
                stats = (repr(last.actor_loss), repr(last.critic_loss),
                         repr(last.entropy), repr(last.lr))
            fh.write(",".join((str(ep.end_step), str(ep.index),
                               repr(ep.reward)) + stats) + "\n")
