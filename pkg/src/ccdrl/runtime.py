"""Online blended control: ramped arm commands and weighted policy banks.

A scenario is an episode in which external commands retarget the arm lengths;
the arms slew toward the active target at a bounded rate.  While the lengths
change, the convex-combination weights are re-solved every step for the
instantaneous lengths, and the command is the weight-blended deterministic
mean action of the per-mode actors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ccomb import VertexSet, solve_weights, verify_weights
from .env import QuadrotorEnv, power_metric
from .net import NetParams, forward
from .policy import BetaParams, mean_action
from .ppo import ACTOR_SPEC

DEFAULT_SLEW_RATE = 0.1   # m/s


@dataclass
class ArmCommand:
    time: float
    target: np.ndarray


@dataclass
class ArmCommandSchedule:
    """Timed arm-length targets plus the maximum slew rate."""

    commands: list
    rate: float = DEFAULT_SLEW_RATE

    def __post_init__(self):
        if self.rate <= 0.0:
            raise ValueError("slew rate must be positive")
        times = [c.time for c in self.commands]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("command times must be strictly increasing")

    def target_at(self, t: float):
        """Latest commanded target at time t, or None before the first command."""
        active = None
        for cmd in self.commands:
            if cmd.time <= t:
                active = cmd.target
            else:
                break
        return active

    @classmethod
    def parse(cls, text: str, rate: float = DEFAULT_SLEW_RATE) -> "ArmCommandSchedule":
        """Parse `t l1 l2 l3 l4` lines; '#' starts a comment."""
        commands = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 5:
                raise ValueError(f"schedule line {lineno}: expected "
                                 f"'t l1 l2 l3 l4', got {raw!r}")
            try:
                vals = [float(p) for p in parts]
            except ValueError as exc:
                raise ValueError(f"schedule line {lineno}: {exc}") from None
            commands.append(ArmCommand(vals[0], np.array(vals[1:])))
        return cls(commands=commands, rate=rate)

    @classmethod
    def load(cls, path, rate: float = DEFAULT_SLEW_RATE) -> "ArmCommandSchedule":
        with open(path) as fh:
            return cls.parse(fh.read(), rate=rate)


@dataclass
class PolicyBank:
    """Trained actor parameter sets, one per hypercube vertex mode."""

    actors: list
    vertex_set: VertexSet = field(default_factory=VertexSet)

    def __post_init__(self):
        if len(self.actors) != len(self.vertex_set.vertices):
            raise ValueError(f"bank needs {len(self.vertex_set.vertices)} "
                             f"actors, got {len(self.actors)}")


def ramp_arm_lengths(current, target, dt: float, rate: float):
    """Move each arm toward its target by at most rate*dt, without overshoot.

    Returns (new lengths, realized per-arm rates).
    """
    if rate <= 0.0:
        raise ValueError("rate must be positive")
    current = np.asarray(current, dtype=float)
    target = np.asarray(target, dtype=float)
    step = np.clip(target - current, -rate * dt, rate * dt)
    new = current + step
    return new, step / dt


def cc_action(s_vec, chi, bank: PolicyBank, n_max: float) -> np.ndarray:
    """Convex combination of the mean actions of the nonzero-weight actors."""
    chi = np.asarray(chi, dtype=float)
    out = np.zeros(4)
    for i, w in enumerate(chi):
        if w == 0.0:
            continue
        (alpha, beta), _ = forward(ACTOR_SPEC, bank.actors[i], s_vec)
        out += w * mean_action(BetaParams(alpha, beta), n_max)
    return out


@dataclass
class ScenarioResult:
    """Telemetry and summary metrics of one deterministic episode."""

    rows: list                      # telemetry rows, env.TELEMETRY_HEADER order
    accumulated_reward: float       # undiscounted sum of raw rewards
    power: np.ndarray               # per-rotor mean (n/100)^2
    max_err: float                  # max position error norm over the episode
    mean_err: float
    steps: int
    crashed: bool
    weight_checks: list = field(default_factory=list)  # WeightReport per step


def _telemetry_row(env: QuadrotorEnv, n, arms, reward: float):
    t = env.time
    s = env.state
    ref = env.trajectory.position(t)
    pos = s.pos_err + ref
    return (t, pos[0], pos[1], pos[2], ref[0], ref[1], ref[2],
            s.att[0], s.att[1], s.att[2], n[0], n[1], n[2], n[3],
            arms[0], arms[1], arms[2], arms[3], reward)


def run_scenario(env: QuadrotorEnv, bank: PolicyBank,
                 schedule: ArmCommandSchedule, seed: int,
                 weight_solver=solve_weights) -> ScenarioResult:
    """Fly one episode under the blended controller and an arm schedule.

    Arms start at the environment's configured lengths and ramp toward the
    active schedule target; the blending weights are recomputed whenever the
    lengths changed this step.
    """
    vs = bank.vertex_set
    env.reset(seed)
    arms = env.arm_lengths
    chi = weight_solver(vs, arms)
    rows = []
    speeds = []
    errs = []
    checks = []
    total = 0.0
    crashed = False
    while not env.done:
        target = schedule.target_at(env.time)
        if target is not None and not np.array_equal(arms, target):
            arms, rates = ramp_arm_lengths(arms, target, env.dt, schedule.rate)
            env.morph_arms(arms, rates)
            chi = weight_solver(vs, arms)
        else:
            env.morph_arms(arms, np.zeros(4))
        checks.append(verify_weights(vs, chi, arms))
        n = cc_action(env.state_vector(), chi, bank, env.quad.n_max)
        res = env.step(n)
        total += res.reward
        speeds.append(n)
        errs.append(float(np.linalg.norm(res.obs.pos_err)))
        rows.append(_telemetry_row(env, n, arms, res.reward))
        crashed = crashed or res.d_c
    return ScenarioResult(rows=rows, accumulated_reward=total,
                          power=power_metric(speeds, env.dt),
                          max_err=max(errs), mean_err=float(np.mean(errs)),
                          steps=len(rows), crashed=crashed,
                          weight_checks=checks)


def evaluate_policy(env: QuadrotorEnv, actor: NetParams, seed: int) -> ScenarioResult:
    """Fly one episode with a single actor's deterministic mean action.

    The environment's arm lengths stay fixed at their configured values.
    """
    env.reset(seed)
    arms = env.arm_lengths
    env.morph_arms(arms, np.zeros(4))
    n_max = env.quad.n_max
    rows = []
    speeds = []
    errs = []
    total = 0.0
    crashed = False
    while not env.done:
        (alpha, beta), _ = forward(ACTOR_SPEC, actor, env.state_vector())
        n = mean_action(BetaParams(alpha, beta), n_max)
        res = env.step(n)
        total += res.reward
        speeds.append(n)
        errs.append(float(np.linalg.norm(res.obs.pos_err)))
        rows.append(_telemetry_row(env, n, arms, res.reward))
        crashed = crashed or res.d_c
    return ScenarioResult(rows=rows, accumulated_reward=total,
                          power=power_metric(speeds, env.dt),
                          max_err=max(errs), mean_err=float(np.mean(errs)),
                          steps=len(rows), crashed=crashed)
