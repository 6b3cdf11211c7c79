"""Episodic trajectory-tracking environment for the morphing quadrotor.

One step advances the dynamics by dt (default 0.1 s, integrated with RK4
substeps), then scores the new state with a shaped reward: weighted Euclidean
norms of position error, attitude, their rates and the control input, a
survival bonus per step, a large penalty on crashing (position error beyond a
crash radius) and a terminal position penalty when the episode ends at the
step limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import (QuadParams, RigidState, _make_deriv, _rk4,
                       check_arm_lengths, check_rotor_speeds, forces_torques,
                       inertia_from_arms, inertia_rate)

TELEMETRY_HEADER = ("t", "x", "y", "z", "x_ref", "y_ref", "z_ref",
                    "phi", "theta", "psi", "n1", "n2", "n3", "n4",
                    "l1", "l2", "l3", "l4", "reward")


@dataclass(frozen=True)
class RewardParams:
    """Reward coefficients, crash geometry and episode length."""

    c_x_tilde: float = 0.4        # position error weight
    c_varpi: float = 0.02         # attitude weight
    c_x_tilde_dot: float = 0.03   # velocity error weight
    c_varpi_dot: float = 0.05     # attitude rate weight
    c_u: float = 1e-4             # control input weight (rpm)
    c_e: float = 10.0             # terminal position error weight
    r_c: float = -150.0           # crash penalty
    r_t: float = 1.0              # per-step survival reward
    d_crash: float = 5.0          # crash distance, m
    t_e: int = 200                # max steps per episode

    def __post_init__(self):
        if self.d_crash <= 0.0:
            raise ValueError("d_crash must be positive")
        if self.t_e < 1:
            raise ValueError("t_e must be at least 1")
        for name in ("c_x_tilde", "c_varpi", "c_x_tilde_dot", "c_varpi_dot",
                     "c_u", "c_e"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be non-negative")


@dataclass
class StepResult:
    obs: RigidState
    reward: float
    d_c: bool
    d_e: bool
    done: bool


class FigureEightTrajectory:
    """Closed-form figure-8 reference in the xOz plane over [0, 20] s.

    position(t) = (cos(pi t / 5), 0, sin(2 pi t / 5) / 2); velocity and
    acceleration are its exact derivatives.  All three accept scalars or
    arrays of times.
    """

    t_max = 20.0
    _TOL = 1e-9

    def _check(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < -self._TOL) or np.any(t > self.t_max + self._TOL):
            raise ValueError(f"time {t} outside [0, {self.t_max}]")
        return np.clip(t, 0.0, self.t_max)

    def position(self, t):
        t = self._check(t)
        w = math.pi / 5.0
        x = np.cos(w * t)
        z = 0.5 * np.sin(2.0 * w * t)
        return np.stack([x, np.zeros_like(x), z], axis=-1)

    def velocity(self, t):
        t = self._check(t)
        w = math.pi / 5.0
        vx = -w * np.sin(w * t)
        vz = w * np.cos(2.0 * w * t)
        return np.stack([vx, np.zeros_like(vx), vz], axis=-1)

    def acceleration(self, t):
        t = self._check(t)
        w = math.pi / 5.0
        ax = -w * w * np.cos(w * t)
        az = -2.0 * w * w * np.sin(2.0 * w * t)
        return np.stack([ax, np.zeros_like(ax), az], axis=-1)

    def point(self, t):
        """(position, velocity, acceleration) at time t."""
        return self.position(t), self.velocity(t), self.acceleration(t)


def reward_of(rp: RewardParams, s: RigidState, n, d_c: bool, d_e: bool) -> float:
    """Shaped reward for state s reached with control input n (rpm).

    The crash branch applies whenever d_c is set, even if the step limit is
    hit simultaneously; the terminal position penalty only applies to a clean
    time-limit ending.
    """
    cost = (rp.c_x_tilde * _norm3(s.pos_err)
            + rp.c_varpi * _norm3(s.att)
            + rp.c_x_tilde_dot * _norm3(s.vel_err)
            + rp.c_varpi_dot * _norm3(s.att_rate)
            + rp.c_u * math.sqrt(float(np.dot(n, n))))
    if d_c:
        return -cost + rp.r_c + rp.r_t
    if d_e:
        return -(cost + rp.c_e * _norm3(s.pos_err)) + rp.r_t
    return -cost + rp.r_t


def _norm3(v) -> float:
    return math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])


def power_metric(speed_log, dt: float) -> np.ndarray:
    """Per-rotor mean of (n/100)^2 over a log of rotor speeds (rectangle rule)."""
    log = np.asarray(speed_log, dtype=float)
    if log.size == 0:
        raise ValueError("speed log is empty")
    log = log.reshape(-1, 4)
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    return np.mean((log / 100.0) ** 2, axis=0)


class QuadrotorEnv:
    """Single-episode simulator; create one instance per concurrent rollout.

    The observation is the 12-state in error coordinates; the episode clock
    and arm lengths are internal.  Arm lengths are fixed unless morph_arms is
    called between steps.
    """

    def __init__(self, quad: QuadParams = QuadParams(),
                 reward: RewardParams = RewardParams(),
                 trajectory=None, arms=None, dt: float = 0.1,
                 substeps: int = 10, perturb_pos: float = 0.1,
                 perturb_att: float = 0.05):
        if dt <= 0.0 or substeps < 1:
            raise ValueError("dt must be positive and substeps >= 1")
        self.quad = quad
        self.reward = reward
        self.trajectory = trajectory if trajectory is not None else FigureEightTrajectory()
        self.dt = dt
        self.substeps = substeps
        self.perturb_pos = perturb_pos
        self.perturb_att = perturb_att
        if arms is None:
            arms = np.full(4, quad.l_min)
        self._arms = check_arm_lengths(quad, arms).copy()
        self._arm_rates = np.zeros(4)
        self._y = (0.0,) * 12
        self._k = 0
        self._done = True
        # half-substep time offsets within one dt, reused every step
        self._tau_grid = np.linspace(0.0, dt, 2 * substeps + 1)

    # -- episode state ----------------------------------------------------

    @property
    def k(self) -> int:
        return self._k

    @property
    def time(self) -> float:
        return self._k * self.dt

    @property
    def done(self) -> bool:
        return self._done

    @property
    def arm_lengths(self) -> np.ndarray:
        return self._arms.copy()

    @property
    def state(self) -> RigidState:
        return RigidState.from_vector(np.array(self._y))

    def state_vector(self) -> np.ndarray:
        return np.array(self._y)

    # -- interaction -------------------------------------------------------

    def reset(self, seed: int) -> RigidState:
        """Start a new episode with a seed-driven initial perturbation."""
        rng = np.random.default_rng(seed)
        pos = rng.uniform(-self.perturb_pos, self.perturb_pos, 3)
        att = rng.uniform(-self.perturb_att, self.perturb_att, 3)
        self._y = (float(pos[0]), float(pos[1]), float(pos[2]),
                   float(att[0]), float(att[1]), float(att[2]),
                   0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
        self._k = 0
        self._done = False
        self._arm_rates = np.zeros(4)
        return self.state

    def morph_arms(self, arms, arm_rates) -> None:
        """Set the arm lengths and rates used by subsequent steps."""
        self._arms = check_arm_lengths(self.quad, arms).copy()
        self._arm_rates = np.asarray(arm_rates, dtype=float).copy()

    def step(self, n) -> StepResult:
        """Apply rotor speeds n (rpm) for one dt and score the new state."""
        if self._done:
            raise RuntimeError("episode is over; call reset() first")
        n = check_rotor_speeds(self.quad, n)
        p = self.quad
        thrust, tau = forces_torques(p, self._arms, n)
        inertia = inertia_from_arms(p, self._arms)
        inertia_dot = inertia_rate(p, self._arms, self._arm_rates)
        deriv = _make_deriv(p, thrust, tau, inertia, inertia_dot)
        t0 = self._k * self.dt
        samples = self.trajectory.acceleration(t0 + self._tau_grid).tolist()
        self._y = _rk4(self._y, deriv, self.dt / self.substeps,
                       self.substeps, samples)
        self._k += 1
        rp = self.reward
        d_c = _norm3(self._y[0:3]) > rp.d_crash
        d_e = self._k >= rp.t_e
        self._done = d_c or d_e
        s = self.state
        r = reward_of(rp, s, n, d_c, d_e)
        return StepResult(obs=s, reward=r, d_c=d_c, d_e=d_e, done=self._done)


def format_telemetry_value(v: float) -> str:
    """Decimal rendering with 12 significant digits."""
    return f"{v:.11e}"


def write_telemetry_csv(path, rows) -> None:
    """Write telemetry rows (sequences ordered as TELEMETRY_HEADER) to path."""
    with open(path, "w", newline="") as fh:
        fh.write(",".join(TELEMETRY_HEADER) + "\n")
        for row in rows:
            fh.write(",".join(format_telemetry_value(v) for v in row) + "\n")
