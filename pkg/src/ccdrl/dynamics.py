"""Rigid-body dynamics of a quadrotor with four independently length-varying arms.

The vehicle is modeled in plus configuration: arm j lies along a body axis
(arms 1/3 on x, arms 2/4 on y) with the rotor treated as a point mass at the
arm tip.  Extending an arm therefore grows both the torque lever of its rotor
and the diagonal inertia.  The state is kept in tracking-error coordinates:
position error and velocity error relative to a reference path, plus absolute
attitude and attitude rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_WRAP = math.remainder  # IEEE remainder wraps into [-pi, pi] for period 2*pi


@dataclass(frozen=True)
class QuadParams:
    """Physical parameters of the morphing quadrotor.

    Inertias are the values at the shortest arm length; lift/anti-torque
    coefficients act on rotor speeds expressed in rpm.
    """

    m: float = 1.732          # vehicle mass, kg
    ix0: float = 0.0375       # roll inertia at shortest arms, kg m^2
    iy0: float = 0.0375       # pitch inertia at shortest arms, kg m^2
    iz0: float = 0.0749       # yaw inertia at shortest arms, kg m^2
    k_f: float = 3.03e-5      # rotor lift coefficient, N / rpm^2
    k_m: float = 5.5e-5       # rotor anti-torque coefficient, N m / rpm^2
    m_mot: float = 0.1        # point mass at each arm tip, kg
    g: float = 9.81           # gravity, m/s^2
    l_min: float = 0.15       # shortest arm length, m
    l_max: float = 0.25       # longest arm length, m
    n_max: float = 1000.0     # rotor speed cap, rpm

    def __post_init__(self):
        for name in ("m", "ix0", "iy0", "iz0", "k_f", "k_m", "m_mot", "g",
                     "l_min", "l_max", "n_max"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if self.l_min >= self.l_max:
            raise ValueError("l_min must be smaller than l_max")

    def hover_speed(self) -> float:
        """Rotor speed (rpm, all four rotors) at which total lift equals weight."""
        return math.sqrt(self.m * self.g / (4.0 * self.k_f))


@dataclass
class RigidState:
    """12-dimensional flight state in tracking-error coordinates.

    pos_err/vel_err are relative to the reference trajectory; att is the
    absolute attitude (roll, pitch, yaw) wrapped to [-pi, pi]; att_rate is the
    attitude angular velocity.
    """

    pos_err: np.ndarray
    att: np.ndarray
    vel_err: np.ndarray
    att_rate: np.ndarray

    @classmethod
    def zero(cls) -> "RigidState":
        return cls(np.zeros(3), np.zeros(3), np.zeros(3), np.zeros(3))

    @classmethod
    def from_vector(cls, y) -> "RigidState":
        y = np.asarray(y, dtype=float)
        if y.shape != (12,):
            raise ValueError("state vector must have 12 entries")
        return cls(y[0:3].copy(), y[3:6].copy(), y[6:9].copy(), y[9:12].copy())

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.pos_err, self.att, self.vel_err, self.att_rate])

    def copy(self) -> "RigidState":
        return RigidState(self.pos_err.copy(), self.att.copy(),
                          self.vel_err.copy(), self.att_rate.copy())


def check_arm_lengths(p: QuadParams, l, tol: float = 1e-9) -> np.ndarray:
    """Validate a 4-vector of arm lengths against [l_min, l_max]."""
    l = np.asarray(l, dtype=float)
    if l.shape != (4,):
        raise ValueError("arm lengths must be a 4-vector")
    if np.any(l < p.l_min - tol) or np.any(l > p.l_max + tol):
        raise ValueError(f"arm lengths {l.tolist()} outside "
                         f"[{p.l_min}, {p.l_max}]")
    return l


def check_rotor_speeds(p: QuadParams, n, tol: float = 1e-9) -> np.ndarray:
    """Validate a 4-vector of rotor speeds against [0, n_max]."""
    n = np.asarray(n, dtype=float)
    if n.shape != (4,):
        raise ValueError("rotor speeds must be a 4-vector")
    if np.any(n < -tol) or np.any(n > p.n_max + tol):
        raise ValueError(f"rotor speeds {n.tolist()} outside [0, {p.n_max}]")
    return n


def rotation_matrix(att) -> np.ndarray:
    """Body-to-world rotation for attitude (roll, pitch, yaw), ZYX convention."""
    phi, theta, psi = att
    sph, cph = math.sin(phi), math.cos(phi)
    sth, cth = math.sin(theta), math.cos(theta)
    sps, cps = math.sin(psi), math.cos(psi)
    return np.array([
        [cth * cps, sph * sth * cps - cph * sps, cph * sth * cps + sph * sps],
        [cth * sps, sph * sth * sps + cph * cps, cph * sth * sps - sph * cps],
        [-sth,      sph * cth,                   cph * cth],
    ])


def inertia_from_arms(p: QuadParams, l) -> np.ndarray:
    """Diagonal inertia (Ix, Iy, Iz) for the given arm lengths.

    Each rotor contributes m_mot * l^2 about the two axes perpendicular to its
    arm; the base inertias already contain the contribution at l_min, so only
    the excess over l_min^2 is added.
    """
    l = check_arm_lengths(p, l)
    l1s, l2s, l3s, l4s = l * l
    lm2 = p.l_min * p.l_min
    ix = p.ix0 + p.m_mot * (l2s + l4s - 2.0 * lm2)
    iy = p.iy0 + p.m_mot * (l1s + l3s - 2.0 * lm2)
    iz = p.iz0 + p.m_mot * (l1s + l2s + l3s + l4s - 4.0 * lm2)
    return np.array([ix, iy, iz])


def inertia_rate(p: QuadParams, l, l_dot) -> np.ndarray:
    """Time derivative of inertia_from_arms for arm extension rates l_dot."""
    l = check_arm_lengths(p, l)
    l_dot = np.asarray(l_dot, dtype=float)
    ll = l * l_dot
    dix = 2.0 * p.m_mot * (ll[1] + ll[3])
    diy = 2.0 * p.m_mot * (ll[0] + ll[2])
    diz = 2.0 * p.m_mot * ll.sum()
    return np.array([dix, diy, diz])


def forces_torques(p: QuadParams, l, n) -> tuple[float, np.ndarray]:
    """Total thrust (N) and body torques (N m) for rotor speeds n (rpm).

    Plus configuration: rotor 1 forward (+x), 2 right (+y), 3 back, 4 left.
    Rotors 1 and 3 spin so their anti-torque is positive about z, 2 and 4
    negative.
    """
    l = check_arm_lengths(p, l)
    n = check_rotor_speeds(p, n)
    n2 = n * n
    thrust = p.k_f * n2.sum()
    tau_phi = p.k_f * (n2[3] * l[3] - n2[1] * l[1])
    tau_theta = p.k_f * (n2[2] * l[2] - n2[0] * l[0])
    tau_psi = p.k_m * (n2[0] - n2[1] + n2[2] - n2[3])
    return float(thrust), np.array([tau_phi, tau_theta, tau_psi])


def _make_deriv(p: QuadParams, thrust: float, tau, inertia, inertia_dot):
    """Closure computing the 12-state derivative; inputs are held constant.

    The returned function takes the state as a 12-tuple plus the reference
    acceleration as a 3-sequence and returns a 12-tuple.  Kept scalar for
    speed: this is the innermost loop of the simulator.
    """
    f_over_m = float(thrust) / p.m
    g = p.g
    tau_x, tau_y, tau_z = (float(v) for v in tau)
    ix, iy, iz = (float(v) for v in inertia)
    dix, diy, diz = (float(v) for v in inertia_dot)
    sin, cos = math.sin, math.cos

    def deriv(y, ra):
        sph = sin(y[3]); cph = cos(y[3])
        sth = sin(y[4]); cth = cos(y[4])
        sps = sin(y[5]); cps = cos(y[5])
        wp = y[9]; wq = y[10]; wr = y[11]
        ax = (cph * sth * cps + sph * sps) * f_over_m - ra[0]
        ay = (cph * sth * sps - sph * cps) * f_over_m - ra[1]
        az = cph * cth * f_over_m - g - ra[2]
        dwp = (tau_x + (iy - iz) * wq * wr - dix * wp) / ix
        dwq = (tau_y + (iz - ix) * wp * wr - diy * wq) / iy
        dwr = (tau_z + (ix - iy) * wp * wq - diz * wr) / iz
        return (y[6], y[7], y[8], wp, wq, wr, ax, ay, az, dwp, dwq, dwr)

    return deriv


def state_derivative(p: QuadParams, s: RigidState, n, l, l_dot, ref_acc) -> np.ndarray:
    """Time derivative of the 12-state under rotor speeds n and arm motion l_dot.

    Translational dynamics subtract the reference acceleration so the result
    stays in error coordinates; rotational dynamics are Euler equations with
    the extra -I_dot * omega term from the time-varying inertia.
    """
    thrust, tau = forces_torques(p, l, n)
    inertia = inertia_from_arms(p, l)
    inertia_dot = inertia_rate(p, l, l_dot)
    deriv = _make_deriv(p, thrust, tau, inertia, inertia_dot)
    ra = np.asarray(ref_acc, dtype=float)
    return np.array(deriv(tuple(s.as_vector()), (ra[0], ra[1], ra[2])))


def _rk4(y: tuple, deriv, h: float, substeps: int, ref_samples) -> tuple:
    """Classical RK4 over `substeps` intervals of width h.

    ref_samples holds the reference acceleration on the half-step grid,
    2*substeps + 1 rows, so stage evaluations land exactly on sample points.
    Attitude angles are wrapped to [-pi, pi] after each substep.
    """
    half = 0.5 * h
    sixth = h / 6.0
    two_pi = 2.0 * math.pi
    for k in range(substeps):
        r0 = ref_samples[2 * k]
        r1 = ref_samples[2 * k + 1]
        r2 = ref_samples[2 * k + 2]
        k1 = deriv(y, r0)
        y1 = tuple(y[i] + half * k1[i] for i in range(12))
        k2 = deriv(y1, r1)
        y2 = tuple(y[i] + half * k2[i] for i in range(12))
        k3 = deriv(y2, r1)
        y3 = tuple(y[i] + h * k3[i] for i in range(12))
        k4 = deriv(y3, r2)
        y = tuple(y[i] + sixth * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i])
                  for i in range(12))
        y = (y[0], y[1], y[2],
             _WRAP(y[3], two_pi), _WRAP(y[4], two_pi), _WRAP(y[5], two_pi),
             y[6], y[7], y[8], y[9], y[10], y[11])
    return y


def _ref_samples(ref_acc, dt: float, substeps: int) -> list:
    """Reference acceleration on the half-substep grid as a list of 3-lists."""
    count = 2 * substeps + 1
    if ref_acc is None:
        return [(0.0, 0.0, 0.0)] * count
    if callable(ref_acc):
        taus = np.linspace(0.0, dt, count)
        return [list(map(float, np.asarray(ref_acc(t), dtype=float))) for t in taus]
    ra = np.asarray(ref_acc, dtype=float)
    return [(float(ra[0]), float(ra[1]), float(ra[2]))] * count


def integrate_step(p: QuadParams, s: RigidState, n, arm_profile, dt: float,
                   substeps: int = 10, ref_acc=None) -> RigidState:
    """Advance the state by dt with zero-order-hold rotor/arm inputs.

    arm_profile is (arm lengths, arm rates); both are held constant over the
    step, as are the rotor speeds.  ref_acc may be None (zero), a constant
    3-vector, or a callable of time within [0, dt].
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if substeps < 1:
        raise ValueError("substeps must be at least 1")
    l, l_dot = arm_profile
    thrust, tau = forces_torques(p, l, n)
    inertia = inertia_from_arms(p, l)
    inertia_dot = inertia_rate(p, l, l_dot)
    deriv = _make_deriv(p, thrust, tau, inertia, inertia_dot)
    samples = _ref_samples(ref_acc, dt, substeps)
    y0 = tuple(float(v) for v in s.as_vector())
    y = _rk4(y0, deriv, dt / substeps, substeps, samples)
    return RigidState.from_vector(np.array(y))
