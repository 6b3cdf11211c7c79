"""Small dense networks with hand-written forward and backward passes.

Both networks share the same trunk: 12 inputs, two tanh hidden layers of 64
units.  The actor head emits 8 raw values mapped through softplus(x) + 1 into
the two 4-vectors of Beta shape parameters; the critic head is a single
linear output.  Everything is float64 numpy; gradients are exact, computed by
backpropagation, and parameter updates are plain Adam.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

ACTOR = "actor"
CRITIC = "critic"


@dataclass(frozen=True)
class MlpSpec:
    """Network shape; head is "actor" (8 outputs, softplus+1) or "critic" (1)."""

    head: str
    input_dim: int = 12
    hidden: tuple = (64, 64)

    def __post_init__(self):
        if self.head not in (ACTOR, CRITIC):
            raise ValueError(f"unknown head {self.head!r}")

    @property
    def output_dim(self) -> int:
        return 8 if self.head == ACTOR else 1

    @property
    def layer_dims(self) -> list:
        """(out, in) pairs for the three weight matrices."""
        h1, h2 = self.hidden
        return [(h1, self.input_dim), (h2, h1), (self.output_dim, h2)]


@dataclass
class NetParams:
    """Per-layer weights and biases; also used as a container for gradients."""

    weights: list
    biases: list

    def copy(self) -> "NetParams":
        return NetParams([w.copy() for w in self.weights],
                         [b.copy() for b in self.biases])

    def arrays(self) -> list:
        return list(self.weights) + list(self.biases)

    def zeros_like(self) -> "NetParams":
        return NetParams([np.zeros_like(w) for w in self.weights],
                         [np.zeros_like(b) for b in self.biases])


@dataclass
class AdamState:
    """First/second moment accumulators plus the shared step counter."""

    m: NetParams
    v: NetParams
    step: int = 0
    epsilon: float = 1e-5

    @classmethod
    def for_params(cls, params: NetParams, epsilon: float = 1e-5) -> "AdamState":
        return cls(m=params.zeros_like(), v=params.zeros_like(),
                   step=0, epsilon=epsilon)


def _orthogonal(rows: int, cols: int, gain: float, rng) -> np.ndarray:
    """Orthogonal matrix (rows x cols) scaled by gain, QR-based."""
    a = rng.standard_normal((rows, cols))
    transpose = rows < cols
    if transpose:
        a = a.T
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if transpose:
        q = q.T
    return gain * q


def init_orthogonal(spec: MlpSpec, seed: int) -> NetParams:
    """Orthogonal init: gain sqrt(2) on hidden layers, 0.01 actor head, 1.0 critic."""
    rng = np.random.default_rng(seed)
    head_gain = 0.01 if spec.head == ACTOR else 1.0
    gains = [math.sqrt(2.0), math.sqrt(2.0), head_gain]
    weights = [_orthogonal(out, inp, g, rng)
               for (out, inp), g in zip(spec.layer_dims, gains)]
    biases = [np.zeros(out) for out, _ in spec.layer_dims]
    return NetParams(weights, biases)


def softplus(x):
    """Overflow-safe ln(1 + e^x)."""
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def forward(spec: MlpSpec, params: NetParams, x):
    """Run the network on x, shape (input_dim,) or (batch, input_dim).

    Actor: returns ((alpha, beta), cache) with alpha, beta > 1.
    Critic: returns (v, cache) with v a scalar or (batch,) vector.
    The cache feeds backward() and must not be reused across forwards.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x2 = x[None, :] if single else x
    if x2.shape[1] != spec.input_dim:
        raise ValueError(f"expected input dim {spec.input_dim}, got {x2.shape[1]}")
    w1, w2, w3 = params.weights
    b1, b2, b3 = params.biases
    h1 = np.tanh(x2 @ w1.T + b1)
    h2 = np.tanh(h1 @ w2.T + b2)
    z3 = h2 @ w3.T + b3
    cache = (x2, h1, h2, z3, single)
    if spec.head == ACTOR:
        sp = softplus(z3)
        alpha = sp[:, :4] + 1.0
        beta = sp[:, 4:] + 1.0
        if single:
            return (alpha[0], beta[0]), cache
        return (alpha, beta), cache
    v = z3[:, 0]
    if single:
        return float(v[0]), cache
    return v, cache


def backward(spec: MlpSpec, params: NetParams, cache, grad_out):
    """Backpropagate the loss gradient at the head outputs.

    grad_out is (galpha, gbeta) for the actor head or the gradient w.r.t. the
    scalar value for the critic, shaped like the corresponding forward output.
    Returns (grads, grad_input) where grads mirrors NetParams and grad_input
    has the shape of the forward input.
    """
    x2, h1, h2, z3, single = cache
    if spec.head == ACTOR:
        galpha, gbeta = grad_out
        g = np.concatenate([np.atleast_2d(galpha), np.atleast_2d(gbeta)], axis=1)
        if g.shape != z3.shape:
            raise ValueError(f"head gradient shape {g.shape} != {z3.shape}")
        gz3 = g / (1.0 + np.exp(-z3))     # softplus' = sigmoid
    else:
        gv = np.atleast_1d(np.asarray(grad_out, dtype=float))
        if gv.shape[0] != z3.shape[0]:
            raise ValueError("value gradient batch size mismatch")
        gz3 = gv[:, None]
    w1, w2, w3 = params.weights
    gw3 = gz3.T @ h2
    gb3 = gz3.sum(axis=0)
    gh2 = gz3 @ w3
    gz2 = gh2 * (1.0 - h2 * h2)
    gw2 = gz2.T @ h1
    gb2 = gz2.sum(axis=0)
    gh1 = gz2 @ w2
    gz1 = gh1 * (1.0 - h1 * h1)
    gw1 = gz1.T @ x2
    gb1 = gz1.sum(axis=0)
    gx = gz1 @ w1
    grads = NetParams([gw1, gw2, gw3], [gb1, gb2, gb3])
    return grads, (gx[0] if single else gx)


def clip_grad_norm(grads: NetParams, max_norm: float) -> NetParams:
    """Scale all gradients in place so the global L2 norm is at most max_norm."""
    if max_norm <= 0.0:
        raise ValueError("max_norm must be positive")
    total = math.sqrt(sum(float(np.sum(a * a)) for a in grads.arrays()))
    if total > max_norm:
        scale = max_norm / total
        for a in grads.arrays():
            a *= scale
    return grads


def adam_step(params: NetParams, grads: NetParams, state: AdamState,
              lr: float) -> NetParams:
    """One Adam update (beta1=0.9, beta2=0.999); returns new parameters.

    The moment accumulators in `state` are updated in place; `params` is left
    untouched.
    """
    state.step += 1
    t = state.step
    b1, b2 = 0.9, 0.999
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t

    def upd(p, g, m, v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        return p - lr * (m / c1) / (np.sqrt(v / c2) + state.epsilon)

    weights = [upd(p, g, m, v) for p, g, m, v in
               zip(params.weights, grads.weights, state.m.weights, state.v.weights)]
    biases = [upd(p, g, m, v) for p, g, m, v in
              zip(params.biases, grads.biases, state.m.biases, state.v.biases)]
    return NetParams(weights, biases)


def log_gamma(x):
    """ln Gamma(x) for x > 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise ValueError("log_gamma requires x > 0")
    return _sp.gammaln(x)


def digamma(x):
    """d/dx ln Gamma(x) for x > 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise ValueError("digamma requires x > 0")
    return _sp.digamma(x)


def trigamma(x):
    """Second derivative of ln Gamma(x) for x > 0 (Beta entropy gradients)."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise ValueError("trigamma requires x > 0")
    return _sp.polygamma(1, x)
