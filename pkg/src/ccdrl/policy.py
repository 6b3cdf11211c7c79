"""Beta-distribution stochastic policy over the four rotor speeds.

Each action dimension is an independent Beta(alpha, beta) variable on (0, 1),
scaled by n_max into rpm.  With alpha, beta > 1 the density is bell-shaped
and vanishes at the support edges.  The deterministic test-time action is the
distribution mean alpha / (alpha + beta).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .net import digamma, log_gamma, trigamma

_EDGE = 1e-8  # samples are kept this far away from {0, 1} before taking logs


@dataclass
class BetaParams:
    """Shape parameters per action dimension; every entry must exceed 1."""

    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float)
        self.beta = np.asarray(self.beta, dtype=float)
        if self.alpha.shape != self.beta.shape:
            raise ValueError("alpha and beta must have the same shape")
        if np.any(self.alpha <= 1.0) or np.any(self.beta <= 1.0):
            raise ValueError("Beta policy requires alpha, beta > 1")


@dataclass
class ActionSample:
    a0: np.ndarray        # raw action in (0, 1)^4
    log_prob: float
    n: np.ndarray         # rotor speeds in rpm


def log_beta_fn(alpha, beta):
    """ln B(alpha, beta) elementwise."""
    return log_gamma(alpha) + log_gamma(beta) - log_gamma(alpha + beta)


def log_density(bp: BetaParams, a0) -> float:
    """Joint log density of the independent Beta dimensions at a0.

    a0 has shape (4,) or (batch, 4); the result is a float or a (batch,)
    array.  Exact boundary values are rejected since the log diverges there.
    """
    a0 = np.asarray(a0, dtype=float)
    if np.any(a0 <= 0.0) or np.any(a0 >= 1.0):
        raise ValueError("a0 must lie strictly inside (0, 1)")
    terms = ((bp.alpha - 1.0) * np.log(a0)
             + (bp.beta - 1.0) * np.log1p(-a0)
             - log_beta_fn(bp.alpha, bp.beta))
    out = terms.sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def log_density_grad(bp: BetaParams, a0):
    """Gradients of log_density w.r.t. alpha and beta (same shape as each)."""
    a0 = np.asarray(a0, dtype=float)
    psi_ab = digamma(bp.alpha + bp.beta)
    galpha = np.log(a0) - digamma(bp.alpha) + psi_ab
    gbeta = np.log1p(-a0) - digamma(bp.beta) + psi_ab
    return galpha, gbeta


def entropy(bp: BetaParams):
    """Closed-form differential entropy, summed over action dimensions."""
    a, b = bp.alpha, bp.beta
    terms = (log_beta_fn(a, b)
             - (a - 1.0) * digamma(a)
             - (b - 1.0) * digamma(b)
             + (a + b - 2.0) * digamma(a + b))
    out = terms.sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def entropy_grad(bp: BetaParams):
    """Gradients of entropy w.r.t. alpha and beta."""
    a, b = bp.alpha, bp.beta
    tg_ab = trigamma(a + b)
    galpha = -(a - 1.0) * trigamma(a) + (a + b - 2.0) * tg_ab
    gbeta = -(b - 1.0) * trigamma(b) + (a + b - 2.0) * tg_ab
    return galpha, gbeta


def sample(bp: BetaParams, rng: np.random.Generator, n_max: float) -> ActionSample:
    """Draw one action, its joint log probability and the rpm command."""
    a0 = rng.beta(bp.alpha, bp.beta)
    a0 = np.clip(a0, _EDGE, 1.0 - _EDGE)
    logp = log_density(bp, a0)
    return ActionSample(a0=a0, log_prob=float(logp), n=a0 * n_max)


def mean_action(bp: BetaParams, n_max: float) -> np.ndarray:
    """Deterministic action: the Beta mean scaled to rpm."""
    return bp.alpha / (bp.alpha + bp.beta) * n_max
