"""Maximum-norm convex-combination weights over the arm-length hypercube.

The 16 vertex modes of [l_min, l_max]^4 are ordered by the binary pattern of
the mode index (mode 1 = all short ... mode 16 = all long, arm 4 being the
least significant bit).  For a target length vector inside the cube we want
convex weights over the vertices that reproduce it while maximizing
sum(chi^2), i.e. concentrating mass on as few vertices as possible; by
Caratheodory's theorem 5 vertices always suffice.

Two solvers are provided: exact enumeration of all vertex subsets of size at
most 5 (the objective is convex, so the optimum sits at an extreme point of
the feasible polytope, and every extreme point has such a support), and an
iterative SLSQP solve of the quadratic program from random starts, which may
stop in a local optimum and is validated against the enumeration.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

SUPPORT_EPS = 1e-9        # entries at or below this count as zero
FEAS_TOL = 1e-8           # constraint violation accepted as feasible
NEG_TOL = -1e-10          # weights may undershoot zero by at most this


class VertexSet:
    """The 16 hypercube vertex modes and precomputed subset solver tables."""

    def __init__(self, l_min: float = 0.15, l_max: float = 0.25):
        if l_min >= l_max:
            raise ValueError("l_min must be smaller than l_max")
        self.l_min = l_min
        self.l_max = l_max
        self.bits = np.array([[(i >> 3) & 1, (i >> 2) & 1,
                               (i >> 1) & 1, i & 1] for i in range(16)],
                             dtype=float)
        self.vertices = l_min + (l_max - l_min) * self.bits
        # Per subset size k: index array (n_k, k), stacked constraint
        # matrices A (n_k, 5, k) with rows [sum; 4 coordinates], and their
        # pseudoinverses for batched solves.
        self._groups = []
        for k in range(1, 6):
            subs = np.array(list(itertools.combinations(range(16), k)))
            mats = np.empty((len(subs), 5, k))
            for i, sub in enumerate(subs):
                mats[i, 0, :] = 1.0
                mats[i, 1:, :] = self.bits[sub].T
            self._groups.append((subs, mats, np.linalg.pinv(mats)))


@dataclass
class WeightReport:
    """Constraint diagnostics for a candidate weight vector."""

    sum_violation: float
    recon_violation: float     # max abs error of reconstructed lengths, m
    min_weight: float
    support_size: int

    def ok(self, tol: float = FEAS_TOL) -> bool:
        return (self.sum_violation <= tol and self.recon_violation <= tol
                and self.min_weight >= 0.0 and self.support_size <= 5)


def normalize_lengths(vs: VertexSet, l) -> np.ndarray:
    """Affine map of arm lengths into the unit cube [0, 1]^4."""
    l = np.asarray(l, dtype=float)
    if l.shape != (4,):
        raise ValueError("arm lengths must be a 4-vector")
    t = (l - vs.l_min) / (vs.l_max - vs.l_min)
    if np.any(t < -1e-9) or np.any(t > 1.0 + 1e-9):
        raise ValueError(f"arm lengths {l.tolist()} outside "
                         f"[{vs.l_min}, {vs.l_max}]")
    return np.clip(t, 0.0, 1.0)


def verify_weights(vs: VertexSet, chi, l_tar) -> WeightReport:
    """Measure how well chi satisfies the convex-combination constraints."""
    chi = np.asarray(chi, dtype=float)
    l_tar = np.asarray(l_tar, dtype=float)
    recon = vs.vertices.T @ chi
    return WeightReport(
        sum_violation=abs(float(chi.sum()) - 1.0),
        recon_violation=float(np.max(np.abs(recon - l_tar))),
        min_weight=float(chi.min()),
        support_size=int(np.sum(chi > SUPPORT_EPS)),
    )


def solve_weights(vs: VertexSet, l_tar) -> np.ndarray:
    """Globally optimal max-norm weights by exact subset enumeration.

    All 6884 vertex subsets of size 1..5 are solved in batch through
    precomputed pseudoinverses; among the feasible solutions the one with the
    largest sum of squares wins, ties going to the lexicographically smallest
    support.  The winning subset is re-solved through its normal equations so
    clean targets (vertices, edge and face midpoints) come out exact.
    """
    t = normalize_lengths(vs, l_tar)
    b = np.concatenate(([1.0], t))
    best_obj = -1.0
    best_sub = None
    for subs, mats, pinvs in vs._groups:
        chi = pinvs @ b                                    # (n_k, k)
        resid = np.abs(mats @ chi[..., None] - b[:, None])
        feasible = ((resid.max(axis=(1, 2)) <= FEAS_TOL)
                    & (chi.min(axis=1) >= NEG_TOL))
        if not feasible.any():
            continue
        obj = np.where(feasible,
                       np.square(np.clip(chi, 0.0, None)).sum(axis=1),
                       -np.inf)
        i = int(np.argmax(obj))
        ties = np.flatnonzero(obj >= obj[i] - 1e-12)
        i = int(ties[0])            # combinations() emits subsets in lex order
        if obj[i] > best_obj + 1e-12:
            best_obj = float(obj[i])
            best_sub = subs[i]
    if best_sub is None:
        raise RuntimeError(f"no feasible vertex subset for target {l_tar}")
    k = len(best_sub)
    a = np.vstack([np.ones(k), vs.bits[best_sub].T])
    try:
        chi_sub = np.linalg.solve(a.T @ a, a.T @ b)
    except np.linalg.LinAlgError:
        chi_sub = np.linalg.lstsq(a, b, rcond=None)[0]
    chi = np.zeros(16)
    chi[best_sub] = np.clip(chi_sub, 0.0, None)
    chi[chi <= SUPPORT_EPS] = 0.0
    return chi


def objective(chi) -> float:
    """Sum of squared weights (the quantity being maximized)."""
    chi = np.asarray(chi, dtype=float)
    return float(np.dot(chi, chi))


def solve_weights_sqp(vs: VertexSet, l_tar, seed: int = 0,
                      max_restarts: int = 1000) -> np.ndarray:
    """Iterative SLSQP solve of the weight program from random starts.

    Restarts with a fresh normalized random initial point whenever the result
    is infeasible or supported on more than 5 vertices; the accepted solution
    is renormalized to sum exactly 1.  May return a local optimum.
    """
    t = normalize_lengths(vs, l_tar)
    rng = np.random.default_rng(seed)
    constraints = [
        {"type": "eq", "fun": lambda c: c.sum() - 1.0,
         "jac": lambda c: np.ones(16)},
        {"type": "eq", "fun": lambda c: vs.bits.T @ c - t,
         "jac": lambda c: vs.bits.T},
    ]
    for _ in range(max_restarts):
        x0 = rng.random(16)
        x0 /= x0.sum()
        res = minimize(lambda c: -np.dot(c, c), x0,
                       jac=lambda c: -2.0 * c,
                       method="SLSQP", bounds=[(0.0, 1.0)] * 16,
                       constraints=constraints,
                       options={"maxiter": 500, "ftol": 1e-12})
        if not res.success:
            continue
        chi = np.clip(res.x, 0.0, None)
        chi[chi <= SUPPORT_EPS] = 0.0
        total = chi.sum()
        if total <= 0.0:
            continue
        chi = chi / total
        if verify_weights(vs, chi, l_tar).ok():
            return chi
    raise RuntimeError(f"SLSQP failed to find a sparse feasible solution "
                       f"within {max_restarts} restarts")
