"""Feasible-set oracles.

Each cone spec describes a compact convex set Omega together with the
handful of exact computations the solver needs: membership, the support
function over Omega, and the point attaining it.  The support maximizer
doubles as the dual extreme point: for u = A*y - c,

    g(y) = -<b, y> + max_{x in Omega} <u, x>,

and the maximizer v satisfies g(y) = -L(v, y).  All three sets contain
the origin, so the support value is always >= 0 and ties at zero resolve
to the zero atom (it keeps bundles small and any maximizer is valid).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ConicProblem, smat, svec, svec_dim

__all__ = [
    "NonnegL1",
    "SocBound",
    "PsdTrace",
    "membership",
    "diameter_bound",
    "dual_value",
    "extreme_point",
    "dual_pair",
    "dual_subgradient",
    "top_eigs",
]


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    """Flip column signs so the largest-magnitude entry is positive."""
    out = vecs.copy()
    for j in range(out.shape[1]):
        i = int(np.argmax(np.abs(out[:, j])))
        if out[i, j] < 0:
            out[:, j] = -out[:, j]
    return out


def top_eigs(M: np.ndarray, k: int):
    """Top-k eigenpairs of a symmetric matrix, eigenvalues descending.

    Columns of the returned matrix are orthonormal eigenvectors under a
    deterministic sign convention (largest-magnitude entry positive).
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k = {k} out of range for order {n}")
    vals, vecs = np.linalg.eigh(M)
    order = np.argsort(vals)[::-1][:k]
    return vals[order], _fix_signs(vecs[:, order])


# ---------------------------------------------------------------------------
# cone specs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NonnegL1:
    """{x in R^n_+ : ||x||_1 <= bound}."""
    n: int
    bound: float

    def __post_init__(self):
        if self.n < 1 or self.bound < 0:
            raise ValueError("need n >= 1 and bound >= 0")

    @property
    def dim(self) -> int:
        return self.n

    def contains(self, x: np.ndarray, tol: float = 1e-9) -> bool:
        slack = tol * max(1.0, self.bound)
        return bool(np.min(x) >= -slack and np.sum(np.abs(x)) <= self.bound + slack)

    def support_point(self, u: np.ndarray):
        i = int(np.argmax(u))
        point = np.zeros(self.n)
        if u[i] > 0.0:
            point[i] = self.bound
            return self.bound * float(u[i]), point
        return 0.0, point

    def diameter_bound(self) -> float:
        return 2.0 * self.bound


@dataclass(frozen=True)
class SocBound:
    """{x in R^{n+1} : ||x_{1:n}|| <= x_{n+1} <= bound}.

    The support value follows from the two Jordan eigenvalues of the
    slope vector, (u_{n+1} +- ||u_{1:n}||): only the larger one matters
    and the bound scales it when positive.
    """
    n: int
    bound: float

    def __post_init__(self):
        if self.n < 1 or self.bound < 0:
            raise ValueError("need n >= 1 and bound >= 0")

    @property
    def dim(self) -> int:
        return self.n + 1

    def contains(self, x: np.ndarray, tol: float = 1e-9) -> bool:
        slack = tol * max(1.0, self.bound)
        head = float(np.linalg.norm(x[:-1]))
        return bool(head <= x[-1] + slack and x[-1] <= self.bound + slack)

    def support_point(self, u: np.ndarray):
        head = float(np.linalg.norm(u[:-1]))
        lam = head + float(u[-1])
        point = np.zeros(self.n + 1)
        if lam <= 0.0:
            return 0.0, point
        if head == 0.0:
            point[-1] = self.bound
        else:
            point[:-1] = (self.bound / head) * u[:-1]
            point[-1] = self.bound
        return self.bound * lam, point

    def diameter_bound(self) -> float:
        return 2.0 * self.bound * np.sqrt(2.0)


@dataclass(frozen=True)
class PsdTrace:
    """{X PSD of order n : tr(X) <= bound}, in svec coordinates."""
    n: int
    bound: float

    def __post_init__(self):
        if self.n < 1 or self.bound < 0:
            raise ValueError("need n >= 1 and bound >= 0")

    @property
    def dim(self) -> int:
        return svec_dim(self.n)

    def contains(self, x: np.ndarray, tol: float = 1e-9) -> bool:
        slack = tol * max(1.0, self.bound)
        X = smat(x)
        if float(np.trace(X)) > self.bound + slack:
            return False
        return bool(np.min(np.linalg.eigvalsh(X)) >= -slack)

    def support_point(self, u: np.ndarray):
        lam, vecs = top_eigs(smat(u), 1)
        if lam[0] > 0.0:
            v = vecs[:, 0]
            return self.bound * float(lam[0]), svec(self.bound * np.outer(v, v))
        return 0.0, np.zeros(self.dim)

    def diameter_bound(self) -> float:
        return 2.0 * self.bound


# ---------------------------------------------------------------------------
# dual-function oracles
# ---------------------------------------------------------------------------

def membership(cone, x: np.ndarray, tol: float = 1e-9) -> bool:
    return cone.contains(x, tol)


def diameter_bound(cone) -> float:
    return cone.diameter_bound()


def dual_pair(prob: ConicProblem, y: np.ndarray):
    """(g(y), extreme point attaining it), one support evaluation."""
    y = np.asarray(y, dtype=float).ravel()
    if y.size != prob.m:
        raise ValueError(f"dual vector has length {y.size}, expected {prob.m}")
    u = prob.A.apply_adjoint(y) - prob.c
    val, point = prob.cone.support_point(u)
    return float(-(prob.b @ y) + val), point


def dual_value(prob: ConicProblem, y: np.ndarray) -> float:
    """g(y) = -<b,y> + max_{x in Omega} <A*y - c, x>."""
    return dual_pair(prob, y)[0]


def extreme_point(prob: ConicProblem, y: np.ndarray) -> np.ndarray:
    """A point of Omega with g(y) = -L(v, y)."""
    return dual_pair(prob, y)[1]


def dual_subgradient(prob: ConicProblem, y: np.ndarray) -> np.ndarray:
    """A v(y) - b, a subgradient of g at y."""
    return prob.A.apply(extreme_point(prob, y)) - prob.b
