"""Problem data model.

A problem instance is

    minimize    <c, x>
    subject to  A x = b,   x in Omega,

where Omega is a compact convex set described by a cone spec (see
:mod:`bundlealm.cones`) and A is a sparse linear map stored in triplet
form.  Semidefinite instances live in the vectorized coordinates produced
by :func:`svec`, so every problem is a flat-vector problem to the solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Optional

import numpy as np
import scipy.sparse as sp

__all__ = [
    "svec_dim",
    "mat_dim",
    "svec",
    "smat",
    "svec_indices",
    "LinearMap",
    "Certificate",
    "ConicProblem",
    "lagrangian_value",
    "aug_lagrangian_value",
    "primal_residuals",
    "operator_norm",
    "validate_problem",
]

SQRT2 = np.sqrt(2.0)


# ---------------------------------------------------------------------------
# symmetric-matrix vectorization
# ---------------------------------------------------------------------------

def svec_dim(n: int) -> int:
    """Length of the vectorization of an n-by-n symmetric matrix."""
    return n * (n + 1) // 2


def mat_dim(d: int) -> int:
    """Inverse of :func:`svec_dim`; raises if d is not triangular."""
    n = int(np.floor((np.sqrt(8.0 * d + 1.0) - 1.0) / 2.0))
    if svec_dim(n) != d:
        raise ValueError(f"{d} is not a triangular number")
    return n


@lru_cache(maxsize=64)
def svec_indices(n: int):
    """Row/column index arrays and off-diagonal scaling for order n.

    Entries are laid out upper-triangle, column-major: (0,0), (0,1), (1,1),
    (0,2), (1,2), (2,2), ...  Off-diagonal entries carry a sqrt(2) factor so
    the vectorization is an isometry for the Frobenius inner product.
    """
    if n == 0:
        empty = np.zeros(0, dtype=int)
        return empty, empty, np.zeros(0)
    rows = np.concatenate([np.arange(j + 1) for j in range(n)])
    cols = np.concatenate([np.full(j + 1, j) for j in range(n)])
    scale = np.where(rows == cols, 1.0, SQRT2)
    return rows, cols, scale


def svec(M: np.ndarray) -> np.ndarray:
    """Vectorize a symmetric matrix (isometric, upper triangle column-major).

    Raises ValueError if the input is asymmetric beyond 1e-12 relative to
    its magnitude.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("svec expects a square matrix")
    gap = np.max(np.abs(M - M.T)) if M.size else 0.0
    if gap > 1e-12 * max(1.0, float(np.max(np.abs(M))) if M.size else 1.0):
        raise ValueError(f"matrix is asymmetric (max |M - M^T| = {gap:.3e})")
    rows, cols, scale = svec_indices(M.shape[0])
    return scale * M[rows, cols]


def smat(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`svec`."""
    v = np.asarray(v, dtype=float)
    n = mat_dim(v.size)
    rows, cols, scale = svec_indices(n)
    M = np.zeros((n, n))
    M[rows, cols] = v / scale
    M[cols, rows] = M[rows, cols]
    return M


# ---------------------------------------------------------------------------
# sparse linear map
# ---------------------------------------------------------------------------

class LinearMap:
    """Sparse linear map R^n -> R^m stored row-compressed.

    Triplets are canonicalized on construction: duplicates are summed,
    exact zeros dropped, and entries ordered row-major.  ``triplets()``
    returns the canonical form, which is what the file writer emits.
    """

    def __init__(self, rows: int, cols: int,
                 entries: Iterable[tuple[int, int, float]] = ()):
        entries = list(entries)
        if entries:
            r, c, v = zip(*entries)
            r = np.asarray(r, dtype=np.int64)
            c = np.asarray(c, dtype=np.int64)
            v = np.asarray(v, dtype=float)
            if r.min() < 0 or r.max() >= rows or c.min() < 0 or c.max() >= cols:
                raise ValueError("triplet index out of range")
        else:
            r = np.zeros(0, dtype=np.int64)
            c = np.zeros(0, dtype=np.int64)
            v = np.zeros(0)
        A = sp.csr_matrix((v, (r, c)), shape=(rows, cols))
        A.sum_duplicates()
        A.eliminate_zeros()
        A.sort_indices()
        self._A = A
        self._At = A.T.tocsr()
        self.rows = rows
        self.cols = cols

    @classmethod
    def from_dense(cls, M: np.ndarray) -> "LinearMap":
        M = np.asarray(M, dtype=float)
        r, c = np.nonzero(M)
        return cls(M.shape[0], M.shape[1], zip(r.tolist(), c.tolist(), M[r, c]))

    def apply(self, x: np.ndarray) -> np.ndarray:
        """A x."""
        return self._A @ x

    def apply_adjoint(self, y: np.ndarray) -> np.ndarray:
        """A* y."""
        return self._At @ y

    def to_dense(self) -> np.ndarray:
        return self._A.toarray()

    def triplets(self) -> list[tuple[int, int, float]]:
        coo = self._A.tocoo()
        return list(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))

    def row_dense(self, i: int) -> np.ndarray:
        return self._A.getrow(i).toarray().ravel()

    @property
    def nnz(self) -> int:
        return self._A.nnz

    def __repr__(self) -> str:
        return f"LinearMap({self.rows}x{self.cols}, nnz={self.nnz})"


def operator_norm(amap: LinearMap, seed: int = 0, tol: float = 1e-10,
                  max_iter: int = 10000) -> float:
    """Largest singular value of the map, by power iteration on A A*.

    Deterministic for a fixed seed.  Stops when the Rayleigh quotient
    changes by at most ``tol`` relative, or at the iteration cap.
    """
    m = amap.rows
    if m == 0 or amap.nnz == 0:
        return 0.0
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    u = rng.standard_normal(m)
    u /= np.linalg.norm(u)
    sigma2 = 0.0
    for _ in range(max_iter):
        w = amap.apply(amap.apply_adjoint(u))
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        new = float(u @ w)
        u = w / nw
        if abs(new - sigma2) <= tol * max(1.0, abs(new)):
            sigma2 = new
            break
        sigma2 = new
    return float(np.sqrt(max(sigma2, 0.0)))


# ---------------------------------------------------------------------------
# problem container
# ---------------------------------------------------------------------------

@dataclass
class Certificate:
    """Optional optimality data attached to generated instances.

    ``p_star`` is the optimal (or witnessed upper-bound) primal value;
    ``x_star``/``y_star``/``g_star`` are present when the generator knows
    them exactly.
    """
    p_star: float
    x_star: Optional[np.ndarray] = None
    y_star: Optional[np.ndarray] = None
    g_star: Optional[float] = None


@dataclass
class ConicProblem:
    """min <c,x> s.t. Ax = b, x in the cone-spec set.

    ``metadata`` holds generator-side diagnostics (spectral gaps,
    observation masks and the like); it is never serialized.
    """
    c: np.ndarray
    b: np.ndarray
    A: LinearMap
    cone: object
    certificate: Optional[Certificate] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        self.b = np.asarray(self.b, dtype=float).ravel()

    @property
    def dim(self) -> int:
        return self.c.size

    @property
    def m(self) -> int:
        return self.b.size


def lagrangian_value(prob: ConicProblem, x: np.ndarray, y: np.ndarray) -> float:
    """L(x, y) = <c,x> + <y, b - Ax>."""
    return float(prob.c @ x + y @ (prob.b - prob.A.apply(x)))


def aug_lagrangian_value(prob: ConicProblem, rho: float, x: np.ndarray,
                         y: np.ndarray) -> float:
    """L_rho(x, y) = <c,x> + <y, b - Ax> + (rho/2)||b - Ax||^2."""
    if rho <= 0.0:
        raise ValueError("rho must be positive")
    r = prob.b - prob.A.apply(x)
    return float(prob.c @ x + y @ r + 0.5 * rho * (r @ r))


def primal_residuals(prob: ConicProblem, x: np.ndarray):
    """(affine residual ||Ax - b||, signed cost gap against the certificate).

    The cost gap is None when the instance carries no certificate.
    """
    affine = float(np.linalg.norm(prob.A.apply(x) - prob.b))
    gap = None
    if prob.certificate is not None:
        gap = float(prob.c @ x - prob.certificate.p_star)
    return affine, gap


def validate_problem(prob: ConicProblem) -> None:
    """Raise ValueError on dimension mismatch or an incoherent certificate.

    Certificate checks: feasibility of x_star at 1e-9 relative, strong
    duality |<c,x*> - <b,y*>| at 1e-8 relative.
    """
    n = prob.cone.dim
    if prob.c.size != n:
        raise ValueError(f"cost length {prob.c.size} != cone dim {n}")
    if prob.A.cols != n:
        raise ValueError(f"map has {prob.A.cols} cols, cone dim {n}")
    if prob.A.rows != prob.b.size:
        raise ValueError(f"map has {prob.A.rows} rows, b has {prob.b.size}")
    cert = prob.certificate
    if cert is None:
        return
    scale = 1.0 + abs(cert.p_star)
    if cert.x_star is not None:
        if cert.x_star.size != n:
            raise ValueError("certificate x_star has wrong dimension")
        affine, _ = primal_residuals(prob, cert.x_star)
        if affine > 1e-9 * (1.0 + np.linalg.norm(prob.b)):
            raise ValueError(f"certificate x_star infeasible: ||Ax-b|| = {affine:.3e}")
        if not prob.cone.contains(cert.x_star, 1e-9):
            raise ValueError("certificate x_star outside the feasible set")
        if abs(float(prob.c @ cert.x_star) - cert.p_star) > 1e-8 * scale:
            raise ValueError("certificate p_star disagrees with <c, x_star>")
    if cert.x_star is not None and cert.y_star is not None:
        gap = abs(float(prob.c @ cert.x_star) - float(prob.b @ cert.y_star))
        if gap > 1e-8 * scale:
            raise ValueError(f"certificate duality gap {gap:.3e}")
