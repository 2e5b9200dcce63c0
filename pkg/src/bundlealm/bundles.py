"""Inner-approximation sets and their exact subproblem solvers.

A bundle is a simple closed convex subset of the feasible set, rebuilt
every iteration from the newest extreme point v and subproblem solution
w.  Four shapes are supported:

* ``Singleton``  {v}
* ``Segment``    conv(v, w)
* ``Hull``       conv(atoms [+ origin])
* ``Spectral``   {eta*Xbar + V S V' : eta >= 0, S PSD, eta + tr S <= gamma}

Each shape admits an exact minimizer of the augmented Lagrangian over
itself: a scalar saturation formula for segments, active-set enumeration
over the weight simplex for hulls, and a small conic QP for the spectral
set.  The induced model g_k(y) = -min over the bundle of L(x, y) is a
global lower bound on the dual function g.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np

from .model import (ConicProblem, aug_lagrangian_value, lagrangian_value,
                    smat, svec, svec_indices)
from .cones import top_eigs
from .specqp import solve_spec_qp

__all__ = [
    "Singleton",
    "Segment",
    "Hull",
    "Spectral",
    "SpectralCache",
    "initial_spectral",
    "segment_argmin",
    "simplex_qp",
    "hull_argmin",
    "spectral_argmin",
    "subproblem_argmin",
    "model_value",
    "model_value_at_candidate",
    "update_bundle",
    "spectral_update",
    "spectral_descent_reconstruction",
    "spectral_null_reconstruction",
]


# ---------------------------------------------------------------------------
# bundle shapes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Singleton:
    v: np.ndarray

    def atoms(self):
        return [self.v]

    include_origin = False


@dataclass(frozen=True)
class Segment:
    v: np.ndarray
    w: np.ndarray

    def atoms(self):
        return [self.v, self.w]

    include_origin = False


@dataclass(frozen=True)
class Hull:
    atoms_list: tuple
    include_origin: bool = False

    def atoms(self):
        return list(self.atoms_list)


@dataclass(frozen=True)
class Spectral:
    """{eta*Xbar + V S V' : eta >= 0, S PSD r x r, eta + tr S <= gamma}."""
    xbar: np.ndarray      # unit-trace PSD aggregate, svec coordinates
    V: np.ndarray         # nbar x r orthonormal
    gamma: float
    r_p: int
    r_c: int

    def __post_init__(self):
        nbar, r = self.V.shape
        if r != self.r_p + self.r_c or self.r_c < 1 or self.r_p < 0:
            raise ValueError("V must have r_p + r_c columns with r_c >= 1")
        if r > nbar:
            raise ValueError("bundle rank exceeds the matrix order")
        if abs(float(np.trace(smat(self.xbar))) - 1.0) > 1e-10:
            raise ValueError("aggregate must have unit trace")
        gram = self.V.T @ self.V
        if np.max(np.abs(gram - np.eye(r))) > 1e-10:
            raise ValueError("V columns must be orthonormal")

    @property
    def r(self) -> int:
        return self.r_p + self.r_c


# ---------------------------------------------------------------------------
# argmin of L_rho over each shape
# ---------------------------------------------------------------------------

def segment_argmin(v: np.ndarray, w: np.ndarray, prob: ConicProblem,
                   rho: float, y: np.ndarray):
    """Minimize L_rho over conv(v, w); returns (alpha, alpha*v + (1-alpha)*w).

    The restriction is a scalar quadratic, so the minimizer is the
    saturated stationary point.  When A(v - w) = 0 the quadratic term
    vanishes and the better endpoint wins (ties go to w).
    """
    d = v - w
    Ad = prob.A.apply(d)
    denom = rho * float(Ad @ Ad)
    if denom == 0.0:
        lv = aug_lagrangian_value(prob, rho, v, y)
        lw = aug_lagrangian_value(prob, rho, w, y)
        alpha = 1.0 if lv < lw else 0.0
    else:
        resid = prob.b - prob.A.apply(w)
        slope = prob.A.apply_adjoint(y) - prob.c
        phi = (rho * float(prob.A.apply_adjoint(resid) @ d)
               + float(slope @ d)) / denom
        alpha = min(1.0, max(0.0, phi))
    return alpha, alpha * v + (1.0 - alpha) * w


def simplex_qp(P: np.ndarray, q: np.ndarray):
    """Minimize 0.5 l'Pl + q'l over the probability simplex, exactly.

    Enumerates active faces (the atom count is tiny); each face yields an
    equality-constrained KKT system.  A face whose solution is feasible
    and passes the multiplier test is optimal; the best feasible candidate
    is kept as a fallback against degenerate (duplicate-atom) geometry.
    """
    K = P.shape[0]
    scale = 1.0 + float(np.abs(q).max(initial=0.0)) + float(np.abs(P).max(initial=0.0))
    best_lam, best_val = None, np.inf
    for size in range(1, K + 1):
        for face in combinations(range(K), size):
            F = list(face)
            # stationarity on the face: P_FF lam - nu 1 = -q_F, so nu equals
            # the on-face gradient and off-face entries must sit above it
            kkt = np.zeros((size + 1, size + 1))
            kkt[:size, :size] = P[np.ix_(F, F)]
            kkt[:size, size] = -1.0
            kkt[size, :size] = 1.0
            rhs = np.concatenate((-q[F], [1.0]))
            sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
            if np.linalg.norm(kkt @ sol - rhs) > 1e-9 * scale:
                continue
            lam_f, nu = sol[:size], sol[size]
            if np.min(lam_f) < -1e-12:
                continue
            lam = np.zeros(K)
            lam[F] = np.maximum(lam_f, 0.0)
            lam /= lam.sum()
            grad = P @ lam + q
            off = [i for i in range(K) if i not in face]
            if not off or np.min(grad[off]) >= nu - 1e-9 * scale:
                return lam  # certified optimal face
            val = 0.5 * float(lam @ P @ lam) + float(q @ lam)
            if val < best_val:
                best_lam, best_val = lam, val
    if best_lam is None:
        raise RuntimeError("no feasible face in simplex QP")
    return best_lam


def hull_argmin(atoms, include_origin: bool, prob: ConicProblem, rho: float,
                y: np.ndarray):
    """Minimize L_rho over conv(atoms [+ 0]); returns (weights, point).

    Weights are reported for the given atoms; with the origin included
    they sum to at most one.
    """
    pts = [np.asarray(a, dtype=float) for a in atoms]
    if include_origin:
        pts = pts + [np.zeros(prob.dim)]
    images = np.stack([prob.A.apply(p) for p in pts])
    P = rho * (images @ images.T)
    shift = prob.c - prob.A.apply_adjoint(y + rho * prob.b)
    q = np.array([float(shift @ p) for p in pts])
    lam = simplex_qp(P, q)
    point = np.zeros(prob.dim)
    for wgt, p in zip(lam, pts):
        point += wgt * p
    weights = lam[:len(atoms)]
    return weights, point


class SpectralCache:
    """Per-problem arrays reused by every spectral subproblem.

    When the dense stack of constraint matrices is affordable the
    congruences V'A_i V vectorize into one einsum; otherwise they are
    assembled row by row from the sparse triplets.
    """

    DENSE_LIMIT = 2_000_000

    def __init__(self, prob: ConicProblem):
        nbar = prob.cone.n
        m = prob.m
        self.nbar = nbar
        self.cmat = smat(prob.c)
        if m * nbar * nbar <= self.DENSE_LIMIT:
            self.astack = np.stack([smat(prob.A.row_dense(i))
                                    for i in range(m)])
        else:
            self.astack = None
            trips = prob.A.triplets()
            rows_sv, cols_sv, _ = svec_indices(nbar)
            ri = np.array([t[0] for t in trips], dtype=np.int64)
            k = np.array([t[1] for t in trips], dtype=np.int64)
            val = np.array([t[2] for t in trips])
            p, qq = rows_sv[k], cols_sv[k]
            coef = np.where(p == qq, 0.5 * val, val / np.sqrt(2.0))
            self._entries = (ri, p, qq, coef, m)

    def congruences(self, V: np.ndarray) -> np.ndarray:
        """All V'A_i V as an (m, r, r) stack."""
        if self.astack is not None:
            return np.einsum("ij,mjk,kl->mil", V.T, self.astack, V,
                             optimize=True)
        ri, p, q, coef, m = self._entries
        outer = V[p][:, :, None] * V[q][:, None, :]
        outer = coef[:, None, None] * (outer + outer.transpose(0, 2, 1))
        out = np.zeros((m, V.shape[1], V.shape[1]))
        np.add.at(out, ri, outer)
        return out


def _svec_stack(mats: np.ndarray) -> np.ndarray:
    """svec applied along the first axis of an (m, r, r) stack."""
    rows, cols, scale = svec_indices(mats.shape[1])
    return mats[:, rows, cols] * scale


def spectral_argmin(spec: Spectral, prob: ConicProblem, rho: float,
                    y: np.ndarray, cache: Optional[SpectralCache] = None):
    """Minimize L_rho over the spectral set; returns (eta, S, point)."""
    if cache is None:
        cache = SpectralCache(prob)
    V = spec.V
    abar = prob.A.apply(spec.xbar)
    Bmat = _svec_stack(cache.congruences(V))
    G = np.column_stack((abar, Bmat))
    q_c = np.concatenate(([float(prob.c @ spec.xbar)],
                          svec(V.T @ cache.cmat @ V)))
    P = rho * (G.T @ G)
    q = q_c - G.T @ (y + rho * prob.b)
    res = solve_spec_qp(P, q, spec.gamma, spec.r)
    point = res.eta * spec.xbar + svec(V @ res.S @ V.T)
    return res.eta, res.S, point


def subproblem_argmin(bundle, prob: ConicProblem, rho: float, y: np.ndarray,
                      cache: Optional[SpectralCache] = None) -> np.ndarray:
    """Exact minimizer of L_rho(., y) over the bundle."""
    if isinstance(bundle, Singleton):
        return bundle.v
    if isinstance(bundle, Segment):
        return segment_argmin(bundle.v, bundle.w, prob, rho, y)[1]
    if isinstance(bundle, Hull):
        return hull_argmin(bundle.atoms(), bundle.include_origin, prob, rho,
                           y)[1]
    if isinstance(bundle, Spectral):
        return spectral_argmin(bundle, prob, rho, y, cache)[2]
    raise TypeError(f"unknown bundle type {type(bundle).__name__}")


# ---------------------------------------------------------------------------
# the induced dual model
# ---------------------------------------------------------------------------

def model_value(bundle, prob: ConicProblem, y: np.ndarray) -> float:
    """g_k(y) = -min over the bundle of L(x, y)."""
    y = np.asarray(y, dtype=float).ravel()
    if isinstance(bundle, Spectral):
        mvec = prob.c - prob.A.apply_adjoint(y)
        inner_xbar = float(mvec @ bundle.xbar)
        reduced = bundle.V.T @ smat(mvec) @ bundle.V
        lam_min = float(np.linalg.eigvalsh(0.5 * (reduced + reduced.T))[0])
        return float(-(prob.b @ y)
                     - bundle.gamma * min(inner_xbar, lam_min, 0.0))
    vals = [-lagrangian_value(prob, a, y) for a in bundle.atoms()]
    if bundle.include_origin:
        vals.append(-float(prob.b @ y))
    return max(vals)


def model_value_at_candidate(w: np.ndarray, y_k: np.ndarray, z: np.ndarray,
                             rho: float, prob: ConicProblem) -> float:
    """g_k(z) for z = y_k + rho*(b - Aw), w the exact bundle argmin.

    Strong duality of the proximal step gives the closed form
    -L_rho(w, y_k) - ||z - y_k||^2 / (2 rho) without touching the bundle.
    """
    expected = y_k + rho * (prob.b - prob.A.apply(w))
    drift = float(np.linalg.norm(z - expected))
    if drift > 1e-8 * (1.0 + float(np.linalg.norm(z))):
        raise ValueError(f"z is not the dual candidate of w (drift {drift:.3e})")
    step = z - y_k
    return (-aug_lagrangian_value(prob, rho, w, y_k)
            - float(step @ step) / (2.0 * rho))


# ---------------------------------------------------------------------------
# bundle updates
# ---------------------------------------------------------------------------

def update_bundle(policy: str, step_type: str, v_next: np.ndarray,
                  w_next: np.ndarray, cone=None):
    """Next-iteration bundle for the polyhedral policies.

    The new extreme point always enters; the latest subproblem solution
    enters whenever the policy keeps it (and always after a null step,
    where the aggregation requirement demands it).
    """
    if cone is not None:
        for atom in (v_next, w_next):
            if not cone.contains(atom, 1e-9):
                raise ValueError("bundle atom escapes the feasible set")
    if policy == "segment":
        return Segment(v=v_next, w=w_next)
    if policy == "hull3":
        return Hull(atoms_list=(v_next, w_next), include_origin=True)
    if policy == "singleton":
        if step_type == "descent":
            return Singleton(v=v_next)
        return Segment(v=v_next, w=w_next)
    raise ValueError(f"unknown bundle policy {policy!r}")


def _orth(columns: np.ndarray, target: int, nbar: int) -> np.ndarray:
    """Modified Gram-Schmidt with re-orthogonalization and padding.

    Columns whose residual drops below 1e-12 are dropped; standard basis
    vectors fill the remaining slots deterministically.
    """
    kept = []

    def _add(vec) -> bool:
        u = vec.astype(float).copy()
        for _ in range(2):
            for b in kept:
                u -= (b @ u) * b
        norm = float(np.linalg.norm(u))
        if norm < 1e-12:
            return False
        kept.append(u / norm)
        return True

    for j in range(columns.shape[1]):
        if len(kept) == target:
            break
        _add(columns[:, j])
    basis = 0
    while len(kept) < target and basis < nbar:
        e = np.zeros(nbar)
        e[basis] = 1.0
        _add(e)
        basis += 1
    if len(kept) < target:
        raise RuntimeError("cannot pad an orthonormal basis to the target rank")
    return np.column_stack(kept)


def spectral_update(spec: Spectral, eta_star: float, S_star: np.ndarray,
                    z_next: np.ndarray, prob: ConicProblem) -> Spectral:
    """Next spectral set from the subproblem solution and candidate dual.

    The small-eigenvalue part of S* folds into the aggregate; the top
    part survives through V; fresh eigenvectors of A*z - C keep the set
    pointed at the current slope.
    """
    r, r_p, r_c = spec.r, spec.r_p, spec.r_c
    vals, Q = np.linalg.eigh(0.5 * (S_star + S_star.T))
    order = np.argsort(vals)[::-1]
    vals, Q = vals[order], Q[:, order]
    lam1, Q1 = vals[:r_p], Q[:, :r_p]
    lam2, Q2 = np.maximum(vals[r_p:], 0.0), Q[:, r_p:]

    mass = max(eta_star, 0.0) + float(np.sum(lam2))
    if mass > 0.0:
        keep = (spec.V @ Q2) * lam2
        agg = max(eta_star, 0.0) * smat(spec.xbar) + keep @ (spec.V @ Q2).T
        agg = 0.5 * (agg + agg.T) / mass
        xbar_next = svec(agg / float(np.trace(agg)))
    else:
        xbar_next = spec.xbar

    mvec = prob.A.apply_adjoint(z_next) - prob.c
    _, fresh = top_eigs(smat(mvec), r_c)
    V_next = _orth(np.column_stack((fresh, spec.V @ Q1)), r, spec.V.shape[0])
    return Spectral(xbar=xbar_next, V=V_next, gamma=spec.gamma, r_p=r_p,
                    r_c=r_c)


def initial_spectral(prob: ConicProblem, y: np.ndarray, gamma: float,
                     r_p: int, r_c: int) -> Spectral:
    """Starting set: flat aggregate, V from the slope at the initial dual."""
    nbar = prob.cone.n
    if r_p + r_c > nbar:
        raise ValueError("r_p + r_c must not exceed the matrix order")
    mvec = prob.A.apply_adjoint(np.asarray(y, dtype=float)) - prob.c
    _, V = top_eigs(smat(mvec), r_p + r_c)
    xbar = svec(np.eye(nbar) / nbar)
    return Spectral(xbar=xbar, V=V, gamma=gamma, r_p=r_p, r_c=r_c)


# ---- reconstruction checks used by the audit hooks ----

def spectral_descent_reconstruction(spec_next: Spectral,
                                    v_plus: np.ndarray) -> float:
    """Error of representing gamma*v v' inside the updated set."""
    target = spec_next.gamma * np.outer(v_plus, v_plus)
    e = spec_next.V.T @ v_plus
    rebuilt = spec_next.gamma * (spec_next.V @ np.outer(e, e) @ spec_next.V.T)
    return float(np.linalg.norm(target - rebuilt))


def spectral_null_reconstruction(spec_prev: Spectral, spec_next: Spectral,
                                 eta_star: float, S_star: np.ndarray) -> float:
    """Error of representing the last subproblem solution in the new set."""
    r_p = spec_prev.r_p
    vals, Q = np.linalg.eigh(0.5 * (S_star + S_star.T))
    order = np.argsort(vals)[::-1]
    vals, Q = vals[order], Q[:, order]
    lam1, Q1 = vals[:r_p], Q[:, :r_p]
    lam2 = np.maximum(vals[r_p:], 0.0)

    W = (max(eta_star, 0.0) * smat(spec_prev.xbar)
         + spec_prev.V @ (0.5 * (S_star + S_star.T)) @ spec_prev.V.T)
    eta_new = max(eta_star, 0.0) + float(np.sum(lam2))
    ell = spec_next.V.T @ (spec_prev.V @ Q1)
    S_new = ell @ np.diag(lam1) @ ell.T if r_p else np.zeros(
        (spec_next.r, spec_next.r))
    rebuilt = eta_new * smat(spec_next.xbar) + spec_next.V @ S_new @ spec_next.V.T
    return float(np.linalg.norm(W - rebuilt))
