"""Exact solver for the low-dimensional spectral subproblem.

The spectral bundle subproblem reduces to a convex QP in u = (eta, svec S):

    minimize    0.5 u'Pu + q'u
    subject to  eta >= 0,  S >= 0 (PSD, r x r),  eta + tr S <= gamma,

with P PSD of order d = 1 + r(r+1)/2 and r small (a handful).  The data
is first rescaled to a unit trace bound and O(1) objective, then a
log-barrier path locates the active face, and the face is solved exactly
as an equality-constrained linear system with the full KKT conditions
verified on the original data.  Accuracy of the returned point is set by
the linear algebra on the face, not by the barrier tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .model import svec_dim, svec_indices

__all__ = ["SpecQpResult", "SubsolverError", "solve_spec_qp"]


class SubsolverError(RuntimeError):
    """Raised when a subproblem solver cannot certify a solution."""


@dataclass
class SpecQpResult:
    eta: float
    S: np.ndarray
    kkt_residual: float  # worst scaled KKT violation
    newton_steps: int


# ---- svec helpers on r x r symmetric matrices ----

def _svec(M: np.ndarray) -> np.ndarray:
    rows, cols, scale = svec_indices(M.shape[0])
    return scale * M[rows, cols]


def _smat(v: np.ndarray, r: int) -> np.ndarray:
    rows, cols, scale = svec_indices(r)
    M = np.zeros((r, r))
    M[rows, cols] = v / scale
    M[cols, rows] = M[rows, cols]
    return M


def _svec_eye(r: int) -> np.ndarray:
    return _svec(np.eye(r))


@lru_cache(maxsize=32)
def _basis_mats(r: int):
    """Unit svec basis elements as matrices (cached; treat as read-only)."""
    if r == 0:
        return ()
    rows, cols, scale = svec_indices(r)
    out = []
    for k in range(svec_dim(r)):
        E = np.zeros((r, r))
        E[rows[k], cols[k]] = 1.0 / scale[k]
        E[cols[k], rows[k]] = E[rows[k], cols[k]]
        out.append(E)
    return tuple(out)


@lru_cache(maxsize=32)
def _basis_stack(r: int) -> np.ndarray:
    """All svec basis elements stacked into one (d, r, r) tensor."""
    return np.stack(_basis_mats(r)) if r > 0 else np.zeros((0, 0, 0))


def _logdet_hess(Sinv: np.ndarray, r: int) -> np.ndarray:
    """Hessian of -logdet at S: the map dS -> Sinv dS Sinv in svec coords."""
    rows, cols, scale = svec_indices(r)
    M = np.matmul(np.matmul(Sinv, _basis_stack(r)), Sinv)
    H = (M[:, rows, cols] * scale).T  # column k holds svec(Sinv E_k Sinv)
    return 0.5 * (H + H.T)


# ---------------------------------------------------------------------------
# barrier phase (on normalized data)
# ---------------------------------------------------------------------------

def _center(P, q, r, u, t, trace_row, cap_left):
    """Damped Newton to the central point of t*obj + barrier, gamma = 1.

    Returns (u, steps used, converged flag).  Iterates stay strictly
    inside the cone; the damped step 1/(1+lambda) suits the
    self-concordant barrier, with a feasibility backtrack as a float
    guard.
    """
    steps = 0
    while steps < cap_left:
        eta = u[0]
        S = _smat(u[1:], r)
        slack = 1.0 - float(trace_row @ u)
        Sinv = np.linalg.inv(S)
        Sinv = 0.5 * (Sinv + Sinv.T)

        grad = t * (P @ u + q)
        grad[0] -= 1.0 / eta
        grad += trace_row / slack
        grad[1:] -= _svec(Sinv)

        H = t * P + np.outer(trace_row, trace_row) / slack**2
        H[0, 0] += 1.0 / eta**2
        H[1:, 1:] += _logdet_hess(Sinv, r)

        try:
            step = np.linalg.solve(H, -grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, -grad, rcond=None)[0]
        steps += 1
        dec = float(-grad @ step)  # squared Newton decrement
        if not dec > 1e-12:
            return u, steps, True
        alpha = 1.0 / (1.0 + np.sqrt(dec))
        while alpha > 1e-18:
            cand = u + alpha * step
            if cand[0] > 0.0 and 1.0 - trace_row @ cand > 0.0:
                try:
                    np.linalg.cholesky(_smat(cand[1:], r))
                    break
                except np.linalg.LinAlgError:
                    pass
            alpha *= 0.5
        else:
            return u, steps, True
        u = u + alpha * step
        if dec <= 1e-7:
            return u, steps, True
    return u, steps, False


# ---------------------------------------------------------------------------
# face polish (on original data)
# ---------------------------------------------------------------------------

def _face_solve(P, q, gamma, r, eta_zero: bool, trace_tight: bool,
                U: np.ndarray):
    """Exact minimizer on the face {eta = 0?, S = U T U', trace tight?}.

    Returns (u, sigma) with sigma the trace multiplier, or None when the
    face is inconsistent or its linear system has no reliable solution.
    """
    rp = U.shape[1]
    dT = svec_dim(rp)
    nvar = (0 if eta_zero else 1) + dT
    d = 1 + svec_dim(r)

    if nvar == 0:
        if trace_tight and gamma > 0.0:
            return None
        return np.zeros(d), 0.0

    # J maps face variables (eta?, svec T) into full u-coordinates
    J = np.zeros((d, nvar))
    col = 0
    if not eta_zero:
        J[0, 0] = 1.0
        col = 1
    for k, E in enumerate(_basis_mats(rp)):
        J[1:, col + k] = _svec(U @ E @ U.T)

    Pf = J.T @ P @ J
    qf = J.T @ q

    if trace_tight:
        tr_f = np.zeros(nvar)
        if not eta_zero:
            tr_f[0] = 1.0
        tr_f[col:] = _svec_eye(rp)
        K = np.zeros((nvar + 1, nvar + 1))
        K[:nvar, :nvar] = Pf
        K[:nvar, nvar] = tr_f
        K[nvar, :nvar] = tr_f
        rhs = np.concatenate((-qf, [gamma]))
        sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
        if np.linalg.norm(K @ sol - rhs) > 1e-8 * (1.0 + np.linalg.norm(rhs)):
            return None
        z, sigma = sol[:nvar], float(sol[nvar])
    else:
        z = np.linalg.lstsq(Pf, -qf, rcond=None)[0]
        if np.linalg.norm(Pf @ z + qf) > 1e-8 * (1.0 + np.linalg.norm(qf)):
            return None
        sigma = 0.0
    return J @ z, sigma


def _kkt_residual(P, q, gamma, r, u, sigma, scale):
    """Worst KKT violation at (u, sigma), scaled for comparison with tol.

    Feasibility violations are measured relative to the variable scale
    (gamma) and dual/complementarity terms relative to the gradient scale.
    """
    eta = float(u[0])
    S = _smat(u[1:], r)
    grad = P @ u + q
    slack = gamma - eta - float(np.trace(S))

    tau = grad[0] + sigma                       # multiplier for eta >= 0
    Z = _smat(grad[1:], r) + sigma * np.eye(r)  # dual slack for S >= 0
    lam_S = float(np.linalg.eigvalsh(S)[0])
    lam_Z = float(np.linalg.eigvalsh(Z)[0])

    gscale = max(1.0, gamma)
    viol = [
        -eta / gscale, -slack / gscale, -lam_S / gscale,
        (-sigma) / scale, (-tau) / scale, (-lam_Z) / scale,
        abs(tau * eta) / (scale * gscale),
        abs(sigma * slack) / (scale * gscale),
        abs(float(np.sum(Z * S))) / (scale * gscale),
    ]
    return max(0.0, max(viol))


def solve_spec_qp(P: np.ndarray, q: np.ndarray, gamma: float, r: int,
                  tol: float = 1e-10, cap: int = 200) -> SpecQpResult:
    """Solve the (eta, S) subproblem to scaled KKT residual <= tol."""
    P = np.asarray(P, dtype=float)
    q = np.asarray(q, dtype=float)
    d = 1 + svec_dim(r)
    if P.shape != (d, d) or q.shape != (d,):
        raise ValueError("P/q dimensions do not match r")
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    if gamma == 0.0:
        return SpecQpResult(0.0, np.zeros((r, r)), 0.0, 0)

    # rescale to gamma = 1 and O(1) objective: u = gamma * u_hat
    Pn = P * gamma * gamma
    qn = q * gamma
    omega = max(1.0, float(np.linalg.norm(Pn)), float(np.linalg.norm(qn)))
    Pn = Pn / omega
    qn = qn / omega

    # gradient magnitude over the feasible set, the natural dual scale
    scale = 1.0 + float(np.linalg.norm(q)) + float(np.linalg.norm(P)) * gamma
    trace_row = np.concatenate(([1.0], _svec_eye(r)))
    nu = r + 2.0  # barrier parameter of -log eta - log slack - logdet S

    u = np.zeros(d)
    u[0] = 1.0 / (2.0 * (r + 1.0))
    u[1:] = u[0] * _svec_eye(r)
    t = 1.0
    total = 0
    best: Optional[SpecQpResult] = None

    def consider(u_full, sigma, steps):
        """Score a candidate on the original data; return it if certified."""
        nonlocal best
        res = _kkt_residual(P, q, gamma, r, u_full, sigma, scale)
        Sc = _smat(u_full[1:], r)
        cand = SpecQpResult(float(u_full[0]), 0.5 * (Sc + Sc.T), res, steps)
        if best is None or res < best.kkt_residual:
            best = cand
        return cand if res <= tol else None

    while True:
        # per-stage ceiling so one hard centering cannot burn the budget
        u, used, ok = _center(Pn, qn, r, u, t, trace_row,
                              min(cap - total, 40))
        total += used
        eta_hat = float(u[0])
        S_hat = _smat(u[1:], r)
        slack_hat = 1.0 - eta_hat - float(np.trace(S_hat))
        if nu / t <= 1e-3:
            # face polish: thresholded active sets from the interior point,
            # each solved exactly on the original data
            lam, Q = np.linalg.eigh(S_hat)
            for thresh in (1e-6, 1e-4, 1e-8, 1e-2):
                out = _face_solve(P, q, gamma, r, eta_hat < thresh,
                                  slack_hat < thresh, Q[:, lam > thresh])
                if out is None:
                    continue
                hit = consider(out[0], out[1], total)
                if hit is not None:
                    return hit
            # the central point with its implicit barrier multiplier; its
            # KKT error decays like 1/t, certifying even when the active
            # face is degenerate and polishing stalls
            if ok:
                sigma_int = (omega / gamma) / (t * slack_hat)
                hit = consider(gamma * u, sigma_int, total)
                if hit is not None:
                    return hit
        if not ok or t > 1e14:
            break
        t *= 10.0

    if best is not None and best.kkt_residual <= 100.0 * tol:
        return best
    raise SubsolverError(
        "spectral subproblem not certified (best residual "
        f"{best.kkt_residual if best else float('inf'):.3e})")
