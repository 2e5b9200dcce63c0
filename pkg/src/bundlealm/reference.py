"""Reference algorithms used to validate the main solver.

These are deliberately plain implementations of three classical methods
on the same problem data: a proximal bundle method on the dual function,
an inexact augmented Lagrangian loop whose subproblems are solved by
Frank-Wolfe with a certified gap, and a dual subgradient baseline.  The
main solver must reproduce them exactly in the regimes where the theory
says the methods coincide, which is what the equivalence tests check.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from . import cones
from .bundles import simplex_qp
from .model import ConicProblem, aug_lagrangian_value
from .solver import SolverConfig, descent_test

__all__ = [
    "CuttingPlane",
    "DualRecord",
    "prox_plane_model",
    "pbm_solve",
    "frank_wolfe_inner",
    "FrankWolfeCapError",
    "ialm_solve",
    "IalmRecord",
    "dual_subgradient_solve",
]


@dataclass(frozen=True)
class CuttingPlane:
    """Affine minorant of the dual function: value + <slope, y - anchor>."""
    value: float
    slope: np.ndarray
    anchor: np.ndarray

    def at(self, y: np.ndarray) -> float:
        return self.value + float(self.slope @ (y - self.anchor))


@dataclass
class DualRecord:
    k: int
    step_type: str
    g_y: float
    g_z: float
    gk_z: float
    wall_time: float


def plane_from_atom(prob: ConicProblem, atom: np.ndarray,
                    anchor: np.ndarray) -> CuttingPlane:
    """The plane y -> -L(atom, y), written around the given anchor."""
    slope = prob.A.apply(atom) - prob.b
    value = -(float(prob.c @ atom) - float(slope @ anchor))
    return CuttingPlane(value=value, slope=slope, anchor=anchor)


# ---------------------------------------------------------------------------
# proximal bundle method on the dual
# ---------------------------------------------------------------------------

def prox_plane_model(planes: Sequence[CuttingPlane], y_center: np.ndarray,
                     rho: float):
    """Exact minimizer of max-of-planes + ||y - y_center||^2 / (2 rho).

    Solved through the dual weight QP over the simplex: the minimizer is
    y_center - rho * (weighted slope).  Returns (z, model value at z).
    """
    if not planes:
        raise ValueError("need at least one plane")
    if rho <= 0:
        raise ValueError("rho must be positive")
    slopes = np.stack([p.slope for p in planes])
    vals_at_center = np.array([p.at(y_center) for p in planes])
    P = rho * (slopes @ slopes.T)
    lam = simplex_qp(P, -vals_at_center)
    z = y_center - rho * (slopes.T @ lam)
    return z, max(p.at(z) for p in planes)


def pbm_solve(prob: ConicProblem, config: SolverConfig,
              y0: Optional[np.ndarray] = None,
              initial_atoms: Optional[Sequence[np.ndarray]] = None,
              on_iteration: Optional[Callable[[dict], None]] = None):
    """Proximal bundle method with a two-plane model of the dual.

    The model after every step is {newest exact plane at z, aggregate
    plane from the proximal step}, whichever way the step went; this is
    the smallest model satisfying the bundle requirements and makes the
    method track the segment-bundle solver plane for plane.
    """
    y = np.zeros(prob.m) if y0 is None else np.asarray(y0, dtype=float).ravel()
    g_y, v = cones.dual_pair(prob, y)
    if initial_atoms is None:
        planes = [plane_from_atom(prob, v, y)]
    else:
        planes = [plane_from_atom(prob, a, y) for a in initial_atoms]

    trace: List[DualRecord] = []
    for k in range(1, config.max_iters + 1):
        t0 = time.perf_counter()
        z, m_z = prox_plane_model(planes, y, config.rho)
        g_z, v_z = cones.dual_pair(prob, z)
        ok = descent_test(g_y, g_z, m_z, config.beta)

        newest = plane_from_atom(prob, v_z, z)
        aggregate = CuttingPlane(value=m_z, slope=(y - z) / config.rho,
                                 anchor=z)
        planes = [newest, aggregate]

        step_type = "descent" if ok else "null"
        if on_iteration is not None:
            on_iteration({"k": k, "step_type": step_type, "z": z, "g_y": g_y,
                          "g_z": g_z, "gk_z": m_z, "planes": planes})
        gap = g_y - m_z
        if ok:
            y, g_y = z, g_z
        trace.append(DualRecord(k=k, step_type=step_type, g_y=g_y, g_z=g_z,
                                gk_z=m_z, wall_time=time.perf_counter() - t0))
        if gap <= config.tol_gap * (1.0 + abs(g_y)):
            break
    return y, trace


# ---------------------------------------------------------------------------
# Frank-Wolfe inner solver and the inexact ALM loop
# ---------------------------------------------------------------------------

class FrankWolfeCapError(RuntimeError):
    """Iteration cap hit before the requested certified gap."""


def frank_wolfe_inner(prob: ConicProblem, rho: float, y: np.ndarray,
                      eps: float, max_iters: int = 10**6,
                      x0: Optional[np.ndarray] = None):
    """Minimize L_rho(., y) over the feasible set to a certified gap.

    Classic conditional gradient: the linear minimization oracle is the
    support-point computation with the negated gradient, the step size
    comes from the exact one-dimensional quadratic.  Returns (x, gap)
    with gap = max_u <grad, x - u> <= eps, a true suboptimality bound.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    x = cones.extreme_point(prob, y) if x0 is None else np.asarray(
        x0, dtype=float).copy()
    for _ in range(max_iters):
        grad = prob.c - prob.A.apply_adjoint(
            y + rho * (prob.b - prob.A.apply(x)))
        support, u = prob.cone.support_point(-grad)
        gap = float(grad @ x) + support
        if gap <= eps:
            return x, gap
        d = u - x
        Ad = prob.A.apply(d)
        curv = rho * float(Ad @ Ad)
        t = 1.0 if curv <= 0.0 else min(1.0, gap / curv)
        x = x + t * d
    raise FrankWolfeCapError(
        f"certified gap still above {eps:g} after {max_iters} iterations")


@dataclass
class IalmRecord:
    k: int
    eps: float
    inner_gap: float
    affine: float
    dual_step_over_rho: float  # ||y_k - y_{k+1}|| / rho


def ialm_solve(prob: ConicProblem, config: SolverConfig,
               eps_schedule: Optional[Callable[[int], float]] = None,
               y0: Optional[np.ndarray] = None):
    """Inexact augmented Lagrangian: Frank-Wolfe inner, exact dual ascent.

    The default tolerance schedule 0.1/k^2 is summable, which is all the
    asymptotic theory asks of it.  Each record carries both sides of the
    multiplier identity ||A x_{k+1} - b|| = ||y_k - y_{k+1}|| / rho.
    """
    if eps_schedule is None:
        eps_schedule = lambda k: 0.1 / k**2
    y = np.zeros(prob.m) if y0 is None else np.asarray(y0, dtype=float).ravel()
    x = cones.extreme_point(prob, y)
    trace: List[IalmRecord] = []
    for k in range(1, config.max_iters + 1):
        eps = eps_schedule(k)
        x, gap = frank_wolfe_inner(prob, config.rho, y, eps, x0=x)
        resid = prob.b - prob.A.apply(x)
        y_next = y + config.rho * resid
        trace.append(IalmRecord(
            k=k, eps=eps, inner_gap=gap,
            affine=float(np.linalg.norm(resid)),
            dual_step_over_rho=float(np.linalg.norm(y - y_next)) / config.rho))
        y = y_next
    return x, y, trace


# ---------------------------------------------------------------------------
# dual subgradient baseline
# ---------------------------------------------------------------------------

def dual_subgradient_solve(prob: ConicProblem,
                           step_schedule: Sequence[float],
                           y0: Optional[np.ndarray] = None):
    """y <- y - t_k * (A v(y) - b), tracking the best dual value seen."""
    y = np.zeros(prob.m) if y0 is None else np.asarray(y0, dtype=float).ravel()
    best = np.inf
    trace: List[DualRecord] = []
    for k, t in enumerate(step_schedule, start=1):
        if t <= 0:
            raise ValueError("step sizes must be positive")
        t0 = time.perf_counter()
        g_y, v = cones.dual_pair(prob, y)
        best = min(best, g_y)
        s = prob.A.apply(v) - prob.b
        y = y - t * s
        trace.append(DualRecord(k=k, step_type="step", g_y=g_y, g_z=best,
                                gk_z=np.nan,
                                wall_time=time.perf_counter() - t0))
    return y, trace
