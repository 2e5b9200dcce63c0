"""Main loop: augmented Lagrangian steps over a shrinking inner set.

Each iteration solves the augmented Lagrangian exactly over the current
bundle, proposes the multiplier update z = y + rho*(b - Aw), and accepts
it only when the true dual decrease covers a beta fraction of the
decrease predicted by the bundle model.  Rejected candidates still feed
the next bundle, so the model keeps improving between accepted steps.
"""

from __future__ import annotations

import csv
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from . import bundles, cones
from .model import ConicProblem, primal_residuals
from .specqp import SubsolverError

__all__ = [
    "SolverConfig",
    "SolverState",
    "IterationRecord",
    "SolveResult",
    "InvariantViolation",
    "dual_candidate",
    "descent_test",
    "bundle_alm_step",
    "bundle_alm_solve",
    "average_iterate",
]

DESCENT_SLACK = 1e-12
TRACE_MEMORY_CAP = 1_000_000

POLICIES = ("segment", "hull3", "spectral", "singleton")


class InvariantViolation(RuntimeError):
    """The run produced data contradicting a structural guarantee."""


@dataclass(frozen=True)
class SolverConfig:
    rho: float
    beta: float = 0.25
    max_iters: int = 1000
    tol_affine: float = 1e-8
    tol_gap: float = 1e-8
    bundle_policy: str = "segment"
    r_p: int = 3
    r_c: int = 2
    seed: int = 0
    log_every: int = 0

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if not 0 < self.beta < 1:
            raise ValueError("beta must lie in (0, 1)")
        if self.bundle_policy not in POLICIES:
            raise ValueError(f"unknown bundle policy {self.bundle_policy!r}")
        if self.bundle_policy == "spectral" and self.r_c < 1:
            raise ValueError("spectral bundles need r_c >= 1")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")


@dataclass
class IterationRecord:
    k: int
    step_type: str               # "descent" | "null"
    g_y: float                   # g(y_k) before the step
    g_z: float                   # g(z_{k+1})
    gk_z: float                  # model value g_k(z_{k+1})
    affine: float                # ||A x_{k+1} - b|| for the incumbent
    candidate_affine: float      # ||A w_{k+1} - b|| for the candidate
    cost_gap: Optional[float]    # <c, x_{k+1}> - p*, when certified
    dual_gap: Optional[float]    # g(y_{k+1}) - g*, when certified
    wall_time: float             # seconds spent in this iteration


@dataclass
class SolverState:
    k: int
    x: np.ndarray
    y: np.ndarray
    bundle: object
    g_y: float
    w_prev: np.ndarray           # last primal candidate (w_k)
    descent_indices: List[int] = field(default_factory=list)
    avg_sum: np.ndarray = None
    avg_count: int = 0
    null_run_length: int = 0
    max_null_run: int = 0
    y_init_zero: bool = True


@dataclass
class SolveResult:
    x: np.ndarray
    y: np.ndarray
    x_average: np.ndarray
    trace: List[IterationRecord]
    state: SolverState
    status: str


# ---------------------------------------------------------------------------
# single-step pieces
# ---------------------------------------------------------------------------

def dual_candidate(y_k: np.ndarray, rho: float, b: np.ndarray,
                   Aw: np.ndarray) -> np.ndarray:
    """z = y_k + rho * (b - A w)."""
    return y_k + rho * (b - Aw)


def descent_test(g_y: float, g_z: float, gk_z: float, beta: float) -> bool:
    """True when the realized dual drop covers beta of the predicted drop."""
    if gk_z > g_z + 1e-9 * (1.0 + abs(g_z)):
        raise InvariantViolation(
            f"model exceeds the dual function at the candidate: "
            f"gk_z = {gk_z!r} > g_z = {g_z!r}")
    return g_y - g_z >= beta * (g_y - gk_z) - DESCENT_SLACK


def _initial_bundle(prob: ConicProblem, config: SolverConfig, x0, y0):
    if config.bundle_policy == "spectral":
        return bundles.initial_spectral(prob, y0, prob.cone.bound,
                                        config.r_p, config.r_c)
    return bundles.Singleton(v=x0)


def init_state(prob: ConicProblem, config: SolverConfig,
               x0: Optional[np.ndarray] = None,
               y0: Optional[np.ndarray] = None,
               bundle0=None) -> SolverState:
    y = np.zeros(prob.m) if y0 is None else np.asarray(y0, dtype=float).ravel()
    g_y, v0 = cones.dual_pair(prob, y)
    x = v0 if x0 is None else np.asarray(x0, dtype=float).ravel()
    bundle = bundle0 if bundle0 is not None else _initial_bundle(
        prob, config, x, y)
    return SolverState(k=1, x=x, y=y, bundle=bundle, g_y=g_y, w_prev=x,
                       avg_sum=x.copy(), avg_count=1,
                       y_init_zero=bool(np.all(y == 0.0)))


def bundle_alm_step(state: SolverState, prob: ConicProblem,
                    config: SolverConfig,
                    cache: Optional[bundles.SpectralCache] = None,
                    on_iteration: Optional[Callable[[dict], None]] = None):
    """One iteration; returns (state, record).  Mutates state in place."""
    t0 = time.perf_counter()
    rho = config.rho
    y_k = state.y
    bundle_prev = state.bundle

    eta = S_star = None
    if isinstance(bundle_prev, bundles.Spectral):
        eta, S_star, w = bundles.spectral_argmin(bundle_prev, prob, rho, y_k,
                                                 cache)
    else:
        w = bundles.subproblem_argmin(bundle_prev, prob, rho, y_k)

    Aw = prob.A.apply(w)
    z = dual_candidate(y_k, rho, prob.b, Aw)
    gk_z = bundles.model_value_at_candidate(w, y_k, z, rho, prob)
    g_z, v_next = cones.dual_pair(prob, z)

    descent = descent_test(state.g_y, g_z, gk_z, config.beta)
    g_y_before = state.g_y
    if descent:
        step_type = "descent"
        state.x = w
        state.y = z
        state.g_y = g_z
        state.descent_indices.append(state.k)
        state.avg_sum = state.avg_sum + w
        state.avg_count += 1
        state.null_run_length = 0
    else:
        step_type = "null"
        state.x = state.w_prev
        state.null_run_length += 1
        state.max_null_run = max(state.max_null_run, state.null_run_length)

    if isinstance(bundle_prev, bundles.Spectral):
        state.bundle = bundles.spectral_update(bundle_prev, eta, S_star, z,
                                               prob)
    else:
        state.bundle = bundles.update_bundle(config.bundle_policy, step_type,
                                             v_next, w, prob.cone)
    state.w_prev = w

    affine, cost_gap = primal_residuals(prob, state.x)
    cert = prob.certificate
    dual_gap = None
    if cert is not None and cert.g_star is not None:
        dual_gap = state.g_y - cert.g_star
    record = IterationRecord(
        k=state.k, step_type=step_type, g_y=g_y_before, g_z=g_z, gk_z=gk_z,
        affine=affine,
        candidate_affine=float(np.linalg.norm(Aw - prob.b)),
        cost_gap=cost_gap, dual_gap=dual_gap,
        wall_time=time.perf_counter() - t0)

    if on_iteration is not None:
        on_iteration({
            "k": state.k, "step_type": step_type, "w": w, "z": z,
            "v_next": v_next, "g_y": g_y_before, "g_z": g_z, "gk_z": gk_z,
            "bundle_prev": bundle_prev, "bundle_next": state.bundle,
            "eta": eta, "S": S_star, "y_prev": y_k, "x_next": state.x,
            "record": record,
        })
    state.k += 1
    return state, record


# ---------------------------------------------------------------------------
# full solve
# ---------------------------------------------------------------------------

def average_iterate(state: SolverState) -> np.ndarray:
    """Mean of the initial point and all accepted candidates."""
    if not state.y_init_zero:
        warnings.warn("average-iterate guarantees assume a zero initial dual",
                      stacklevel=2)
    return state.avg_sum / state.avg_count


def bundle_alm_solve(prob: ConicProblem, config: SolverConfig,
                     x0: Optional[np.ndarray] = None,
                     y0: Optional[np.ndarray] = None,
                     bundle0=None,
                     trace_path: Optional[str] = None,
                     on_iteration: Optional[Callable[[dict], None]] = None
                     ) -> SolveResult:
    """Run the solver until the stopping rule or the iteration budget.

    The run stops once the incumbent affine residual and the predicted
    model gap g(y_k) - g_k(z_{k+1}) both clear their relative tolerances.
    A failing subproblem ends the run with the partial trace intact.
    """
    from .probio import trace_writer  # local import: probio depends on us

    state = init_state(prob, config, x0, y0, bundle0)
    cache = (bundles.SpectralCache(prob)
             if config.bundle_policy == "spectral" else None)
    b_scale = 1.0 + float(np.linalg.norm(prob.b))
    trace: List[IterationRecord] = []
    status = "max_iters"

    writer_cm = trace_writer(trace_path) if trace_path else None
    writer = writer_cm.__enter__() if writer_cm else None
    try:
        for _ in range(config.max_iters):
            g_y_before = state.g_y
            try:
                state, record = bundle_alm_step(state, prob, config, cache,
                                                on_iteration)
            except SubsolverError:
                status = "subsolver_failure"
                break
            if len(trace) < TRACE_MEMORY_CAP:
                trace.append(record)
            if writer is not None:
                writer(record)
            if config.log_every and record.k % config.log_every == 0:
                print(f"  iter {record.k:6d} [{record.step_type[0].upper()}] "
                      f"g(y) = {state.g_y:+.9e}  affine = {record.affine:.3e}")
            gap = g_y_before - record.gk_z
            if (record.affine <= config.tol_affine * b_scale
                    and gap <= config.tol_gap * (1.0 + abs(g_y_before))):
                status = "converged"
                break
    finally:
        if writer_cm:
            writer_cm.__exit__(None, None, None)

    return SolveResult(x=state.x, y=state.y,
                       x_average=average_iterate(state), trace=trace,
                       state=state, status=status)
