"""Seeded problem generators with built-in optimality certificates.

Each generator draws from counter-based Philox streams keyed by
(seed, stream index), one stream per named array, so instances are
bit-reproducible regardless of draw order or platform.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cones import NonnegL1, PsdTrace
from .model import Certificate, ConicProblem, LinearMap, svec, svec_dim

__all__ = [
    "GeneratorSpec",
    "gen_2d_lp",
    "gen_rank1_sdp",
    "gen_matrix_completion",
    "generate",
]


def _stream(seed: int, index: int) -> np.random.Generator:
    key = np.array([seed, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _tri_index(i: int, j: int) -> int:
    # position of entry (i, j), i <= j, in the column-major upper triangle
    return j * (j + 1) // 2 + i


@dataclass(frozen=True)
class GeneratorSpec:
    """Parameters naming one generated instance."""
    kind: str  # lp2d | rank1_sdp | matrix_completion
    seed: int = 0
    n: int = 20
    m: int = 20
    half_dim: int = 25
    obs_prob: float = 0.2
    bound: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("lp2d", "rank1_sdp", "matrix_completion"):
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if min(self.n, self.m, self.half_dim) <= 0:
            raise ValueError("size parameters must be positive")
        if not 0.0 < self.obs_prob <= 1.0:
            raise ValueError("obs_prob must lie in (0, 1]")


# ---------------------------------------------------------------------------
# fixed two-dimensional LP
# ---------------------------------------------------------------------------

def gen_2d_lp() -> ConicProblem:
    """min x1 + x2 s.t. 2 x1 + x2 = 1 over the l1-ball-with-nonnegativity.

    Small enough to check every solver quantity by hand; the optimum is
    x* = (0.5, 0) with value 0.5 and multiplier y* = 0.5.
    """
    cert = Certificate(p_star=0.5, x_star=np.array([0.5, 0.0]),
                       y_star=np.array([0.5]), g_star=-0.5)
    return ConicProblem(
        c=np.array([1.0, 1.0]),
        b=np.array([1.0]),
        A=LinearMap(1, 2, [(0, 0, 2.0), (0, 1, 1.0)]),
        cone=NonnegL1(n=2, bound=1.0),
        certificate=cert,
    )


# ---------------------------------------------------------------------------
# random SDP with a planted rank-one optimum
# ---------------------------------------------------------------------------

def gen_rank1_sdp(n: int, m: int, seed: int) -> ConicProblem:
    """SDP whose optimum is the top eigenpair of a random S > 0.

    Draws m symmetric zero-diagonal constraint matrices, plants
    X* = lambda_1 v1 v1^T, sets b = A(X*), picks y* uniform and builds
    C = Z* + A*(y*) with Z* the complementary part of S.  Strong duality
    then holds by construction with <C, X*> = <b, y*>.
    """
    if n <= 0 or m <= 0:
        raise ValueError("n and m must be positive")
    rng_a = _stream(seed, 0)
    rng_s = _stream(seed, 1)
    rng_y = _stream(seed, 2)

    d = svec_dim(n)
    rows_A = np.empty((m, d))
    mats_A = np.empty((m, n, n))
    for i in range(m):
        M = rng_a.standard_normal((n, n))
        M = 0.5 * (M + M.T)
        np.fill_diagonal(M, 0.0)
        mats_A[i] = M
        rows_A[i] = svec(M)

    # S gets an explicit spectrum: a dominant unit eigenvalue and the rest
    # well inside (0, 1), so the planted optimum has a clear spectral gap
    # and the instance scale does not grow with n
    Q = np.linalg.qr(rng_s.standard_normal((n, n)))[0]
    lams = np.concatenate(([1.0], rng_s.uniform(0.1, 0.5, size=n - 1)))
    S = (Q * lams) @ Q.T
    evals, evecs = np.linalg.eigh(S)
    lam1 = float(evals[-1])
    v1 = evecs[:, -1]
    X_star = lam1 * np.outer(v1, v1)
    Z_star = S - X_star

    x_star = svec(X_star)
    y_star = rng_y.uniform(0.0, 1.0, size=m)
    C = Z_star + np.einsum("i,ijk->jk", y_star, mats_A)
    c = svec(C)

    A = LinearMap.from_dense(rows_A)
    b = A.apply(x_star)
    p_star = float(c @ x_star)
    cert = Certificate(p_star=p_star, x_star=x_star, y_star=y_star,
                       g_star=-float(b @ y_star))
    meta = {
        "lambda_1": lam1,
        "lambda_2": float(evals[-2]) if n > 1 else 0.0,
        "spectral_gap": lam1 - (float(evals[-2]) if n > 1 else 0.0),
    }
    return ConicProblem(c=c, b=b, A=A,
                        cone=PsdTrace(n=n, bound=2.0 * float(np.trace(X_star))),
                        certificate=cert, metadata=meta)


# ---------------------------------------------------------------------------
# matrix completion as a block SDP
# ---------------------------------------------------------------------------

def gen_matrix_completion(half_dim: int, obs_prob: float, seed: int,
                          a: Optional[float] = None,
                          on_empty: str = "error") -> ConicProblem:
    """Nuclear-norm completion of a random rank-one matrix.

    The 2h-by-2h block variable carries X_sharp = w w^T on its
    off-diagonal block through one equality per observed entry; the cost
    is the trace.  The certificate stores the feasible stacked witness
    and its cost 2 tr(X_sharp) as an upper-bound reference only (there
    is no dual certificate).
    """
    if half_dim <= 0:
        raise ValueError("half_dim must be positive")
    if not 0.0 < obs_prob <= 1.0:
        raise ValueError("obs_prob must lie in (0, 1]")
    if on_empty not in ("error", "resample"):
        raise ValueError("on_empty must be 'error' or 'resample'")
    h = half_dim
    rng_w = _stream(seed, 0)
    rng_mask = _stream(seed, 1)

    # random signs with near-unit magnitudes keep the planted factor
    # incoherent, so moderate observation rates can actually recover it
    signs = rng_w.choice([-1.0, 1.0], size=h)
    w = signs * rng_w.uniform(0.9, 1.1, size=h)
    X_sharp = np.outer(w, w)
    tr_sharp = float(w @ w)

    mask = rng_mask.random((h, h)) < obs_prob
    resamples = 0
    while not mask.any():
        if on_empty == "error":
            raise ValueError("empty observation set; pass on_empty='resample'")
        mask = rng_mask.random((h, h)) < obs_prob
        resamples += 1

    obs_i, obs_j = np.nonzero(mask)
    m = obs_i.size
    nbar = 2 * h
    d = svec_dim(nbar)
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    entries = [(k, _tri_index(int(i), h + int(j)), inv_sqrt2)
               for k, (i, j) in enumerate(zip(obs_i, obs_j))]
    A = LinearMap(m, d, entries)
    b = X_sharp[obs_i, obs_j].astype(float)

    c = svec(np.eye(nbar))
    bound = 4.0 * tr_sharp if a is None else float(a)
    if bound <= 2.0 * tr_sharp:
        raise ValueError("trace bound must exceed twice tr(X_sharp)")

    witness = np.block([[X_sharp, X_sharp], [X_sharp, X_sharp]])
    cert = Certificate(p_star=2.0 * tr_sharp, x_star=svec(witness))
    meta = {
        "w_sharp": w,
        "trace_x_sharp": tr_sharp,
        "num_observed": int(m),
        "observed_indices": np.stack([obs_i, obs_j], axis=1),
        "mask_resamples": resamples,
    }
    return ConicProblem(c=c, b=b, A=A, cone=PsdTrace(n=nbar, bound=bound),
                        certificate=cert, metadata=meta)


def generate(spec: GeneratorSpec) -> ConicProblem:
    """Dispatch a GeneratorSpec to the matching generator."""
    if spec.kind == "lp2d":
        return gen_2d_lp()
    if spec.kind == "rank1_sdp":
        return gen_rank1_sdp(spec.n, spec.m, spec.seed)
    return gen_matrix_completion(spec.half_dim, spec.obs_prob, spec.seed,
                                 a=spec.bound)
