"""Shared fixtures: the fixed 2D LP and seeded random instances."""

import numpy as np
import pytest

from bundlealm.cones import NonnegL1
from bundlealm.generators import gen_2d_lp
from bundlealm.model import ConicProblem, LinearMap


def build_nonneg_instance(seed: int, n: int = 10, m: int = 5,
                          bound: float = 1.0) -> ConicProblem:
    """Random feasible instance over {x >= 0, ||x||_1 <= bound}.

    b is the image of a strictly feasible point, so the primal optimum
    exists and the dual is solvable.  No certificate is attached.
    """
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    A = rng.standard_normal((m, n))
    c = rng.standard_normal(n)
    x0 = rng.uniform(0.0, 1.0, size=n)
    x0 *= 0.6 * bound / np.sum(x0)
    return ConicProblem(c=c, b=A @ x0, A=LinearMap.from_dense(A),
                        cone=NonnegL1(n=n, bound=bound))


@pytest.fixture
def lp():
    return gen_2d_lp()


@pytest.fixture
def make_nonneg_instance():
    return build_nonneg_instance
