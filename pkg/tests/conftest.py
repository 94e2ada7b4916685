import numpy as np
import pytest

import nlgreen as ng

UNIT_BALL = ng.Ball(radius=1.0, center=(0.0, 0.0, 0.0))


@pytest.fixture(scope="session")
def solve_cfg():
    return ng.SolveConfig(tol=1e-10, max_iter=20000, preconditioner="diagonal")


@pytest.fixture(scope="session")
def ball_problem():
    """Reference setup shared across the suite: unit ball, h=0.1, rho=2h."""
    return ng.ProblemSetup(kernel=ng.KernelSpec("alpha_stable", 1.5, 3),
                           shape=UNIT_BALL, h=0.1, y0=(0.0, 0.0, 0.0), rho=0.2)


@pytest.fixture(scope="session")
def solved_field(ball_problem, solve_cfg):
    """Memoized solved fields keyed by (family, alpha) on the reference grid."""
    import dataclasses

    cache = {}

    def get(family="alpha_stable", alpha=1.5, **kw):
        key = (family, alpha, tuple(sorted(kw.items())))
        if key not in cache:
            kernel = ng.KernelSpec(family, alpha, 3, **kw)
            problem = dataclasses.replace(ball_problem, kernel=kernel)
            cache[key] = ng.solve_problem(problem, alpha, solve_cfg)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def stable_operator():
    """Operator on the h=0.1 unit-ball grid for the alpha=1.5 stable kernel."""
    kern = ng.make_kernel(ng.KernelSpec("alpha_stable", 1.5, 3))
    grid = ng.build_grid(UNIT_BALL, 0.1)
    weights = ng.quadrature_weights(kern, 0.1, 2.2)
    return ng.assemble_operator(grid, weights, kern)


@pytest.fixture(scope="session")
def coarse_grid():
    """7-nodes-per-axis ball grid used for dense checks."""
    return ng.build_grid(UNIT_BALL, 0.25)


def brute_force_ball_nodes(radius, h, dim):
    """Independent interior-node enumeration used as a counting oracle."""
    n = int(np.ceil(radius / h)) + 1
    count = 0
    rng = [range(-n, n + 1)] * dim
    import itertools

    for c in itertools.product(*rng):
        if sum(v * v for v in c) * h * h < radius * radius:
            count += 1
    return count
