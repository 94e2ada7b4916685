import numpy as np
import pytest

import nlgreen as ng
from nlgreen.oracle import BallGreenParams

from conftest import UNIT_BALL, brute_force_ball_nodes


def test_rhs_single_node_support(stable_operator):
    grid = stable_operator.grid
    rhs = ng.regularized_rhs(grid, (0.0, 0.0, 0.0), 0.1)  # rho = h, y0 on a node
    assert np.count_nonzero(rhs) == 1
    assert rhs.max() == 1.0


def test_rhs_sums_to_one(stable_operator):
    grid = stable_operator.grid
    for y0, rho in (((0, 0, 0), 0.2), ((0.1, 0.2, 0.0), 0.35), ((0.3, 0, 0), 0.41)):
        rhs = ng.regularized_rhs(grid, y0, rho)
        assert rhs.sum() == pytest.approx(1.0, abs=1e-15)


def test_rhs_support_count_matches_enumeration(stable_operator):
    grid = stable_operator.grid
    rhs = ng.regularized_rhs(grid, (0.0, 0.0, 0.0), 0.3)
    assert np.count_nonzero(rhs) == brute_force_ball_nodes(0.3, 0.1, 3)


def test_rhs_errors(stable_operator):
    grid = stable_operator.grid
    with pytest.raises(ng.ConfigurationError):
        ng.regularized_rhs(grid, (0, 0, 0), 0.05)  # rho < h
    with pytest.raises(ng.ConfigurationError):
        ng.regularized_rhs(grid, (0.9, 0, 0), 0.3)  # ball leaves the domain


def test_single_node_solve_matches_scalar_formula():
    grid = ng.build_grid(ng.Box(lo=(0, 0, 0), hi=(1, 1, 1)), 0.5)
    kern = ng.make_kernel(ng.KernelSpec("alpha_stable", 1.5, 3))
    w = ng.quadrature_weights(kern, 0.5, 3.0)
    op = ng.assemble_operator(grid, w, kern)
    rhs = ng.regularized_rhs(grid, (0.5, 0.5, 0.5), 0.5)
    field = ng.solve_green(op, rhs, ng.SolveConfig(), y0=(0.5, 0.5, 0.5), rho=0.5)
    a11 = op.to_dense()[0, 0]
    # Green value carries the cell-mass normalization 1/h^d
    assert field.values[0] == pytest.approx(rhs[0] / a11 / 0.5**3, rel=1e-12)


def test_solver_residual_contract(stable_operator, solve_cfg):
    rhs = ng.regularized_rhs(stable_operator.grid, (0, 0, 0), 0.2)
    field = ng.solve_green(stable_operator, rhs, solve_cfg, y0=(0, 0, 0), rho=0.2)
    res = np.linalg.norm(stable_operator.apply(field.values * 0.1**3) - rhs)
    assert res / np.linalg.norm(rhs) <= solve_cfg.tol
    assert field.residual <= solve_cfg.tol
    assert field.iterations >= 1


def test_field_nonnegative(solved_field):
    for alpha in (1.2, 1.5, 1.8):
        field = solved_field(alpha=alpha)
        assert field.values.min() >= -10 * 1e-10 * field.values.max()


def test_solved_field_matches_oracle_at_point(solved_field):
    # node nearest (0.3, 0, 0) within 15% of the ball formula
    field = solved_field(alpha=1.5)
    idx = int(np.argmin(np.linalg.norm(field.grid.points - np.array([0.3, 0, 0]), axis=1)))
    oracle = ng.stable_ball_green(field.grid.points[idx], np.zeros(3),
                                  BallGreenParams(dim=3, alpha=1.5))
    assert field.values[idx] == pytest.approx(oracle, rel=0.15)


def test_green_pair_symmetry_and_swap(stable_operator, solve_cfg):
    x = np.array([0.3, 0.1, 0.0])
    y = np.array([-0.2, -0.3, 0.2])
    a, b = ng.green_pair(stable_operator, x, y, 0.2, solve_cfg)
    assert abs(a - b) <= 10 * solve_cfg.tol * max(a, b)
    c, d = ng.green_pair(stable_operator, y, x, 0.2, solve_cfg)
    assert c == pytest.approx(b, rel=1e-9)
    assert d == pytest.approx(a, rel=1e-9)


def test_green_pair_rejects_equal_points(stable_operator, solve_cfg):
    with pytest.raises(ng.ConfigurationError):
        ng.green_pair(stable_operator, (0.1, 0, 0), (0.1, 0, 0), 0.2, solve_cfg)


def test_solve_linearity(stable_operator, solve_cfg):
    grid = stable_operator.grid
    r1 = ng.regularized_rhs(grid, (0.2, 0, 0), 0.2)
    r2 = ng.regularized_rhs(grid, (-0.2, 0, 0), 0.2)
    mix = 0.5 * (r1 + r2)
    f1 = ng.solve_green(stable_operator, r1, solve_cfg)
    f2 = ng.solve_green(stable_operator, r2, solve_cfg)
    fm = ng.solve_green(stable_operator, mix, solve_cfg)
    avg = 0.5 * (f1.values + f2.values)
    assert np.linalg.norm(fm.values - avg) <= 1e-10 * np.linalg.norm(avg)


def test_rho_stability_far_from_source(stable_operator, solve_cfg):
    # halving rho = 0.4 -> 0.2 (= 2h) moves values past 4 rho by < 5%
    grid = stable_operator.grid
    f_wide = ng.solve_green(stable_operator, ng.regularized_rhs(grid, (0, 0, 0), 0.4),
                            solve_cfg, y0=(0, 0, 0), rho=0.4)
    f_narrow = ng.solve_green(stable_operator, ng.regularized_rhs(grid, (0, 0, 0), 0.2),
                              solve_cfg, y0=(0, 0, 0), rho=0.2)
    far = f_narrow.radii() > 0.8
    rel = np.abs(f_wide.values[far] - f_narrow.values[far]) / f_narrow.values[far]
    assert rel.max() <= 0.05


def test_domain_monotonicity(stable_operator, solve_cfg):
    kern = ng.make_kernel(ng.KernelSpec("alpha_stable", 1.5, 3))
    grid_big = ng.build_grid(ng.Ball(1.2, (0, 0, 0)), 0.1)
    op_big = ng.assemble_operator(grid_big, ng.quadrature_weights(kern, 0.1, 2.6), kern)
    small = stable_operator.grid
    f_small = ng.solve_green(stable_operator, ng.regularized_rhs(small, (0, 0, 0), 0.2),
                             solve_cfg, y0=(0, 0, 0), rho=0.2)
    f_big = ng.solve_green(op_big, ng.regularized_rhs(grid_big, (0, 0, 0), 0.2),
                           solve_cfg, y0=(0, 0, 0), rho=0.2)
    idx = np.array([grid_big.node_index(c) for c in small.coords])
    assert np.all(f_big.values[idx] >= f_small.values - 1e-10 * f_small.values.max())


def test_non_convergence_raises_with_history(stable_operator):
    rhs = ng.regularized_rhs(stable_operator.grid, (0, 0, 0), 0.2)
    with pytest.raises(ng.NonConvergenceError) as err:
        ng.solve_green(stable_operator, rhs, ng.SolveConfig(tol=1e-10, max_iter=3))
    assert len(err.value.residual_history) == 3


def test_rhs_probability_check(stable_operator, solve_cfg):
    bad = np.zeros(stable_operator.grid.n_nodes)
    bad[0] = 0.5
    with pytest.raises(ng.ConfigurationError):
        ng.solve_green(stable_operator, bad, solve_cfg)


def test_solve_config_validation():
    with pytest.raises(ng.ConfigurationError):
        ng.SolveConfig(tol=1e-3)
    with pytest.raises(ng.ConfigurationError):
        ng.SolveConfig(max_iter=0)
    with pytest.raises(ng.ConfigurationError):
        ng.SolveConfig(preconditioner="ilu")


def test_corner_kernel_existence_smoke():
    # dim-2 corner kernels support existence runs only; the field must come
    # out nonnegative with a clean residual
    spec = ng.KernelSpec("corner", 1.2, 2, corner_exponent=0.5, smoke_test=True)
    prob = ng.ProblemSetup(kernel=spec, shape=ng.Ball(1.0, (0.0, 0.0)), h=0.1,
                           y0=(0.0, 0.0), rho=0.2)
    field = ng.solve_problem(prob, 1.2, ng.SolveConfig())
    assert field.values.min() >= 0.0
    assert field.residual <= 1e-10
