import numpy as np
import pytest
from scipy import special

import nlgreen as ng
from nlgreen.oracle import BallGreenParams


def test_ball_green_alpha_one_closed_form():
    # antiderivative of s^(-1/2)(1+s)^(-3/2) is 2 sqrt(s/(1+s)); r0 = 3 here,
    # kappa(3,1) = 1/(4 pi^2), so G = sqrt(3)/pi^2 at |x-y| = 1/2
    val = ng.stable_ball_green(np.zeros(3), np.array([0.5, 0.0, 0.0]),
                               BallGreenParams(dim=3, alpha=1.0))
    assert val == pytest.approx(np.sqrt(3.0) / np.pi**2, rel=1e-12)


def test_ball_green_vanishes_toward_boundary():
    p = BallGreenParams(dim=3, alpha=1.5)
    x = np.zeros(3)
    vals = [ng.stable_ball_green(x, np.array([r, 0, 0]), p) for r in (0.9, 0.99, 0.999)]
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] < 1e-1 * vals[0]
    assert ng.stable_ball_green(x, np.array([1.5, 0, 0]), p) == 0.0


def test_ball_green_matches_newtonian_near_two():
    p = BallGreenParams(dim=3, alpha=1.999)
    y = np.array([0.5, 0.0, 0.0])
    frac = ng.stable_ball_green(np.zeros(3), y, p)
    newt = ng.newtonian_ball_green(np.zeros(3), y, 3)
    assert newt == pytest.approx(1.0 / (4.0 * np.pi), rel=1e-12)
    assert frac == pytest.approx(newt, rel=5e-3)


def test_ball_green_rejects_diagonal():
    p = BallGreenParams(dim=3, alpha=1.5)
    with pytest.raises(ValueError):
        ng.stable_ball_green(np.zeros(3), np.zeros(3), p)


def test_ball_green_symmetric_in_arguments():
    p = BallGreenParams(dim=3, alpha=1.4)
    rng = np.random.default_rng(3)
    for _ in range(100):
        x, y = rng.uniform(-0.55, 0.55, (2, 3))
        a = ng.stable_ball_green(x, y, p)
        b = ng.stable_ball_green(y, x, p)
        assert a == pytest.approx(b, rel=1e-12)


def test_newtonian_symmetry_and_blowup():
    rng = np.random.default_rng(5)
    for _ in range(100):
        x, y = rng.uniform(-0.55, 0.55, (2, 3))
        assert ng.newtonian_ball_green(x, y, 3) == pytest.approx(
            ng.newtonian_ball_green(y, x, 3), rel=1e-12)
    x = np.array([0.2, 0.1, -0.3])
    vals = [ng.newtonian_ball_green(x, x + np.array([e, 0, 0]), 3)
            for e in (1e-1, 1e-2, 1e-3)]
    assert vals[0] < vals[1] < vals[2]


def test_near_diagonal_constant_values():
    assert ng.near_diagonal_constant(3, 2.0) == pytest.approx(1.0 / (4 * np.pi), rel=1e-13)
    # Gamma(1) / (2 pi^(3/2) Gamma(1/2)) = 1/(2 pi^2)
    assert ng.near_diagonal_constant(3, 1.0) == pytest.approx(1.0 / (2 * np.pi**2), rel=1e-13)
    lg = np.exp(special.gammaln(0.75) - 1.5 * np.log(2) - 1.5 * np.log(np.pi)
                - special.gammaln(0.75))
    assert ng.near_diagonal_constant(3, 1.5) == pytest.approx(lg, rel=1e-13)


def test_near_diagonal_constant_continuous_at_two():
    for d in (3, 4, 5):
        gap = abs(ng.near_diagonal_constant(d, 1.999) - ng.near_diagonal_constant(d, 2.0))
        assert gap <= 1e-3


@pytest.mark.parametrize("alpha", [1.2, 1.5, 1.8])
def test_near_diagonal_limit_of_ball_green(alpha):
    p = BallGreenParams(dim=3, alpha=alpha)
    const = ng.near_diagonal_constant(3, alpha)
    for eps, tol in ((1e-2, 0.05), (1e-3, 0.01)):
        g = ng.stable_ball_green(np.zeros(3), np.array([eps, 0, 0]), p)
        assert g * eps ** (3 - alpha) == pytest.approx(const, rel=tol)


def test_two_sided_sanity_on_oracle():
    # scaled values on |x-y| <= dist/2 stay within a modest two-sided band
    rng = np.random.default_rng(11)
    for alpha in (1.2, 1.5, 1.8, 1.999):
        p = BallGreenParams(dim=3, alpha=alpha)
        y = np.array([0.2, 0.0, 0.0])
        dist = 0.8
        ratios = []
        for _ in range(200):
            v = rng.standard_normal(3)
            v /= np.linalg.norm(v)
            r = rng.uniform(1e-3, dist / 2.0)
            x = y + r * v
            ratios.append(ng.stable_ball_green(x, y, p) * r ** (3 - alpha))
        ratios = np.array(ratios)
        assert ratios.max() / ratios.min() <= 20.0


def test_params_validation():
    with pytest.raises(ng.ConfigurationError):
        BallGreenParams(dim=2, alpha=1.0)
    with pytest.raises(ng.ConfigurationError):
        BallGreenParams(dim=3, alpha=2.5)
    with pytest.raises(ng.ConfigurationError):
        ng.near_diagonal_constant(3, 0.0)
