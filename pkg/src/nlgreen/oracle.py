"""Closed-form reference values on the unit ball.

Three independent anchors used to cross-check the discrete pipeline:

* ``stable_ball_green`` -- the classical explicit Green function of the
  fractional Laplacian of order ``alpha`` on the unit ball,

      G(x, y) = kappa(d, alpha) |x-y|^(alpha-d)
                * int_0^{r0} s^(alpha/2 - 1) (1+s)^(-d/2) ds,

  with r0 = (1-|x|^2)(1-|y|^2)/|x-y|^2 and
  kappa(d, alpha) = Gamma(d/2) / (2^alpha pi^(d/2) Gamma(alpha/2)^2).
  The integral is evaluated through the regularized incomplete beta
  function, which is exact to ~1e-14 relative.

* ``newtonian_ball_green`` -- the image-charge Green function of the
  Laplacian (order 2) on the unit ball, the alpha -> 2 limit target.

* ``near_diagonal_constant`` -- the free-space Riesz constant
  Gamma((d-alpha)/2) / (2^alpha pi^(d/2) Gamma(alpha/2)), which equals
  1/(d(d-2)|B_1|) at alpha = 2.

All functions are pure; gamma factors are evaluated in log space to stay
stable up to alpha = 2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import ConfigurationError

__all__ = [
    "BallGreenParams",
    "stable_ball_green",
    "newtonian_ball_green",
    "near_diagonal_constant",
]


@dataclass(frozen=True)
class BallGreenParams:
    """Parameters of the unit-ball reference Green function."""

    dim: int = 3
    alpha: float = 1.5
    radius: float = 1.0

    def __post_init__(self):
        if self.dim < 3:
            raise ConfigurationError("ball oracle requires dim >= 3")
        if not 0.0 < self.alpha <= 2.0:
            raise ConfigurationError("ball oracle requires alpha in (0, 2]")
        if self.dim <= self.alpha:
            raise ConfigurationError("ball oracle requires dim > alpha")
        if self.radius != 1.0:
            raise ConfigurationError("ball oracle is normalized to the unit ball")


def _kappa(d: int, alpha: float) -> float:
    return float(
        np.exp(
            special.gammaln(d / 2.0)
            - alpha * np.log(2.0)
            - (d / 2.0) * np.log(np.pi)
            - 2.0 * special.gammaln(alpha / 2.0)
        )
    )


def stable_ball_green(x, y, params: BallGreenParams) -> np.ndarray | float:
    """Green function of the order-``alpha`` fractional Laplacian on B_1.

    ``x`` may be a single point or an array of points with shape (..., d);
    ``y`` is a single point. Points on or outside the sphere map to 0 by
    convention. Evaluation on the diagonal is rejected.
    """
    d, alpha = params.dim, params.alpha
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    scalar = x.ndim == 1
    pts = np.atleast_2d(x)
    if pts.shape[-1] != d or y.shape != (d,):
        raise ConfigurationError("point dimension does not match params.dim")

    diff = pts - y
    r = np.linalg.norm(diff, axis=-1)
    if np.any(r == 0.0):
        raise ValueError("Green function is not defined on the diagonal x == y")

    xx = np.einsum("...i,...i->...", pts, pts)
    yy = float(y @ y)
    inside = (xx < 1.0) & (yy < 1.0)

    out = np.zeros(pts.shape[:-1])
    if np.any(inside):
        r_in = r[inside]
        r0 = (1.0 - xx[inside]) * (1.0 - yy) / r_in**2
        a, b = alpha / 2.0, (d - alpha) / 2.0
        # int_0^{r0} s^{a-1}(1+s)^{-(a+b)} ds = B(a,b) * I_{r0/(1+r0)}(a, b)
        frac = special.betainc(a, b, r0 / (1.0 + r0)) * special.beta(a, b)
        out[inside] = _kappa(d, alpha) * r_in ** (alpha - d) * frac
    return float(out[0]) if scalar else out


def newtonian_ball_green(x, y, d: int) -> np.ndarray | float:
    """Image-charge Green function of the Laplacian on B_1, -Delta G = delta_y."""
    if d < 3:
        raise ConfigurationError("newtonian ball Green function requires d >= 3")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    scalar = x.ndim == 1
    pts = np.atleast_2d(x)

    r = np.linalg.norm(pts - y, axis=-1)
    if np.any(r == 0.0):
        raise ValueError("Green function is not defined on the diagonal x == y")
    xx = np.einsum("...i,...i->...", pts, pts)
    yy = float(y @ y)
    inside = (xx < 1.0) & (yy < 1.0)

    # |y| |x - y/|y|^2| = sqrt(|x|^2 |y|^2 - 2 x.y + 1), continuous at y = 0
    image = np.sqrt(np.maximum(xx * yy - 2.0 * pts @ y + 1.0, 0.0))
    surf = 2.0 * np.pi ** (d / 2.0) / special.gamma(d / 2.0)
    c_d = 1.0 / ((d - 2.0) * surf)

    out = np.zeros(pts.shape[:-1])
    out[inside] = c_d * (r[inside] ** (2 - d) - image[inside] ** (2 - d))
    return float(out[0]) if scalar else out


def near_diagonal_constant(d: int, alpha: float) -> float:
    """Riesz constant Gamma((d-alpha)/2) / (2^alpha pi^(d/2) Gamma(alpha/2)).

    Continuous up to alpha = 2, where it equals 1/(d(d-2)|B_1|).
    """
    if d < 3:
        raise ConfigurationError("near-diagonal constant requires d >= 3")
    if not 0.0 < alpha <= 2.0:
        raise ConfigurationError("alpha must lie in (0, 2]")
    return float(
        np.exp(
            special.gammaln((d - alpha) / 2.0)
            - alpha * np.log(2.0)
            - (d / 2.0) * np.log(np.pi)
            - special.gammaln(alpha / 2.0)
        )
    )
