"""Jump-kernel catalog and sampled certificates for kernel conditions.

A kernel here is a symmetric nonnegative jump intensity k(x, y) with units
length^(-d-alpha). Implemented families:

* ``alpha_stable``   -- the rotationally symmetric stable kernel
                        C(d, alpha) |y-x|^(-d-alpha) with the exact
                        gamma-function normalization of the fractional
                        Laplacian.
* ``cone``           -- (2-alpha)|y-x|^(-d-alpha) restricted to a double
                        cone around a fixed axis.
* ``annulus_union``  -- (2-alpha)|z|^(-d-alpha) on a union of balls, one
                        pair per dyadic-like annulus B(a^{1-n}) \\ B(a^{-n}),
                        zero elsewhere.
* ``bounded_coeff``  -- (2-alpha) a(x,y) |y-x|^(-d-alpha) with a measurable
                        coefficient bounded between 1/Lambda and Lambda.
* ``corner``         -- a 2-d kernel supported on cusp regions around the
                        axes, of effective order alpha but pointwise order
                        gamma = alpha - 1 + 1/b; exposed for existence
                        smoke tests only.

Condition checks are sampled certificates, not proofs: each checker
evaluates the defining supremum on a sampling plan and reports the largest
value seen together with the worst witness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import optimize, special

from .errors import ConfigurationError, NumericsError

__all__ = [
    "FAMILIES",
    "KernelSpec",
    "KernelInstance",
    "SamplingPlan",
    "ConditionReport",
    "stable_constant",
    "make_kernel",
    "tail_mass",
    "check_condition",
    "sphere_area",
    "cone_solid_angle_fraction",
]

FAMILIES = ("alpha_stable", "cone", "annulus_union", "bounded_coeff", "corner")

# condition identifiers accepted by check_condition
COND_MOMENT = "moment"        # sup_x int (r^2 ^ |y-x|^2) k(x,y) dy <= c r^(2-alpha)
COND_POINTWISE = "pointwise"  # k(x,y) <= c (2-alpha) |y-x|^(-d-alpha)
COND_UJS = "ujs"              # k(x,y) <= c avg_{B_r(x)} k(z,y) dz
COND_LEVY = "levy"            # sup_x int (1 ^ |y-x|^2) k(x,y) dy finite


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere S^{d-1}."""
    return float(2.0 * np.pi ** (d / 2.0) / special.gamma(d / 2.0))


def _cone_fraction(aperture: float, d: int) -> float:
    """Fraction of S^{d-1} covered by one cap {w : w.e > aperture}."""
    nu = (d - 3) / 2.0
    # int_c^1 (1-t^2)^nu dt via the incomplete beta function in u = t^2
    full = 0.5 * special.beta(0.5, nu + 1.0)          # int_0^1 (1-t^2)^nu dt
    cap = full * (1.0 - special.betainc(0.5, nu + 1.0, aperture**2))
    return float(cap / (2.0 * full))


def cone_solid_angle_fraction(aperture: float, d: int) -> float:
    """Fraction of the unit sphere covered by the double cone |z.e|/|z| > c."""
    return 2.0 * _cone_fraction(aperture, d)


def stable_constant(dim: int, alpha: float) -> float:
    """Normalization 2^alpha Gamma((d+alpha)/2) / (pi^(d/2) |Gamma(-alpha/2)|).

    Evaluated via log-gamma and the reflection identity
    |Gamma(-alpha/2)| = pi / (sin(pi alpha/2) Gamma(1 + alpha/2)), which
    avoids the pole at alpha = 2. The ratio to (2-alpha) stays bounded as
    alpha -> 2-.
    """
    if dim < 2:
        raise ConfigurationError("stable_constant requires dim >= 2")
    if not 0.0 < alpha < 2.0:
        raise ConfigurationError("stable_constant requires alpha in (0, 2)")
    log_abs_gamma = (
        np.log(np.pi) - np.log(np.sin(np.pi * alpha / 2.0)) - special.gammaln(1.0 + alpha / 2.0)
    )
    return float(
        np.exp(
            alpha * np.log(2.0)
            + special.gammaln((dim + alpha) / 2.0)
            - (dim / 2.0) * np.log(np.pi)
            - log_abs_gamma
        )
    )


@dataclass(frozen=True)
class KernelSpec:
    """Declarative description of a jump kernel.

    ``smoke_test`` unlocks dim = 2, which is outside the validated range of
    the estimates and is meant for existence experiments only (the corner
    family forces it).
    """

    family: str
    alpha: float
    dim: int = 3
    aperture: float = 0.9                 # cone: |z.axis|/|z| > aperture
    axis: Optional[tuple] = None          # cone axis, defaults to e_d
    ratio: float = 2.0                    # annulus_union: a > 1
    ball_fraction: Optional[float] = None  # annulus_union: c, defaults to (a-1)/2
    coefficient: Optional[Callable] = None  # bounded_coeff: a(x, y), vectorized
    coefficient_bound: float = 1.0        # bounded_coeff: Lambda >= 1
    corner_exponent: float = 0.5          # corner: b in (0, 1)
    smoke_test: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown kernel family {self.family!r}")
        if not 0.0 < self.alpha < 2.0:
            raise ConfigurationError("alpha must lie in (0, 2)")
        if self.dim < 2:
            raise ConfigurationError("dim must be >= 2")
        if self.dim == 2 and not self.smoke_test:
            raise ConfigurationError("dim = 2 requires smoke_test=True")
        if self.family == "cone" and not 0.0 < self.aperture < 1.0:
            raise ConfigurationError("cone aperture must lie in (0, 1)")
        if self.axis is not None and len(self.axis) != self.dim:
            raise ConfigurationError("cone axis dimension mismatch")
        if self.family == "annulus_union":
            if self.ratio <= 1.0:
                raise ConfigurationError("annulus ratio must exceed 1")
            c = self.ball_fraction
            if c is not None and not 0.0 < c <= (self.ratio - 1.0) / 2.0:
                raise ConfigurationError(
                    "ball_fraction must lie in (0, (ratio-1)/2] so each ball "
                    "stays inside its annulus"
                )
        if self.family == "bounded_coeff" and self.coefficient_bound < 1.0:
            raise ConfigurationError("coefficient bound Lambda must be >= 1")
        if self.family == "corner":
            if self.dim != 2 or not self.smoke_test:
                raise ConfigurationError("corner kernel is a dim=2 smoke-test family")
            if not 0.0 < self.corner_exponent < 1.0:
                raise ConfigurationError("corner exponent b must lie in (0, 1)")

    @property
    def cone_axis(self) -> np.ndarray:
        if self.axis is None:
            e = np.zeros(self.dim)
            e[-1] = 1.0
            return e
        a = np.asarray(self.axis, dtype=float)
        return a / np.linalg.norm(a)

    @property
    def annulus_fraction(self) -> float:
        if self.ball_fraction is not None:
            return float(self.ball_fraction)
        return (self.ratio - 1.0) / 2.0

    @property
    def corner_order(self) -> float:
        """Pointwise singularity order gamma = alpha - 1 + 1/b of the corner kernel."""
        return self.alpha - 1.0 + 1.0 / self.corner_exponent


@dataclass
class KernelInstance:
    """Evaluator bundle for one kernel.

    ``profile`` is the translation-invariant evaluator z -> k(0, z) and is
    None for non-translation-invariant kernels. ``intensity`` evaluates
    k(x, y) with x, y broadcastable arrays of shape (..., d).
    """

    spec: KernelSpec
    intensity: Callable
    profile: Optional[Callable]
    is_translation_invariant: bool
    symmetrized: bool = False


def _norms(z: np.ndarray) -> np.ndarray:
    r = np.linalg.norm(np.atleast_2d(z), axis=-1)
    if np.any(r == 0.0):
        raise ValueError("kernel is defined off-diagonal only (x != y)")
    return r


def _scalarize(fn):
    """Return floats for single points, arrays for batches."""
    def wrapped(*args):
        out = fn(*args)
        if np.asarray(args[-1]).ndim == 1:
            return float(np.asarray(out).ravel()[0])
        return out

    return wrapped


def _annulus_membership(z: np.ndarray, spec: KernelSpec) -> np.ndarray:
    """Indicator of the union of balls B(+-x_n, c a^{-n}), scale-invariantly.

    Annulus n covers radii [a^{-n}, a^{1-n}); its pair of balls sits on the
    first coordinate axis at distance (1+a)/2 * a^{-n} with radius c a^{-n}.
    Rescaling z by a^n reduces every annulus to the n = 0 one.
    """
    a = spec.ratio
    c = spec.annulus_fraction
    zz = np.atleast_2d(z)
    r = np.linalg.norm(zz, axis=-1)
    out = np.zeros(r.shape, dtype=bool)
    ok = (r > 0.0) & (r < a)
    if not np.any(ok):
        return out
    n = np.ceil(-np.log(r[ok]) / np.log(a))
    n = np.maximum(n, 0.0)
    zs = zz[ok] * np.exp(np.log(a) * n)[..., None]
    center = np.zeros(spec.dim)
    center[0] = (1.0 + a) / 2.0
    hit = (np.linalg.norm(zs - center, axis=-1) < c) | (
        np.linalg.norm(zs + center, axis=-1) < c
    )
    out[ok] = hit
    return out


def _corner_membership(z: np.ndarray, b: float) -> np.ndarray:
    zz = np.atleast_2d(z)
    z1 = np.abs(zz[..., 0])
    z2 = np.abs(zz[..., 1])
    inside_b1 = z1**2 + z2**2 < 1.0
    return inside_b1 & ((z2 >= z1**b) | (z1 >= z2**b))


def make_kernel(spec: KernelSpec) -> KernelInstance:
    """Build the evaluator for a kernel spec."""
    d, alpha = spec.dim, spec.alpha

    if spec.family == "alpha_stable":
        const = stable_constant(d, alpha)

        def profile(z):
            return const * _norms(z) ** (-d - alpha)

    elif spec.family == "cone":
        axis = spec.cone_axis
        c = spec.aperture

        def profile(z):
            r = _norms(z)
            cosang = np.abs(np.atleast_2d(z) @ axis) / r
            return np.where(cosang > c, (2.0 - alpha) * r ** (-d - alpha), 0.0)

    elif spec.family == "annulus_union":

        def profile(z):
            r = _norms(z)
            member = _annulus_membership(z, spec)
            return np.where(member, (2.0 - alpha) * r ** (-d - alpha), 0.0)

    elif spec.family == "corner":
        gamma = spec.corner_order

        def profile(z):
            r = _norms(z)
            member = _corner_membership(z, spec.corner_exponent)
            return np.where(member, (2.0 - alpha) * r ** (-2.0 - gamma), 0.0)

    elif spec.family == "bounded_coeff":
        coeff = spec.coefficient
        lam = spec.coefficient_bound

        if coeff is None:
            def profile(z):
                return (2.0 - alpha) * _norms(z) ** (-d - alpha)

            def intensity(x, y):
                return profile(np.asarray(y, float) - np.asarray(x, float))

            return KernelInstance(spec, _scalarize(intensity), _scalarize(profile), True, False)

        def intensity(x, y):
            x = np.asarray(x, dtype=float)
            y = np.asarray(y, dtype=float)
            r = _norms(y - x)
            a_sym = 0.5 * (np.asarray(coeff(x, y), float) + np.asarray(coeff(y, x), float))
            if np.any(a_sym < 1.0 / lam - 1e-12) or np.any(a_sym > lam + 1e-12):
                raise NumericsError("coefficient leaves its declared [1/Lambda, Lambda] band")
            return (2.0 - alpha) * a_sym * r ** (-d - alpha)

        return KernelInstance(spec, _scalarize(intensity), None, False, True)

    else:  # pragma: no cover - guarded by KernelSpec validation
        raise ConfigurationError(f"unknown family {spec.family!r}")

    def intensity(x, y):
        return profile(np.asarray(y, float) - np.asarray(x, float))

    return KernelInstance(spec, _scalarize(intensity), _scalarize(profile), True, False)


# ---------------------------------------------------------------------------
# direction sets, ball points and shell quadrature
# ---------------------------------------------------------------------------

def _directions(d: int, n: int, seed: int = 0) -> np.ndarray:
    """Deterministic quasi-uniform direction set on S^{d-1}."""
    if d == 3:
        i = np.arange(n, dtype=float)
        z = 1.0 - 2.0 * (i + 0.5) / n
        phi = i * np.pi * (3.0 - np.sqrt(5.0))
        s = np.sqrt(np.maximum(1.0 - z**2, 0.0))
        return np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=-1)
    if d == 2:
        theta = (np.arange(n) + 0.5) * 2.0 * np.pi / n
        return np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _ball_points(d: int, n: int, seed: int = 0) -> np.ndarray:
    """Deterministic low-discrepancy-ish point set in the unit ball."""
    dirs = _directions(d, n, seed)
    radii = (((np.arange(n) + 0.5) / n) ** (1.0 / d))[:, None]
    # decorrelate radius from the direction sweep
    perm = np.random.default_rng(seed + 1).permutation(n)
    return dirs * radii[perm]


def _log_gauss_panels(edges: np.ndarray, order: int):
    """Gauss-Legendre nodes/weights for integrating f(rho) d(rho) on log panels."""
    g, gw = np.polynomial.legendre.leggauss(order)
    t0 = np.log(edges[:-1])[:, None]
    t1 = np.log(edges[1:])[:, None]
    t = 0.5 * (t1 - t0) * g[None, :] + 0.5 * (t1 + t0)
    w = 0.5 * (t1 - t0) * gw[None, :]
    rho = np.exp(t)
    return rho, w * rho  # d rho = rho d t


def _panel_edges(r_values: np.ndarray, per_decade: int, lo_factor=1e-6, hi_factor=1e6):
    """Log-spaced panel edges containing every sampled radius as an edge."""
    rs = np.unique(r_values)
    anchors = np.concatenate([[rs.min() * lo_factor], rs, [rs.max() * hi_factor]])
    edges = []
    for a, b in zip(anchors[:-1], anchors[1:]):
        n = max(1, int(np.ceil(per_decade * np.log10(b / a))))
        edges.append(np.exp(np.linspace(np.log(a), np.log(b), n + 1))[:-1])
    edges.append(anchors[-1:])
    out = np.concatenate(edges)
    out[np.searchsorted(out, rs)] = rs  # pin anchors exactly
    return out


def _shell_mean_factory(kernel: KernelInstance, x: np.ndarray, plan: "SamplingPlan"):
    """Return rho-vectorized mean of k(x, x + rho w) over directions w."""
    spec = kernel.spec
    n_dir = plan.n_directions
    if spec.family in ("cone", "annulus_union"):
        n_dir = max(n_dir, 2048)  # indicator supports need angular resolution
    if spec.family == "corner":
        # resolve the cusp angular measure exactly instead of sampling
        b = spec.corner_exponent
        gamma = spec.corner_order
        two_alpha = 2.0 - spec.alpha

        def angular_measure(rho):
            res = np.zeros_like(rho)
            for i, r in enumerate(np.atleast_1d(rho)):
                if r >= 1.0:
                    continue
                # theta in [0, pi/4]: measure of {cos-side} + {sin-side}
                f1 = lambda t: r * np.cos(t) - (r * np.sin(t)) ** b  # >=0 near t=0
                f2 = lambda t: r * np.sin(t) - (r * np.cos(t)) ** b  # >=0 near t=pi/4
                t1 = np.pi / 4 if f1(np.pi / 4) >= 0 else optimize.brentq(f1, 0.0, np.pi / 4)
                t2 = 0.0 if f2(0.0) >= 0 else (
                    np.pi / 4 if f2(np.pi / 4) < 0 else optimize.brentq(f2, 0.0, np.pi / 4)
                )
                res[i] = min(t1 + (np.pi / 4 - t2), np.pi / 4)
            return 8.0 * res  # eight symmetric octants

        def shell_mean(rho):
            rho = np.atleast_1d(rho)
            return two_alpha * rho ** (-2.0 - gamma) * angular_measure(rho) / (2.0 * np.pi)

        return shell_mean

    dirs = _directions(spec.dim, n_dir, plan.seed)

    def shell_mean(rho):
        rho = np.atleast_1d(rho)
        pts = x[None, None, :] + rho[:, None, None] * dirs[None, :, :]
        vals = kernel.intensity(np.broadcast_to(x, pts.shape), pts)
        return vals.mean(axis=-1)

    return shell_mean


def _truncated_moment_annulus(spec: KernelSpec, r_values: np.ndarray, plan) -> np.ndarray:
    """int (r^2 ^ |z|^2) k(z) dz for the annulus-union kernel, ball by ball."""
    a, c, d, alpha = spec.ratio, spec.annulus_fraction, spec.dim, spec.alpha
    pts = _ball_points(d, plan.n_ball, plan.seed)
    center = np.zeros(d)
    center[0] = (1.0 + a) / 2.0
    vol1 = np.pi ** (d / 2.0) / special.gamma(d / 2.0 + 1.0)
    out = np.zeros(len(r_values))
    n = 0
    while True:
        scale = a ** (-float(n))
        z = (center[None, :] + c * pts) * scale
        rr = np.linalg.norm(z, axis=1)
        kv = (2.0 - alpha) * rr ** (-d - alpha)
        vol = vol1 * (c * scale) ** d
        contrib = np.array(
            [2.0 * vol * np.mean(np.minimum(r * r, rr * rr) * kv) for r in r_values]
        )
        out += contrib
        n += 1
        if n > 400 or (contrib.max() < 1e-14 * max(out.max(), 1e-300) and n > 4):
            break
    return out


def _tail_mass_annulus(spec: KernelSpec, R: float, plan=None) -> float:
    a, c, d, alpha = spec.ratio, spec.annulus_fraction, spec.dim, spec.alpha
    pts = _ball_points(d, 2048 if plan is None else plan.n_ball, 0)
    center = np.zeros(d)
    center[0] = (1.0 + a) / 2.0
    vol1 = np.pi ** (d / 2.0) / special.gamma(d / 2.0 + 1.0)
    total = 0.0
    n = 0
    while True:
        scale = a ** (-float(n))
        if (np.linalg.norm(center) + c) * scale <= R:
            break  # this and all smaller balls lie inside B_R
        z = (center[None, :] + c * pts) * scale
        rr = np.linalg.norm(z, axis=1)
        kv = np.where(rr > R, (2.0 - alpha) * rr ** (-d - alpha), 0.0)
        total += 2.0 * vol1 * (c * scale) ** d * float(np.mean(kv))
        n += 1
        if n > 400:
            break
    return total


def tail_mass(kernel: KernelInstance, x, R: float, exact: bool = True) -> float:
    """Mass of jumps past radius R: int_{|y-x|>R} k(x, y) dy.

    Closed forms are used where available (stable, cone); the annulus-union
    kernel uses per-ball quadrature when ``exact`` and the full stable-shape
    bound (2-alpha)|S^{d-1}| R^-alpha / alpha otherwise.
    """
    if R <= 0.0:
        raise ConfigurationError("tail radius R must be positive")
    spec = kernel.spec
    d, alpha = spec.dim, spec.alpha
    surf = sphere_area(d)

    if spec.family == "alpha_stable":
        return stable_constant(d, alpha) * surf * R ** (-alpha) / alpha
    if spec.family == "cone":
        frac = 2.0 * _cone_fraction(spec.aperture, d)
        return (2.0 - alpha) * frac * surf * R ** (-alpha) / alpha
    if spec.family == "annulus_union":
        if not exact:
            return (2.0 - alpha) * surf * R ** (-alpha) / alpha
        return _tail_mass_annulus(spec, R)
    if spec.family == "corner":
        if R >= 1.0:
            return 0.0
        plan = SamplingPlan()
        mean_fn = _shell_mean_factory(kernel, np.zeros(d), plan)
        edges = _panel_edges(np.array([R, 1.0]), plan.panels_per_decade,
                             lo_factor=1.0, hi_factor=1.0)
        rho, w = _log_gauss_panels(edges, plan.gauss_order)
        vals = mean_fn(rho.ravel()).reshape(rho.shape)
        return float(surf * np.sum(vals * rho ** (d - 1) * w))

    # bounded_coeff (translation invariant or not): quadrature around x
    x = np.zeros(d) if x is None else np.asarray(x, dtype=float)
    plan = SamplingPlan()
    mean_fn = _shell_mean_factory(kernel, x, plan)
    total = 0.0
    lo = R
    for _ in range(12):
        hi = lo * 10.0
        edges = _panel_edges(np.array([lo, hi]), plan.panels_per_decade,
                             lo_factor=1.0, hi_factor=1.0)
        rho, w = _log_gauss_panels(edges, plan.gauss_order)
        vals = mean_fn(rho.ravel()).reshape(rho.shape)
        piece = float(surf * np.sum(vals * rho ** (d - 1) * w))
        total += piece
        lo = hi
        if piece < 1e-12 * max(total, 1e-300):
            break
    if total < 0.0 or not np.isfinite(total):
        raise NumericsError(f"tail integral failed to converge (got {total})")
    return total


# ---------------------------------------------------------------------------
# condition checks
# ---------------------------------------------------------------------------

@dataclass
class SamplingPlan:
    """Sampling budget for condition certificates.

    ``r_min``/``r_max`` bound the radius grid for the moment and UJS checks;
    ``box_half`` bounds the base-point samples for non-translation-invariant
    kernels, and doubles as the displacement scale for pair sampling.
    """

    n_x: int = 16
    n_r: int = 32
    r_min: float = 0.05
    r_max: float = 2.0
    n_pairs: int = 200
    n_directions: int = 256
    n_ball: int = 512
    panels_per_decade: int = 8
    gauss_order: int = 6
    box_half: float = 1.0
    seed: int = 0
    budget: Optional[float] = None

    def __post_init__(self):
        if self.r_min <= 0 or self.r_max <= self.r_min:
            raise ConfigurationError("need 0 < r_min < r_max in the sampling plan")
        for name in ("n_x", "n_r", "n_pairs", "n_directions", "n_ball"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"sampling plan field {name} must be >= 1")


@dataclass
class ConditionReport:
    condition: str
    estimated_constant: float
    samples_used: int
    worst_witness: tuple  # (x, r)
    passed: bool
    budget: Optional[float] = None


def _base_points(kernel: KernelInstance, plan: SamplingPlan) -> np.ndarray:
    if kernel.is_translation_invariant:
        return np.zeros((1, kernel.spec.dim))
    rng = np.random.default_rng(plan.seed)
    return rng.uniform(-plan.box_half, plan.box_half, size=(plan.n_x, kernel.spec.dim))


def _check_moment(kernel: KernelInstance, plan: SamplingPlan, r_fixed=None) -> ConditionReport:
    spec = kernel.spec
    d, alpha = spec.dim, spec.alpha
    surf = sphere_area(d)
    rs = (np.array([r_fixed]) if r_fixed is not None
          else np.exp(np.linspace(np.log(plan.r_min), np.log(plan.r_max), plan.n_r)))
    xs = _base_points(kernel, plan)

    best = -np.inf
    witness = (tuple(xs[0]), float(rs[0]))
    n_samples = 0
    for x in xs:
        if spec.family == "annulus_union":
            integrals = _truncated_moment_annulus(spec, rs, plan)
        else:
            mean_fn = _shell_mean_factory(kernel, x, plan)
            edges = _panel_edges(rs, plan.panels_per_decade)
            rho, w = _log_gauss_panels(edges, plan.gauss_order)
            vals = mean_fn(rho.ravel()).reshape(rho.shape)
            base = vals * rho ** (d - 1) * w
            # cumulative pieces A = int k rho^{d+1}, B = int k rho^{d-1}
            panel_a = (base * rho**2).sum(axis=1)
            panel_b = base.sum(axis=1)
            cum_a = np.concatenate([[0.0], np.cumsum(panel_a)])
            cum_b = np.concatenate([[0.0], np.cumsum(panel_b)])
            pos = np.searchsorted(edges, rs)
            integrals = surf * (cum_a[pos] + rs**2 * (cum_b[-1] - cum_b[pos]))
        scaled = integrals * rs ** (alpha - 2.0) if r_fixed is None else integrals
        n_samples += len(rs)
        k_worst = int(np.argmax(scaled))
        if scaled[k_worst] > best:
            best = float(scaled[k_worst])
            witness = (tuple(np.asarray(x)), float(rs[k_worst]))
    if not np.isfinite(best):
        raise NumericsError("moment-condition quadrature did not converge")
    return _finish_report(COND_MOMENT if r_fixed is None else COND_LEVY,
                          best, n_samples, witness, plan)


def _support_seeking_offsets(spec: KernelSpec, rng, n: int) -> np.ndarray:
    """Displacements biased toward the kernel support (indicator families)."""
    d = spec.dim
    rho = np.exp(rng.uniform(np.log(1e-3), np.log(2.0), n))
    if spec.family == "cone":
        axis = spec.cone_axis
        v = rng.standard_normal((n, d))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        # squeeze random directions toward the axis
        t = rng.uniform(max(spec.aperture, 0.5), 1.0, n)
        perp = v - (v @ axis)[:, None] * axis
        nperp = np.linalg.norm(perp, axis=1, keepdims=True)
        nperp[nperp == 0] = 1.0
        w = t[:, None] * axis + np.sqrt(1 - t**2)[:, None] * perp / nperp
        sign = np.where(rng.uniform(size=n) < 0.5, 1.0, -1.0)
        return rho[:, None] * w * sign[:, None]
    if spec.family == "annulus_union":
        a, c = spec.ratio, spec.annulus_fraction
        center = np.zeros(d)
        center[0] = (1.0 + a) / 2.0
        n_idx = rng.integers(0, 12, n)
        u = _ball_points(d, n, 7)[rng.permutation(n)]
        sign = np.where(rng.uniform(size=n) < 0.5, 1.0, -1.0)
        return (center[None, :] + 0.9 * c * u) * (a ** (-n_idx.astype(float)))[:, None] * sign[:, None]
    v = rng.standard_normal((n, d))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return rho[:, None] * v


def _check_pointwise(kernel: KernelInstance, plan: SamplingPlan) -> ConditionReport:
    spec = kernel.spec
    d, alpha = spec.dim, spec.alpha
    rng = np.random.default_rng(plan.seed)
    xs = (np.zeros((plan.n_pairs, d)) if kernel.is_translation_invariant
          else rng.uniform(-plan.box_half, plan.box_half, (plan.n_pairs, d)))
    half = plan.n_pairs // 2
    z_rand = _support_seeking_offsets(
        KernelSpec("alpha_stable", alpha, d) if spec.family in ("alpha_stable", "bounded_coeff")
        else spec, rng, plan.n_pairs - half)
    z_gen = np.exp(rng.uniform(np.log(1e-3), np.log(2.0), half))[:, None] * _directions(
        d, half, plan.seed + 3)
    z = np.concatenate([z_gen, z_rand], axis=0)
    ys = xs + z
    r = np.linalg.norm(z, axis=1)
    vals = np.atleast_1d(kernel.intensity(xs, ys))
    ratio = vals * r ** (d + alpha) / (2.0 - alpha)
    k = int(np.argmax(ratio))
    return _finish_report(COND_POINTWISE, float(ratio[k]), len(ratio),
                          (tuple(xs[k]), float(r[k])), plan)


def _check_ujs(kernel: KernelInstance, plan: SamplingPlan) -> ConditionReport:
    spec = kernel.spec
    d = spec.dim
    rng = np.random.default_rng(plan.seed)
    n_pairs = plan.n_pairs
    xs = (np.zeros((n_pairs, d)) if kernel.is_translation_invariant
          else rng.uniform(-plan.box_half, plan.box_half, (n_pairs, d)))
    half = n_pairs // 2
    z = np.concatenate([
        np.exp(rng.uniform(np.log(plan.r_min), np.log(plan.r_max), half))[:, None]
        * _directions(d, half, plan.seed + 5),
        _support_seeking_offsets(spec, rng, n_pairs - half),
    ], axis=0)
    ys = xs + z
    ball = _ball_points(d, plan.n_ball, plan.seed)

    fracs = np.exp(np.linspace(np.log(0.05), 0.0, plan.n_r))
    best = 0.0
    witness = (tuple(xs[0]), float(np.linalg.norm(z[0]) / 2.0))
    count = 0
    for x, y in zip(xs, ys):
        kxy = float(np.atleast_1d(kernel.intensity(x, y))[0])
        if kxy == 0.0:
            count += len(fracs)
            continue
        dist = float(np.linalg.norm(y - x))
        for f in fracs:
            r = 0.5 * dist * f
            pts = x[None, :] + r * ball
            avg = float(np.mean(kernel.intensity(pts, np.broadcast_to(y, pts.shape))))
            count += 1
            if avg == 0.0:
                ratio = np.inf
            else:
                ratio = kxy / avg
            if ratio > best:
                best = ratio
                witness = (tuple(x), float(r))
    return _finish_report(COND_UJS, float(best), count, witness, plan)


def _finish_report(cond, estimate, n, witness, plan) -> ConditionReport:
    passed = True if plan.budget is None else bool(estimate <= plan.budget)
    return ConditionReport(cond, estimate, n, witness, passed, plan.budget)


def check_condition(kernel: KernelInstance, which: str, plan: SamplingPlan) -> ConditionReport:
    """Sampled certificate for one kernel condition.

    ``which`` is one of ``moment`` (integrated truncated second moment with
    the r^(2-alpha) scaling), ``pointwise`` (comparability with the
    (2-alpha)-normalized stable envelope), ``ujs`` (pointwise value versus
    ball averages at the source), or ``levy`` (integrability with r = 1).
    The report carries the sampled supremum; it certifies nothing beyond
    the samples.
    """
    which = which.lower()
    if which == COND_MOMENT:
        return _check_moment(kernel, plan)
    if which == COND_LEVY:
        return _check_moment(kernel, plan, r_fixed=1.0)
    if which == COND_POINTWISE:
        return _check_pointwise(kernel, plan)
    if which == COND_UJS:
        return _check_ujs(kernel, plan)
    raise ConfigurationError(f"unknown condition {which!r}")
