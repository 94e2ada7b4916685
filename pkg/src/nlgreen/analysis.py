"""Theorem-level quantities extracted from Green fields.

Everything here consumes a ``GreenField`` and produces report objects:
log-log power fits of the near-diagonal decay, two-sided bound constants,
the weak-L^p quasinorm, annulus Harnack ratios, fractional Sobolev
seminorms, a local-boundedness constant, and robustness sweeps over the
order alpha. Constants are empirical; pass/fail decisions are about their
spread across a sweep, never about absolute values.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError
from .kernels import KernelSpec, make_kernel
from .lattice import GridDomain, assemble_operator, build_grid, quadrature_weights
from .oracle import BallGreenParams, stable_ball_green
from .solve import GreenField, SolveConfig, regularized_rhs, solve_green

__all__ = [
    "PowerLawFit",
    "BoundReport",
    "RobustnessSweep",
    "ProblemSetup",
    "fit_near_diagonal",
    "extract_constants",
    "multi_annulus_harnack",
    "harnack_chain_bound",
    "gagliardo_seminorm",
    "local_boundedness_constant",
    "robustness_sweep",
    "solve_problem",
    "oracle_field",
]


@dataclass
class PowerLawFit:
    slope: float
    intercept: float
    r_range: tuple
    residual: float  # RMS of log-log regression residuals
    n_points: int


@dataclass
class BoundReport:
    alpha: float
    C_upper: float
    C_lower: float
    fit: PowerLawFit
    quasinorm: float
    harnack_ratio: float
    harnack_multi: Optional[float] = None
    solver_residual: float = 0.0


@dataclass
class RobustnessSweep:
    alphas: list
    reports: list

    def _spread(self, values) -> float:
        values = np.asarray(values, float)
        return float(values.max() / values.min())

    @property
    def spread_upper(self) -> float:
        return self._spread([r.C_upper for r in self.reports])

    @property
    def spread_lower(self) -> float:
        return self._spread([r.C_lower for r in self.reports])

    @property
    def spread_quasinorm(self) -> float:
        return self._spread([r.quasinorm for r in self.reports])


@dataclass
class ProblemSetup:
    """One experiment: kernel template + domain + source.

    The kernel alpha is substituted per run, so sweeps reuse the template.
    """

    kernel: KernelSpec
    shape: object
    h: float
    y0: tuple
    rho: float
    R_trunc: Optional[float] = None

    def truncation_radius(self) -> float:
        if self.R_trunc is not None:
            return float(self.R_trunc)
        return self.shape.diameter() + 2.0 * self.h


# ---------------------------------------------------------------------------
# shell statistics and fits
# ---------------------------------------------------------------------------

def _shell_groups(radii: np.ndarray, values: np.ndarray, r_min: float, r_max: float):
    """Group nodes by exact lattice radius (suppresses angular anisotropy)."""
    sel = (radii >= r_min) & (radii <= r_max)
    r = np.round(radii[sel], 9)
    v = values[sel]
    uniq, inv = np.unique(r, return_inverse=True)
    sums = np.bincount(inv, weights=v)
    counts = np.bincount(inv)
    return uniq, sums / counts


def _default_fit_region(field: GreenField, y0: np.ndarray):
    dist = field.grid.boundary_distance(y0)
    if dist is None:
        raise ConfigurationError("fit region needs a shape with computable boundary distance")
    h = field.grid.h
    # from the first resolvable shell up to 80% of the two-sided-bound
    # radius dist/2: the outer fifth of that band is dominated by boundary
    # decay and would tilt the exponent for any kernel
    return h, 0.8 * dist / 2.0


def fit_near_diagonal(field: GreenField, y0, region: Optional[tuple] = None) -> PowerLawFit:
    """Least-squares power fit of shell-averaged field values vs radius."""
    y0 = np.asarray(y0, dtype=float)
    r_min, r_max = region if region is not None else _default_fit_region(field, y0)
    radii = np.linalg.norm(field.grid.points - y0, axis=1)
    shell_r, shell_g = _shell_groups(radii, field.values, r_min, r_max)
    positive = shell_g > 0.0
    shell_r, shell_g = shell_r[positive], shell_g[positive]
    if len(shell_r) < 8:
        raise ConfigurationError(
            f"fit region [{r_min:g}, {r_max:g}] holds {len(shell_r)} usable shells; need >= 8")
    lx, ly = np.log(shell_r), np.log(shell_g)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    return PowerLawFit(slope=float(slope), intercept=float(intercept),
                       r_range=(float(r_min), float(r_max)),
                       residual=float(np.sqrt(np.mean(resid**2))),
                       n_points=len(shell_r))


def weak_lp_quasinorm(values: np.ndarray, h: float, dim: int, p: float) -> float:
    """sup_t t |{ |u| > t }|^{1/p} on the lattice, |.| = h^dim * count.

    Computed exactly by sorting: the supremum is attained just below one of
    the data values.
    """
    v = np.sort(np.abs(np.asarray(values, float)))[::-1]
    v = v[v > 0]
    if len(v) == 0:
        return 0.0
    counts = np.arange(1, len(v) + 1, dtype=float)
    return float(np.max(v * (h**dim * counts) ** (1.0 / p)))


def extract_constants(field: GreenField, y0) -> BoundReport:
    """Two-sided constants, quasinorm and annulus Harnack ratio of a field."""
    y0 = np.asarray(y0, dtype=float)
    grid = field.grid
    d, alpha, h = grid.dim, field.alpha, grid.h
    dist = grid.boundary_distance(y0)
    if dist is None:
        raise ConfigurationError("extract_constants needs a computable boundary distance")

    radii = np.linalg.norm(grid.points - y0, axis=1)
    sel = (radii >= 2.0 * h) & (radii <= dist / 2.0)
    if not np.any(sel):
        raise ConfigurationError("no nodes in the near-diagonal region [2h, dist/2]")
    scaled = field.values[sel] * radii[sel] ** (d - alpha)
    c_upper = float(scaled.max())
    c_lower = float(scaled.min())

    quasi = weak_lp_quasinorm(field.values, h, d, d / (d - alpha))

    r_h = dist / 4.0
    ann = (radii >= r_h) & (radii < 2.0 * r_h)
    if not np.any(ann):
        raise ConfigurationError("empty annulus for the Harnack ratio")
    sup = float(field.values[ann].max())
    inf = float(field.values[ann].min())
    if inf <= 0.0:
        raise ConfigurationError("Harnack ratio undefined: field vanishes on the annulus")

    fit = fit_near_diagonal(field, y0)
    return BoundReport(alpha=alpha, C_upper=c_upper, C_lower=c_lower, fit=fit,
                       quasinorm=quasi, harnack_ratio=sup / inf,
                       solver_residual=field.residual)


def multi_annulus_harnack(field: GreenField, y0, M: float, r: Optional[float] = None) -> float:
    """sup/inf of the field over the annulus B_{M r}(y0) \\ B_r(y0).

    The inner radius defaults to dist(y0, boundary)/8, so ratios at
    different M >= 2 are over nested annuli and are monotone in M.
    """
    if M <= 2.0:
        raise ConfigurationError("multi-annulus ratio needs M > 2")
    y0 = np.asarray(y0, dtype=float)
    dist = field.grid.boundary_distance(y0)
    if dist is None:
        raise ConfigurationError("multi_annulus_harnack needs a boundary distance")
    r = dist / 8.0 if r is None else float(r)
    if M * r > dist:
        raise ConfigurationError("annulus B_{Mr} leaves the domain")
    radii = np.linalg.norm(field.grid.points - y0, axis=1)
    ann = (radii >= r) & (radii < M * r)
    if not np.any(ann):
        raise ConfigurationError("empty multi-annulus")
    inf = float(field.values[ann].min())
    if inf <= 0.0:
        raise ConfigurationError("multi-annulus ratio undefined: field vanishes there")
    return float(field.values[ann].max()) / inf


def harnack_chain_bound(base_ratio: float, M: float) -> float:
    """Covering-chain prediction base^(N+1) with N = ceil(log2(M-1)) annuli."""
    if M <= 2.0:
        raise ConfigurationError("chain bound needs M > 2")
    n_cover = int(np.ceil(np.log2(M - 1.0)))
    return float(base_ratio ** (n_cover + 1))


# ---------------------------------------------------------------------------
# fractional Sobolev seminorm
# ---------------------------------------------------------------------------

def gagliardo_seminorm(field: GreenField, beta: float, q: float,
                       collar_width: Optional[float] = None,
                       chunk: int = 1024) -> float:
    """(2-alpha)-normalized W^{beta/2, q} seminorm of the lattice field.

    Discretizes (2-alpha) int int |g(x)-g(y)|^q / |x-y|^(d + beta q / 2)
    over ordered pairs of lattice cells. The integral over the exterior
    (where the field vanishes) is truncated to a collar of lattice nodes
    within ``collar_width`` of the domain's bounding box (default: a
    quarter of the diameter; 0 disables the exterior part).
    """
    from scipy.spatial.distance import cdist

    grid = field.grid
    d, h, alpha = grid.dim, grid.h, field.alpha
    if not 0.0 < beta < alpha:
        raise ConfigurationError("beta must lie in (0, alpha)")
    if not 1.0 <= q < d / (d - alpha / 2.0):
        raise ConfigurationError("q must lie in [1, d/(d - alpha/2))")
    if grid.n_nodes > 3 * 10**4:
        raise ConfigurationError("seminorm double sum is capped at 3e4 nodes")

    expo = d + beta * q / 2.0
    pts = grid.points
    g = field.values
    total = 0.0
    for s in range(0, grid.n_nodes, chunk):
        dist = cdist(pts[s:s + chunk], pts)
        block = np.abs(g[s:s + chunk, None] - g[None, :]) ** q
        rows = np.arange(dist.shape[0])
        dist[rows, s + rows] = np.inf
        total += float(np.sum(block / dist**expo))

    cw = grid.shape.diameter() / 4.0 if collar_width is None else float(collar_width)
    if cw > 0.0:
        lo, hi = grid.shape.bounds()
        axes = [np.arange(int(np.floor((lo[k] - cw) / h)),
                          int(np.ceil((hi[k] + cw) / h)) + 1) for k in range(d)]
        mesh = np.meshgrid(*axes, indexing="ij")
        cand = np.stack([m.ravel() for m in mesh], axis=-1)
        interior_keys = {tuple(c) for c in grid.coords}
        ext = np.array([c for c in cand if tuple(c) not in interior_keys])
        if len(ext):
            ext_pts = ext * h
            gq = np.abs(g) ** q
            for s in range(0, grid.n_nodes, chunk):
                dist = cdist(pts[s:s + chunk], ext_pts)
                total += 2.0 * float(gq[s:s + chunk] @ np.sum(dist**-expo, axis=1))

    return (2.0 - alpha) * h ** (2 * d) * total


def local_boundedness_constant(field: GreenField, x0, r: float, q: float):
    """Empirical constant in sup_{B_{r/2}} g <= C (avg_{B_r} g^q)^{1/q} + tail.

    The tail is r^alpha sum_{|x_j - x0| > r/2} g_j |x_j - x0|^(-d-alpha) h^d
    (the field vanishes outside the domain, so interior nodes suffice).
    Meaningful only when B_r(x0) avoids the source ball, where the field is
    harmonic for the operator. Returns (C, sup, mean_q, tail) with
    C = max(0, sup - tail) / mean_q: zero means the tail term alone already
    covers the supremum.
    """
    x0 = np.asarray(x0, dtype=float)
    grid = field.grid
    d, h, alpha = grid.dim, grid.h, field.alpha
    if np.linalg.norm(x0 - field.y0) < r + field.rho:
        raise ConfigurationError(
            "local boundedness ball B_r(x0) must stay clear of the source ball")
    radii = np.linalg.norm(grid.points - x0, axis=1)
    inner = radii < r / 2.0
    ball = radii < r
    if not np.any(inner) or not np.any(ball):
        raise ConfigurationError("local boundedness region contains no nodes")
    sup = float(field.values[inner].max())
    mean_q = float(np.mean(field.values[ball] ** q)) ** (1.0 / q)
    outside = ~inner
    tail = float(r**alpha * np.sum(
        field.values[outside] * radii[outside] ** (-d - alpha)) * h**d)
    c_emp = max(0.0, sup - tail) / mean_q if mean_q > 0 else np.inf
    return c_emp, sup, mean_q, tail


# ---------------------------------------------------------------------------
# pipelines
# ---------------------------------------------------------------------------

def solve_problem(problem: ProblemSetup, alpha: float, cfg: SolveConfig) -> GreenField:
    """weights -> operator -> rhs -> solve for one alpha."""
    spec = replace(problem.kernel, alpha=float(alpha))
    kernel = make_kernel(spec)
    grid = build_grid(problem.shape, problem.h, dim=spec.dim, smoke_test=spec.smoke_test)
    base = kernel
    if kernel.profile is None:
        base = make_kernel(replace(spec, coefficient=None))
    weights = quadrature_weights(base, problem.h, problem.truncation_radius())
    op = assemble_operator(grid, weights, kernel)
    rhs = regularized_rhs(grid, problem.y0, problem.rho)
    return solve_green(op, rhs, cfg, y0=problem.y0, rho=problem.rho)


def oracle_field(problem: ProblemSetup, alpha: float) -> GreenField:
    """Sample the exact unit-ball Green function on the problem's grid."""
    from .lattice import Ball

    if not isinstance(problem.shape, Ball) or problem.shape.radius != 1.0 or any(
            c != 0.0 for c in problem.shape.center):
        raise ConfigurationError("oracle fields require the unit ball at the origin")
    grid = build_grid(problem.shape, problem.h, dim=problem.kernel.dim)
    params = BallGreenParams(dim=problem.kernel.dim, alpha=float(alpha))
    y0 = np.asarray(problem.y0, dtype=float)
    pts = grid.points.copy()
    singular = np.linalg.norm(pts - y0, axis=1) == 0.0
    # cap the source node at the value half a spacing away; every regional
    # statistic excludes the core, only the quasinorm sees this node
    pts[singular] = y0 + np.eye(grid.dim)[0] * (problem.h / 2.0)
    vals = np.asarray(stable_ball_green(pts, y0, params))
    return GreenField(grid=grid, values=vals, y0=y0, rho=0.0, alpha=float(alpha),
                      residual=0.0, iterations=0)


def robustness_sweep(problem: ProblemSetup, alphas: Sequence[float],
                     cfg: SolveConfig, mode: str = "solve",
                     M_multi: float = 4.0) -> RobustnessSweep:
    """Run the full pipeline per alpha and collect bound reports."""
    alphas = [float(a) for a in alphas]
    if sorted(alphas) != alphas:
        raise ConfigurationError("sweep alphas must be sorted ascending")
    if any(not 1.0 <= a <= 1.999 for a in alphas):
        raise ConfigurationError("sweep alphas must lie in [1.0, 1.999]")
    if mode not in ("solve", "oracle"):
        raise ConfigurationError("sweep mode must be 'solve' or 'oracle'")

    reports = []
    for a in alphas:
        try:
            fld = solve_problem(problem, a, cfg) if mode == "solve" else oracle_field(problem, a)
            rep = extract_constants(fld, problem.y0)
            rep.harnack_multi = multi_annulus_harnack(fld, problem.y0, M_multi)
        except Exception as exc:
            raise type(exc)(f"sweep failed at alpha={a}: {exc}") from exc
        reports.append(rep)
    return RobustnessSweep(alphas=alphas, reports=reports)
