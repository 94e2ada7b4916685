"""Uniform-lattice discretization of the nonlocal Dirichlet form.

The quadratic form int int (u(y)-u(x))(v(y)-v(x)) k(x,y) dy dx restricted by
the zero exterior condition is realized as a symmetric stencil operator

    (A u)_i = sum_z w(z) (u_i - u_{i+z})
              + (c_loc/h^2) (2d u_i - sum_nn u_nbr)
              + tail_constant * u_i,

with exterior neighbors reading 0. The stencil weight w(z) is the cell
integral of the kernel, the local coefficient c_loc carries the singular
mass below radius h/2 as a second-difference correction, and jumps beyond
the truncation radius are folded into the killing term. The construction
keeps symmetry, the M-matrix sign pattern and positive definiteness by
construction, and c_loc -> 1 as alpha -> 2-, so the operator degenerates
into the standard discrete Laplacian in the local limit.

Grids up to a few thousand nodes can be densified; the matrix-free path
applies the stencil through FFT convolution on the bounding box.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import fft as sfft
from scipy import linalg, special

from .errors import ConfigurationError, NumericsError
from .kernels import KernelInstance, KernelSpec, make_kernel, sphere_area, tail_mass
from .kernels import _cone_fraction  # cone closed forms share the cap fraction

__all__ = [
    "Ball",
    "Box",
    "PredicateShape",
    "GridDomain",
    "StencilWeights",
    "NonlocalOperator",
    "build_grid",
    "quadrature_weights",
    "assemble_operator",
    "apply_operator",
    "discrete_comparability",
]

DENSE_NODE_LIMIT = 3000

_fft_workers = 1


def set_fft_workers(n: int):
    """Worker count for the FFT convolutions (1 = deterministic single-thread)."""
    global _fft_workers
    _fft_workers = max(1, int(n))


# ---------------------------------------------------------------------------
# domain shapes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Ball:
    radius: float
    center: tuple

    def contains(self, pts: np.ndarray) -> np.ndarray:
        c = np.asarray(self.center, float)
        return np.linalg.norm(np.atleast_2d(pts) - c, axis=-1) < self.radius

    def bounds(self):
        c = np.asarray(self.center, float)
        return c - self.radius, c + self.radius

    def boundary_distance(self, p) -> float:
        c = np.asarray(self.center, float)
        return float(self.radius - np.linalg.norm(np.asarray(p, float) - c))

    def diameter(self) -> float:
        return 2.0 * self.radius


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        lo = np.asarray(self.lo, float)
        hi = np.asarray(self.hi, float)
        return np.all((pts > lo) & (pts < hi), axis=-1)

    def bounds(self):
        return np.asarray(self.lo, float), np.asarray(self.hi, float)

    def boundary_distance(self, p) -> float:
        p = np.asarray(p, float)
        lo = np.asarray(self.lo, float)
        hi = np.asarray(self.hi, float)
        return float(min((p - lo).min(), (hi - p).min()))

    def diameter(self) -> float:
        lo, hi = self.bounds()
        return float(np.linalg.norm(hi - lo))


@dataclass(frozen=True)
class PredicateShape:
    """Arbitrary open set given by a vectorized membership predicate."""

    fn: Callable
    lo: tuple
    hi: tuple

    def contains(self, pts: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(np.atleast_2d(pts)), bool)

    def bounds(self):
        return np.asarray(self.lo, float), np.asarray(self.hi, float)

    def boundary_distance(self, p):
        return None

    def diameter(self) -> float:
        lo, hi = self.bounds()
        return float(np.linalg.norm(hi - lo))


# ---------------------------------------------------------------------------
# grid
# ---------------------------------------------------------------------------

@dataclass
class GridDomain:
    """Interior lattice nodes of a bounded open set, in lexicographic order."""

    dim: int
    h: float
    shape: object
    coords: np.ndarray  # (N, dim) integer lattice coordinates
    _index: dict = field(repr=False, default_factory=dict)

    def __post_init__(self):
        if not self._index:
            self._index = {tuple(c): i for i, c in enumerate(self.coords)}

    @property
    def points(self) -> np.ndarray:
        return self.coords * self.h

    @property
    def n_nodes(self) -> int:
        return len(self.coords)

    def node_index(self, coord) -> int:
        return self._index.get(tuple(coord), -1)

    def boundary_distance(self, p):
        return self.shape.boundary_distance(p)


def build_grid(shape, h: float, dim: Optional[int] = None, smoke_test: bool = False) -> GridDomain:
    """Enumerate lattice nodes strictly inside the shape.

    Nodes sit at integer multiples of h (the lattice is anchored at the
    origin, not at the shape), boundary nodes are excluded, and the
    enumeration is lexicographic in the integer coordinates. dim = 2 is
    permitted only with ``smoke_test=True``: the estimates this package
    verifies are formulated for d >= 3.
    """
    if h <= 0.0:
        raise ConfigurationError("lattice spacing h must be positive")
    lo, hi = shape.bounds()
    d = dim if dim is not None else len(lo)
    if len(lo) != d:
        raise ConfigurationError("shape dimension does not match dim")
    if d < 2:
        raise ConfigurationError("dim must be >= 2")
    if d == 2 and not smoke_test:
        raise ConfigurationError("dim = 2 grids require smoke_test=True")

    axes = [np.arange(int(np.floor(lo[k] / h)), int(np.ceil(hi[k] / h)) + 1) for k in range(d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    coords = np.stack([m.ravel() for m in mesh], axis=-1)
    inside = shape.contains(coords * h)
    coords = coords[inside]
    if len(coords) == 0:
        raise ConfigurationError("shape contains no interior lattice nodes at this h")
    return GridDomain(dim=d, h=float(h), shape=shape, coords=coords.astype(np.int64))


# ---------------------------------------------------------------------------
# stencil weights
# ---------------------------------------------------------------------------

@dataclass
class StencilWeights:
    """Cell-integrated kernel weights plus the local singular correction."""

    h: float
    offsets: np.ndarray       # (M, dim) integer lattice offsets, symmetric set
    values: np.ndarray        # (M,) nonnegative weights, units length^-alpha
    c_loc: float              # units length^(2-alpha)
    R_trunc: float
    tail_constant: float
    alpha: float
    dim: int

    @property
    def total(self) -> float:
        return float(self.values.sum())

    def nonlocal_sum_beyond_nn(self) -> float:
        """Sum of weights over offsets strictly farther than one lattice step."""
        far = np.linalg.norm(self.offsets, axis=1) * self.h > self.h * (1.0 + 1e-12)
        return float(self.values[far].sum())


def _tensor_gauss(h: float, d: int, order: int):
    g, gw = np.polynomial.legendre.leggauss(order)
    g = g * h / 2.0
    gw = gw * h / 2.0
    grids = np.meshgrid(*([g] * d), indexing="ij")
    pts = np.stack([m.ravel() for m in grids], axis=-1)
    wg = np.meshgrid(*([gw] * d), indexing="ij")
    w = np.prod(np.stack([m.ravel() for m in wg], axis=-1), axis=-1)
    return pts, w


def _midpoint_subcells(h: float, d: int, m: int):
    s = (np.arange(m) + 0.5) / m - 0.5
    grids = np.meshgrid(*([s * h] * d), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    w = np.full(len(pts), (h / m) ** d)
    return pts, w


def _cell_integrals(profile, centers: np.ndarray, h: float, pts: np.ndarray,
                    w: np.ndarray, chunk: int = 4096) -> np.ndarray:
    out = np.empty(len(centers))
    for s in range(0, len(centers), chunk):
        block = centers[s:s + chunk]
        vals = profile((block[:, None, :] + pts[None, :, :]).reshape(-1, centers.shape[1]))
        out[s:s + chunk] = vals.reshape(len(block), -1) @ w
    return out


def _local_coefficient(kernel: KernelInstance, h: float) -> float:
    """c_loc = (1/2d) int_{|y| <= h/2} |y|^2 k(0, y) dy, family closed forms."""
    spec = kernel.spec
    d, alpha = spec.dim, spec.alpha
    surf = sphere_area(d)
    radial = (h / 2.0) ** (2.0 - alpha) / (2.0 - alpha)
    if spec.family == "alpha_stable":
        from .kernels import stable_constant
        return stable_constant(d, alpha) * surf * radial / (2.0 * d)
    if spec.family == "bounded_coeff":
        # reference radial part; the coefficient enters per node at assembly
        return (2.0 - alpha) * surf * radial / (2.0 * d)
    if spec.family == "cone":
        frac = 2.0 * _cone_fraction(spec.aperture, d)
        return (2.0 - alpha) * frac * surf * radial / (2.0 * d)
    if spec.family == "annulus_union":
        from .kernels import _ball_points
        a, c = spec.ratio, spec.annulus_fraction
        pts = _ball_points(d, 2048, 0)
        center = np.zeros(d)
        center[0] = (1.0 + a) / 2.0
        vol1 = np.pi ** (d / 2.0) / special.gamma(d / 2.0 + 1.0)
        total, n = 0.0, 0
        while True:
            scale = a ** (-float(n))
            z = (center[None, :] + c * pts) * scale
            rr = np.linalg.norm(z, axis=1)
            inside = rr <= h / 2.0
            if np.any(inside):
                kv = (2.0 - alpha) * rr[inside] ** (-d - alpha)
                total += 2.0 * vol1 * (c * scale) ** d * float(
                    np.sum(rr[inside] ** 2 * kv)) / len(pts)
            n += 1
            if scale * (np.linalg.norm(center) + c) < 1e-14 * h or n > 600:
                break
        return total / (2.0 * d)
    if spec.family == "corner":
        m = 256
        s = (np.arange(m) + 0.5) / m - 0.5
        g1, g2 = np.meshgrid(s * h, s * h, indexing="ij")
        pts = np.stack([g1.ravel(), g2.ravel()], axis=-1)
        rr = np.linalg.norm(pts, axis=1)
        keep = (rr > 0) & (rr <= h / 2.0)
        vals = kernel.profile(pts[keep])
        return float(np.sum(rr[keep] ** 2 * vals) * (h / m) ** 2 / (2.0 * d))
    raise ConfigurationError(f"no local coefficient rule for family {spec.family!r}")


def quadrature_weights(kernel: KernelInstance, h: float, R_trunc: float,
                       gauss_near: int = 8, gauss_far: int = 4,
                       sub_near: int = 12, sub_far: int = 6) -> StencilWeights:
    """Cell integrals of a translation-invariant kernel on the offset lattice.

    Smooth kernels use tensor Gauss-Legendre per cell (higher order within
    three lattice steps of the origin); indicator-supported kernels use
    midpoint sub-sampling of cell fractions, which resolves the support
    boundary to the sub-cell width. The sub-h/2 singular mass goes into
    c_loc and the beyond-truncation mass into tail_constant.
    """
    spec = kernel.spec
    if kernel.profile is None:
        raise ConfigurationError(
            "quadrature_weights needs a translation-invariant kernel; "
            "per-node coefficients are applied at assembly"
        )
    if R_trunc < 3.0 * h:
        raise ConfigurationError("R_trunc must be at least 3h")
    d = spec.dim
    K = int(np.floor(R_trunc / h))
    axes = [np.arange(-K, K + 1)] * d
    mesh = np.meshgrid(*axes, indexing="ij")
    offsets = np.stack([m.ravel() for m in mesh], axis=-1)
    rimg = np.linalg.norm(offsets, axis=1) * h
    keep = (rimg > 0.0) & (rimg <= R_trunc)
    offsets = offsets[keep]
    rr = rimg[keep]

    smooth = spec.family in ("alpha_stable", "bounded_coeff")
    values = np.zeros(len(offsets))
    near = rr <= 3.0 * h + 1e-12
    for mask, fine in ((near, True), (~near, False)):
        idx = np.where(mask)[0]
        if len(idx) == 0:
            continue
        if smooth:
            pts, w = _tensor_gauss(h, d, gauss_near if fine else gauss_far)
        else:
            pts, w = _midpoint_subcells(h, d, sub_near if fine else sub_far)
        values[idx] = _cell_integrals(kernel.profile, offsets[idx] * h, h, pts, w)

    if np.any(values < 0.0):
        raise NumericsError("negative stencil weight from quadrature")
    c_loc = _local_coefficient(kernel, h)
    tail = tail_mass(kernel, np.zeros(d), R_trunc, exact=True)
    return StencilWeights(h=float(h), offsets=offsets, values=values, c_loc=float(c_loc),
                          R_trunc=float(R_trunc), tail_constant=float(tail),
                          alpha=spec.alpha, dim=d)


# ---------------------------------------------------------------------------
# operator
# ---------------------------------------------------------------------------

class NonlocalOperator:
    """Symmetric positive definite stencil operator with killing.

    Translation-invariant kernels get a matrix-free FFT convolution path;
    kernels with per-node coefficients are assembled densely (node count
    capped at DENSE_NODE_LIMIT).
    """

    def __init__(self, grid: GridDomain, weights: StencilWeights,
                 kernel: Optional[KernelInstance] = None):
        self.grid = grid
        self.weights = weights
        self.kernel = kernel
        self.alpha = weights.alpha
        d = grid.dim
        if abs(weights.h - grid.h) > 1e-14 * grid.h:
            raise ConfigurationError("grid and stencil weights use different spacings")

        self._per_node = (kernel is not None
                          and kernel.spec.family == "bounded_coeff"
                          and kernel.spec.coefficient is not None)

        h = grid.h
        K = int(np.max(np.abs(weights.offsets)))
        self._K = K
        nn_w = weights.c_loc / h**2
        self._diag_const = weights.total + 2 * d * nn_w + weights.tail_constant

        if self._per_node:
            if grid.n_nodes > DENSE_NODE_LIMIT:
                raise ConfigurationError(
                    f"per-node coefficient operators are dense-assembled and "
                    f"capped at {DENSE_NODE_LIMIT} nodes (got {grid.n_nodes})"
                )
            self._dense = self._assemble_dense_per_node()
            self.killing = self._dense @ np.ones(grid.n_nodes)
            return

        # stencil box with the local second-difference folded in
        box = np.zeros((2 * K + 1,) * d)
        box[tuple((weights.offsets + K).T)] = weights.values
        for k in range(d):
            for s in (1, -1):
                e = np.zeros(d, dtype=int)
                e[k] = s
                box[tuple(e + K)] += nn_w
        self._stencil_box = box

        lo = grid.coords.min(axis=0)
        self._box_lo = lo
        self._box_shape = tuple(grid.coords.max(axis=0) - lo + 1)
        self._embed_idx = tuple((grid.coords - lo).T)
        full = [self._box_shape[k] + 2 * K for k in range(d)]
        self._fshape = [sfft.next_fast_len(s) for s in full]
        self._stencil_fft = sfft.rfftn(box, self._fshape, workers=_fft_workers)
        self._dense = None
        self.killing = self.apply(np.ones(grid.n_nodes))

    # -- matrix action ------------------------------------------------------

    def apply(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape != (self.grid.n_nodes,):
            raise ConfigurationError("vector length does not match node count")
        if self._dense is not None:
            return self._dense @ u
        U = np.zeros(self._box_shape)
        U[self._embed_idx] = u
        conv = sfft.irfftn(
            sfft.rfftn(U, self._fshape, workers=_fft_workers) * self._stencil_fft,
            self._fshape, workers=_fft_workers)
        K = self._K
        sl = tuple(slice(K, K + s) for s in self._box_shape)
        return self._diag_const * u - conv[sl][self._embed_idx]

    def diagonal(self) -> np.ndarray:
        if self._dense is not None:
            return np.diag(self._dense).copy()
        return np.full(self.grid.n_nodes, self._diag_const)

    # -- dense form ---------------------------------------------------------

    def _assemble_dense_per_node(self) -> np.ndarray:
        spec = self.kernel.spec
        coeff = spec.coefficient
        grid, w = self.grid, self.weights
        d, h = grid.dim, grid.h
        pts = grid.points
        n = grid.n_nodes
        nn_w = w.c_loc / h**2
        off_map = {tuple(o): v for o, v in zip(w.offsets, w.values)}
        for k in range(d):
            for s in (1, -1):
                e = np.zeros(d, dtype=int)
                e[k] = s
                off_map[tuple(e)] = off_map.get(tuple(e), 0.0) + nn_w

        def a_sym(xa, xb):
            return 0.5 * (np.asarray(coeff(xa, xb), float) + np.asarray(coeff(xb, xa), float))

        A = np.zeros((n, n))
        # diagonal: every offset contributes a(x_i, x_i + z) w(z), exterior or not
        offs = np.array(list(off_map.keys()))
        vals = np.array(list(off_map.values()))
        for s in range(0, n, 256):
            block = pts[s:s + 256]
            nbrs = block[:, None, :] + offs[None, :, :] * h
            aa = a_sym(np.broadcast_to(block[:, None, :], nbrs.shape), nbrs)
            A[np.arange(s, min(s + 256, n)), np.arange(s, min(s + 256, n))] = (
                aa @ vals + w.tail_constant * spec.coefficient_bound)
        # off-diagonal: interior pairs only
        for s in range(0, n, 256):
            ic = grid.coords[s:s + 256]
            diff = grid.coords[None, :, :] - ic[:, None, :]
            within = np.max(np.abs(diff), axis=-1) <= self._K
            rows, cols = np.where(within)
            keys = diff[rows, cols]
            wvals = np.array([off_map.get(tuple(kk), 0.0) for kk in keys])
            nz = wvals > 0.0
            rows, cols, wvals = rows[nz], cols[nz], wvals[nz]
            aa = a_sym(pts[s + rows], pts[cols])
            A[s + rows, cols] -= aa * wvals
        return 0.5 * (A + A.T)  # symmetrize away assembly roundoff

    def to_dense(self) -> np.ndarray:
        if self._dense is not None:
            return self._dense.copy()
        grid, w = self.grid, self.weights
        n = grid.n_nodes
        if n > DENSE_NODE_LIMIT:
            raise ConfigurationError(
                f"dense assembly is capped at {DENSE_NODE_LIMIT} nodes (got {n})")
        K = self._K
        A = np.zeros((n, n))
        np.fill_diagonal(A, self._diag_const)
        for s in range(0, n, 512):
            ic = grid.coords[s:s + 512]
            diff = grid.coords[None, :, :] - ic[:, None, :]
            within = np.max(np.abs(diff), axis=-1) <= K
            rows, cols = np.where(within)
            keys = (diff[rows, cols] + K).T
            vals = self._stencil_box[tuple(keys)]
            A[s + rows, cols] -= vals
        return A


def assemble_operator(grid: GridDomain, weights: StencilWeights,
                      kernel: Optional[KernelInstance] = None) -> NonlocalOperator:
    """Assemble the stencil operator with killing on a grid."""
    return NonlocalOperator(grid, weights, kernel)


def apply_operator(op: NonlocalOperator, u: np.ndarray) -> np.ndarray:
    """Matrix-free action of the operator on a node vector."""
    return op.apply(u)


def discrete_comparability(op: NonlocalOperator, op_ref: NonlocalOperator) -> float:
    """Smallest generalized eigenvalue of the pencil (A, A_ref).

    A strictly positive value certifies A >= c A_ref in quadratic-form order
    on this grid (and only on this grid). Both operators must live on the
    same grid and be small enough for dense eigen-solves.
    """
    if op.grid is not op_ref.grid and not np.array_equal(op.grid.coords, op_ref.grid.coords):
        raise ConfigurationError("operators must share a grid")
    n = op.grid.n_nodes
    if n > DENSE_NODE_LIMIT:
        raise ConfigurationError(f"comparability check is dense and capped at {DENSE_NODE_LIMIT} nodes")
    A = op.to_dense()
    B = op_ref.to_dense()
    try:
        vals = linalg.eigh(A, B, eigvals_only=True, subset_by_index=[0, 0])
    except linalg.LinAlgError as exc:
        raise NumericsError(f"reference operator is numerically singular: {exc}") from exc
    return float(vals[0])
