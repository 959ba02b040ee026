"""Uniform truncated grids and discrete operators.

The whole numerical layer lives on a tensor grid over the box
[-R_1, R_1] x ... x [-R_d, R_d] with odd point counts so the group identity
is a grid point.  Functions are zero-extended outside the box.  Symbolic
operators compile to scipy sparse matrices: first-order fields use centered
differences with pointwise polynomial coefficients; the sublaplacian is
discretized from its expanded second-order symbol with compact second
differences (scheme="compact", the default used for evolution) or by double
application of the first-order stencils (scheme="factored", kept as the
structural cross-check; its centered-difference square leaves grid-scale
oscillations undamped, which is why evolution uses the compact form).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.integrate
import scipy.sparse as sp

from .catalog import GroupSpec
from .fields import SublaplacianSymbol, VectorField

DEFAULT_MAX_POINTS = 4_000_000


@dataclass(frozen=True)
class Grid:
    """Tensor grid over a centered box; spacing h_m = 2 R_m / (n_m - 1)."""

    shape_dims: tuple[int, ...]  # strata dims, defines d and weights
    half_widths: tuple[float, ...]
    npoints: tuple[int, ...]
    max_points: int = DEFAULT_MAX_POINTS

    def __post_init__(self):
        d = sum(self.shape_dims)
        if len(self.half_widths) != d or len(self.npoints) != d:
            raise ValueError("half_widths and npoints must have one entry per axis")
        if any(n < 5 or n % 2 == 0 for n in self.npoints):
            raise ValueError("points per axis must be odd and >= 5")
        if any(r <= 0 for r in self.half_widths):
            raise ValueError("half-widths must be positive")
        total = math.prod(self.npoints)
        if total > self.max_points:
            raise MemoryError(
                f"grid has {total} points, exceeding the budget of {self.max_points}"
            )

    @staticmethod
    def for_group(g: GroupSpec, half_width, n, max_points=DEFAULT_MAX_POINTS) -> "Grid":
        d = g.dim
        hw = tuple(half_width) if np.iterable(half_width) else (float(half_width),) * d
        ns = tuple(n) if np.iterable(n) else (int(n),) * d
        return Grid(g.shape.dims, hw, ns, max_points)

    @property
    def dim(self) -> int:
        return sum(self.shape_dims)

    @property
    def spacings(self) -> tuple[float, ...]:
        return tuple(2 * r / (n - 1) for r, n in zip(self.half_widths, self.npoints))

    @property
    def cell_volume(self) -> float:
        return math.prod(self.spacings)

    @property
    def size(self) -> int:
        return math.prod(self.npoints)

    def axis(self, m: int) -> np.ndarray:
        return np.linspace(-self.half_widths[m], self.half_widths[m], self.npoints[m])

    def coords(self) -> tuple[np.ndarray, ...]:
        return _grid_coords(self)

    def points_matrix(self) -> np.ndarray:
        """(size, d) matrix of grid point coordinates, C-order flattened."""
        return np.stack([c.reshape(-1) for c in self.coords()], axis=-1)

    def origin_index(self) -> tuple[int, ...]:
        return tuple(n // 2 for n in self.npoints)

    def interior_mask(self, margin: int = 1) -> np.ndarray:
        mask = np.ones(self.npoints, dtype=bool)
        for m in range(self.dim):
            idx = [slice(None)] * self.dim
            idx[m] = slice(0, margin)
            mask[tuple(idx)] = False
            idx[m] = slice(-margin, None)
            mask[tuple(idx)] = False
        return mask

    def shell_mask(self, fraction: float = 0.1) -> np.ndarray:
        """Boundary shell: points within ``fraction`` of the box edge."""
        mask = np.zeros(self.npoints, dtype=bool)
        for m in range(self.dim):
            width = max(1, int(round(fraction * self.npoints[m])))
            idx = [slice(None)] * self.dim
            idx[m] = slice(0, width)
            mask[tuple(idx)] = True
            idx[m] = slice(-width, None)
            mask[tuple(idx)] = True
        return mask


@lru_cache(maxsize=32)
def _grid_coords(grid: Grid):
    axes = [grid.axis(m) for m in range(grid.dim)]
    return tuple(np.meshgrid(*axes, indexing="ij"))


@dataclass
class GridFunction:
    """Sampled scalar field on a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.npoints:
            raise ValueError(
                f"values shape {self.values.shape} != grid {self.grid.npoints}"
            )

    @staticmethod
    def from_callable(grid: Grid, fn) -> "GridFunction":
        """Sample ``fn(*coords)`` (vectorized over coordinate arrays)."""
        return GridFunction(grid, np.asarray(fn(*grid.coords()), dtype=float))

    @staticmethod
    def sample(grid: Grid, fn) -> "GridFunction":
        """Sample a field given as ``fn(points)`` with points of shape (..., d)."""
        pts = np.stack(grid.coords(), axis=-1)
        return GridFunction(grid, np.asarray(fn(pts), dtype=float))

    @staticmethod
    def zeros(grid: Grid) -> "GridFunction":
        return GridFunction(grid, np.zeros(grid.npoints))

    @staticmethod
    def delta(grid: Grid) -> "GridFunction":
        """Unit-mass spike at the group identity."""
        values = np.zeros(grid.npoints)
        values[grid.origin_index()] = 1.0 / grid.cell_volume
        return GridFunction(grid, values)

    def copy(self) -> "GridFunction":
        return GridFunction(self.grid, self.values.copy())

    def integral(self) -> float:
        return float(self.values.sum() * self.grid.cell_volume)

    @property
    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def __add__(self, other):
        if isinstance(other, GridFunction):
            return GridFunction(self.grid, self.values + other.values)
        return GridFunction(self.grid, self.values + other)

    def __sub__(self, other):
        if isinstance(other, GridFunction):
            return GridFunction(self.grid, self.values - other.values)
        return GridFunction(self.grid, self.values - other)

    def __mul__(self, other):
        if isinstance(other, GridFunction):
            return GridFunction(self.grid, self.values * other.values)
        return GridFunction(self.grid, self.values * other)

    __rmul__ = __mul__


def lp_norm(u: GridFunction, p) -> float:
    """Riemann-sum L^p norm; p = inf gives the max norm."""
    if p == np.inf or p == "inf":
        return float(np.max(np.abs(u.values)))
    p = float(p)
    if p <= 0:
        raise ValueError("p must be positive")
    return float((np.sum(np.abs(u.values) ** p) * u.grid.cell_volume) ** (1.0 / p))


# ---------------------------------------------------------------------------
# sparse stencils


def _first_difference(n: int, h: float) -> sp.csr_matrix:
    e = np.ones(n - 1) / (2 * h)
    return sp.diags([e, -e], [1, -1], shape=(n, n), format="csr")


def _second_difference(n: int, h: float) -> sp.csr_matrix:
    main = -2 * np.ones(n) / h**2
    off = np.ones(n - 1) / h**2
    return sp.diags([off, main, off], [-1, 0, 1], shape=(n, n), format="csr")


@lru_cache(maxsize=256)
def _axis_operator(grid: Grid, m: int, order: int) -> sp.csr_matrix:
    """Lift a 1-d difference along axis m to the full C-ordered grid."""
    h = grid.spacings[m]
    n = grid.npoints[m]
    core = _first_difference(n, h) if order == 1 else _second_difference(n, h)
    left = math.prod(grid.npoints[:m]) or 1
    right = math.prod(grid.npoints[m + 1 :]) or 1
    op = sp.kron(sp.identity(left, format="csr"), core, format="csr")
    op = sp.kron(op, sp.identity(right, format="csr"), format="csr")
    return op.tocsr()


def _poly_on_grid(poly, grid: Grid) -> np.ndarray:
    coords = grid.coords()
    vals = poly.evaluate({i: coords[i] for i in range(grid.dim)})
    return np.broadcast_to(np.asarray(vals, dtype=float), grid.npoints).reshape(-1)


@dataclass(eq=False)
class DiscreteOperator:
    """Compiled sparse form of a symbolic operator on a fixed grid."""

    grid: Grid
    matrix: sp.csr_matrix
    label: str = ""

    def apply(self, u: GridFunction) -> GridFunction:
        if u.grid != self.grid:
            raise ValueError("grid mismatch")
        out = self.matrix @ u.values.reshape(-1)
        return GridFunction(self.grid, out.reshape(self.grid.npoints))

    def apply_values(self, values: np.ndarray) -> np.ndarray:
        return self.matrix @ values


def discretize(op, grid: Grid, scheme: str = "compact") -> DiscreteOperator:
    """Compile a VectorField or SublaplacianSymbol to a sparse operator.

    First-order fields always use centered differences with pointwise
    coefficients.  For the sublaplacian, scheme="compact" assembles the
    expanded symbol (3-point second differences on the diagonal, composed
    centered differences for cross terms), scheme="factored" applies each
    generator stencil twice.
    """
    if isinstance(op, VectorField):
        mat = _vector_field_matrix(op, grid)
        return DiscreteOperator(grid, mat, label="field")
    if isinstance(op, SublaplacianSymbol):
        if scheme == "compact":
            mat = _sublaplacian_compact_matrix(op, grid)
        elif scheme == "factored":
            mat = None
            for x in op.generators:
                fx = _vector_field_matrix(x, grid)
                sq = (fx @ fx).tocsr()
                mat = sq if mat is None else mat + sq
            mat = (-mat).tocsr()
        else:
            raise ValueError(f"unknown scheme {scheme!r}")
        return DiscreteOperator(grid, mat, label=f"sublaplacian-{scheme}")
    raise TypeError(f"cannot discretize {type(op).__name__}")


def _vector_field_matrix(f: VectorField, grid: Grid) -> sp.csr_matrix:
    mat = None
    for m, poly in sorted(f.coeffs.items()):
        c = _poly_on_grid(poly, grid)
        term = sp.diags(c) @ _axis_operator(grid, m, 1)
        mat = term if mat is None else mat + term
    if mat is None:
        mat = sp.csr_matrix((grid.size, grid.size))
    return mat.tocsr()


def _sublaplacian_compact_matrix(sym: SublaplacianSymbol, grid: Grid) -> sp.csr_matrix:
    mat = None
    for (m, n), poly in sorted(sym.second.items()):
        c = _poly_on_grid(poly, grid)
        if m == n:
            stencil = _axis_operator(grid, m, 2)
        else:
            stencil = (_axis_operator(grid, m, 1) @ _axis_operator(grid, n, 1)).tocsr()
        term = sp.diags(c) @ stencil
        mat = term if mat is None else mat + term
    for m, poly in sorted(sym.first.items()):
        c = _poly_on_grid(poly, grid)
        term = sp.diags(c) @ _axis_operator(grid, m, 1)
        mat = term if mat is None else mat + term
    if mat is None:
        mat = sp.csr_matrix((grid.size, grid.size))
    return mat.tocsr()


_OPERATOR_CACHE: dict = {}


def sublaplacian_operator(g: GroupSpec, grid: Grid, scheme: str = "compact") -> DiscreteOperator:
    key = (id(g), grid, scheme)
    op = _OPERATOR_CACHE.get(key)
    if op is None:
        op = discretize(g.sublaplacian(), grid, scheme=scheme)
        _OPERATOR_CACHE[key] = op
    return op


# ---------------------------------------------------------------------------
# maximal function


def _dyadic_radii(g: GroupSpec, grid: Grid) -> list[float]:
    h_min = min(grid.spacings)
    corner = np.array(grid.half_widths, dtype=float)
    diameter = 2.0 * float(g.hom_norm_arrays(corner[None, :])[0])
    radii, r = [], h_min
    while r <= diameter:
        radii.append(r)
        r *= 2
    return radii


def _group_distances(g: GroupSpec, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """|y^-1 . x|_G for every pair (row of xs, row of ys)."""
    inv_y = g.inverse_arrays(ys)
    z = g.compose_arrays(inv_y[None, :, :], xs[:, None, :])
    return g.hom_norm_arrays(z)


def maximal_many(g: GroupSpec, grid: Grid, values_list, block: int = 512):
    """Hardy-Littlewood maximal function of several fields at once.

    Averages |f| over metric balls B(x, r) = {y : |y^-1 . x|_G <= r} for the
    dyadic radii h_min * 2^k up to the box diameter, counting grid points as
    the ball volume; the r -> 0 limit contributes |f| itself, so M[f] >= |f|
    pointwise by construction.  One pairwise-distance sweep is shared by all
    fields.
    """
    pts = grid.points_matrix()
    n = pts.shape[0]
    fields = [np.abs(np.asarray(v, dtype=float).reshape(-1)) for v in values_list]
    stacked = np.stack(fields, axis=-1)  # (n, nf)
    radii = _dyadic_radii(g, grid)
    out = stacked.copy()  # r -> 0 limit
    for start in range(0, n, block):
        stop = min(start + block, n)
        dist = _group_distances(g, pts[start:stop], pts)  # (b, n)
        for r in radii:
            mask = dist <= r
            counts = mask.sum(axis=1)
            sums = mask @ stacked  # (b, nf)
            avg = sums / np.maximum(counts, 1)[:, None]
            np.maximum(out[start:stop], avg, out=out[start:stop])
    return [out[:, k].reshape(grid.npoints) for k in range(len(fields))]


def maximal(g: GroupSpec, grid: Grid, u: GridFunction) -> GridFunction:
    (m,) = maximal_many(g, grid, [u.values])
    return GridFunction(grid, m)


# ---------------------------------------------------------------------------
# measure-geometry checks


def radial_integration_check(g: GroupSpec, grid: Grid, v1, v2) -> float:
    """Discrepancy between grid and 1-d radial evaluations of I_1/I_2.

    The grid side integrates v_k(|x|_G) over the box; the 1-d side computes
    integral of v_k(r) r^(N-1) dr by adaptive quadrature.  The area constant
    of the unit sphere cancels in the ratio.
    """
    rho = g.hom_norm_arrays(grid.points_matrix()).reshape(grid.npoints)
    vol = grid.cell_volume
    i1 = float(np.sum(v1(rho)) * vol)
    i2 = float(np.sum(v2(rho)) * vol)
    if i2 == 0:
        raise ZeroDivisionError("grid integral of v2 vanishes")
    n = g.homogeneous_dimension
    j1, _ = scipy.integrate.quad(lambda r: v1(r) * r ** (n - 1), 0, np.inf)
    j2, _ = scipy.integrate.quad(lambda r: v2(r) * r ** (n - 1), 0, np.inf)
    if j2 == 0:
        raise ZeroDivisionError("radial integral of v2 vanishes")
    return abs(i1 / i2 - j1 / j2)


def haar_scaling_check(g: GroupSpec, grid: Grid, f, lam: float) -> float:
    """Relative error of  integral f(dil_lam x) dx  vs  lam^-N integral f dx."""
    pts = grid.points_matrix()
    vol = grid.cell_volume
    base = float(np.sum(f(pts)) * vol)
    scaled = float(np.sum(f(g.dilate_arrays(lam, pts))) * vol)
    expected = lam ** (-g.homogeneous_dimension) * base
    if expected == 0:
        raise ZeroDivisionError("reference integral vanishes")
    return abs(scaled - expected) / abs(expected)


# ---------------------------------------------------------------------------
# CSV export


def write_gridfunction_csv(u: GridFunction, path, group_name: str, n_hom: int):
    grid = u.grid
    axes = "x".join(str(n) for n in grid.npoints)
    hs = ",".join(f"{h:.17g}" for h in grid.spacings)
    lines = [f"# group={group_name},N={n_hom},axes={axes},h={hs}"]
    pts = grid.points_matrix()
    vals = u.values.reshape(-1)
    idx = np.stack(
        np.meshgrid(*[np.arange(n) for n in grid.npoints], indexing="ij"), axis=-1
    ).reshape(-1, grid.dim)
    for row, (pt, v) in enumerate(zip(pts, vals)):
        ints = ",".join(str(int(i)) for i in idx[row])
        floats = ",".join(f"{c:.17g}" for c in pt)
        lines.append(f"{ints},{floats},{v:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
