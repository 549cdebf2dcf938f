"""Cartesian wide-stencil grids on convex domains.

Interior lattice nodes carry a monotone discretization of the
Monge-Ampere operator: for orthogonal direction pairs (e, e_perp) the
product of positive parts of second differences, minimized over pairs,

    MA_h(u)(x) = min_P (delta_e u)^+ (delta_{e_perp} u)^+.

Width 1 uses the axis and diagonal pairs; width 2 adds the knight-move
pairs (2,1)/(-1,2) and (1,2)/(-2,1).  Second differences use the exact
distance to the boundary along each lattice ray (cut cells), with the
boundary value 0, so quadratics that vanish on the boundary of their
level set are differentiated exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import ConvexDomain, DomainError

RAYS = np.array([
    (1, 0), (-1, 0), (0, 1), (0, -1),
    (1, 1), (-1, -1), (-1, 1), (1, -1),
    (2, 1), (-2, -1), (-1, 2), (1, -2),
    (1, 2), (-1, -2), (-2, 1), (2, -1),
], dtype=np.int64)

# (plus_e, minus_e, plus_eperp, minus_eperp) indices into RAYS
PAIRS_W1 = ((0, 1, 2, 3), (4, 5, 6, 7))
PAIRS_W2 = PAIRS_W1 + ((8, 9, 10, 11), (12, 13, 14, 15))


@dataclass
class Grid:
    """Interior nodes of a lattice of spacing h over a convex domain."""

    domain: ConvexDomain
    h: float
    width: int
    origin: np.ndarray          # lattice point (0, 0) in physical coordinates
    shape: tuple                # lattice extent (nx, ny), indices 0..nx-1
    node_id: np.ndarray         # (nx, ny) int32, -1 where not interior
    ij: np.ndarray              # (n_nodes, 2) lattice indices
    xy: np.ndarray              # (n_nodes, 2) physical coordinates
    nbr: np.ndarray             # (n_nodes, n_rays) node id or -1 at a cut
    rho: np.ndarray             # (n_nodes, n_rays) distance to neighbor/boundary
    cell_w: np.ndarray          # (n_nodes,) clipped cell areas for quadrature
    pairs: tuple = field(default=PAIRS_W1)

    @property
    def n_nodes(self) -> int:
        return len(self.xy)

    @property
    def n_rays(self) -> int:
        return self.nbr.shape[1]

    def function(self, values=None) -> "GridFunction":
        if values is None:
            values = np.zeros(self.n_nodes)
        return GridFunction(self, np.asarray(values, dtype=float))

    def second_differences(self, values) -> np.ndarray:
        """delta_e u for every ray pair direction, shape (n_nodes, n_rays/2).

        Direction k (rays 2k, 2k+1) uses the non-uniform 3-point formula
        with the exact distances rho+ and rho-; cut neighbors contribute
        the boundary value 0.
        """
        u = np.append(np.asarray(values, dtype=float), 0.0)
        idx = np.where(self.nbr >= 0, self.nbr, self.n_nodes)
        up = u[idx]
        out = np.empty((self.n_nodes, self.n_rays // 2))
        for k in range(self.n_rays // 2):
            rp, rm = self.rho[:, 2 * k], self.rho[:, 2 * k + 1]
            out[:, k] = 2 * (up[:, 2 * k] / (rp * (rp + rm))
                             + up[:, 2 * k + 1] / (rm * (rp + rm))
                             - values / (rp * rm))
        return out


@dataclass
class GridFunction:
    """Node values on a Grid with zero extension to the boundary."""

    grid: Grid
    values: np.ndarray

    def sup_norm(self) -> float:
        return float(np.abs(self.values).max()) if len(self.values) else 0.0

    def min(self) -> float:
        return float(self.values.min())

    def copy(self) -> "GridFunction":
        return GridFunction(self.grid, self.values.copy())

    def __call__(self, points):
        """Bilinear interpolation; non-interior corners contribute 0."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        g = self.grid
        rel = (pts - g.origin) / g.h
        i = np.clip(np.floor(rel[:, 0]).astype(np.int64), 0, g.shape[0] - 2)
        j = np.clip(np.floor(rel[:, 1]).astype(np.int64), 0, g.shape[1] - 2)
        fx = np.clip(rel[:, 0] - i, 0.0, 1.0)
        fy = np.clip(rel[:, 1] - j, 0.0, 1.0)
        u = np.append(self.values, 0.0)

        def corner(di, dj):
            ids = g.node_id[i + di, j + dj]
            return u[np.where(ids >= 0, ids, g.n_nodes)]

        vals = ((1 - fx) * (1 - fy) * corner(0, 0) + fx * (1 - fy) * corner(1, 0)
                + (1 - fx) * fy * corner(0, 1) + fx * fy * corner(1, 1))
        return float(vals[0]) if np.asarray(points).ndim == 1 else vals


def build_grid(domain: ConvexDomain, h: float, stencil_width: int = 1) -> Grid:
    """Build the interior lattice and cut-cell stencil data.

    Parameters
    ----------
    domain : ConvexDomain
        Bounded convex domain.
    h : float
        Lattice spacing; must be smaller than the domain diameter so at
        least one lattice point can fall inside.
    stencil_width : int
        1 for axis+diagonal pairs, 2 to add the (2,1)-type pairs.

    Returns
    -------
    Grid with exact boundary offsets: along every lattice ray leaving
    the domain, rho is the exact distance from the node to the boundary.
    """
    if stencil_width not in (1, 2):
        raise ValueError("stencil_width must be 1 or 2")
    if not h > 0:
        raise ValueError("h must be positive")
    if not h < domain.diameter():
        raise ValueError(
            f"h = {h} too coarse: need h < diameter = {domain.diameter()}")

    x0, y0, x1, y1 = domain.bounding_box()
    nx = int(np.ceil((x1 - x0) / h - 1e-9)) + 1
    ny = int(np.ceil((y1 - y0) / h - 1e-9)) + 1
    origin = np.array([x0, y0])
    gx = x0 + h * np.arange(nx)
    gy = y0 + h * np.arange(ny)
    X, Y = np.meshgrid(gx, gy, indexing="ij")
    lattice = np.column_stack([X.ravel(), Y.ravel()])
    inside = domain.contains_many(lattice).reshape(nx, ny)

    node_id = np.full((nx, ny), -1, dtype=np.int32)
    ii, jj = np.nonzero(inside)
    node_id[ii, jj] = np.arange(len(ii), dtype=np.int32)
    ij = np.column_stack([ii, jj])
    xy = origin + h * ij
    n = len(ij)
    if n == 0:
        raise ValueError("grid has no interior nodes")

    rays = RAYS if stencil_width == 2 else RAYS[:8]
    nr = len(rays)
    nbr = np.full((n, nr), -1, dtype=np.int32)
    rho = np.empty((n, nr))
    pad = np.full((nx + 4, ny + 4), -1, dtype=np.int32)
    pad[2:2 + nx, 2:2 + ny] = node_id
    for k, (di, dj) in enumerate(rays):
        step = h * float(np.hypot(di, dj))
        tgt = pad[2 + ii + di, 2 + jj + dj]
        nbr[:, k] = tgt
        rho[:, k] = step
        cut = np.nonzero(tgt < 0)[0]
        d = h * np.array([di, dj], dtype=float)
        for m in cut:
            t = domain.ray_exit(xy[m], d)
            rho[m, k] = t * step

    cell_w = _cell_weights(domain, xy, h)
    return Grid(domain=domain, h=h, width=stencil_width, origin=origin,
                shape=(nx, ny), node_id=node_id, ij=ij, xy=xy, nbr=nbr,
                rho=rho, cell_w=cell_w,
                pairs=PAIRS_W2 if stencil_width == 2 else PAIRS_W1)


def _cell_weights(domain: ConvexDomain, xy: np.ndarray, h: float) -> np.ndarray:
    """Area of the h-cell centered at each node, clipped to the domain.

    Cells whose four corners lie in the domain closure are full by
    convexity; only boundary cells need exact clipping.
    """
    half = h / 2
    corners_in = np.ones(len(xy), dtype=bool)
    for sx in (-half, half):
        for sy in (-half, half):
            corners_in &= domain.contains_many(xy + [sx, sy], closure=True)
    w = np.full(len(xy), h * h)
    for m in np.nonzero(~corners_in)[0]:
        x, y = xy[m]
        w[m] = domain.cell_area(x - half, x + half, y - half, y + half)
    return w


def ma_values(grid: Grid, values) -> np.ndarray:
    """MA_h(u) at every node: min over pairs of (delta_e u)^+(delta_perp u)^+."""
    delta = grid.second_differences(values)
    out = np.full(grid.n_nodes, np.inf)
    for (pe, me, pp, mp) in grid.pairs:
        prod = np.maximum(delta[:, pe // 2], 0.0) * np.maximum(delta[:, pp // 2], 0.0)
        np.minimum(out, prod, out=out)
    return out


def discrete_ma(u: GridFunction) -> GridFunction:
    """The discrete Monge-Ampere measure of u as a GridFunction.

    The scheme is degenerate elliptic: MA_h is nondecreasing in every
    neighbor value, and the positive-part clamp selects the convex
    branch.  Second differences of quadratics are exact, so a quadratic
    whose zero level set is the boundary is reproduced exactly.
    """
    return GridFunction(u.grid, ma_values(u.grid, u.values))
