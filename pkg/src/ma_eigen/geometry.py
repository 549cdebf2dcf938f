"""Bounded convex 2D domains with exact metric queries.

Two representations:

* convex polygons (counterclockwise vertex list, flat edges first-class),
* discs (center, radius).

Every downstream estimate is phrased in terms of dist(., boundary),
diam, area, and boundary-adapted frames, so those queries are exact
(analytic, not sampled) and deterministic, including tie-breaks.
"""

from __future__ import annotations

import math

import numpy as np

EPS = 1e-12


class DomainError(ValueError):
    """Point outside the domain of validity of a geometric query."""


class BoundaryFrame:
    """Rigid motion mapping the domain into the upper half-plane.

    origin is a boundary point, the +x2 axis of frame coordinates points
    inward along the normal there, and frame(origin) = (0, 0).  For the
    query point z that induced the frame, frame(z) = (0, dist(z)).
    """

    def __init__(self, origin, rotation, edge_index=0, parameter=0.0):
        self.origin = np.asarray(origin, dtype=float)
        self.rotation = np.asarray(rotation, dtype=float)
        self.edge_index = int(edge_index)
        self.parameter = float(parameter)

    def to_frame(self, points):
        """Map world points (shape (..., 2)) to frame coordinates."""
        p = np.asarray(points, dtype=float)
        return (p - self.origin) @ self.rotation.T

    def from_frame(self, points):
        p = np.asarray(points, dtype=float)
        return p @ self.rotation + self.origin

    @property
    def inward_normal(self):
        return self.rotation[1].copy()

    @property
    def tangent(self):
        return self.rotation[0].copy()


def _frame_from_contact(origin, inward):
    # rows (tangent, normal); tangent chosen so det = +1 (proper rotation)
    nu = np.asarray(inward, dtype=float)
    nu = nu / np.hypot(nu[0], nu[1])
    tau = np.array([nu[1], -nu[0]])
    return np.vstack([tau, nu])


class ConvexDomain:
    """Common interface of Polygon and Disc."""

    kind = ""

    def contains(self, point) -> bool:
        raise NotImplementedError

    def contains_many(self, points, closure=False):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if closure:
            return np.array([self.contains_closure(p) for p in pts], dtype=bool)
        return np.array([self.contains(p) for p in pts], dtype=bool)

    def contains_closure(self, point) -> bool:
        raise NotImplementedError

    def dist_boundary(self, point) -> float:
        raise NotImplementedError

    def diameter(self) -> float:
        raise NotImplementedError

    def area(self) -> float:
        raise NotImplementedError

    def bounding_box(self):
        raise NotImplementedError

    def boundary_frame(self, z) -> BoundaryFrame:
        raise NotImplementedError

    def ray_exit(self, point, direction) -> float:
        """Distance t > 0 with point + t*direction on the boundary.

        direction need not be normalized; t is in units of |direction|.
        point must be interior.
        """
        raise NotImplementedError

    def cell_area(self, x0, x1, y0, y1) -> float:
        """Exact area of [x0, x1] x [y0, y1] intersected with the domain."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


class Polygon(ConvexDomain):
    kind = "polygon"

    def __init__(self, vertices, allow_collinear=False):
        """Convex polygon from a counterclockwise vertex list.

        Parameters
        ----------
        vertices : sequence of (x, y)
            At least 3 vertices, counterclockwise, convex position.
        allow_collinear : bool
            Permit three consecutive collinear vertices (explicit flat
            edge subdivision).  Off by default.

        Raises
        ------
        ValueError
            Clockwise ordering, fewer than 3 vertices, nonconvex corner,
            or unrequested collinear triple.
        """
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[0] < 3 or v.shape[1] != 2:
            raise ValueError("polygon needs >= 3 two-dimensional vertices")
        scale = float(np.max(np.abs(v))) or 1.0
        tol = EPS * scale * scale
        e = np.roll(v, -1, axis=0) - v
        cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        if np.any(cross < -tol):
            raise ValueError("polygon vertices must be counterclockwise and convex")
        if np.any(np.abs(cross) <= tol) and not allow_collinear:
            raise ValueError(
                "three consecutive collinear vertices; pass allow_collinear=True "
                "for an explicit flat edge subdivision"
            )
        area2 = float(np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1]))
        if area2 <= tol:
            raise ValueError("polygon area must be positive")
        self.vertices = v
        self._edge_vec = e
        self._area = 0.5 * area2
        d = v[:, None, :] - v[None, :, :]
        self._diameter = float(np.sqrt((d * d).sum(axis=2).max()))

    # -- basic queries ---------------------------------------------------

    def contains(self, point) -> bool:
        p = np.asarray(point, dtype=float)
        rel = p - self.vertices
        cr = self._edge_vec[:, 0] * rel[:, 1] - self._edge_vec[:, 1] * rel[:, 0]
        return bool(np.all(cr > EPS * max(1.0, self._diameter ** 2)))

    def _in_closure(self, p):
        rel = p - self.vertices
        cr = self._edge_vec[:, 0] * rel[:, 1] - self._edge_vec[:, 1] * rel[:, 0]
        return bool(np.all(cr >= -EPS * max(1.0, self._diameter ** 2)))

    def contains_closure(self, point) -> bool:
        return self._in_closure(np.asarray(point, dtype=float))

    def contains_many(self, points, closure=False):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        rel = pts[:, None, :] - self.vertices[None, :, :]
        cr = (self._edge_vec[None, :, 0] * rel[:, :, 1]
              - self._edge_vec[None, :, 1] * rel[:, :, 0])
        tol = EPS * max(1.0, self._diameter ** 2)
        if closure:
            return (cr >= -tol).all(axis=1)
        return (cr > tol).all(axis=1)

    def dist_boundary(self, point) -> float:
        """Exact distance to the boundary (point-to-segment minimum)."""
        p = np.asarray(point, dtype=float)
        if not self._in_closure(p):
            raise DomainError(f"point {p.tolist()} outside polygon closure")
        dists, _, _ = self._seg_dists(p)
        return float(dists.min())

    def _seg_dists(self, p):
        rel = p - self.vertices
        ee = (self._edge_vec * self._edge_vec).sum(axis=1)
        t = np.clip((rel * self._edge_vec).sum(axis=1) / ee, 0.0, 1.0)
        foot = self.vertices + t[:, None] * self._edge_vec
        return np.hypot(*(p - foot).T), t, foot

    def dist_boundary_many(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.empty(len(pts))
        for i, p in enumerate(pts):
            out[i] = self.dist_boundary(p)
        return out

    def diameter(self) -> float:
        return self._diameter

    def area(self) -> float:
        return self._area

    def bounding_box(self):
        v = self.vertices
        return (v[:, 0].min(), v[:, 1].min(), v[:, 0].max(), v[:, 1].max())

    # -- edges and frames ------------------------------------------------

    def edges(self):
        """List of (start, end) vertex pairs, counterclockwise."""
        return [(self.vertices[i], self.vertices[(i + 1) % len(self.vertices)])
                for i in range(len(self.vertices))]

    def edge_midpoint(self, edge_index):
        a, b = self.edges()[edge_index]
        return 0.5 * (a + b)

    def edge_inward_normal(self, edge_index):
        e = self._edge_vec[edge_index]
        n = np.array([-e[1], e[0]])
        return n / np.hypot(n[0], n[1])

    def boundary_frame(self, z) -> BoundaryFrame:
        """Frame at a nearest boundary point to the interior point z.

        Ties (several nearest candidates within 1e-12 of the minimum)
        break to the lexicographically smallest (edge index, parameter).
        """
        p = np.asarray(z, dtype=float)
        if not self.contains(p):
            raise DomainError(f"boundary_frame needs an interior point, got {p.tolist()}")
        dists, t, foot = self._seg_dists(p)
        dmin = dists.min()
        tol = EPS * max(1.0, self._diameter)
        best = None
        for i in np.flatnonzero(dists <= dmin + tol):
            key = (i, t[i])
            if best is None or key < best[0]:
                best = (key, foot[i])
        (edge_index, param), b = best
        nu = (p - b) / np.hypot(*(p - b))
        return BoundaryFrame(b, _frame_from_contact(b, nu), edge_index, param)

    def ray_exit(self, point, direction) -> float:
        p = np.asarray(point, dtype=float)
        d = np.asarray(direction, dtype=float)
        if not self.contains(p):
            raise DomainError("ray_exit needs an interior start point")
        # crossing parameter with each edge's supporting line; convexity
        # gives exactly one forward segment hit
        t_best = math.inf
        for i in range(len(self.vertices)):
            e = self._edge_vec[i]
            denom = d[0] * e[1] - d[1] * e[0]
            if abs(denom) < EPS:
                continue
            rel = self.vertices[i] - p
            t = (rel[0] * e[1] - rel[1] * e[0]) / denom
            s = (rel[0] * d[1] - rel[1] * d[0]) / denom
            if t > 0 and -EPS <= s <= 1 + EPS and t < t_best:
                t_best = t
        if not math.isfinite(t_best):
            raise DomainError("ray does not exit the polygon (degenerate direction)")
        return float(t_best)

    def cell_area(self, x0, x1, y0, y1) -> float:
        # Sutherland-Hodgman clip of the rectangle against each edge
        # half-plane, then shoelace; exact for polygon/rectangle overlap
        poly = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
        for i in range(len(self.vertices)):
            a = self.vertices[i]
            e = self._edge_vec[i]
            out = []
            m = len(poly)
            for j in range(m):
                P, Q = poly[j], poly[(j + 1) % m]
                sp = e[0] * (P[1] - a[1]) - e[1] * (P[0] - a[0])
                sq = e[0] * (Q[1] - a[1]) - e[1] * (Q[0] - a[0])
                if sp >= 0:
                    out.append(P)
                if (sp > 0) != (sq > 0) and sp != sq:
                    w = sp / (sp - sq)
                    out.append((P[0] + w * (Q[0] - P[0]), P[1] + w * (Q[1] - P[1])))
            poly = out
            if len(poly) < 3:
                return 0.0
        a2 = 0.0
        for j in range(len(poly)):
            P, Q = poly[j], poly[(j + 1) % len(poly)]
            a2 += P[0] * Q[1] - Q[0] * P[1]
        return 0.5 * abs(a2)

    def largest_flat_halfwidth(self, edge_index) -> float:
        """Largest s with the box {|x1| < s, 0 < x2 < s} (frame at the
        edge midpoint) inside the closed domain.

        Convexity reduces the test to the box corners.  Used to place the
        flat-boundary supersolution and to cap profile spans.
        """
        mid = self.edge_midpoint(edge_index)
        nu = self.edge_inward_normal(edge_index)
        tau = np.array([nu[1], -nu[0]])

        def fits(s):
            for cx in (-s, s):
                for cy in (0.0, s):
                    q = mid + cx * tau + cy * nu
                    if not self._in_closure(q):
                        return False
            return True

        lo, hi = 0.0, 0.5 * self._diameter
        if fits(hi):
            return hi
        for _ in range(80):
            m = 0.5 * (lo + hi)
            if fits(m):
                lo = m
            else:
                hi = m
        return lo

    def to_dict(self) -> dict:
        return {"kind": "polygon", "vertices": self.vertices.tolist()}


class Disc(ConvexDomain):
    kind = "disc"

    def __init__(self, center, radius):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        if self.radius <= 0:
            raise ValueError("disc radius must be positive")

    def contains(self, point) -> bool:
        p = np.asarray(point, dtype=float)
        return bool(np.hypot(*(p - self.center)) < self.radius - EPS)

    def contains_closure(self, point) -> bool:
        p = np.asarray(point, dtype=float)
        return bool(np.hypot(*(p - self.center))
                    <= self.radius + EPS * max(1.0, self.radius))

    def contains_many(self, points, closure=False):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        r = np.hypot(pts[:, 0] - self.center[0], pts[:, 1] - self.center[1])
        if closure:
            return r <= self.radius + EPS * max(1.0, self.radius)
        return r < self.radius - EPS

    def dist_boundary(self, point) -> float:
        p = np.asarray(point, dtype=float)
        r = np.hypot(*(p - self.center))
        if r > self.radius + EPS * max(1.0, self.radius):
            raise DomainError(f"point {p.tolist()} outside disc closure")
        return float(max(self.radius - r, 0.0))

    def dist_boundary_many(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        r = np.hypot(pts[:, 0] - self.center[0], pts[:, 1] - self.center[1])
        if np.any(r > self.radius + EPS * max(1.0, self.radius)):
            raise DomainError("point outside disc closure")
        return np.maximum(self.radius - r, 0.0)

    def diameter(self) -> float:
        return 2.0 * self.radius

    def area(self) -> float:
        return math.pi * self.radius ** 2

    def bounding_box(self):
        c, r = self.center, self.radius
        return (c[0] - r, c[1] - r, c[0] + r, c[1] + r)

    def boundary_frame(self, z) -> BoundaryFrame:
        """Frame at the radial projection of z onto the circle.

        At the exact center every boundary point is nearest; the tie rule
        (single edge 0, parameter = polar angle) picks angle 0.
        """
        p = np.asarray(z, dtype=float)
        if not self.contains(p):
            raise DomainError(f"boundary_frame needs an interior point, got {p.tolist()}")
        v = p - self.center
        r = np.hypot(v[0], v[1])
        if r < EPS * self.radius:
            b = self.center + np.array([self.radius, 0.0])
            nu = np.array([-1.0, 0.0])
            angle = 0.0
        else:
            u = v / r
            b = self.center + self.radius * u
            nu = -u
            angle = math.atan2(u[1], u[0]) % (2 * math.pi)
        return BoundaryFrame(b, _frame_from_contact(b, nu), 0, angle)

    def boundary_point(self, angle) -> np.ndarray:
        """Boundary point at the given polar angle (radians)."""
        return self.center + self.radius * np.array([math.cos(angle), math.sin(angle)])

    def ray_exit(self, point, direction) -> float:
        p = np.asarray(point, dtype=float) - self.center
        d = np.asarray(direction, dtype=float)
        if np.hypot(p[0], p[1]) >= self.radius - EPS:
            raise DomainError("ray_exit needs an interior start point")
        a = d @ d
        b = p @ d
        c = p @ p - self.radius ** 2
        disc = b * b - a * c
        return float((-b + math.sqrt(disc)) / a)

    def cell_area(self, x0, x1, y0, y1) -> float:
        # area of rect x circle via the exact chord integral: with the
        # circle at the origin, area = F(yh) - F(yl) where
        # F(Y) = integral over [x0, x1] of sign(Y) * min(|Y|, g(x)) dx,
        # g(x) = sqrt((r^2 - x^2)+), split at the crossings g(x) = |Y|
        r = self.radius
        ax0, ax1 = x0 - self.center[0], x1 - self.center[0]
        ay0, ay1 = y0 - self.center[1], y1 - self.center[1]

        def G(t):
            t = min(max(t, -r), r)
            return 0.5 * (t * math.sqrt(max(r * r - t * t, 0.0))
                          + r * r * math.asin(min(max(t / r, -1.0), 1.0)))

        def F(Y):
            if Y == 0.0:
                return 0.0
            s = 1.0 if Y > 0 else -1.0
            yy = abs(Y)
            lo, hi = max(ax0, -r), min(ax1, r)
            if lo >= hi:
                return 0.0
            if yy >= r:
                return s * (G(hi) - G(lo))
            xc = math.sqrt(r * r - yy * yy)
            total = 0.0
            # |x| <= xc: g(x) >= yy, integrand = yy; else integrand = g(x)
            a, b = lo, min(hi, -xc)
            if b > a:
                total += G(b) - G(a)
            a, b = max(lo, -xc), min(hi, xc)
            if b > a:
                total += yy * (b - a)
            a, b = max(lo, xc), hi
            if b > a:
                total += G(b) - G(a)
            return s * total

        return max(F(ay1) - F(ay0), 0.0)

    def to_dict(self) -> dict:
        return {"kind": "disc", "center": self.center.tolist(), "radius": self.radius}


def domain_from_dict(d: dict) -> ConvexDomain:
    """Build a domain from its JSON description.

    {"kind": "polygon", "vertices": [[x, y], ...]} or
    {"kind": "disc", "center": [x, y], "radius": r}.
    """
    kind = d.get("kind")
    if kind == "polygon":
        return Polygon(d["vertices"], allow_collinear=bool(d.get("allow_collinear", False)))
    if kind == "disc":
        return Disc(d["center"], d["radius"])
    raise ValueError(f"unknown domain kind: {kind!r}")


def unit_square() -> Polygon:
    return Polygon([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])


def unit_disc() -> Disc:
    return Disc((0.0, 0.0), 1.0)
