"""Checks on computed solutions: Lipschitz ratios, boundary growth
exponents, Hessian integrability, and comparison orderings.

Solutions here are nonpositive convex grid functions produced by the
solver or eigensolver.  Every operation is a pure function of its
arguments and never mutates the grid function it inspects.
"""

import math
from dataclasses import dataclass

import numpy as np

from .barriers import BarrierReport, BarrierSpec, LipschitzSub
from .geometry import Disc, DomainError, Polygon
from .grid import GridFunction

N_DIM = 2

# growth model |u| ~ C * d * |log d|^beta; regressor X = log|log d|
FIT_MIN_SAMPLES = 8
FIT_MIN_DECADES = 1.5
BETA_CLAMP = (0.0, float(N_DIM))


def _node_distances(grid) -> np.ndarray:
    dom = grid.domain
    if hasattr(dom, "dist_boundary_many"):
        return np.asarray(dom.dist_boundary_many(grid.xy), dtype=float)
    return np.array([dom.dist_boundary(q) for q in grid.xy], dtype=float)


@dataclass(frozen=True, eq=False)
class GrowthProfile:
    """Samples of |u| along one inward normal with a fitted growth law.

    The samples (d_i, |u(z_i)|) run from the largest distance down
    toward the boundary, log-spaced, never below twice the grid
    spacing.  The fitted model is |u| = C * d * |log d|^beta with
    beta clamped to [0, 2].
    """

    point: np.ndarray           # boundary point the normal starts from
    normal: np.ndarray          # unit inward normal
    d: np.ndarray               # sample distances, strictly decreasing
    abs_u: np.ndarray           # |u| at point + d * normal
    h: float                    # grid spacing of the sampled function
    C: float = math.nan
    beta: float = math.nan
    residual: float = math.nan

    def __post_init__(self):
        for name in ("point", "normal", "d", "abs_u"):
            object.__setattr__(self, name,
                               np.asarray(getattr(self, name), dtype=float))
        if self.d.ndim != 1 or self.d.shape != self.abs_u.shape:
            raise ValueError("d and abs_u must be 1-d arrays of equal length")
        if len(self.d) and not np.all(np.diff(self.d) < 0):
            raise ValueError("sample distances must be strictly decreasing")
        if not self.h > 0:
            raise ValueError(f"grid spacing h = {self.h} must be positive")
        if len(self.d) and self.d[-1] < 2 * self.h * (1 - 1e-9):
            raise ValueError("samples below the 2h resolution floor")

    @property
    def n_samples(self) -> int:
        return len(self.d)


@dataclass(frozen=True, eq=False)
class W21Report:
    """Discrete Hessian integrals and the divergence identity.

    hessian_l1 and laplacian_l1 are sums of the nodal Hilbert-Schmidt
    norm and Laplacian times h^2; flux sums one-sided normal
    derivatives over boundary crossings times the h arc-length of the
    staircase.  cut_mask flags nodes whose Hessian stencil used a
    one-sided boundary leg.
    """

    hessian_l1: float
    laplacian_l1: float
    flux: float
    hs_to_laplacian: float      # hessian_l1 / laplacian_l1
    ibp_mismatch: float         # |laplacian_l1 - flux| / |flux|
    convex_fraction: float      # nodes with ||D2u|| <= Laplacian + slack
    cut_mask: np.ndarray
    h: float


def check_lipschitz(u: GridFunction):
    """Empirical global Lipschitz constant of a solution.

    Parameters
    ----------
    u : GridFunction
        Nonzero solution on its grid.

    Returns
    -------
    C_emp : float
        max over nodes of |u| / (dist * sup|u|), the scale-normalized
        ratio whose boundedness is the global Lipschitz property.
    location : ndarray, shape (2,)
        Coordinates of the maximizing node.
    """
    sup = u.sup_norm()
    if sup == 0.0:
        raise ValueError("Lipschitz ratio of the zero function is undefined")
    dist = _node_distances(u.grid)
    ratio = np.abs(u.values) / (dist * sup)
    k = int(np.argmax(ratio))
    return float(ratio[k]), u.grid.xy[k].copy()


def _edge_contact(poly: Polygon, b: np.ndarray):
    """(edge index, halfwidth to nearest endpoint) for an edge-interior b."""
    verts = poly.vertices
    tol = 1e-9 * poly.diameter()
    m = len(verts)
    for i in range(m):
        p, q = verts[i], verts[(i + 1) % m]
        e = q - p
        L = math.hypot(e[0], e[1])
        t = float(np.dot(b - p, e)) / (L * L)
        foot = p + np.clip(t, 0.0, 1.0) * e
        if math.hypot(*(b - foot)) <= tol:
            end = min(t, 1.0 - t) * L
            if end <= tol:
                raise DomainError(
                    "profile point sits on a vertex: the inward normal "
                    "is ambiguous there")
            return i, end
    raise DomainError(f"{b.tolist()} is not on the polygon boundary")


def profile_normal(u: GridFunction, boundary_point, n_samples: int = 16,
                   d_max: float | None = None) -> GrowthProfile:
    """Sample |u| along the inward normal and fit the growth model.

    Parameters
    ----------
    u : GridFunction
        Solution to sample (bilinear interpolation between nodes).
    boundary_point : array_like, shape (2,)
        Point on the domain boundary.  For a polygon it must lie in
        the interior of an edge so the normal is single-valued.
    n_samples : int
        Number of log-spaced samples, at least 8.
    d_max : float, optional
        Largest sample distance.  Defaults to min(s, diameter / 4)
        where s is the flat halfwidth around the point (infinite on a
        disc); an explicit value must stay inside the domain.

    Returns
    -------
    GrowthProfile
        Samples ordered from d_max down to the 2h floor, with the
        fitted (C, beta, residual) filled in.
    """
    if n_samples < FIT_MIN_SAMPLES:
        raise ValueError(
            f"need n_samples >= {FIT_MIN_SAMPLES} for the growth fit")
    grid = u.grid
    dom = grid.domain
    b = np.asarray(boundary_point, dtype=float)

    if isinstance(dom, Disc):
        radial = b - dom.center
        r = math.hypot(radial[0], radial[1])
        if abs(r - dom.radius) > 1e-9 * dom.radius:
            raise DomainError(f"{b.tolist()} is not on the circle")
        normal = -radial / r
        halfwidth = math.inf
    elif isinstance(dom, Polygon):
        edge, halfwidth = _edge_contact(dom, b)
        normal = dom.edge_inward_normal(edge)
    else:
        raise DomainError("profile_normal needs a polygon or disc domain")

    floor = 2.0 * grid.h
    cap = min(halfwidth, dom.diameter() / 4.0) if d_max is None else float(d_max)
    if not cap > floor:
        raise DomainError(
            f"profile window [{floor:g}, {cap:g}] is empty: the cap must "
            "exceed the 2h resolution floor")
    if not dom.contains(b + floor * normal):
        raise DomainError("inward normal leaves the domain before 2h")
    t_exit = floor + dom.ray_exit(b + floor * normal, normal)
    if d_max is not None and cap >= t_exit:
        raise DomainError(
            f"d_max = {cap:g} reaches past the exit chord length {t_exit:g}")
    cap = min(cap, t_exit * (1 - 1e-9))

    d = np.geomspace(cap, floor, n_samples)
    pts = b[None, :] + d[:, None] * normal[None, :]
    abs_u = np.abs(u(pts))
    raw = GrowthProfile(point=b, normal=normal, d=d, abs_u=abs_u, h=grid.h)
    C, beta, residual = fit_log_exponent(raw)
    return GrowthProfile(point=b, normal=normal, d=d, abs_u=abs_u, h=grid.h,
                         C=C, beta=beta, residual=residual)


def fit_log_exponent(profile: GrowthProfile):
    """Least-squares exponent of the boundary growth model.

    Fits log(|u|/d) = log C + beta * log|log d| over the profile's
    samples, clamping beta to [0, 2] (re-optimizing C when the clamp
    binds) and reporting the root-mean-square residual of the
    returned model.

    Parameters
    ----------
    profile : GrowthProfile
        At least 8 samples spanning at least 1.5 decades, all at
        distances below 1.

    Returns
    -------
    C, beta, residual : float
    """
    d, au = profile.d, profile.abs_u
    if len(d) < FIT_MIN_SAMPLES:
        raise ValueError(
            f"growth fit needs at least {FIT_MIN_SAMPLES} samples, got {len(d)}")
    span = math.log10(float(d.max()) / float(d.min()))
    if span < FIT_MIN_DECADES - 1e-12:
        raise ValueError(
            f"samples span {span:.3f} decades; the fit needs at least "
            f"{FIT_MIN_DECADES}")
    if float(d.max()) >= 1.0:
        raise ValueError("growth model needs distances below 1, where "
                         "|log d| is positive")
    if np.any(au <= 0.0):
        raise ValueError("growth fit needs strictly positive |u| samples")

    X = np.log(-np.log(d))
    Y = np.log(au / d)
    A = np.vstack([X, np.ones_like(X)]).T
    (beta, logC), *_ = np.linalg.lstsq(A, Y, rcond=None)
    lo, hi = BETA_CLAMP
    if beta < lo or beta > hi:
        beta = min(max(beta, lo), hi)
        logC = float(np.mean(Y - beta * X))
    residual = float(np.sqrt(np.mean((Y - logC - beta * X) ** 2)))
    return float(np.exp(logC)), float(beta), residual


def w21_integral(u: GridFunction) -> W21Report:
    """Discrete Hessian mass and the integration-by-parts identity.

    Builds nodal second differences in the axis and diagonal
    directions (one-sided with exact offsets where a leg crosses the
    boundary), sums the Hilbert-Schmidt norm and the Laplacian with
    h^2 weights, and compares the Laplacian sum with the boundary
    flux of one-sided normal derivatives over the cut staircase.

    Parameters
    ----------
    u : GridFunction
        Solution on a polygon or disc grid.

    Returns
    -------
    W21Report
    """
    grid = u.grid
    h = grid.h
    d2 = grid.second_differences(u.values)
    uxx, uyy = d2[:, 0], d2[:, 1]
    # unit-direction diagonals carry (uxx + uyy)/2 +- uxy
    uxy = 0.5 * (d2[:, 2] - d2[:, 3])
    lap = uxx + uyy
    hs = np.sqrt(uxx ** 2 + uyy ** 2 + 2.0 * uxy ** 2)

    hessian_l1 = float(hs.sum() * h * h)
    laplacian_l1 = float(lap.sum() * h * h)

    # one crossing per cut axis ray: derivative (0 - u_i)/rho over a
    # staircase segment of length h
    cut_axis = grid.nbr[:, :4] == -1
    with np.errstate(divide="ignore", invalid="ignore"):
        one_sided = np.where(cut_axis, -u.values[:, None] / grid.rho[:, :4], 0.0)
    flux = float(one_sided.sum() * h)

    cut_mask = (grid.nbr[:, :8] == -1).any(axis=1)
    scale = float(np.abs(lap).max()) if len(lap) else 0.0
    convex_fraction = float(np.mean(hs <= lap + 1e-6 * scale)) if len(lap) else 1.0

    hs_to_lap = hessian_l1 / laplacian_l1 if laplacian_l1 != 0.0 else 0.0
    ibp = abs(laplacian_l1 - flux) / abs(flux) if flux != 0.0 else (
        0.0 if laplacian_l1 == 0.0 else math.inf)
    return W21Report(hessian_l1=hessian_l1, laplacian_l1=laplacian_l1,
                     flux=flux, hs_to_laplacian=float(hs_to_lap),
                     ibp_mismatch=float(ibp),
                     convex_fraction=convex_fraction,
                     cut_mask=cut_mask, h=h)


def comparison_check(u: GridFunction, barrier: BarrierSpec, p: float,
                     K: float, L: float, certificate: BarrierReport,
                     tol: float | None = None):
    """Ordering of a solution against a framed subsolution.

    If det D^2 v >= K|v|^p (certified by sampling) and
    det D^2 u <= L|u|^p, the comparison principle gives
    -u(z) <= (K/L)^{1/(p-2)} |v| at the frame coordinates of z.  Each
    node is framed at its own nearest boundary point, so its frame
    coordinates are (0, dist).

    Parameters
    ----------
    u : GridFunction
        Nonpositive solution.
    barrier : BarrierSpec
        Two-dimensional subsolution variant v.
    p : float
        Common exponent, in [0, 2).
    K, L : float
        Positive constants of the two inequalities.
    certificate : BarrierReport
        Passing subsolution report for this barrier at exponent p with
        constant c >= K, whose sampled region covers the nodes' frame
        coordinates.
    tol : float, optional
        Allowed violation, default 1e-8 * sup|u|.

    Returns
    -------
    holds : bool
    worst_margin : float
        min over nodes of bound - (-u); negative means a violation.
    """
    if not 0 <= p < N_DIM:
        raise ValueError(f"comparison needs p in [0, {N_DIM}), got {p}")
    if not (K > 0 and L > 0):
        raise ValueError("comparison constants K and L must be positive")
    if barrier.n != N_DIM:
        raise ValueError(f"barrier dimension {barrier.n} != {N_DIM}")
    if not isinstance(certificate, BarrierReport):
        raise ValueError("comparison needs a subsolution certificate "
                         "(a barrier verification report)")
    if certificate.mode != "subsolution":
        raise ValueError(f"certificate mode {certificate.mode!r} is not a "
                         "subsolution check")
    if certificate.variant != barrier.variant or \
            certificate.params != barrier.params_dict():
        raise ValueError("certificate was issued for a different barrier")
    if not certificate.passed:
        raise ValueError("certificate verdict is 'fail': the barrier "
                         "inequality is unverified")
    if certificate.p != p:
        raise ValueError(
            f"certificate exponent {certificate.p} != requested p = {p}")
    if certificate.c < K:
        raise ValueError(
            f"certificate constant c = {certificate.c:g} is weaker than "
            f"K = {K:g}")

    dist = _node_distances(u.grid)
    region = certificate.region
    if len(region) != N_DIM:
        raise ValueError("certificate carries no sampled region")
    for lo, hi in region[:-1]:
        if not lo <= 0.0 <= hi:
            raise ValueError("certificate region does not cover the "
                             "tangential origin")
    lo, hi = region[-1]
    if len(dist) and (dist.min() < lo - 1e-12 or dist.max() > hi + 1e-12):
        raise ValueError(
            f"certificate region height [{lo:g}, {hi:g}] does not cover "
            f"node distances [{dist.min():g}, {dist.max():g}]")

    pts = np.column_stack([np.zeros_like(dist), dist])
    vvals = barrier.value(pts)
    factor = (K / L) ** (1.0 / (p - N_DIM))
    margin = factor * np.abs(vvals) + u.values
    worst = float(margin.min()) if len(margin) else 0.0
    allowed = 1e-8 * u.sup_norm() if tol is None else float(tol)
    return bool(worst >= -allowed), worst


BOUND_KINDS = ("lipschitz_ii", "log_upper", "pow_2_over_n_minus_p")


def pointwise_bound_check(u: GridFunction, bound_kind: str,
                          p: float | None = None, M: float = 1.0,
                          tol: float | None = None) -> int:
    """Count nodes violating an explicit-constant pointwise bound.

    Parameters
    ----------
    u : GridFunction
        Solution whose data class matches the bound: distance-power
        data M * dist^p for "lipschitz_ii", constant data M (the
        critical exponent p = 0) for "log_upper".
    bound_kind : {"lipschitz_ii", "log_upper", "pow_2_over_n_minus_p"}
        Which bound to evaluate.  The power-growth window (0, n-2) is
        empty in two dimensions, so that kind is rejected here; see
        power_growth_bound for the n >= 3 constant.
    p : float, optional
        Data exponent.  Required positive for "lipschitz_ii"; must be
        0 (or omitted) for "log_upper".
    M : float
        Data amplitude.
    tol : float, optional
        Allowed violation, default 1e-8 * sup|u|.

    Returns
    -------
    int
        Number of nodes with |u| above the bound beyond tol.
    """
    if bound_kind not in BOUND_KINDS:
        raise ValueError(f"unknown bound kind {bound_kind!r}; "
                         f"expected one of {BOUND_KINDS}")
    if not M > 0:
        raise ValueError("data amplitude M must be positive")
    dom = u.grid.domain
    D = dom.diameter()
    dist = _node_distances(u.grid)

    if bound_kind == "pow_2_over_n_minus_p":
        raise ValueError(
            "the power-growth exponent window (0, n-2) is empty in two "
            "dimensions; use power_growth_bound for n >= 3")
    if bound_kind == "lipschitz_ii":
        if p is None or not p > 0:
            raise ValueError(
                "lipschitz_ii needs a distance-power exponent p > 0: at "
                "p = 0 the slope a = (2 + p)/2 = 1 degenerates the "
                "subsolution family")
        a = (2.0 + p) / N_DIM
        s = (M * 2.0 ** (1 - N_DIM) / a) ** (1.0 / N_DIM)
        B = LipschitzSub(N_DIM, a, D).B
        bound = s * B * dist
    else:
        if p is not None and p != N_DIM - 2:
            raise ValueError(
                f"log_upper applies to constant data (exponent "
                f"{N_DIM - 2}), got p = {p}")
        E = 1.0 + 4.0 * D * D
        s_log = math.exp(2 * N_DIM) * D
        bound = (M ** (1.0 / N_DIM)) * dist * (D * D + E * np.log(s_log / dist))

    allowed = 1e-8 * u.sup_norm() if tol is None else float(tol)
    return int(np.count_nonzero(np.abs(u.values) > bound + allowed))


def power_growth_bound(n: int, p: float, M: float, diam: float):
    """Explicit constant of the power-growth bound for n >= 3.

    For the convex solution of det D^2 u = M|u|^p with p in (0, n-2),
    the comparison against x_n^alpha (|x'|^2 - C_alpha) gives
    |u(z)| <= const * dist(z)^alpha with alpha = 2/(n-p).

    Parameters
    ----------
    n : int
        Dimension, at least 3 (the window (0, n-2) is empty below).
    p : float
        Exponent in (0, n-2).
    M, diam : float
        Data amplitude and domain diameter, both positive.

    Returns
    -------
    const, alpha : float
    """
    if int(n) != n or n < 3:
        raise ValueError(
            "power growth needs dimension n >= 3: the exponent window "
            "(0, n-2) is empty in two dimensions")
    if not 0 < p < n - 2:
        raise ValueError(f"exponent p = {p} outside the window (0, {n - 2})")
    if not (M > 0 and diam > 0):
        raise ValueError("M and diam must be positive")
    alpha = 2.0 / (n - p)
    C_alpha = (1.0 + 2.0 * diam * diam) / (alpha * (1.0 - alpha))
    K = C_alpha ** (-p)
    const = (K / M) ** (1.0 / (p - n)) * C_alpha
    return float(const), float(alpha)
