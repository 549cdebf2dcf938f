"""Inverse iteration for the eigenvalue problem and power-law fixed points.

Two drivers on top of the Dirichlet solver: ``inverse_iteration``
computes the eigenvalue lam and eigenfunction of det D^2 u = lam |u|^n
(n = 2) by repeatedly solving det D^2 u_{k+1} = R(u_k) |u_k|^n, and
``solve_power`` computes the solution of det D^2 u = M |u|^p for
subcritical exponents 0 <= p < 2 by damped Picard iteration.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import ConvexDomain
from .grid import Grid, GridFunction, build_grid, discrete_ma
from .solver import IterationError, SolveOptions, SolveReport, solve_dirichlet

__all__ = [
    "EigenOptions",
    "EigenReport",
    "InstabilityError",
    "RayleighState",
    "inverse_iteration",
    "rayleigh_quotient",
    "solve_power",
]

log = logging.getLogger(__name__)

# ambient dimension of the grid layer
N_DIM = 2


class InstabilityError(RuntimeError):
    """Rayleigh history escaped its configured ceiling."""

    def __init__(self, message: str, history=()):
        super().__init__(message)
        self.history = tuple(history)


@dataclass
class EigenOptions:
    """Knobs for the outer iterations.

    Parameters
    ----------
    h : float
        Grid spacing for the inner solves.
    stencil_width : int
        1 or 2, forwarded to build_grid.
    tol : float
        Relative tolerance, applied both to the Rayleigh quotient and to
        the sup-normalized iterate change.
    max_outer : int
        Outer iteration budget.
    ceiling_factor : float
        The run aborts if some R_k exceeds
        ceiling_factor * max(R_0, previous R).
    omega : float or None
        Picard relaxation for solve_power; None selects 0.5 for p >= 1
        and 1.0 for p < 1.
    keep_states : bool
        Retain the full per-iterate states in the report.
    solver : SolveOptions
        Options for the inner Dirichlet solves.
    """

    h: float
    stencil_width: int = 1
    tol: float = 1e-6
    max_outer: int = 200
    ceiling_factor: float = 10.0
    omega: float | None = None
    keep_states: bool = False
    solver: SolveOptions = field(
        default_factory=lambda: SolveOptions(method="damped_newton"))

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("h must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_outer < 1:
            raise ValueError("max_outer must be at least 1")
        if not self.ceiling_factor > 1:
            raise ValueError("ceiling_factor must exceed 1")
        if self.omega is not None and not 0 < self.omega <= 1:
            raise ValueError("omega must lie in (0, 1]")


@dataclass(frozen=True)
class RayleighState:
    """One step of the inverse iteration."""

    k: int
    u: GridFunction
    rayleigh: float
    weights: GridFunction
    residuals: tuple[float, ...]


@dataclass(frozen=True)
class EigenReport:
    """Outcome of inverse_iteration.

    eigenfunction is sup-normalized (min = -1); history holds every
    Rayleigh value R_0 .. R_K.
    """

    eigenvalue: float
    eigenfunction: GridFunction
    history: tuple[float, ...]
    converged: bool
    iterations: int
    h: float
    stencil_width: int
    n_nodes: int
    states: tuple[RayleighState, ...] = ()


def _as_values(grid: Grid, data) -> np.ndarray:
    if isinstance(data, GridFunction):
        if data.grid is not grid:
            raise ValueError("GridFunction belongs to a different grid")
        return np.asarray(data.values, dtype=float)
    if callable(data):
        return np.asarray(data(grid.xy[:, 0], grid.xy[:, 1]), dtype=float)
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 0:
        return np.full(grid.n_nodes, float(arr))
    if arr.shape != (grid.n_nodes,):
        raise ValueError(
            f"expected {grid.n_nodes} nodal values, got shape {arr.shape}")
    return arr


def rayleigh_quotient(u: GridFunction, ma_values) -> float:
    """Discrete Rayleigh quotient R(u) = int |u| dMu / int |u|^{n+1}.

    Parameters
    ----------
    u : GridFunction
        Nonpositive candidate, not identically zero.
    ma_values : GridFunction, callable, scalar, or array
        Nonnegative density of the Monge-Ampere measure of u at the
        nodes (for solver output, the right-hand side it was solved
        with).

    Returns
    -------
    float
        Positive quotient; cut cells are weighted by their clipped cell
        area, interior cells by h^2.

    Raises
    ------
    ValueError
        If u vanishes identically (zero denominator) or ma_values
        vanish everywhere u is nonzero (zero numerator).
    """
    grid = u.grid
    m = _as_values(grid, ma_values)
    if m.min() < 0:
        raise ValueError("ma_values must be nonnegative")
    au = np.abs(np.asarray(u.values, dtype=float))
    w = grid.cell_w
    den = float((au ** (N_DIM + 1) * w).sum())
    if den == 0.0:
        raise ValueError("Rayleigh quotient undefined: u vanishes identically")
    num = float((au * m * w).sum())
    if num == 0.0:
        raise ValueError(
            "Rayleigh quotient is zero: ma_values vanish wherever u != 0")
    return num / den


def _initial_pair(grid: Grid, u0_spec):
    """Resolve u0_spec into nodal values and their MA density."""
    if isinstance(u0_spec, str):
        if u0_spec != "quadratic":
            raise ValueError(f"unknown initial-data keyword {u0_spec!r}")
        c = grid.xy.mean(axis=0)
        r2 = ((grid.xy - c) ** 2).sum(axis=1)
        return r2 - float(r2.max()), np.full(grid.n_nodes, 4.0)
    if isinstance(u0_spec, tuple):
        if len(u0_spec) != 2:
            raise ValueError("u0_spec tuple must be (values, ma_values)")
        return _as_values(grid, u0_spec[0]), _as_values(grid, u0_spec[1])
    u0 = _as_values(grid, u0_spec)
    # no closed-form measure supplied: fall back to the discrete operator
    return u0, discrete_ma(grid.function(u0)).values


def inverse_iteration(domain: ConvexDomain, u0_spec, opts: EigenOptions
                      ) -> EigenReport:
    """Approximate the eigenvalue by the inverse-iteration scheme.

    Iterates u_{k+1} = solve(R(u_k) |u_k|^n) with zero boundary data;
    for k >= 1 the quotient R(u_k) is evaluated with the exact
    right-hand side that produced u_k, so no extra discretization error
    enters the quotient.

    Parameters
    ----------
    domain : ConvexDomain
        Bounded convex domain.
    u0_spec : "quadratic", callable, GridFunction, or (u0, ma) tuple
        Initial iterate. "quadratic" uses the paraboloid
        |x - c|^2 - max |x - c|^2 whose MA density is exactly 4; a bare
        callable or GridFunction gets its density from the discrete
        operator; an explicit pair supplies both.
    opts : EigenOptions
        Grid spacing, tolerances, budgets.

    Returns
    -------
    EigenReport
        Final eigenvalue estimate (the last Rayleigh value), the
        sup-normalized eigenfunction, and the full Rayleigh history.

    Raises
    ------
    ValueError
        On degenerate initial data (zero Rayleigh quotient).
    InstabilityError
        If some R_k exceeds ceiling_factor * max(R_0, R_{k-1}).
    IterationError
        Propagated from a failed inner solve.
    """
    grid = build_grid(domain, opts.h, opts.stencil_width)
    u, m = _initial_pair(grid, u0_spec)
    if u.max() > 0:
        raise ValueError("initial iterate must be nonpositive")
    r = rayleigh_quotient(grid.function(u), m)
    history = [r]
    residuals: list[float] = []
    states: list[RayleighState] = []
    if opts.keep_states:
        states.append(RayleighState(0, grid.function(u.copy()), r,
                                    grid.function(m.copy()), ()))
    norm_prev = u / -u.min() if u.min() < 0 else u
    converged = False
    for k in range(1, opts.max_outer + 1):
        f = history[-1] * np.abs(u) ** N_DIM
        sol, rep = solve_dirichlet(grid, f, opts.solver, initial=u)
        residuals.append(rep.residual)
        r_new = rayleigh_quotient(sol, f)
        ceiling = opts.ceiling_factor * max(history[0], history[-1])
        if r_new > ceiling:
            raise InstabilityError(
                f"Rayleigh value {r_new:.6g} exceeded the stability ceiling "
                f"{ceiling:.6g} at iterate {k}", history + [r_new])
        u = sol.values
        norm = u / -u.min() if u.min() < 0 else u
        dr = abs(r_new - history[-1])
        du = float(np.max(np.abs(norm - norm_prev)))
        history.append(r_new)
        norm_prev = norm
        if opts.keep_states:
            states.append(RayleighState(k, grid.function(u.copy()), r_new,
                                        grid.function(f), tuple(residuals)))
        if dr <= opts.tol * r_new and du <= opts.tol:
            converged = True
            break
    lam = history[-1]
    return EigenReport(
        eigenvalue=lam,
        eigenfunction=grid.function(norm_prev.copy()),
        history=tuple(history),
        converged=converged,
        iterations=len(history) - 1,
        h=opts.h,
        stencil_width=opts.stencil_width,
        n_nodes=grid.n_nodes,
        states=tuple(states),
    )


def solve_power(domain: ConvexDomain, p: float, M: float,
                opts: EigenOptions) -> tuple[GridFunction, SolveReport]:
    """Solve det D^2 u = M |u|^p, u = 0 on the boundary, for 0 <= p < 2.

    Damped Picard iteration: u_{j+1} = (1 - omega) u_j + omega v where v
    solves the Dirichlet problem with frozen right-hand side M |u_j|^p.
    The first iterate solves with f = M.

    Parameters
    ----------
    domain : ConvexDomain
        Bounded convex domain.
    p : float
        Exponent in [0, 2); p = 2 is the eigenvalue problem and is
        rejected with a pointer to inverse_iteration.
    M : float
        Positive coefficient.
    opts : EigenOptions
        Grid spacing, relaxation omega, tolerances.

    Returns
    -------
    (GridFunction, SolveReport)
        The fixed point and a report accumulating all inner sweeps; the
        report's residual is the final relative sup-norm update.

    Raises
    ------
    ValueError
        For p outside [0, 2) or M <= 0.
    IterationError
        If the relative update does not fall below tol within the
        outer budget.
    """
    if p == N_DIM:
        raise ValueError(
            "p = 2 is the eigenvalue problem: use inverse_iteration")
    if not 0 <= p < N_DIM:
        raise ValueError(f"exponent p = {p} outside the subcritical range [0, 2)")
    if not M > 0:
        raise ValueError("M must be positive")
    t0 = time.perf_counter()
    grid = build_grid(domain, opts.h, opts.stencil_width)
    omega = opts.omega if opts.omega is not None else (0.5 if p >= 1 else 1.0)
    sol, rep = solve_dirichlet(grid, M, opts.solver)
    u = sol.values
    sweeps = rep.sweeps
    rel = np.inf
    for _ in range(opts.max_outer):
        if p == 0:
            rel = 0.0
            break
        f = M * np.abs(u) ** p
        # inner accuracy tracks the outer error: resolving the frozen-f
        # problem far below the Picard update size buys nothing
        inner = replace(opts.solver, tol=float(np.clip(
            0.02 * rel, opts.solver.tol, 1e-3)))
        sol, rep = solve_dirichlet(grid, f, inner, initial=u)
        sweeps += rep.sweeps
        u_next = (1.0 - omega) * u + omega * sol.values
        scale = max(float(np.abs(u_next).max()), 1e-300)
        rel = float(np.abs(u_next - u).max()) / scale
        u = u_next
        if rel <= opts.tol:
            break
    else:
        raise IterationError(
            f"power fixed point did not reach tol={opts.tol} within "
            f"{opts.max_outer} outer iterations (last update {rel:.3e})",
            residual=rel)
    sup = float(np.abs(u).max())
    if sup > 0:
        # sanity band M ||u||^{p-n} ~ |Omega|^{-2} for the degenerate family
        const = M * sup ** (p - N_DIM) * domain.area() ** 2
        log.info("power solve p=%g M=%g: realized degeneracy constant "
                 "M sup|u|^{p-2} |Omega|^2 = %.6g", p, M, const)
    return grid.function(u), SolveReport(
        residual=rel, sweeps=sweeps, monotone=True,
        runtime=time.perf_counter() - t0,
        method=opts.solver.method, converged=True)
