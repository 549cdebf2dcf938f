"""Explicit sub/supersolution barriers in boundary-frame coordinates.

Five parametric families on the upper half-space {x_n > 0}, each with
closed-form value, gradient, Hessian, and Hessian determinant, for any
dimension n >= 2:

* LipschitzSub  v = x_n^a (|x'|^2 + A) - B x_n          (a > 1)
* PowerSub      w = x_n^alpha (|x'|^2 - C_alpha)        (0 < alpha < 1)
* LogSub        w = f_a(x_n/s)(|x'|^2 - D^2) - E f_{a+1}(x_n/s)
* LogSuper      v = g(x_n)(|x'|^2 - 1)                  (0 < x_n < 1/e)
* FlatLogSuper  w = g(x_n/(e s))(|x'|^2 - s^2)          (0 < x_n < s)

with f_b(t) = t(-log t)^b and g(t) = t(-log t)^{1/n} - t.  The
subsolution families certify det D^2 v >= c|v|^p for their canonical
(p, c) pair; the supersolution families certify det D^2 v <= bound(x).
Verification is by low-discrepancy sampling with a log-uniform
refinement band near x_n = 0 and a long-double finite-difference
cross-check of the closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .geometry import DomainError

FD_GATE_XN = 1e-3          # finite-difference agreement is gated here and above
FD_RTOL = 1e-6
CLOSED_VS_MATRIX_RTOL = 1e-10
BAND_FLOOR = 1e-9          # log-uniform refinement band lower end


def _neglog(t):
    # -log t, preserving long double inputs
    return -np.log(t)


def _pow(base, expo):
    return np.power(base, expo)


def _f(t, b):
    """f_b(t) = t(-log t)^b for t in (0, 1)."""
    return t * _pow(_neglog(t), b)


def _fp(t, b):
    L = _neglog(t)
    return _pow(L, b) - b * _pow(L, b - 1)


def _fpp(t, b):
    L = _neglog(t)
    return -(b / t) * _pow(L, b - 1) - (b * (1 - b) / t) * _pow(L, b - 2)


def _g(t, n):
    # t((-log t)^{1/n} - 1) with expm1 care near t = 1/e where the
    # bracket vanishes
    L = _neglog(t)
    return t * np.expm1(np.log(L) / n)


def _gp(t, n):
    return _fp(t, 1.0 / n) - 1.0


def _gpp(t, n):
    return _fpp(t, 1.0 / n)


class BarrierSpec:
    """Base of the tagged barrier family.

    Coordinates are frame coordinates x = (x', x_n) with the domain in
    the upper half-space.  Points are arrays of shape (n,) or (m, n).
    """

    variant = ""

    def __init__(self, n: int):
        if int(n) != n or n < 2:
            raise ValueError("dimension n must be an integer >= 2")
        self.n = int(n)

    # subclasses implement _value/_gradient/_hessian/_det on validated x
    def _validity_interval(self):
        """(lo, hi) of the open x_n validity interval."""
        raise NotImplementedError

    def _fd_ceiling(self):
        """First x_n > validity where the closed form stops evaluating.

        Difference stencils may poke past the validity interval (the
        formulas extend smoothly) but must stay below this point.
        """
        return math.inf

    def _prep(self, x):
        x = np.asarray(x)
        if x.dtype.kind != "f":
            x = x.astype(float)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        if x.shape[-1] != self.n:
            raise ValueError(f"expected points of dimension {self.n}, got {x.shape[-1]}")
        return x, single

    def validate(self, x):
        x, single = self._prep(x)
        lo, hi = self._validity_interval()
        xn = x[..., -1]
        if np.any(xn <= lo) or np.any(xn >= hi):
            raise DomainError(
                f"{self.variant}: x_n must lie in the open interval ({lo}, {hi})")
        return x

    def value(self, x):
        """Closed-form barrier value; continuous extension 0 at x_n = 0."""
        x, single = self._prep(x)
        xn = x[..., -1]
        lo, hi = self._validity_interval()
        if np.any(xn < lo) or np.any(xn >= hi):
            raise DomainError(f"{self.variant}: x_n outside [{lo}, {hi})")
        out = np.zeros(x.shape[:-1], dtype=x.dtype)
        pos = xn > lo
        if np.any(pos):
            out[pos] = self._value(x[pos])
        return float(out[0]) if single else out

    def gradient(self, x):
        xv, single = self._prep(x)
        out = self._gradient(self.validate(xv))
        return out[0] if single else out

    def hessian(self, x):
        xv, single = self._prep(x)
        out = self._hessian(self.validate(xv))
        return out[0] if single else out

    def hessian_det_closed(self, x):
        """Exact closed-form value of det D^2 v at x."""
        xv, single = self._prep(x)
        out = self._det(self.validate(xv))
        return float(out[0]) if single else out

    # -- assembly helpers ---------------------------------------------------

    def _arrowhead(self, diag_t, cross, dnn, x):
        """Hessian with constant tangential diagonal, arrowhead structure."""
        m, n = x.shape
        H = np.zeros((m, n, n), dtype=x.dtype)
        for i in range(n - 1):
            H[:, i, i] = diag_t
            H[:, i, n - 1] = H[:, n - 1, i] = cross * x[:, i]
        H[:, n - 1, n - 1] = dnn
        return H

    def params_dict(self) -> dict:
        raise NotImplementedError


class LipschitzSub(BarrierSpec):
    """Globally Lipschitz convex subsolution x_n^a(|x'|^2 + A) - B x_n."""

    variant = "LipschitzSub"

    def __init__(self, n: int, a: float, D: float):
        super().__init__(n)
        if not a > 1:
            raise ValueError("LipschitzSub requires a > 1 (A diverges at a = 1)")
        if not D > 0:
            raise ValueError("LipschitzSub requires D > 0")
        self.a = float(a)
        self.D = float(D)
        self.A = (1 + (a + 1) * D * D) / (a - 1)
        self.B = D ** (a - 1) * (self.A + D * D)

    def _validity_interval(self):
        return (0.0, math.inf)

    def _value(self, x):
        xn = x[:, -1]
        r2 = (x[:, :-1] ** 2).sum(axis=1)
        return _pow(xn, self.a) * (r2 + self.A) - self.B * xn

    def _gradient(self, x):
        xn = x[:, -1]
        r2 = (x[:, :-1] ** 2).sum(axis=1)
        g = np.empty_like(x)
        g[:, :-1] = 2 * x[:, :-1] * _pow(xn, self.a)[:, None]
        g[:, -1] = self.a * _pow(xn, self.a - 1) * (r2 + self.A) - self.B
        return g

    def _hessian(self, x):
        xn = x[:, -1]
        r2 = (x[:, :-1] ** 2).sum(axis=1)
        return self._arrowhead(
            2 * _pow(xn, self.a),
            2 * self.a * _pow(xn, self.a - 1),
            self.a * (self.a - 1) * _pow(xn, self.a - 2) * (r2 + self.A),
            x,
        )

    def _det(self, x):
        n, a = self.n, self.a
        xn = x[:, -1]
        r2 = (x[:, :-1] ** 2).sum(axis=1)
        return (2 ** (n - 1) * a * _pow(xn, n * a - 2)
                * (self.A * (a - 1) - (a + 1) * r2))

    def canonical_pair(self):
        """Global pair (p, c): det D^2 v >= c|v|^p on {|x'| <= D}."""
        p = self.n * self.a - 2
        return p, 2 ** (self.n - 1) * self.a / self.B ** p

    def region_pair(self, x_lo: float):
        """Localized (p=0, c) pair on regions with x_n >= x_lo > 0."""
        if not x_lo > 0:
            raise ValueError("region floor x_lo must be positive")
        return 0.0, 2 ** (self.n - 1) * self.a * x_lo ** (self.n * self.a - 2)

    def admissible_pair(self, p, c, region=None):
        p0, c0 = self.canonical_pair()
        if math.isclose(p, p0, rel_tol=1e-9, abs_tol=1e-12):
            return c <= c0 * (1 + 1e-9)
        if p == 0.0 and region is not None:
            x_lo = region[-1][0]
            if x_lo > 0:
                return c <= self.region_pair(x_lo)[1] * (1 + 1e-9)
        return False

    def params_dict(self):
        return {"n": self.n, "a": self.a, "D": self.D, "A": self.A, "B": self.B}


class PowerSub(BarrierSpec):
    """Holder subsolution x_n^alpha(|x'|^2 - C_alpha), 0 < alpha < 1."""

    variant = "PowerSub"

    def __init__(self, n: int, alpha: float, D: float):
        super().__init__(n)
        if not 0 < alpha < 1:
            raise ValueError("PowerSub requires 0 < alpha < 1")
        if not D > 0:
            raise ValueError("PowerSub requires D > 0")
        self.alpha = float(alpha)
        self.D = float(D)
        self.C = (1 + 2 * D * D) / (alpha * (1 - alpha))

    def _validity_interval(self):
        return (0.0, math.inf)

    def _value(self, x):
        xn = x[:, -1]
        r2 = (x[:, :-1] ** 2).sum(axis=1)
        return _pow(xn, self.alpha) * (r2 - self.C)

    def _gradient(self, x):
        xn = x[:, -1]
        r2 = (x[:, :-1] ** 2).sum(axis=1)
        g = np.empty_like(x)
        g[:, :-1] = 2 * x[:, :-1] * _pow(xn, self.alpha)[:, None]
        g[:, -1] = self.alpha * _pow(xn, self.alpha - 1) * (r2 - self.C)
        return g

    def _hessian(self, x):
        al = self.alpha
        xn = x[:, -1]
        r2 = (x[:, :-1] ** 2).sum(axis=1)
        return self._arrowhead(
            2 * _pow(xn, al),
            2 * al * _pow(xn, al - 1),
            al * (al - 1) * _pow(xn, al - 2) * (r2 - self.C),
            x,
        )

    def _det(self, x):
        n, al = self.n, self.alpha
        xn = x[:, -1]
        r2 = (x[:, :-1] ** 2).sum(axis=1)
        return (2 ** (n - 1) * _pow(xn, n * al - 2)
                * (al * (1 - al) * self.C - (al * al + al) * r2))

    def canonical_pair(self):
        """(p, c) with p = n - 2/alpha, c = C_alpha^{-p}; needs n*alpha >= 2.

        For n*alpha < 2 the exponent p is negative and |w|^p blows up at
        the boundary, so no subsolution pair exists for this variant.
        """
        if self.n * self.alpha < 2:
            raise ValueError(
                "PowerSub pair needs n*alpha >= 2 (p = n - 2/alpha would be negative)")
        p = (self.n * self.alpha - 2) / self.alpha
        return p, self.C ** (-p)

    def admissible_pair(self, p, c, region=None):
        try:
            p0, c0 = self.canonical_pair()
        except ValueError:
            return False
        return math.isclose(p, p0, rel_tol=1e-9, abs_tol=1e-12) and c <= c0 * (1 + 1e-9)

    def params_dict(self):
        return {"n": self.n, "alpha": self.alpha, "D": self.D, "C_alpha": self.C}


class LogSub(BarrierSpec):
    """Log-Lipschitz subsolution with a controlled log-type determinant.

    w = f_a(x_n/s)(|x'|^2 - D^2) - E f_{a+1}(x_n/s) with a = (n-2)/2,
    E = 1 + 4D^2, s = e^{2n} D; valid for x_n in (0, D).
    """

    variant = "LogSub"

    def __init__(self, n: int, D: float):
        super().__init__(n)
        if not D > 0:
            raise ValueError("LogSub requires D > 0")
        self.D = float(D)
        self.a = (self.n - 2) / 2.0
        self.E = 1 + 4 * D * D
        self.s = math.exp(2 * self.n) * D

    def _validity_interval(self):
        return (0.0, self.D)

    def _fd_ceiling(self):
        return self.s

    def _value(self, x):
        xn = x[:, -1]
        t = xn / self.s
        r2 = (x[:, :-1] ** 2).sum(axis=1)
        return _f(t, self.a) * (r2 - self.D ** 2) - self.E * _f(t, self.a + 1)

    def _gradient(self, x):
        xn = x[:, -1]
        t = xn / self.s
        r2 = (x[:, :-1] ** 2).sum(axis=1)
        g = np.empty_like(x)
        g[:, :-1] = 2 * x[:, :-1] * _f(t, self.a)[:, None]
        g[:, -1] = (_fp(t, self.a) * (r2 - self.D ** 2)
                    - self.E * _fp(t, self.a + 1)) / self.s
        return g

    def _hessian(self, x):
        xn = x[:, -1]
        t = xn / self.s
        r2 = (x[:, :-1] ** 2).sum(axis=1)
        return self._arrowhead(
            2 * _f(t, self.a),
            2 * _fp(t, self.a) / self.s,
            (_fpp(t, self.a) * (r2 - self.D ** 2)
             - self.E * _fpp(t, self.a + 1)) / self.s ** 2,
            x,
        )

    def _det(self, x):
        n, a = self.n, self.a
        xn = x[:, -1]
        t = xn / self.s
        r2 = (x[:, :-1] ** 2).sum(axis=1)
        fa = _f(t, a)
        head = _fpp(t, a) * (r2 - self.D ** 2) - self.E * _fpp(t, a + 1)
        return (2 ** (n - 1) / self.s ** 2 * _pow(fa, n - 1) * head
                - 2 ** n / self.s ** 2 * r2 * _fp(t, a) ** 2 * _pow(fa, n - 2))

    def canonical_pair(self):
        """(p, c) = (n-2, 2^{n-2} s^{-2} (2E)^{-(n-2)}); n = 2 gives c = s^{-2}."""
        p = self.n - 2
        return float(p), 2 ** (self.n - 2) / self.s ** 2 / (2 * self.E) ** p

    def admissible_pair(self, p, c, region=None):
        p0, c0 = self.canonical_pair()
        return math.isclose(p, p0, rel_tol=1e-9, abs_tol=1e-12) and c <= c0 * (1 + 1e-9)

    def params_dict(self):
        return {"n": self.n, "D": self.D, "E": self.E, "s": self.s, "a": self.a}


class LogSuper(BarrierSpec):
    """Supersolution with infinite boundary gradient:
    v = g(x_n)(|x'|^2 - 1), g(t) = t(-log t)^{1/n} - t, 0 < x_n < 1/e.

    The determinant bound det D^2 v <= 2^n x_n^{n-2} holds for every x'.
    """

    variant = "LogSuper"

    def _validity_interval(self):
        return (0.0, math.exp(-1))

    def _fd_ceiling(self):
        return 1.0

    def _value(self, x):
        xn = x[:, -1]
        r2 = (x[:, :-1] ** 2).sum(axis=1)
        return _g(xn, self.n) * (r2 - 1)

    def _gradient(self, x):
        xn = x[:, -1]
        r2 = (x[:, :-1] ** 2).sum(axis=1)
        g = np.empty_like(x)
        g[:, :-1] = 2 * x[:, :-1] * _g(xn, self.n)[:, None]
        g[:, -1] = _gp(xn, self.n) * (r2 - 1)
        return g

    def _hessian(self, x):
        xn = x[:, -1]
        r2 = (x[:, :-1] ** 2).sum(axis=1)
        return self._arrowhead(
            2 * _g(xn, self.n),
            2 * _gp(xn, self.n),
            _gpp(xn, self.n) * (r2 - 1),
            x,
        )

    def _det(self, x):
        n = self.n
        xn = x[:, -1]
        r2 = (x[:, :-1] ** 2).sum(axis=1)
        gg = _g(xn, n)
        return (2 ** (n - 1) * _pow(gg, n - 1) * _gpp(xn, n) * (r2 - 1)
                - 2 ** n * r2 * _gp(xn, n) ** 2 * _pow(gg, n - 2))

    def det_upper_bound(self, x):
        x = self.validate(x)
        return 2 ** self.n * _pow(x[:, -1], self.n - 2)

    def params_dict(self):
        return {"n": self.n}


class FlatLogSuper(BarrierSpec):
    """Flat-boundary supersolution w = g(x_n/(e s))(|x'|^2 - s^2) on the
    box {|x'| < s, 0 < x_n < s}, s in (0, 1/e); the determinant bound
    det <= 2^n (e s)^{2-n} x_n^{n-2} underlies the log-Lipschitz lower
    estimate at flat boundary pieces.
    """

    variant = "FlatLogSuper"

    def __init__(self, n: int, s: float):
        super().__init__(n)
        if not 0 < s < math.exp(-1):
            raise ValueError("FlatLogSuper requires s in (0, 1/e)")
        self.s = float(s)

    def _validity_interval(self):
        return (0.0, self.s)

    def _fd_ceiling(self):
        return math.e * self.s

    def _t(self, xn):
        return xn / (math.e * self.s)

    def _value(self, x):
        xn = x[:, -1]
        r2 = (x[:, :-1] ** 2).sum(axis=1)
        return _g(self._t(xn), self.n) * (r2 - self.s ** 2)

    def _gradient(self, x):
        xn = x[:, -1]
        t = self._t(xn)
        r2 = (x[:, :-1] ** 2).sum(axis=1)
        g = np.empty_like(x)
        g[:, :-1] = 2 * x[:, :-1] * _g(t, self.n)[:, None]
        g[:, -1] = _gp(t, self.n) * (r2 - self.s ** 2) / (math.e * self.s)
        return g

    def _hessian(self, x):
        xn = x[:, -1]
        t = self._t(xn)
        r2 = (x[:, :-1] ** 2).sum(axis=1)
        return self._arrowhead(
            2 * _g(t, self.n),
            2 * _gp(t, self.n) / (math.e * self.s),
            _gpp(t, self.n) * (r2 - self.s ** 2) / (math.e * self.s) ** 2,
            x,
        )

    def _det(self, x):
        n = self.n
        xn = x[:, -1]
        t = self._t(xn)
        es = math.e * self.s
        r2 = (x[:, :-1] ** 2).sum(axis=1)
        gg = _g(t, n)
        return (2 ** (n - 1) * _pow(gg, n - 1) * _gpp(t, n) * (r2 - self.s ** 2) / es ** 2
                - 2 ** n * r2 * _gp(t, n) ** 2 * _pow(gg, n - 2) / es ** 2)

    def det_upper_bound(self, x):
        x = self.validate(x)
        return 2 ** self.n * (math.e * self.s) ** (2 - self.n) * _pow(x[:, -1], self.n - 2)

    def canonical_region(self):
        s = self.s
        return [(-s, s)] * (self.n - 1) + [(0.0, s)]

    def params_dict(self):
        return {"n": self.n, "s": self.s}


VARIANTS = {
    "LipschitzSub": LipschitzSub,
    "PowerSub": PowerSub,
    "LogSub": LogSub,
    "LogSuper": LogSuper,
    "FlatLogSuper": FlatLogSuper,
}


def barrier_from_params(variant: str, params: dict) -> BarrierSpec:
    """Construct a BarrierSpec from its variant name and parameter dict."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown barrier variant {variant!r}; "
                         f"choose from {sorted(VARIANTS)}")
    cls = VARIANTS[variant]
    allowed = {"LipschitzSub": ("n", "a", "D"), "PowerSub": ("n", "alpha", "D"),
               "LogSub": ("n", "D"), "LogSuper": ("n",), "FlatLogSuper": ("n", "s")}
    kwargs = {k: params[k] for k in allowed[variant]}
    return cls(**kwargs)


# -- finite-difference engine ------------------------------------------------

def _det_cofactor(M):
    """Determinant by cofactor expansion on (..., k, k), dtype-preserving.

    np.linalg.det silently downcasts long double; this does not (k <= 5).
    """
    k = M.shape[-1]
    if k == 1:
        return M[..., 0, 0]
    if k == 2:
        return M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
    out = M[..., 0, 0] * 0
    sign = 1
    for j in range(k):
        minor = np.delete(np.delete(M, 0, axis=-2), j, axis=-1)
        out = out + sign * M[..., 0, j] * _det_cofactor(minor)
        sign = -sign
    return out


def hessian_fd_batch(spec: BarrierSpec, pts) -> np.ndarray:
    """Central-difference Hessians of the closed-form value, long double.

    Every variant is exactly quadratic in the tangential coordinates, so
    tangential differences have zero truncation error and use a large
    step (1e-2 scaled) to suppress roundoff.  The vertical step starts
    from 1e-5 scaled by max(1, |x|_inf) and is clamped to 3e-4 x_n (all
    x_n-derivatives blow up at x_n = 0) and away from the variant's
    upper singular point where the log factor loses its argument.

    pts has shape (m, n); the result has shape (m, n, n).
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=np.longdouble))
    m, n = pts.shape
    scale = np.maximum(np.longdouble(1.0), np.abs(pts).max(axis=1))
    steps = np.empty((m, n), dtype=np.longdouble)
    steps[:, :] = (np.longdouble(1e-2) * scale)[:, None]
    hn = np.minimum(np.longdouble(1e-5) * scale, np.longdouble(3e-4) * pts[:, -1])
    ceiling = spec._fd_ceiling()
    if math.isfinite(ceiling):
        hn = np.minimum(hn, np.longdouble(0.49) * (np.longdouble(ceiling) - pts[:, -1]))
    steps[:, -1] = hn

    def v(shift_i, si, shift_j=None, sj=None):
        q = pts.copy()
        q[:, shift_i] += si * steps[:, shift_i]
        if shift_j is not None:
            q[:, shift_j] += sj * steps[:, shift_j]
        return spec._value(q)

    H = np.zeros((m, n, n), dtype=np.longdouble)
    center = spec._value(pts)
    for i in range(n):
        H[:, i, i] = (v(i, 1) - 2 * center + v(i, -1)) / steps[:, i] ** 2
        for j in range(i + 1, n):
            H[:, i, j] = H[:, j, i] = (
                v(i, 1, j, 1) - v(i, 1, j, -1) - v(i, -1, j, 1) + v(i, -1, j, -1)
            ) / (4 * steps[:, i] * steps[:, j])
    return H


def hessian_fd(spec: BarrierSpec, x) -> np.ndarray:
    """Single-point long double finite-difference Hessian."""
    return hessian_fd_batch(spec, np.asarray(x).reshape(1, -1))[0]


def hessian_det_fd(spec: BarrierSpec, x) -> float:
    return float(_det_cofactor(hessian_fd(spec, x)))


# -- sampling ----------------------------------------------------------------

def sample_region(region, count: int, seed: int) -> np.ndarray:
    """Low-discrepancy samples of a frame-coordinate box.

    region is a list of n (lo, hi) pairs; the last coordinate is x_n.
    75% of the points are scrambled-Halton over the box; 25% keep their
    Halton tangential coordinates but draw x_n log-uniformly from the
    refinement band (band_floor, 1e-3] intersected with the box, because
    every barrier inequality degenerates as x_n -> 0.  Returns an
    (m, n) array; m = 0 when the box has no volume.
    """
    region = [(float(lo), float(hi)) for lo, hi in region]
    n = len(region)
    if count <= 0 or any(hi <= lo for lo, hi in region):
        return np.empty((0, n))
    lo = np.array([a for a, _ in region])
    hi = np.array([b for _, b in region])
    halton = qmc.Halton(d=n, scramble=True, rng=np.random.default_rng(seed))
    pts = lo + halton.random(count) * (hi - lo)
    band_hi = min(1e-3, hi[-1])
    band_lo = max(BAND_FLOOR, lo[-1])
    if band_hi > band_lo:
        nb = count // 4
        rng = np.random.default_rng(seed + 1)
        pts[:nb, -1] = np.exp(rng.uniform(math.log(band_lo), math.log(band_hi), size=nb))
    # x_n strictly positive: nudge any exact-zero draw to the band floor
    pts[:, -1] = np.maximum(pts[:, -1], max(lo[-1], 0.0) + BAND_FLOOR * (hi[-1] - max(lo[-1], 0.0)))
    return pts


# -- reports -----------------------------------------------------------------

@dataclass
class BarrierReport:
    """Sampled verification of one barrier inequality."""

    variant: str
    mode: str                    # "subsolution" | "supersolution"
    params: dict
    p: float | None
    c: float | None
    count: int
    seed: int
    min_margin: float            # min of (det - c|v|^p) or (bound - det)
    min_minor: float             # min leading-principal-minor value
    max_fd_rel: float            # max relative closed-vs-FD det error (gated x_n)
    fd_checked: int              # samples entering the FD gate
    conditions: dict = field(default_factory=dict)
    verdict: str = "fail"
    table: dict = field(default_factory=dict)   # per-sample CSV columns
    region: tuple = ()           # sampled frame-coordinate box, ((lo, hi), ...)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


def _leading_minors(H):
    """Leading principal minors of a batch of symmetric matrices."""
    m, n, _ = H.shape
    out = np.empty((m, n))
    for k in range(1, n + 1):
        out[:, k - 1] = np.linalg.det(H[:, :k, :k]) if k > 1 else H[:, 0, 0]
    return out


def _permanent(M):
    """Permanent by expansion on (..., k, k); small k only."""
    k = M.shape[-1]
    if k == 1:
        return M[..., 0, 0]
    if k == 2:
        return M[..., 0, 0] * M[..., 1, 1] + M[..., 0, 1] * M[..., 1, 0]
    out = M[..., 0, 0] * 0
    for j in range(k):
        minor = np.delete(np.delete(M, 0, axis=-2), j, axis=-1)
        out = out + M[..., 0, j] * _permanent(minor)
    return out


def _term_scale(H):
    """Sum of absolute products in the determinant expansion of H.

    The natural magnitude against which det(H) is formed; where the
    expansion cancels (supersolution regions contain a det = 0 surface)
    a ratio against |det| alone is meaningless, so relative agreement is
    measured against max(|det|, this scale).
    """
    return _permanent(np.abs(np.asarray(H, dtype=float)))


def _fd_column(spec, pts, det_closed):
    det_fd = _det_cofactor(hessian_fd_batch(spec, pts)).astype(float)
    gate = pts[:, -1] >= FD_GATE_XN
    scale = _term_scale(spec._hessian(pts))
    denom = np.maximum(np.maximum(np.abs(det_closed), np.abs(det_fd)), scale)
    rel = np.zeros(len(pts))
    ok = denom > 0
    rel[ok] = np.abs(det_closed - det_fd)[ok] / denom[ok]
    max_rel = float(rel[gate].max()) if gate.any() else 0.0
    return det_fd, rel, gate, max_rel


def _vacuous(spec, mode, p, c, seed, region):
    return BarrierReport(
        variant=spec.variant, mode=mode, params=spec.params_dict(), p=p, c=c,
        count=0, seed=seed, min_margin=math.inf, min_minor=math.inf,
        max_fd_rel=0.0, fd_checked=0, conditions={}, verdict="vacuous",
        table={}, region=tuple(tuple(b) for b in region),
    )


def verify_subsolution(spec: BarrierSpec, region, p: float, c: float,
                       samples: int = 10_000, seed: int = 0,
                       tol: float = 1e-9) -> BarrierReport:
    """Sample-check det D^2 v >= c|v|^p plus convexity and sign.

    Parameters
    ----------
    spec : BarrierSpec
        A subsolution variant (LipschitzSub, PowerSub, LogSub).
    region : list of (lo, hi)
        Frame-coordinate box, contained in the validity region.
    p, c : float
        Claimed inequality det D^2 v >= c|v|^p.  The pair must be the
        variant's canonical pair (or a weaker constant); an inconsistent
        pair raises ValueError rather than producing a vacuous pass.
    samples, seed : int
        Sampling budget and reproducibility seed.

    Returns
    -------
    BarrierReport with four conditions: subsolution margin, convexity
    (leading principal minors), sign (v <= 0), and closed-form vs
    finite-difference determinant agreement at x_n >= 1e-3.
    """
    if not hasattr(spec, "admissible_pair"):
        raise ValueError(f"{spec.variant} is not a subsolution variant")
    if not spec.admissible_pair(p, c, region):
        raise ValueError(
            f"(p={p}, c={c}) is not an admissible subsolution pair for "
            f"{spec.variant} with params {spec.params_dict()}")
    pts = sample_region(region, samples, seed)
    if len(pts) == 0:
        return _vacuous(spec, "subsolution", p, c, seed, region)
    spec.validate(pts)
    vals = spec.value(pts)
    det_closed = spec.hessian_det_closed(pts)
    H = spec.hessian(pts)
    minors = _leading_minors(H)
    margin = det_closed - c * np.abs(vals) ** p
    det_fd, rel, gate, max_rel = _fd_column(spec, pts, det_closed)

    scale = max(1.0, float(np.abs(det_closed).max()))
    conditions = {
        "subsolution": bool(margin.min() >= -tol * scale),
        "convex": bool(minors.min() >= -tol * scale),
        "sign": bool(vals.max() <= tol * max(1.0, float(np.abs(vals).max()))),
        "fd_agreement": bool(max_rel <= FD_RTOL),
    }
    return BarrierReport(
        variant=spec.variant, mode="subsolution", params=spec.params_dict(),
        p=p, c=c, count=len(pts), seed=seed,
        min_margin=float(margin.min()), min_minor=float(minors.min()),
        max_fd_rel=max_rel, fd_checked=int(gate.sum()),
        conditions=conditions,
        verdict="pass" if all(conditions.values()) else "fail",
        table={
            "sample_index": np.arange(len(pts)),
            "x": pts, "value": vals, "det_closed": det_closed,
            "det_fd": det_fd, "margin_sub": margin,
            "min_minor": minors.min(axis=1),
        },
        region=tuple(tuple(b) for b in region),
    )


def supersolution_det_bound(spec: BarrierSpec, region=None, samples: int = 10_000,
                            seed: int = 0, tol: float = 1e-9) -> BarrierReport:
    """Sample-check det D^2 v <= bound(x) for the supersolution variants.

    LogSuper is checked against 2^n x_n^{n-2}; FlatLogSuper against
    2^n (e s)^{2-n} x_n^{n-2} on its box (the default region).
    """
    if not hasattr(spec, "det_upper_bound"):
        raise ValueError(f"{spec.variant} is not a supersolution variant")
    if region is None:
        if isinstance(spec, FlatLogSuper):
            region = spec.canonical_region()
        else:
            region = [(-1.0, 1.0)] * (spec.n - 1) + [(0.0, math.exp(-1))]
    pts = sample_region(region, samples, seed)
    if len(pts) == 0:
        return _vacuous(spec, "supersolution", None, None, seed, region)
    spec.validate(pts)
    vals = spec.value(pts)
    det_closed = spec.hessian_det_closed(pts)
    bound = spec.det_upper_bound(pts)
    margin = bound - det_closed
    H = spec.hessian(pts)
    minors = _leading_minors(H)
    det_fd, rel, gate, max_rel = _fd_column(spec, pts, det_closed)

    scale = max(1.0, float(np.abs(bound).max()))
    conditions = {
        "supersolution": bool(margin.min() >= -tol * scale),
        "fd_agreement": bool(max_rel <= FD_RTOL),
    }
    return BarrierReport(
        variant=spec.variant, mode="supersolution", params=spec.params_dict(),
        p=None, c=None, count=len(pts), seed=seed,
        min_margin=float(margin.min()), min_minor=float(minors.min()),
        max_fd_rel=max_rel, fd_checked=int(gate.sum()),
        conditions=conditions,
        verdict="pass" if all(conditions.values()) else "fail",
        region=tuple(tuple(b) for b in region),
        table={
            "sample_index": np.arange(len(pts)),
            "x": pts, "value": vals, "det_closed": det_closed,
            "det_fd": det_fd, "margin_sub": margin,
            "min_minor": minors.min(axis=1),
        },
    )
