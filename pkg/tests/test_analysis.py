"""Tests for solution analysis: Lipschitz ratios, growth fits,
Hessian integrals, comparison orderings, and explicit bounds."""

import math

import numpy as np
import pytest

from ma_eigen.barriers import BarrierReport, LipschitzSub, verify_subsolution
from ma_eigen.geometry import Disc, DomainError, Polygon, unit_square
from ma_eigen.grid import build_grid
from ma_eigen.solver import solve_dirichlet
from ma_eigen import analysis as an

SQRT2PI = math.sqrt(2.0) * math.pi


def quad_disc(h):
    """Exact solution of det D2u = 1 on the unit disc, nodal values."""
    grid = build_grid(Disc((0.0, 0.0), 1.0), h)
    return grid.function(((grid.xy ** 2).sum(axis=1) - 1.0) / 2.0)


@pytest.fixture(scope="module")
def quad64():
    return quad_disc(1 / 64)


@pytest.fixture(scope="module")
def quad128():
    return quad_disc(1 / 128)


# ---------------------------------------------------------------- Lipschitz

def test_lipschitz_ratio_disc_quadratic(quad128):
    # |u|/dist = (1 + r)/2 on the disc, so C_emp * sup -> 1 and C_emp -> 2
    C, loc = an.check_lipschitz(quad128)
    assert abs(C * quad128.sup_norm() - 1.0) <= 5e-3
    assert C <= 2.0
    r = math.hypot(*loc)
    assert r >= 1.0 - 2.5 / 128  # maximizer sits at the outermost ring


def test_lipschitz_ratio_scale_invariant(quad64):
    C, loc = an.check_lipschitz(quad64)
    scaled = quad64.grid.function(4.0 * quad64.values)
    C4, loc4 = an.check_lipschitz(scaled)
    assert C4 == C
    assert np.array_equal(loc, loc4)


def test_lipschitz_ratio_rejects_zero(quad64):
    with pytest.raises(ValueError, match="zero"):
        an.check_lipschitz(quad64.grid.function())


# ----------------------------------------------------------------- profiles

def test_profile_disc_quadratic(quad128):
    # closed form along the radius: |u(d)| = d(2 - d)/2; the fitted
    # exponent over [2h, diam/4] is 0.151339, frozen from the
    # independent closed-form least-squares computation (the window
    # cannot reach the asymptotic beta = 0 at desk-scale h)
    prof = an.profile_normal(quad128, (1.0, 0.0))
    assert prof.n_samples == 16
    assert prof.d[0] == pytest.approx(0.5, rel=1e-9)
    assert prof.d[-1] == pytest.approx(2 / 128, rel=1e-12)
    assert np.all(np.diff(prof.d) < 0)
    mid = prof.point + prof.d[3] * prof.normal
    assert abs(prof.abs_u[3] - abs(float(quad128(mid)))) == 0.0
    assert prof.beta == pytest.approx(0.151339, abs=2e-3)
    assert prof.C == pytest.approx(0.822, abs=5e-3)
    assert prof.beta <= 0.2  # Lipschitz-side separation


def test_profile_normal_direction_square(sq_p0_128):
    # d_max = 0.5 spans 1.505 decades only at h = 1/128 (the 2h floor
    # at 1/64 leaves 1.204, below the fit precondition)
    prof = an.profile_normal(sq_p0_128, (0.5, 0.0), d_max=0.5)
    assert np.allclose(prof.normal, [0.0, 1.0], atol=1e-14)
    assert np.allclose(prof.point, [0.5, 0.0], atol=1e-14)
    # samples march straight up the symmetry axis to the center
    assert prof.abs_u[0] == pytest.approx(
        abs(float(sq_p0_128((0.5, 0.5)))), rel=1e-12)


def test_profile_rejects_bad_points(quad64):
    with pytest.raises(DomainError, match="not on the circle"):
        an.profile_normal(quad64, (0.5, 0.5))
    sq = unit_square()
    u = build_grid(sq, 1 / 16).function()
    with pytest.raises(DomainError, match="vertex"):
        an.profile_normal(u, (0.0, 0.0))
    with pytest.raises(DomainError, match="not on the polygon"):
        an.profile_normal(u, (0.3, 0.4))


def test_profile_window_validation(quad64):
    with pytest.raises(ValueError, match="n_samples"):
        an.profile_normal(quad64, (1.0, 0.0), n_samples=4)
    with pytest.raises(DomainError, match="empty"):
        an.profile_normal(quad64, (1.0, 0.0), d_max=0.01)
    with pytest.raises(DomainError, match="chord"):
        an.profile_normal(quad64, (1.0, 0.0), d_max=2.5)
    # cap below the span requirement leaks into the fit precondition
    with pytest.raises(ValueError, match="decades"):
        an.profile_normal(quad64, (1.0, 0.0), d_max=0.3)


# ---------------------------------------------------------------- model fit

def synthetic_profile(au_of_d, n=16, top=0.5, decades=2.0):
    d = np.geomspace(top, top * 10.0 ** -decades, n)
    return an.GrowthProfile(point=np.zeros(2), normal=np.array([0.0, 1.0]),
                            d=d, abs_u=au_of_d(d), h=d[-1] / 2)


def test_fit_exact_on_model_class():
    L = lambda d: -np.log(d)
    for beta_true, C_true in [(0.0, 1.0), (1.0, 1.0), (0.5, 1.0), (1.3, 3.7)]:
        prof = synthetic_profile(lambda d: C_true * d * L(d) ** beta_true)
        C, beta, residual = an.fit_log_exponent(prof)
        assert beta == pytest.approx(beta_true, abs=1e-12)
        assert C == pytest.approx(C_true, rel=1e-12)
        assert residual <= 1e-10


def test_fit_clamps_exponent():
    L = lambda d: -np.log(d)
    _, beta_hi, res_hi = an.fit_log_exponent(
        synthetic_profile(lambda d: d * L(d) ** 2.5))
    assert beta_hi == 2.0
    assert res_hi > 0.0
    C_lo, beta_lo, res_lo = an.fit_log_exponent(
        synthetic_profile(lambda d: d / L(d)))
    assert beta_lo == 0.0
    assert res_lo > 0.0
    assert C_lo > 0.0


def test_fit_preconditions():
    L = lambda d: -np.log(d)
    with pytest.raises(ValueError, match="at least 8"):
        an.fit_log_exponent(synthetic_profile(lambda d: d, n=3))
    with pytest.raises(ValueError, match="decades"):
        an.fit_log_exponent(synthetic_profile(lambda d: d, decades=1.0))
    with pytest.raises(ValueError, match="below 1"):
        an.fit_log_exponent(synthetic_profile(lambda d: d, top=1.2))
    with pytest.raises(ValueError, match="positive"):
        an.fit_log_exponent(synthetic_profile(lambda d: 0.0 * d))


def test_profile_type_validates_ordering():
    with pytest.raises(ValueError, match="decreasing"):
        an.GrowthProfile(point=np.zeros(2), normal=np.array([0.0, 1.0]),
                         d=np.array([0.1, 0.2, 0.3]),
                         abs_u=np.ones(3), h=0.01)
    with pytest.raises(ValueError, match="resolution floor"):
        an.GrowthProfile(point=np.zeros(2), normal=np.array([0.0, 1.0]),
                         d=np.array([0.3, 0.2, 0.1]),
                         abs_u=np.ones(3), h=0.2)


# ------------------------------------------------------------------- W^{2,1}

def test_w21_disc_quadratic(quad64):
    # D2u = I: integrals sqrt(2)*pi, 2*pi, and matching flux
    rep = an.w21_integral(quad64)
    assert rep.hessian_l1 == pytest.approx(SQRT2PI, rel=0.05)
    assert rep.laplacian_l1 == pytest.approx(2 * math.pi, rel=0.05)
    assert rep.flux == pytest.approx(2 * math.pi, rel=0.05)
    assert rep.ibp_mismatch <= 0.05
    # frozen values of this deterministic computation
    assert rep.hessian_l1 == pytest.approx(4.436335, abs=1e-5)
    assert rep.flux == pytest.approx(6.245254, abs=1e-5)
    assert rep.convex_fraction == 1.0
    assert 0 < rep.cut_mask.sum() < 0.1 * quad64.grid.n_nodes


def test_w21_zero_function(quad64):
    rep = an.w21_integral(quad64.grid.function())
    assert rep.hessian_l1 == rep.laplacian_l1 == rep.flux == 0.0
    assert rep.hs_to_laplacian == 0.0
    assert rep.ibp_mismatch == 0.0
    assert rep.convex_fraction == 1.0


def test_w21_linear_in_scaling(quad64):
    rep = an.w21_integral(quad64)
    rep2 = an.w21_integral(quad64.grid.function(2.0 * quad64.values))
    assert rep2.hessian_l1 == pytest.approx(2 * rep.hessian_l1, rel=1e-12)
    assert rep2.laplacian_l1 == pytest.approx(2 * rep.laplacian_l1, rel=1e-12)
    assert rep2.flux == pytest.approx(2 * rep.flux, rel=1e-12)


def test_w21_convexity_surrogate_on_solve(sq_p0_64, disc_p0_64):
    # a PSD 2x2 Hessian has ||D2u|| <= Laplacian <= sqrt(2)||D2u||.  On
    # the disc the discrete solve satisfies the surrogate at every
    # node; on the square the boundary layer (anisotropic Hessian along
    # the flat walls plus one-sided cut stencils) breaks it on a
    # resolution-stable ~14% of nodes (0.8650 at 1/64, 0.8576 at 1/128)
    dc = an.w21_integral(disc_p0_64)
    assert dc.convex_fraction == 1.0
    sq = an.w21_integral(sq_p0_64)
    assert sq.convex_fraction >= 0.85
    for rep in (dc, sq):
        assert rep.ibp_mismatch <= 0.05
        assert 1 / math.sqrt(2.0) - 1e-12 <= rep.hs_to_laplacian <= 1.0 + 1e-12


# --------------------------------------------------------------- comparison

@pytest.fixture(scope="module")
def framed_setup():
    """Barrier pulled back through per-node framing on a coarse disc."""
    grid = build_grid(Disc((0.0, 0.0), 1.0), 1 / 32)
    spec = LipschitzSub(2, 1.5, 2.0)
    dist = an._node_distances(grid)
    pts = np.column_stack([np.zeros_like(dist), dist])
    u = grid.function(-np.abs(spec.value(pts)))
    p, c = spec.canonical_pair()
    region = [(-1.0, 1.0), (float(dist.min()), float(dist.max()))]
    cert = verify_subsolution(spec, region, p, c, samples=500)
    assert cert.passed
    return u, spec, p, c, cert


def test_comparison_equality_case(framed_setup):
    u, spec, p, c, cert = framed_setup
    holds, worst = an.comparison_check(u, spec, p, c, c, cert)
    assert holds
    assert worst == 0.0


def test_comparison_detects_violation(framed_setup):
    u, spec, p, c, cert = framed_setup
    deep = u.grid.function(10.0 * u.values)
    holds, worst = an.comparison_check(deep, spec, p, c, c, cert)
    assert not holds
    assert worst < 0.0


def test_comparison_scale_invariant_in_K_L(framed_setup):
    u, spec, p, c, cert = framed_setup
    base = an.comparison_check(u, spec, p, c, c, cert)
    # certificate constant covers 0.25c, and the bound depends on K/L only
    scaled = an.comparison_check(u, spec, p, 0.25 * c, 0.25 * c, cert)
    assert scaled == base


def test_comparison_solve_against_region_pair(disc_p0_64):
    # det D2u = 1 = 1 * |u|^0, so L = 1 at p = 0; the localized pair
    # certifies the barrier on the node heights
    spec = LipschitzSub(2, 1.5, 2.0)
    dist = an._node_distances(disc_p0_64.grid)
    x_lo = float(dist.min())
    p, c = spec.region_pair(x_lo)
    region = [(-1.0, 1.0), (x_lo, float(dist.max()))]
    cert = verify_subsolution(spec, region, p, c, samples=500)
    assert cert.passed
    holds, worst = an.comparison_check(disc_p0_64, spec, p, c, 1.0, cert)
    assert holds
    assert worst >= -1e-8 * disc_p0_64.sup_norm()


def test_comparison_rejects_bad_certificates(framed_setup):
    u, spec, p, c, cert = framed_setup
    with pytest.raises(ValueError, match="certificate"):
        an.comparison_check(u, spec, p, c, c, None)
    broken = BarrierReport(variant=spec.variant, mode="subsolution",
                           params=spec.params_dict(), p=p, c=c, count=0,
                           seed=0, min_margin=-1.0, min_minor=-1.0,
                           max_fd_rel=0.0, fd_checked=0, verdict="fail",
                           region=cert.region)
    with pytest.raises(ValueError, match="unverified"):
        an.comparison_check(u, spec, p, c, c, broken)
    super_mode = BarrierReport(variant=spec.variant, mode="supersolution",
                               params=spec.params_dict(), p=p, c=c, count=9,
                               seed=0, min_margin=0.0, min_minor=0.0,
                               max_fd_rel=0.0, fd_checked=0, verdict="pass",
                               region=cert.region)
    with pytest.raises(ValueError, match="subsolution"):
        an.comparison_check(u, spec, p, c, c, super_mode)
    other = LipschitzSub(2, 2.0, 2.0)
    with pytest.raises(ValueError, match="different barrier"):
        an.comparison_check(u, other, p, c, c, cert)
    with pytest.raises(ValueError, match="exponent"):
        an.comparison_check(u, spec, 0.0, c, c, cert)
    with pytest.raises(ValueError, match="weaker"):
        an.comparison_check(u, spec, p, 2 * c, c, cert)


def test_comparison_rejects_uncovered_region(framed_setup):
    u, spec, p, c, cert = framed_setup
    dist = an._node_distances(u.grid)
    high = verify_subsolution(
        spec, [(-1.0, 1.0), (2 * float(dist.min()), float(dist.max()))],
        p, c, samples=200)
    with pytest.raises(ValueError, match="cover"):
        an.comparison_check(u, spec, p, c, c, high)


def test_comparison_argument_validation(framed_setup):
    u, spec, p, c, cert = framed_setup
    with pytest.raises(ValueError, match=r"p in \[0, 2\)"):
        an.comparison_check(u, spec, 2.0, c, c, cert)
    with pytest.raises(ValueError, match="positive"):
        an.comparison_check(u, spec, p, -c, c, cert)
    with pytest.raises(ValueError, match="dimension"):
        an.comparison_check(u, LipschitzSub(3, 1.5, 2.0), p, c, c, cert)


# ------------------------------------------------------------ pointwise bounds

def dist_rhs(domain):
    def f(x, y):
        return domain.dist_boundary_many(np.column_stack([x, y]))
    return f


@pytest.fixture(scope="module")
def sq_distpow1():
    sq = unit_square()
    grid = build_grid(sq, 1 / 32)
    return solve_dirichlet(grid, dist_rhs(sq))[0]


def test_lipschitz_bound_zero_violations(sq_distpow1):
    assert an.pointwise_bound_check(sq_distpow1, "lipschitz_ii", p=1.0) == 0
    disc = Disc((0.0, 0.0), 1.0)
    u = solve_dirichlet(build_grid(disc, 1 / 32), dist_rhs(disc))[0]
    assert an.pointwise_bound_check(u, "lipschitz_ii", p=1.0) == 0


def test_lipschitz_bound_flags_synthetic_violation(sq_distpow1):
    grid = sq_distpow1.grid
    fake = grid.function(-20.0 * an._node_distances(grid))
    count = an.pointwise_bound_check(fake, "lipschitz_ii", p=1.0)
    assert count == grid.n_nodes


def test_log_bound_zero_violations(sq_p0_64):
    assert an.pointwise_bound_check(sq_p0_64, "log_upper") == 0
    assert an.pointwise_bound_check(sq_p0_64, "log_upper", p=0.0) == 0


def test_log_bound_scales_with_amplitude():
    grid = build_grid(unit_square(), 1 / 16)
    u5 = solve_dirichlet(grid, 5.0)[0]
    assert an.pointwise_bound_check(u5, "log_upper", M=5.0) == 0


def test_bound_checks_on_zero_function(quad64):
    zero = quad64.grid.function()
    assert an.pointwise_bound_check(zero, "lipschitz_ii", p=1.0) == 0
    assert an.pointwise_bound_check(zero, "log_upper") == 0


def test_bound_kind_validation(quad64):
    with pytest.raises(ValueError, match="degenerates"):
        an.pointwise_bound_check(quad64, "lipschitz_ii", p=0.0)
    with pytest.raises(ValueError, match="degenerates"):
        an.pointwise_bound_check(quad64, "lipschitz_ii")
    with pytest.raises(ValueError, match="critical|constant data"):
        an.pointwise_bound_check(quad64, "log_upper", p=1.0)
    with pytest.raises(ValueError, match="power_growth_bound"):
        an.pointwise_bound_check(quad64, "pow_2_over_n_minus_p", p=0.5)
    with pytest.raises(ValueError, match="unknown bound"):
        an.pointwise_bound_check(quad64, "uniform")


def test_power_growth_constant_chain():
    n, p, M, D = 4, 1.0, 2.0, 3.0
    const, alpha = an.power_growth_bound(n, p, M, D)
    assert alpha == pytest.approx(2.0 / 3.0, rel=1e-15)
    C_a = (1 + 2 * D * D) / (alpha * (1 - alpha))
    expect = (C_a ** -p / M) ** (1.0 / (p - n)) * C_a
    assert const == pytest.approx(expect, rel=1e-14)


def test_power_growth_validation():
    with pytest.raises(ValueError, match="empty in two dimensions"):
        an.power_growth_bound(2, 0.5, 1.0, 1.0)
    with pytest.raises(ValueError, match="window"):
        an.power_growth_bound(4, 0.0, 1.0, 1.0)
    with pytest.raises(ValueError, match="window"):
        an.power_growth_bound(4, 2.0, 1.0, 1.0)
    with pytest.raises(ValueError, match="positive"):
        an.power_growth_bound(4, 1.0, 0.0, 1.0)
