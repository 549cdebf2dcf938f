"""Barrier closed forms, verification reports, and the FD cross-check."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ma_eigen import barriers as B
from ma_eigen.geometry import DomainError


# -- construction preconditions ---------------------------------------------

def test_lipschitz_sub_requires_a_above_one():
    with pytest.raises(ValueError):
        B.LipschitzSub(2, 1.0, 1.0)
    with pytest.raises(ValueError):
        B.LipschitzSub(2, 0.5, 1.0)


def test_parameter_preconditions():
    with pytest.raises(ValueError):
        B.PowerSub(2, 0.0, 1.0)
    with pytest.raises(ValueError):
        B.PowerSub(2, 1.0, 1.0)
    with pytest.raises(ValueError):
        B.LogSub(2, 0.0)
    with pytest.raises(ValueError):
        B.FlatLogSuper(2, 0.5)   # s must be < 1/e
    with pytest.raises(ValueError):
        B.LipschitzSub(1, 2.0, 1.0)


def test_derived_constants_positive():
    # A, B, C_alpha, E positive whenever preconditions hold
    for a in (1.1, 1.5, 2.0, 3.0):
        for D in (0.2, 1.0, 2.5):
            ls = B.LipschitzSub(2, a, D)
            assert ls.A > 0 and ls.B > 0
    for al in (0.1, 0.5, 0.9):
        assert B.PowerSub(3, al, 1.0).C > 0
    assert B.LogSub(2, 1.0).E > 0


# -- closed-form values ------------------------------------------------------

def test_lipschitz_sub_value_example():
    ls = B.LipschitzSub(2, 2.0, 1.0)
    assert ls.A == 4.0 and ls.B == 5.0
    assert ls.value((0.5, 0.5)) == pytest.approx(-1.4375, abs=1e-14)


def test_lipschitz_sub_boundary_slope():
    # on the axis: v(0, t) = 4t^2 - 5t, slope -B at the boundary, 0 at t=0
    ls = B.LipschitzSub(2, 2.0, 1.0)
    for t in (0.0, 1e-6, 1e-3, 0.1):
        assert ls.value((0.0, t)) == pytest.approx(4 * t * t - 5 * t, abs=1e-15)


def test_log_super_value_example():
    v = B.LogSuper(2).value((0.0, 0.1))
    assert v == pytest.approx(0.1 * (math.sqrt(math.log(10)) - 1) * (-1), rel=1e-12)
    assert v == pytest.approx(-0.05174, abs=5e-6)


def test_value_outside_validity_raises():
    with pytest.raises(DomainError):
        B.LogSuper(2).value((0.0, math.exp(-1)))
    with pytest.raises(DomainError):
        B.LipschitzSub(2, 2.0, 1.0).value((0.0, -0.1))
    with pytest.raises(DomainError):
        B.LogSub(2, 1.0).gradient((0.0, 1.5))
    with pytest.raises(DomainError):
        B.FlatLogSuper(2, 0.25).hessian((0.0, 0.3))


def test_value_vectorized_matches_scalar():
    ls = B.LipschitzSub(2, 2.0, 1.0)
    pts = np.array([[0.5, 0.5], [0.0, 0.1], [-0.3, 0.9]])
    vec = ls.value(pts)
    assert vec.shape == (3,)
    for q, v in zip(pts, vec):
        assert v == ls.value(q)


# -- determinants ------------------------------------------------------------

def test_lipschitz_sub_det_example():
    ls = B.LipschitzSub(2, 2.0, 1.0)
    d = ls.hessian_det_closed((0.5, 0.5))
    assert d == pytest.approx(3.25, abs=1e-14)
    # direct 2x2 form 4 x2^2 (4 - 3 x1^2)
    assert d == pytest.approx(4 * 0.25 * (4 - 3 * 0.25), abs=1e-14)


def test_power_sub_det_example():
    ps = B.PowerSub(2, 0.5, 1.0)
    assert ps.C == 12.0
    assert ps.hessian_det_closed((0.5, 0.25)) == pytest.approx(22.5, abs=1e-12)


def test_lipschitz_sub_det_lower_bound_on_axis():
    # x' = 0: closed form = 2^{n-1} a x_n^{na-2} A(a-1) >= 2^{n-1} a x_n^{na-2}
    for n in (2, 3):
        ls = B.LipschitzSub(n, 1.7, 0.8)
        for t in (1e-3, 0.1, 0.7):
            x = np.zeros(n)
            x[-1] = t
            lower = 2 ** (n - 1) * ls.a * t ** (n * ls.a - 2)
            assert ls.hessian_det_closed(x) >= lower


def test_lipschitz_sub_det_lower_bound_in_cylinder():
    # det >= 2^{n-1} a x_n^{na-2} whenever |x'| <= D
    rng = np.random.default_rng(3)
    for n in (2, 3):
        ls = B.LipschitzSub(n, 1.4, 1.0)
        for _ in range(200):
            xp = rng.uniform(-1, 1, n - 1)
            if np.linalg.norm(xp) > 1.0:
                continue
            t = rng.uniform(1e-4, 1.0)
            x = np.append(xp, t)
            lower = 2 ** (n - 1) * ls.a * t ** (n * ls.a - 2)
            assert ls.hessian_det_closed(x) >= lower * (1 - 1e-12)


def test_closed_det_matches_matrix_det():
    # transcription identity: hessian_det_closed == det(hessian) to 1e-10
    rng = np.random.default_rng(0)
    specs = [
        (B.LipschitzSub(2, 2.0, 1.0), 1.0), (B.LipschitzSub(3, 1.5, 1.0), 1.0),
        (B.PowerSub(2, 0.5, 1.0), 1.0), (B.PowerSub(4, 0.5, 1.0), 1.0),
        (B.LogSub(2, 1.0), 0.99), (B.LogSub(3, 1.0), 0.99),
        (B.LogSuper(2), 0.36), (B.LogSuper(3), 0.36),
        (B.FlatLogSuper(2, 0.25), 0.24), (B.FlatLogSuper(3, 0.25), 0.24),
    ]
    for spec, hi in specs:
        pts = np.column_stack(
            [rng.uniform(-0.8, 0.8, (300, spec.n - 1)), rng.uniform(1e-4, hi, (300, 1))])
        dc = spec.hessian_det_closed(pts)
        H = spec.hessian(pts)
        dm = np.linalg.det(H)
        scale = np.maximum(np.maximum(np.abs(dc), np.abs(dm)), B._term_scale(H))
        assert (np.abs(dc - dm) <= 1e-10 * scale).all(), spec.variant


def test_log_sub_n2_constant_determinant_floor():
    # n = 2 collapses to p = 0: det >= c > 0 with c = s^{-2}, independent of x
    ls = B.LogSub(2, 1.0)
    p, c = ls.canonical_pair()
    assert p == 0.0
    assert c == pytest.approx(ls.s ** -2, rel=1e-15)
    rng = np.random.default_rng(5)
    pts = np.column_stack([rng.uniform(-1, 1, 500), rng.uniform(1e-6, 0.999, 500)])
    assert (ls.hessian_det_closed(pts) >= c).all()


# -- gradient and Hessian ----------------------------------------------------

def test_lipschitz_sub_gradient_on_axis():
    ls = B.LipschitzSub(2, 2.0, 1.0)
    for t in (0.05, 0.3, 0.9):
        g = ls.gradient((0.0, t))
        assert g == pytest.approx([0.0, 8 * t - 5], abs=1e-14)


def test_lipschitz_sub_hessian_corner_entry():
    # entry (n, n) = a(a-1) x_n^{a-2} (|x'|^2 + A)
    ls = B.LipschitzSub(3, 1.5, 1.0)
    x = np.array([0.3, -0.2, 0.4])
    H = ls.hessian(x)
    expect = 1.5 * 0.5 * 0.4 ** -0.5 * (0.09 + 0.04 + ls.A)
    assert H[2, 2] == pytest.approx(expect, rel=1e-14)
    assert H == pytest.approx(H.T)


def test_gradient_matches_central_differences():
    # step 1e-5 cross-check at a well-scaled interior sample
    h = 1e-5
    for spec in (B.LipschitzSub(2, 2.0, 1.0), B.PowerSub(2, 0.5, 1.0),
                 B.LogSub(2, 1.0), B.LogSuper(2), B.FlatLogSuper(2, 0.25)):
        x = np.array([0.11, 0.17])
        g = spec.gradient(x)
        for i in range(2):
            e = np.zeros(2)
            e[i] = h
            fd = (spec.value(x + e) - spec.value(x - e)) / (2 * h)
            assert fd == pytest.approx(g[i], rel=1e-6, abs=1e-9)


def test_hessian_matches_long_double_differences():
    # entrywise agreement at samples with x_n >= 1e-3
    rng = np.random.default_rng(1)
    for spec, hi in [(B.LipschitzSub(2, 2.0, 1.0), 1.0), (B.PowerSub(3, 2 / 3, 1.0), 1.0),
                     (B.LogSub(2, 1.0), 0.9), (B.LogSuper(2), 0.36),
                     (B.FlatLogSuper(3, 0.25), 0.24)]:
        pts = np.column_stack(
            [rng.uniform(-0.5, 0.5, (50, spec.n - 1)), rng.uniform(1e-3, hi, (50, 1))])
        H = spec.hessian(pts)
        Hfd = B.hessian_fd_batch(spec, pts).astype(float)
        floor = 1e-9 * np.abs(H).max(axis=(1, 2))[:, None, None]
        denom = np.maximum(np.maximum(np.abs(H), np.abs(Hfd)), floor)
        assert (np.abs(H - Hfd) <= 1e-6 * denom).all(), spec.variant


# -- sampling ----------------------------------------------------------------

def test_sample_region_deterministic_and_in_box():
    region = [(-1.0, 1.0), (0.0, 0.5)]
    a = B.sample_region(region, 1000, seed=42)
    b = B.sample_region(region, 1000, seed=42)
    assert np.array_equal(a, b)
    assert a.shape == (1000, 2)
    assert (a[:, 0] >= -1).all() and (a[:, 0] <= 1).all()
    assert (a[:, 1] > 0).all() and (a[:, 1] <= 0.5).all()
    # refinement band present
    assert (a[:, 1] <= 1e-3).sum() >= 200


def test_sample_region_empty_box():
    assert B.sample_region([(0.0, 1.0), (0.5, 0.5)], 100, seed=0).shape == (0, 2)


# -- verification reports ----------------------------------------------------

def test_verify_subsolution_example_passes():
    ls = B.LipschitzSub(2, 2.0, 1.0)
    rep = B.verify_subsolution(ls, [(-1.0, 1.0), (0.0, 1.0)], p=2.0, c=4 / 25,
                               samples=2000, seed=9)
    assert rep.passed
    assert rep.count == 2000
    assert rep.min_margin >= 0
    assert rep.min_minor >= -1e-12
    assert rep.max_fd_rel <= 1e-6
    assert set(rep.conditions) == {"subsolution", "convex", "sign", "fd_agreement"}


def test_verify_subsolution_rejects_inconsistent_pair():
    ls = B.LipschitzSub(2, 2.0, 1.0)
    with pytest.raises(ValueError):
        B.verify_subsolution(ls, [(-1.0, 1.0), (0.0, 1.0)], p=3.0, c=4 / 25, samples=10, seed=0)
    with pytest.raises(ValueError):
        # constant stronger than the certified one
        B.verify_subsolution(ls, [(-1.0, 1.0), (0.0, 1.0)], p=2.0, c=1.0, samples=10, seed=0)


def test_verify_subsolution_rejects_supersolution_variant():
    with pytest.raises(ValueError):
        B.verify_subsolution(B.LogSuper(2), [(-1.0, 1.0), (0.0, 0.3)], p=0.0, c=1.0,
                             samples=10, seed=0)


def test_power_sub_unit_floor_example():
    # n=3, alpha=2/3: det >= x_n^0 = 1 on [-1,1]^2 x (0,1]
    ps = B.PowerSub(3, 2 / 3, 1.0)
    p, c = ps.canonical_pair()
    assert p == pytest.approx(0.0, abs=1e-12) and c == pytest.approx(1.0, rel=1e-12)
    rep = B.verify_subsolution(ps, [(-1, 1), (-1, 1), (0, 1)], p, c, samples=2000, seed=9)
    assert rep.passed


def test_power_sub_pair_needs_nalpha_at_least_two():
    with pytest.raises(ValueError):
        B.PowerSub(2, 0.5, 1.0).canonical_pair()
    # and verify_subsolution refuses any pair for such a spec
    with pytest.raises(ValueError):
        B.verify_subsolution(B.PowerSub(2, 0.5, 1.0), [(-1, 1), (0, 1)], p=0.0, c=1.0,
                             samples=10, seed=0)


def test_vacuous_region_verdict():
    ls = B.LipschitzSub(2, 2.0, 1.0)
    rep = B.verify_subsolution(ls, [(0.5, 0.5), (0.0, 1.0)], p=2.0, c=4 / 25,
                               samples=100, seed=0)
    assert rep.verdict == "vacuous"
    assert rep.count == 0


def test_supersolution_bounds_pass():
    rep = B.supersolution_det_bound(B.LogSuper(2), samples=2000, seed=3)
    assert rep.passed
    rep = B.supersolution_det_bound(B.FlatLogSuper(2, 0.2), samples=2000, seed=3)
    assert rep.passed
    with pytest.raises(ValueError):
        B.supersolution_det_bound(B.LipschitzSub(2, 2.0, 1.0), samples=10, seed=0)


def test_log_super_bound_is_four_in_2d():
    sup = B.LogSuper(2)
    pts = np.array([[0.5, 0.1], [0.0, 0.3]])
    assert sup.det_upper_bound(pts) == pytest.approx([4.0, 4.0])


def test_report_table_columns():
    ls = B.LipschitzSub(2, 2.0, 1.0)
    rep = B.verify_subsolution(ls, [(-1.0, 1.0), (0.0, 1.0)], p=2.0, c=4 / 25,
                               samples=50, seed=1)
    t = rep.table
    assert set(t) == {"sample_index", "x", "value", "det_closed", "det_fd",
                      "margin_sub", "min_minor"}
    assert len(t["sample_index"]) == 50
    assert t["x"].shape == (50, 2)


# -- Lipschitz property ------------------------------------------------------

def test_lipschitz_sub_is_globally_lipschitz():
    # on [-1,1] x (0,1] with {n=2,a=2,D=1}: |grad v| <= sqrt(2^2 + 5^2)
    ls = B.LipschitzSub(2, 2.0, 1.0)
    L = math.hypot(2.0, 5.0)
    rng = np.random.default_rng(8)
    x = np.column_stack([rng.uniform(-1, 1, 300), rng.uniform(0, 1, 300)])
    y = np.column_stack([rng.uniform(-1, 1, 300), rng.uniform(0, 1, 300)])
    dv = np.abs(ls.value(x) - ls.value(y))
    assert (dv <= L * np.linalg.norm(x - y, axis=1) * (1 + 1e-12)).all()


@settings(max_examples=40, deadline=None)
@given(a=st.floats(1.2, 3.0), D=st.floats(0.3, 2.0),
       x1=st.floats(-1.0, 1.0), t=st.floats(1e-4, 1.0))
def test_lipschitz_sub_inequality_property(a, D, x1, t):
    # sign, convexity, and the subsolution inequality inside |x'| <= D
    ls = B.LipschitzSub(2, a, D)
    x = np.array([x1 * D, t * D])
    p, c = ls.canonical_pair()
    v = ls.value(x)
    assert v <= 1e-12
    minors = np.array([ls.hessian(x)[0, 0], ls.hessian_det_closed(x)])
    assert (minors >= -1e-12).all()
    assert ls.hessian_det_closed(x) >= c * abs(v) ** p * (1 - 1e-9)


# -- factory -----------------------------------------------------------------

def test_barrier_from_params_roundtrip():
    for variant, params in [
        ("LipschitzSub", {"n": 2, "a": 2.0, "D": 1.0}),
        ("PowerSub", {"n": 3, "alpha": 2 / 3, "D": 1.0}),
        ("LogSub", {"n": 2, "D": 1.0}),
        ("LogSuper", {"n": 3}),
        ("FlatLogSuper", {"n": 2, "s": 0.25}),
    ]:
        spec = B.barrier_from_params(variant, params)
        assert spec.variant == variant
        for k, v in params.items():
            assert spec.params_dict()[k] == v


def test_barrier_from_params_unknown_variant():
    with pytest.raises(ValueError):
        B.barrier_from_params("Nope", {"n": 2})
