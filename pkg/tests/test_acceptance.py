"""One test per acceptance criterion.

Each test runs its criterion through the shared memo cache, prints the
one-line verdict, and asserts the criterion's gates.  Criterion 5 is
expected to fail: on the unit square at p = 1 the mandated mid-edge
window spans [2h, 0.5] and therefore reaches the center, where the
chord bound on a convex function with an interior minimum keeps the
fitted log-exponent well above the flat-boundary gate.  The raw fits
are recorded in the criterion's data payload either way.
"""

import pytest

from ma_eigen import acceptance


def _check(result):
    verdict = "PASS" if result.passed else "FAIL"
    print(f"criterion {result.number}: {verdict} - {result.title}: "
          f"{result.detail}")
    assert result.passed, f"criterion {result.number} failed: {result.detail}"


def test_criterion_1_exact_solution_accuracy():
    _check(acceptance.criterion_1())


def test_criterion_2_barrier_certification():
    _check(acceptance.criterion_2())


def test_criterion_3_eigenvalue_properties():
    _check(acceptance.criterion_3())


def test_criterion_4_comparison_ordering():
    _check(acceptance.criterion_4())


def test_criterion_5_boundary_growth_exponents():
    _check(acceptance.criterion_5())


def test_criterion_6_explicit_constant_bounds():
    _check(acceptance.criterion_6())


def test_criterion_7_hessian_mass_flux():
    _check(acceptance.criterion_7())


def test_criterion_8_inverse_iteration_regularity():
    _check(acceptance.criterion_8())


def test_criterion_9_deterministic_pipeline():
    _check(acceptance.criterion_9())


def test_run_criteria_selects_and_validates():
    (res,) = acceptance.run_criteria([2])
    assert res.number == 2 and res.passed
    with pytest.raises(ValueError, match="unknown criterion"):
        acceptance.run_criteria([10])


def test_run_criteria_contains_crashes(monkeypatch):
    def boom():
        raise RuntimeError("synthetic crash")

    monkeypatch.setitem(acceptance._CRITERIA, 2, boom)
    (res,) = acceptance.run_criteria([2])
    assert not res.passed
    assert "synthetic crash" in res.detail
