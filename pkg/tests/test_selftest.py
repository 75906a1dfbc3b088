from chaoslab.experiments.config import SelftestConfig
from chaoslab.experiments.selftest import (
    basis_orthogonality,
    identity_checks,
    isometry_check,
    mehler_check,
    run_selftest_checks,
    selftest_functionals,
)

SMALL = SelftestConfig(m=3, p=2, max_order=3, n_functionals=4, n_mc=4000, mehler_times=[0.5],
                       mehler_points=2, semigroup_times=[0.3])


def test_identities_hold_exactly():
    functionals = selftest_functionals(SMALL, seed=1)
    checks = identity_checks(functionals, SMALL, seed=1)
    assert {c.name for c in checks} == {"L=-deltaD", "semigroup", "L_Linv", "delta_phi=I1", "orthogonality",
                                        "poincare", "poincare_equality"}
    assert all(c.passed for c in checks), [c.to_dict() for c in checks if not c.passed]


def test_basis_orthogonality():
    assert basis_orthogonality(3, 4) < 1e-12


def test_functionals_are_reproducible():
    first = selftest_functionals(SMALL, seed=2)
    second = selftest_functionals(SMALL, seed=2)
    assert all(a.max_abs_difference(b) == 0.0 for a, b in zip(first, second))
    assert len(first) == SMALL.n_functionals


def test_monte_carlo_checks():
    F = selftest_functionals(SMALL, seed=3)[0]
    isometry = isometry_check(F, SMALL, seed=3, z_gate=3.0)
    assert isometry.kind == "statistical"
    assert isometry.details["comparisons"] == 3
    mehler = mehler_check(F, SMALL, seed=3, z_gate=3.0, block_size=512, threads=2)
    assert mehler.details["comparisons"] == SMALL.mehler_points * F.spec.p


def test_run_selftest_checks():
    checks, functionals = run_selftest_checks(SMALL, seed=4)
    assert len(checks) == 9
    assert len(functionals) == SMALL.n_functionals
