import numpy as np

from obstruction_lab import audit


def test_small_audit_is_clean_and_deterministic():
    a = audit.run_audit(seed=3, scalar_samples=2000, matrix_samples=40)
    b = audit.run_audit(seed=3, scalar_samples=2000, matrix_samples=40)
    assert a["failures"] == 0
    assert a == b
    names = {s["name"] for s in a["suites"]}
    assert {"scalar_projection_bound", "scalar_sign_bound", "matrix_holder", "form_holder",
            "dd_zero", "normalize_involution"} <= names


def test_suites_count_failures():
    # an infinitely negative tolerance turns every sample into a failure
    res = audit.matrix_holder(np.random.default_rng(0), n=10, tol=-np.inf)
    assert res.failures == res.samples == 10
    assert not res.ok


def test_discrete_slack_is_reported_only():
    out = audit.run_audit(seed=1, scalar_samples=100, matrix_samples=5)
    assert out["reported"] and "suites" in out
