import math

import numpy as np
import pytest

from obstruction_lab.errors import BranchCutError, ContractError, DomainError, SpectralGapError
from obstruction_lab.linalg_core import (
    hermitian_eig,
    normal_funcalc,
    random_hermitian,
    random_matrix,
    random_unitary,
    schatten_norm,
    schatten_norm_trace_formula,
    sign_unitarize,
    spectral_projector,
    unitary_log_trace,
)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def test_schatten_matches_singular_values(rng):
    a = random_matrix(5, 3, rng)
    s = np.linalg.svd(a, compute_uv=False)
    assert schatten_norm(a, 1) == pytest.approx(s.sum())
    assert schatten_norm(a, 2) == pytest.approx(np.linalg.norm(a))
    assert schatten_norm(a, math.inf) == pytest.approx(s.max())
    assert schatten_norm(a, 3) == pytest.approx((s ** 3).sum() ** (1 / 3))


def test_schatten_trace_formula_agrees(rng):
    for shape in [(4, 4), (6, 2), (2, 7)]:
        a = random_matrix(*shape, rng)
        for p in (1, 1.5, 2, 4):
            assert schatten_norm_trace_formula(a, p) == pytest.approx(schatten_norm(a, p), rel=1e-10)


def test_schatten_stack_and_domain(rng):
    a = np.stack([random_matrix(3, 3, rng) for _ in range(4)])
    out = schatten_norm(a, 1)
    assert out.shape == (4,)
    assert out[2] == pytest.approx(schatten_norm(a[2], 1))
    with pytest.raises(DomainError):
        schatten_norm(a[0], 0.5)
    with pytest.raises(ContractError):
        schatten_norm(np.array([np.nan, 1.0]).reshape(1, 2), 2)


def test_large_p_does_not_overflow():
    a = np.diag([1e200, 1.0])
    assert schatten_norm(a, 50) == pytest.approx(1e200)


def test_hermitian_eig_reconstructs_and_rejects(rng):
    h = random_hermitian(6, rng)
    es = hermitian_eig(h)
    assert es.reconstruction_residual(h) < 1e-12
    assert es.orthonormality_residual() < 1e-12
    assert np.all(np.diff(es.eigenvalues) >= 0)
    with pytest.raises(ContractError):
        hermitian_eig(random_matrix(3, 3, rng))


def test_spectral_projector_and_gap(rng):
    u = random_unitary(4, rng)
    a = u @ np.diag([0.0, 0.1, 0.9, 1.2]) @ u.conj().T
    q = spectral_projector(a)
    assert np.abs(q @ q - q).max() < 1e-12
    assert np.trace(q).real == pytest.approx(2)
    b = u @ np.diag([0.0, 0.5001, 0.9, 1.2]) @ u.conj().T
    with pytest.raises(SpectralGapError) as exc:
        spectral_projector(b)
    assert exc.value.eigenvalue == pytest.approx(0.5001)


def test_normal_funcalc_polynomial(rng):
    u = random_unitary(5, rng)
    got = normal_funcalc(u, lambda z: z ** 2 + 3 * z)
    assert np.allclose(got, u @ u + 3 * u, atol=1e-12)


def test_sign_unitarize_is_symmetry(rng):
    w = random_unitary(4, rng)
    u = w @ np.diag(np.exp(1j * np.array([0.2, -0.4, 2.8, -3.0]))) @ w.conj().T
    v = sign_unitarize(u)
    assert np.allclose(v @ v, np.eye(4), atol=1e-12)
    assert np.allclose(v, v.conj().T)
    assert np.trace(v).real == pytest.approx(0)


def test_unitary_log_trace_branch(rng):
    u = np.diag(np.exp(1j * np.array([0.3, -1.1])))
    assert unitary_log_trace(u) == pytest.approx(1j * (0.3 - 1.1))
    with pytest.raises(BranchCutError):
        unitary_log_trace(np.diag([-1.0 + 0j, 1.0]))
