import numpy as np
import pytest

from obstruction_lab import almost_rep as ar
from obstruction_lab import chern_lab as cl
from obstruction_lab import kernels
from obstruction_lab import torus_bundle as tb

compiled_only = pytest.mark.skipif("compiled" not in kernels.BACKENDS,
                                   reason="compiled extension not built")


def test_numpy_backend_always_available():
    assert kernels.get("numpy").BACKEND == "numpy"
    assert kernels.get() is kernels.active
    with pytest.raises(ValueError):
        kernels.get("fortran")


def test_default_threads_env(monkeypatch):
    monkeypatch.setenv("OBSTRUCTION_LAB_THREADS", "3")
    assert kernels.default_threads() == 3
    monkeypatch.delenv("OBSTRUCTION_LAB_THREADS")
    assert kernels.default_threads() == 1


def _inputs(rng, nb=5, k=4, m=3, nd=2):
    s = k * m
    h = rng.standard_normal((s, s)) + 1j * rng.standard_normal((s, s))
    psi = (h + h.conj().T) / 2
    w = rng.random((nb, k, k))
    w = (w + np.swapaxes(w, 1, 2)) / 2
    da = rng.standard_normal((nd, nb, s, s)) + 1j * rng.standard_normal((nd, nb, s, s))
    da = (da + np.conj(np.swapaxes(da, -1, -2))) / 2
    return psi, w, m, da


def test_numpy_assemble_matches_eigh():
    psi, w, m, _ = _inputs(np.random.default_rng(0))
    lam, vecs = kernels.get("numpy").assemble_eigh(psi, w, m)
    a = np.kron(w[2], np.ones((m, m))) * psi
    assert np.allclose((vecs[2] * lam[2]) @ vecs[2].conj().T, a, atol=1e-12)


def test_projector_derivative_matches_difference():
    # q(t) = chi(a + t da) differentiated numerically
    rng = np.random.default_rng(1)
    u = np.linalg.qr(rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))[0]
    a = u @ np.diag([0.0, 0.2, 0.9, 1.1]) @ u.conj().T
    h = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    da = (h + h.conj().T) / 2
    lam, vecs = np.linalg.eigh(a)
    _, dq = kernels.get("numpy").projector_derivatives(lam[None], vecs[None], da[None, None], 0.5)

    def proj(x):
        w, v = np.linalg.eigh(x)
        v = v[:, w >= 0.5]
        return v @ v.conj().T

    eps = 1e-6
    num = (proj(a + eps * da) - proj(a - eps * da)) / (2 * eps)
    assert np.allclose(dq[0, 0], num, atol=1e-7)


@compiled_only
@pytest.mark.parametrize("threads", [1, 2])
def test_compiled_matches_numpy(threads):
    psi, w, m, da = _inputs(np.random.default_rng(2))
    ref, fast = kernels.get("numpy"), kernels.get("compiled")
    lam0, v0 = ref.assemble_eigh(psi, w, m)
    lam1, v1 = fast.assemble_eigh(psi, w, m, threads)
    assert np.allclose(lam0, lam1, atol=1e-12)
    pairs = [(0, 1)]
    q0, f0 = ref.curvature_components(lam0, v0, da, 0.5, pairs)
    q1, f1 = fast.curvature_components(lam1, v1, da, 0.5, pairs, threads)
    assert np.allclose(q0, q1, atol=1e-12)
    assert np.allclose(f0, f1, atol=1e-10)


@compiled_only
def test_backends_agree_on_chern_number():
    rep = ar.normalize(ar.voiculescu_pair(8))
    vals = []
    for name in ("numpy", "compiled"):
        field = tb.assemble_bundle(rep, resolution=32, backend=name)
        curv = cl.curvature(field, backend=name)
        vals.append(cl.integrate(cl.chern_character_form(curv, 1), (0, 1)))
    assert vals[0] == pytest.approx(vals[1], abs=1e-12)
