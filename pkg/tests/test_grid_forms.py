import math

import numpy as np
import pytest

from obstruction_lab import grid_forms as gf
from obstruction_lab.errors import ContractError, DegreeError
from obstruction_lab.linalg_core import schatten_norm


def random_form(rng, d, k, s, grid):
    shape = (math.comb(d, k),) + grid + (s, s)
    return gf.MatrixFormField(d, k, rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def test_multi_indices_and_signs():
    assert gf.multi_indices(3, 2) == ((0, 1), (0, 2), (1, 2))
    assert gf.merge_sign((1,), (0,)) == -1
    assert gf.merge_sign((0,), (1,)) == 1
    assert gf.merge_sign((0,), (0, 1)) == 0


def test_wedge_of_one_forms_is_antisymmetric():
    rng = np.random.default_rng(1)
    a = random_form(rng, 2, 1, 1, (4, 4))
    b = random_form(rng, 2, 1, 1, (4, 4))
    assert np.allclose(gf.wedge(a, b).comps, -gf.wedge(b, a).comps)
    assert np.allclose(gf.wedge(a, a).comps, 0)


def test_wedge_associative_matrix_valued():
    rng = np.random.default_rng(2)
    a, b, c = (random_form(rng, 3, 1, 2, (2, 2, 2)) for _ in range(3))
    left = gf.wedge(gf.wedge(a, b), c)
    right = gf.wedge(a, gf.wedge(b, c))
    assert np.allclose(left.comps, right.comps)


def test_wedge_degree_overflow():
    rng = np.random.default_rng(3)
    a = random_form(rng, 2, 2, 1, (4, 4))
    with pytest.raises(DegreeError):
        gf.wedge(a, random_form(rng, 2, 1, 1, (4, 4)))


@pytest.mark.parametrize("order", [2, 4])
def test_dd_is_zero(order):
    rng = np.random.default_rng(4)
    f = random_form(rng, 3, 0, 2, (6, 5, 4))
    dd = gf.ext_d(gf.ext_d(f, order), order)
    assert np.abs(dd.comps).max() < 1e-12 * np.abs(f.comps).max() * 36


def test_ext_d_of_smooth_function():
    n = 64
    f = gf.MatrixFormField.from_function(lambda x, y: np.sin(2 * np.pi * x), (n, n))
    df = gf.ext_d(f, order=4)
    x = np.arange(n) / n
    want = 2 * np.pi * np.cos(2 * np.pi * x)
    assert np.allclose(df.comps[0, :, 0, 0, 0].real, want, atol=1e-4)
    assert np.abs(df.comps[1]).max() < 1e-10


def test_ext_d_of_top_form_raises():
    with pytest.raises(DegreeError):
        gf.ext_d(gf.MatrixFormField.zeros(2, 2, (4, 4), 1))


def test_single_term_literal_norm():
    rng = np.random.default_rng(5)
    d, k, p = 3, 1, 3.0
    comps = np.zeros((3, 4, 4), dtype=complex)
    b = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    comps[1] = b
    got = gf.pointwise_literal_norm(comps, d, k, p)
    # dx^I acts on half the exterior basis, so the normalized norm is 2^{-k/p}||b||_p
    assert got == pytest.approx(2 ** (-k / p) * schatten_norm(b, p), rel=1e-9)


def test_estimator_dominates_literal():
    rng = np.random.default_rng(6)
    for p in (1, 2, math.inf):
        a = random_form(rng, 2, 1, 3, (3, 3))
        lit = gf.form_norm(a, p, "literal").pointwise
        est = gf.form_norm(a, p, "estimator").pointwise
        assert np.all(lit <= est + 1e-9)


def test_literal_cost_gate():
    a = gf.MatrixFormField.zeros(4, 1, (1, 1, 1, 1), 300)
    with pytest.raises(ContractError):
        gf.form_norm(a, 2, "literal")


def test_form_trace_and_arithmetic():
    rng = np.random.default_rng(7)
    a = random_form(rng, 2, 1, 3, (4, 4))
    tr = gf.form_trace(a)
    assert tr.size == 1
    assert np.allclose(tr.comps[..., 0, 0], np.trace(a.comps, axis1=-2, axis2=-1))
    assert np.allclose((a - a).comps, 0)


def test_export_load_round_trip(tmp_path):
    rng = np.random.default_rng(8)
    a = random_form(rng, 2, 1, 2, (3, 4))
    gf.export_form(a, tmp_path / "f.bin")
    b = gf.load_form(tmp_path / "f.bin")
    assert b.degree == 1 and b.grid_shape == (3, 4)
    assert np.array_equal(a.comps, b.comps)
