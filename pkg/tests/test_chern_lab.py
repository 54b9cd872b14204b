import math

import numpy as np
import pytest

from obstruction_lab import almost_rep as ar
from obstruction_lab import chern_lab as cl
from obstruction_lab import torus_bundle as tb
from obstruction_lab.errors import ContractError, DegreeError
from obstruction_lab.linalg_core import random_unitary

_CACHE = {}


def ch1_of(rep, grid=32, **kw):
    field = tb.assemble_bundle(ar.normalize(rep), resolution=grid, **kw)
    curv = cl.curvature(field)
    return cl.integrate(cl.chern_character_form(curv, 1), (0, 1)), curv


def voic_curv(n=16, grid=64):
    key = (n, grid)
    if key not in _CACHE:
        _CACHE[key] = ch1_of(ar.voiculescu_pair(n), grid)
    return _CACHE[key]


def flagship_small(same_axes=False, n=8, grid=32):
    key = ("z4", same_axes, n, grid)
    if key not in _CACHE:
        src = tb.assemble_bundle(ar.normalize(ar.voiculescu_pair(n)), tb.CircleCover(1 / 16),
                                 grid)
        second = (0, 1) if same_axes else (2, 3)
        fs = tb.FieldSum((tb.pullback_field(src, (0, 1), 4), tb.pullback_field(src, second, 4)))
        _CACHE[key] = cl.curvature(fs)
    return _CACHE[key]


def test_voiculescu_ch1_is_minus_one():
    val, curv = voic_curv()
    assert round(val) == -1
    assert abs(val + 1) <= 0.1
    assert curv.residual < 1e-8


def test_lattice_oracle_agrees_with_forms():
    field = tb.assemble_bundle(ar.normalize(ar.voiculescu_pair(16)), resolution=64)
    assert cl.lattice_chern_number(field) == pytest.approx(-1.0, abs=1e-9)


@pytest.mark.parametrize("w", [-1, 0, 1])
def test_bott_controls(w):
    field = tb.bott_field(w, (64, 64))
    curv = cl.curvature(field)
    val = cl.integrate(cl.chern_character_form(curv, 1), (0, 1))
    assert abs(val - w) <= 5e-3
    assert round(cl.lattice_chern_number(field)) == w


def test_flat_bundle_has_zero_curvature():
    val, curv = ch1_of(ar.character([0.2, 0.6]))
    assert abs(val) < 1e-12
    for p in (1, 2, math.inf):
        assert cl.curvature_norm(curv, p) < 1e-8


def test_gauge_invariance():
    rep = ar.voiculescu_pair(8)
    w = random_unitary(8, np.random.default_rng(11))
    v1, c1 = ch1_of(rep)
    v2, c2 = ch1_of(rep.conjugated(w))
    assert v2 == pytest.approx(v1, abs=1e-9)
    assert cl.curvature_norm(c2, 2) == pytest.approx(cl.curvature_norm(c1, 2), rel=1e-8)


def test_axis_swap_flips_sign():
    # the swapped ordered powers Omega^a S^b need a finer grid than S^a Omega^b
    psi = ar.normalize(ar.voiculescu_pair(16))
    swapped = ar.embed_rank(psi, 2, (1, 0))
    v1, _ = voic_curv()
    v2, _ = ch1_of(swapped, 128)
    assert round(v2) == -round(v1) == 1
    assert abs(v2 - 1) <= 0.1
    field = tb.assemble_bundle(swapped, resolution=128)
    assert cl.lattice_chern_number(field) == pytest.approx(1.0, abs=1e-9)


def test_direct_sum_additivity():
    a, b = ar.voiculescu_pair(6), ar.voiculescu_pair(8)
    va, _ = ch1_of(a)
    vb, _ = ch1_of(b)
    vs, _ = ch1_of(ar.direct_sum(ar.normalize(a), ar.normalize(b)))
    assert vs == pytest.approx(va + vb, abs=1e-9)


def test_difference_derivative_is_close_to_spectral():
    field = tb.bott_field(1, (48, 48))
    spec = cl.integrate(cl.chern_character_form(cl.curvature(field), 1), (0, 1))
    diff = cl.integrate(cl.chern_character_form(cl.curvature(field, "difference"), 1), (0, 1))
    assert abs(spec - diff) < 0.01
    assert abs(diff - 1) < 0.01


def test_orientation_of_integrate():
    _, curv = voic_curv()
    ch1 = cl.chern_character_form(curv, 1)
    assert cl.integrate(ch1, (1, 0)) == -cl.integrate(ch1, (0, 1))
    with pytest.raises(DegreeError):
        cl.integrate(ch1, (0,))
    with pytest.raises(ContractError):
        cl.integrate(ch1, (0, 0))


def test_ch0_is_rank_and_degree_limits():
    _, curv = voic_curv()
    assert cl.integrate(cl.chern_character_form(curv, 0), ()) == pytest.approx(16)
    with pytest.raises(DegreeError):
        cl.chern_character_form(curv, 2)


def test_flagship_classes_small_scale():
    curv = flagship_small()
    ch1 = cl.chern_character_form(curv, 1)
    ch2 = cl.integrate(cl.chern_character_form(curv, 2), (0, 1, 2, 3))
    classes = cl.chern_classes(ch1, ch2, (0, 1, 2, 3))
    # ch2 is exactly zero for two blocks on complementary planes
    assert abs(ch2) < 1e-12
    assert classes.c2 == pytest.approx(classes.c1[(0, 1)] * classes.c1[(2, 3)], rel=1e-9)
    assert classes.c1[(0, 2)] == pytest.approx(0, abs=1e-12)


def test_stacked_same_axes_has_zero_c2():
    curv = flagship_small(same_axes=True)
    ch1 = cl.chern_character_form(curv, 1)
    ch2 = cl.integrate(cl.chern_character_form(curv, 2), (0, 1, 2, 3))
    assert abs(cl.chern_classes(ch1, ch2, (0, 1, 2, 3)).c2) < 1e-9


def test_separable_agrees_with_direct_on_t4():
    cover = tb.CircleCover(1 / 16)
    v = ar.normalize(ar.voiculescu_pair(3))
    direct = tb.assemble_bundle(
        ar.direct_sum(ar.embed_rank(v, 4, (0, 1)), ar.embed_rank(v, 4, (2, 3))), cover, 12)
    src = tb.assemble_bundle(v, cover, (12, 12))
    fs = tb.FieldSum((tb.pullback_field(src, (0, 1), 4), tb.pullback_field(src, (2, 3), 4)))
    cd = cl.curvature(direct, norms=((2, "estimator"),))
    cs = cl.curvature(fs)
    for k in (1, 2):
        a = cl.chern_character_form(cd, k).form.comps[..., 0, 0]
        b = cl.chern_character_form(cs, k).form.to_dense().comps[..., 0, 0]
        assert np.abs(a - b).max() < 1e-8 * max(1.0, np.abs(a).max())
    assert cl.curvature_norm(cs, 2) == pytest.approx(cl.curvature_norm(cd, 2), rel=1e-6)


def test_vanishing_verdict_threshold():
    # B = 2^2 sqrt(1) ||F||_1 < 1/2 iff ||F||_1 < 1/8
    assert cl.vanishing_verdict(2, 1, 1, 0.12, 0.0).verdict == cl.VANISHES
    v = cl.vanishing_verdict(2, 1, 1, 0.13, -1.0)
    assert v.verdict == cl.UNDECIDED
    assert v.as_dict()["label"] == "numerical surrogate"
    assert v.exponent_in_range


def test_chern_report_dict():
    _, curv = voic_curv()
    rep = cl.chern_report(curv, ks=(1,), verdicts=[(1, 1)])
    d = rep.as_dict()
    assert "ch1[01]" in d["pairings"]
    assert d["verdicts"][0]["verdict"] == cl.UNDECIDED
    assert round(d["c1"]["[01]"]) == -1
