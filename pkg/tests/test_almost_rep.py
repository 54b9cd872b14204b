import math

import numpy as np
import pytest

from obstruction_lab import almost_rep as ar
from obstruction_lab.errors import ContractError
from obstruction_lab.linalg_core import random_unitary


def test_clock_shift_commutation_relation():
    for n in (3, 8, 16):
        s, om = ar.clock_shift(n)
        w = np.exp(2j * np.pi / n)
        assert np.allclose(s @ om @ s.conj().T @ om.conj().T, np.eye(n) / w, atol=1e-12)


@pytest.mark.parametrize("n", [8, 64])
@pytest.mark.parametrize("p", [1, 2, 4, math.inf])
def test_generator_defect_closed_form(n, p):
    want = 2 * math.sin(math.pi / n) * (1.0 if p == math.inf else n ** (1 / p))
    got = ar.generator_commutator_defect(ar.voiculescu_pair(n), p)
    assert abs(got - want) < 1e-10


def test_defect_table_radius_one_is_commutator():
    n = 16
    table = ar.defect(ar.voiculescu_pair(n), math.inf, 1)
    assert table.max_defect == pytest.approx(2 * math.sin(math.pi / n), abs=1e-12)
    assert len(table.values) == 81
    assert table[((0, 0), (1, 1))] == pytest.approx(0.0, abs=1e-14)


def test_winding_orientation():
    s, om = ar.clock_shift(8)
    assert ar.winding(s, om).integer == -1
    assert ar.winding(om, s).integer == 1


def test_ordered_power_section():
    rep = ar.voiculescu_pair(5)
    s, om = rep.gens
    assert np.allclose(rep((2, -1)), s @ s @ om.conj().T)
    assert np.allclose(rep((0, 0)), np.eye(5))


def test_normalize_involution_and_priority():
    rep = ar.voiculescu_pair(6)
    for prio in (None, (1, 0)):
        psi = ar.normalize(rep, prio)
        for g in [(1, 0), (-1, 2), (2, -2), (0, -1)]:
            assert np.allclose(psi(g) @ psi(tuple(-a for a in g)), np.eye(6), atol=1e-12)
    # (1, -1) is lex positive in axis order 0, 1 but not in 1, 0
    assert np.allclose(ar.normalize(rep)((1, -1)), rep((1, -1)))
    assert np.allclose(ar.normalize(rep, (1, 0))((1, -1)), rep((-1, 1)).conj().T)
    psi = ar.normalize(rep)
    assert ar.normalize(psi) is psi


def test_direct_sum_is_blockwise_normalized():
    a = ar.normalize(ar.voiculescu_pair(3))
    b = ar.normalize(ar.voiculescu_pair(4), (1, 0))
    s = ar.direct_sum(a, b)
    assert isinstance(s, ar.NormalizedSum)
    assert s.dim == 7
    g = (1, -1)
    assert np.allclose(s(g)[:3, :3], a(g))
    assert np.allclose(s(g)[3:, 3:], b(g))
    plain = ar.direct_sum(ar.voiculescu_pair(3), ar.trivial_rep(2, 2))
    assert isinstance(plain, ar.AlmostRep) and plain.dim == 5


def test_embed_rank_places_axes():
    v = ar.voiculescu_pair(4)
    e = ar.embed_rank(v, 4, (2, 3))
    assert e.rank == 4
    assert np.allclose(e((0, 0, 1, 0)), v((1, 0)))
    assert np.allclose(e((5, 1, 0, 0)), np.eye(4))
    en = ar.embed_rank(ar.normalize(v), 4, (2, 3))
    assert isinstance(en, ar.NormalizedRep)
    assert np.allclose(en((0, 1, -1, 1)), ar.normalize(v)((-1, 1)))


def test_genuine_reps_have_zero_defect(rng=np.random.default_rng(3)):
    w = random_unitary(3, rng)
    for rep in (ar.trivial_rep(2, 2), ar.character([0.1, 0.25]),
                ar.diagonal_rep(rng.random((3, 3))).conjugated(w)):
        for p in (1, 2, math.inf):
            assert ar.defect(rep, p).max_defect <= 1e-12


def test_rejects_bad_generators():
    with pytest.raises(ContractError):
        ar.AlmostRep((np.eye(2), 2 * np.eye(2)))
    with pytest.raises(ContractError):
        ar.AlmostRep((np.eye(2), np.eye(3)))
    with pytest.raises(ContractError):
        ar.voiculescu_pair(4)((1, 2, 3))


@pytest.mark.parametrize("suffix", [".txt", ".npz"])
def test_serialization_round_trip(tmp_path, suffix):
    rep = ar.voiculescu_pair(5)
    path = tmp_path / f"rep{suffix}"
    ar.save(ar.normalize(rep), path)
    back = ar.load(path)
    for u, v in zip(rep.gens, back.gens):
        assert np.array_equal(u, v)


def test_loads_rejects_garbage():
    with pytest.raises(ContractError):
        ar.loads("not a container\n")
