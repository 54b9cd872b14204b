"""Almost-multiplicative unitary maps of Z^d.

A map is stored through its generator images ``U_1, ..., U_d``; the value on a
group element ``g = (a_1, ..., a_d)`` is the ordered power product
``U_1**a_1 @ U_2**a_2 @ ... @ U_d**a_d`` (negative powers use the adjoint).
Group elements are plain tuples of ints; axes are numbered from 0.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ContractError
from .linalg_core import schatten_norm, unitarity_defect, unitary_log_trace

UNITARY_TOL = 1e-10
TEXT_MAGIC = "obstruction-lab almost-rep v1"


def zd_add(g: Sequence[int], h: Sequence[int]) -> tuple[int, ...]:
    if len(g) != len(h):
        raise ContractError("group elements have different ranks")
    return tuple(int(a) + int(b) for a, b in zip(g, h))


def zd_neg(g: Sequence[int]) -> tuple[int, ...]:
    return tuple(-int(a) for a in g)


def lex_positive(g: Sequence[int], priority: Sequence[int] | None = None) -> bool:
    """True when the first nonzero coordinate of ``g`` is positive.

    ``priority`` lists the axes in the order they are inspected (default
    ``0, 1, ..., d-1``).
    """
    order = range(len(g)) if priority is None else priority
    for i in order:
        if g[i]:
            return g[i] > 0
    return False


def _full_priority(priority: Sequence[int] | None, rank: int) -> tuple[int, ...] | None:
    if priority is None:
        return None
    head = [int(i) for i in priority]
    if len(set(head)) != len(head) or any(i < 0 or i >= rank for i in head):
        raise ContractError(f"axis priority {head} is not a list of distinct axes")
    return tuple(head + [i for i in range(rank) if i not in head])


def _power(u: np.ndarray, k: int) -> np.ndarray:
    if k >= 0:
        return np.linalg.matrix_power(u, k)
    return np.linalg.matrix_power(u.conj().T, -k)


@dataclass(frozen=True, eq=False)
class AlmostRep:
    """Unitary-valued map on Z^d given by generator images."""

    gens: tuple[np.ndarray, ...]
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not self.gens:
            raise ContractError("an AlmostRep needs at least one generator")
        gens = []
        for u in self.gens:
            u = np.array(u, dtype=np.complex128)
            if u.ndim != 2 or u.shape[0] != u.shape[1]:
                raise ContractError("generator images must be square matrices")
            gens.append(u)
        m = gens[0].shape[0]
        if any(u.shape != (m, m) for u in gens):
            raise ContractError("generator images must share one dimension")
        for i, u in enumerate(gens):
            if unitarity_defect(u) > UNITARY_TOL:
                raise ContractError(f"generator {i} is not unitary to {UNITARY_TOL:g}")
            u.setflags(write=False)
        object.__setattr__(self, "gens", tuple(gens))

    @property
    def rank(self) -> int:
        return len(self.gens)

    @property
    def dim(self) -> int:
        return self.gens[0].shape[0]

    def __call__(self, g: Sequence[int]) -> np.ndarray:
        g = tuple(int(a) for a in g)
        if len(g) != self.rank:
            raise ContractError(f"element {g} does not belong to Z^{self.rank}")
        out = self._cache.get(g)
        if out is None:
            out = np.eye(self.dim, dtype=np.complex128)
            for u, a in zip(self.gens, g):
                if a:
                    out = out @ _power(u, a)
            out.setflags(write=False)
            self._cache[g] = out
        return out

    def conjugated(self, w: np.ndarray) -> "AlmostRep":
        """The map ``g -> w rho(g) w*`` for a fixed unitary ``w``."""
        return AlmostRep(tuple(w @ u @ w.conj().T for u in self.gens))


@dataclass(frozen=True, eq=False)
class NormalizedRep:
    """Normalized companion of an :class:`AlmostRep`.

    ``psi(0) = 1``, ``psi(g) = rho(g)`` for lexicographically positive ``g``
    and ``psi(g) = rho(-g)*`` otherwise, so ``psi(-g) = psi(g)*`` exactly.
    ``priority`` fixes the axis order of the lexicographic test.
    """

    base: AlmostRep
    priority: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "priority", _full_priority(self.priority, self.base.rank))

    @property
    def rank(self) -> int:
        return self.base.rank

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def gens(self):
        return self.base.gens

    def __call__(self, g: Sequence[int]) -> np.ndarray:
        g = tuple(int(a) for a in g)
        if not any(g):
            return np.eye(self.dim, dtype=np.complex128)
        if lex_positive(g, self.priority):
            return self.base(g)
        return self.base(zd_neg(g)).conj().T


@dataclass(frozen=True, eq=False)
class NormalizedSum:
    """Block-diagonal sum of normalized maps, each normalized on its own."""

    parts: tuple

    def __post_init__(self):
        parts = tuple(normalize(p) for p in self.parts)
        if len({p.rank for p in parts}) != 1:
            raise ContractError("summands must share one rank")
        object.__setattr__(self, "parts", parts)

    @property
    def rank(self) -> int:
        return self.parts[0].rank

    @property
    def dim(self) -> int:
        return sum(p.dim for p in self.parts)

    @property
    def gens(self):
        return _block_gens([p.base for p in self.parts])

    def __call__(self, g: Sequence[int]) -> np.ndarray:
        blocks = [p(g) for p in self.parts]
        out = np.zeros((self.dim, self.dim), dtype=np.complex128)
        k = 0
        for b in blocks:
            m = b.shape[0]
            out[k:k + m, k:k + m] = b
            k += m
        return out


def normalize(rep, priority: Sequence[int] | None = None):
    """Normalized map built from ``rep`` by lexicographic positivity.

    Already-normalized inputs are returned unchanged.
    """
    if isinstance(rep, (NormalizedRep, NormalizedSum)):
        return rep
    return NormalizedRep(rep, priority)


def clock_shift(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic shift ``S e_j = e_{j+1 mod n}`` and clock ``diag(omega**j)``."""
    if n < 2:
        raise ContractError("Voiculescu unitaries need n >= 2")
    shift = np.roll(np.eye(n, dtype=np.complex128), 1, axis=0)
    omega = np.exp(2j * np.pi / n)
    clock = np.diag(omega ** np.arange(n))
    return shift, clock


def voiculescu_pair(n: int) -> AlmostRep:
    """Rank-2 map sending the generators to the shift and clock of size n."""
    return AlmostRep(clock_shift(n))


def trivial_rep(rank: int, dim: int = 1) -> AlmostRep:
    eye = np.eye(dim, dtype=np.complex128)
    return AlmostRep(tuple(eye for _ in range(rank)))


def character(angles: Sequence[float]) -> AlmostRep:
    """One-dimensional genuine representation ``e_k -> exp(2 pi i angle_k)``."""
    return AlmostRep(tuple(np.array([[np.exp(2j * np.pi * t)]]) for t in angles))


def diagonal_rep(phases: np.ndarray) -> AlmostRep:
    """Commuting diagonal unitaries; ``phases[k]`` holds generator k's angles."""
    phases = np.asarray(phases, dtype=float)
    return AlmostRep(tuple(np.diag(np.exp(2j * np.pi * row)) for row in phases))


def _block_gens(reps) -> tuple[np.ndarray, ...]:
    dims = [r.dim for r in reps]
    total = sum(dims)
    gens = []
    for axis in range(reps[0].rank):
        w = np.zeros((total, total), dtype=np.complex128)
        k = 0
        for r, m in zip(reps, dims):
            w[k:k + m, k:k + m] = r.gens[axis]
            k += m
        gens.append(w)
    return tuple(gens)


def direct_sum(*reps):
    """Block-diagonal direct sum.

    Plain maps give an :class:`AlmostRep`. If any summand is already
    normalized, the result is a :class:`NormalizedSum` that keeps each
    summand's own normalization.
    """
    if len(reps) < 2:
        raise ContractError("direct_sum needs at least two summands")
    if len({r.rank for r in reps}) != 1:
        raise ContractError(f"rank mismatch: {[r.rank for r in reps]}")
    if any(isinstance(r, (NormalizedRep, NormalizedSum)) for r in reps):
        return NormalizedSum(tuple(reps))
    return AlmostRep(_block_gens(reps))


def embed_rank(rep, target_rank: int, coord_map: Sequence[int]):
    """Place generator ``i`` of ``rep`` at target axis ``coord_map[i]``.

    Target axes not hit by ``coord_map`` receive the identity. A normalized
    input stays normalized, with the lexicographic test reading the mapped
    axes first in source order.
    """
    coord_map = [int(c) for c in coord_map]
    if len(coord_map) != rep.rank:
        raise ContractError("coord_map must list one target axis per generator")
    if len(set(coord_map)) != len(coord_map):
        raise ContractError(f"coord_map {coord_map} is not injective")
    if any(c < 0 or c >= target_rank for c in coord_map):
        raise ContractError(f"coord_map {coord_map} leaves the range 0..{target_rank - 1}")
    if isinstance(rep, NormalizedSum):
        return NormalizedSum(tuple(embed_rank(p, target_rank, coord_map) for p in rep.parts))
    eye = np.eye(rep.dim, dtype=np.complex128)
    gens = [eye] * target_rank
    for i, c in enumerate(coord_map):
        gens[c] = rep.gens[i]
    base = AlmostRep(tuple(gens))
    if isinstance(rep, NormalizedRep):
        src = rep.priority or tuple(range(rep.rank))
        return NormalizedRep(base, tuple(coord_map[i] for i in src))
    return base


@dataclass(frozen=True)
class DefectTable:
    """Multiplicativity defects ``||rho(g) rho(h) - rho(g + h)||_p``.

    Pairs range over ``||g||_inf <= L`` and ``||h||_inf <= L``.
    """

    p: float
    word_radius: int
    gs: np.ndarray
    hs: np.ndarray
    values: np.ndarray

    @property
    def max_defect(self) -> float:
        return float(self.values.max(initial=0.0))

    @property
    def argmax(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        k = int(np.argmax(self.values))
        return tuple(int(a) for a in self.gs[k]), tuple(int(a) for a in self.hs[k])

    @property
    def entries(self) -> dict:
        return {
            (tuple(int(a) for a in g), tuple(int(a) for a in h)): float(v)
            for g, h, v in zip(self.gs, self.hs, self.values)
        }

    def __getitem__(self, key) -> float:
        g, h = key
        match = np.all(self.gs == np.asarray(g), axis=1) & np.all(self.hs == np.asarray(h), axis=1)
        idx = np.flatnonzero(match)
        if idx.size == 0:
            raise KeyError(key)
        return float(self.values[idx[0]])


def box(rank: int, radius: int) -> list[tuple[int, ...]]:
    return list(itertools.product(range(-radius, radius + 1), repeat=rank))


def defect(rep, p: float, word_radius: int = 2) -> DefectTable:
    """Tabulate the multiplicativity defect of ``rep`` on a box of words."""
    if word_radius < 1:
        raise ContractError("word radius must be at least 1")
    words = box(rep.rank, word_radius)
    values = {g: rep(g) for g in box(rep.rank, 2 * word_radius)}
    stack = np.stack([values[g] for g in words])
    gs, hs, out = [], [], []
    for g in words:
        prods = values[g] @ stack
        targets = np.stack([values[zd_add(g, h)] for h in words])
        out.append(np.atleast_1d(schatten_norm(prods - targets, p)))
        gs.extend([g] * len(words))
        hs.extend(words)
    return DefectTable(p, word_radius, np.array(gs, dtype=int), np.array(hs, dtype=int),
                       np.concatenate(out))


def generator_commutator_defect(rep, p: float) -> float:
    """Largest ``||U_i U_j - U_j U_i||_p`` over generator pairs."""
    best = 0.0
    for i, j in itertools.combinations(range(rep.rank), 2):
        u, v = rep.gens[i], rep.gens[j]
        best = max(best, float(schatten_norm(u @ v - v @ u, p)))
    return best


class Winding(NamedTuple):
    value: float
    integer: int
    imag_residue: float


def winding(u, v) -> Winding:
    """Winding invariant ``(1/2 pi i) Tr Log(u v u* v*)`` and its nearest integer."""
    u = np.asarray(u, dtype=np.complex128)
    v = np.asarray(v, dtype=np.complex128)
    comm = u @ v @ u.conj().T @ v.conj().T
    t = unitary_log_trace(comm) / (2j * np.pi)
    return Winding(float(t.real), int(np.rint(t.real)), float(t.imag))


# -- serialization ---------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.16e}"


def _plain(rep) -> AlmostRep:
    if isinstance(rep, NormalizedRep):
        return rep.base
    if isinstance(rep, NormalizedSum):
        return AlmostRep(rep.gens)
    return rep


def dumps(rep: AlmostRep) -> str:
    """Text container: header lines, then one ``re im`` line per entry."""
    rep = _plain(rep)
    lines = [TEXT_MAGIC, f"rank {rep.rank}", f"dim {rep.dim}"]
    for k, u in enumerate(rep.gens):
        lines.append(f"generator {k}")
        for z in u.ravel():
            lines.append(f"{_fmt(z.real)} {_fmt(z.imag)}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> AlmostRep:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != TEXT_MAGIC:
        raise ContractError("not an almost-rep text container")
    rank = int(lines[1].split()[1])
    dim = int(lines[2].split()[1])
    gens, pos = [], 3
    for k in range(rank):
        if lines[pos] != f"generator {k}":
            raise ContractError(f"expected 'generator {k}' at line {pos + 1}")
        rows = lines[pos + 1:pos + 1 + dim * dim]
        vals = np.array([[float(t) for t in ln.split()] for ln in rows])
        gens.append((vals[:, 0] + 1j * vals[:, 1]).reshape(dim, dim))
        pos += 1 + dim * dim
    return AlmostRep(tuple(gens))


def save(rep: AlmostRep, path) -> None:
    path = Path(path)
    rep = _plain(rep)
    if path.suffix == ".npz":
        np.savez(path, header=json.dumps({"rank": rep.rank, "dim": rep.dim}),
                 gens=np.stack(rep.gens))
    else:
        path.write_text(dumps(rep))


def load(path) -> AlmostRep:
    path = Path(path)
    if path.suffix == ".npz":
        with np.load(path) as z:
            return AlmostRep(tuple(z["gens"]))
    return loads(path.read_text())


@lru_cache(maxsize=64)
def cached_voiculescu(n: int) -> AlmostRep:
    return voiculescu_pair(n)
