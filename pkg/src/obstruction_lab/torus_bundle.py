"""Projection fields over T^d built from almost representations of Z^d.

Each circle carries three arcs with a smooth square partition of unity; the
product cover of T^d has ``N = 3^d`` patches, flattened in C order. The field

    a(x) = sum_{I,J} chi_I(x) chi_J(x) psi(g_IJ) (x) e_IJ

is an ``N m x N m`` Hermitian matrix (``m`` the representation dimension)
whose spectral projection ``q(x) = chi_[1/2, inf)(a(x))`` defines the bundle.
Matrix index ``I * m + r`` addresses row ``r`` of patch block ``I``.

At a point only patches with ``chi_I(x) > 0`` contribute, and at most two
arcs per circle are active. Grid points are therefore grouped by their
active patch set, and all matrices are stored compressed to that set.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import container, kernels
from .almost_rep import NormalizedRep, NormalizedSum, normalize, trivial_rep
from .errors import ContractError, SpectralGapError
from .linalg_core import schatten_from_singular

DEFAULT_OVERHANG = 1.0 / 24
DEFAULT_GAP_TOL = 0.05
CHUNK = 256


def _bump(s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``exp(-1/(1-s^2))`` on ``|s| < 1`` and its derivative."""
    s = np.asarray(s, dtype=float)
    val = np.zeros_like(s)
    der = np.zeros_like(s)
    inside = np.abs(s) < 1
    t = s[inside]
    e = np.exp(-1.0 / (1.0 - t * t))
    val[inside] = e
    der[inside] = e * (-2.0 * t / (1.0 - t * t) ** 2)
    return val, der


@dataclass(frozen=True)
class CoverAudit:
    sum_sq_residual: float
    overlaps_connected: bool
    triple_overlap_empty: bool
    second_difference_sup: tuple[float, ...]

    @property
    def ok(self) -> bool:
        return self.sum_sq_residual <= 1e-12 and self.overlaps_connected and self.triple_overlap_empty


@dataclass(frozen=True)
class CircleCover:
    """Three arcs ``A_t = (t/3 - r, t/3 + r)``, ``r = 1/6 + overhang``."""

    overhang: float = DEFAULT_OVERHANG

    def __post_init__(self):
        if not 0 < self.overhang < 1.0 / 12:
            raise ContractError(f"overhang {self.overhang} outside (0, 1/12)")

    @property
    def half_width(self) -> float:
        return 1.0 / 6 + self.overhang

    @property
    def arcs(self) -> tuple[tuple[float, float], ...]:
        r = self.half_width
        return tuple((t / 3 - r, t / 3 + r) for t in range(3))

    def bumps(self, theta) -> tuple[np.ndarray, np.ndarray]:
        """``phi_t(theta)`` and ``phi_t'(theta)``, each of shape ``(3, *theta.shape)``."""
        theta = np.asarray(theta, dtype=float)
        r = self.half_width
        vals, ders = [], []
        for t in range(3):
            off = (theta - t / 3 + 0.5) % 1.0 - 0.5
            v, dv = _bump(off / r)
            vals.append(v)
            ders.append(dv / r)
        return np.array(vals), np.array(ders)

    def evaluate(self, theta) -> tuple[np.ndarray, np.ndarray]:
        """Partition ``chi_t = phi_t / sqrt(sum phi^2)`` and its exact derivative."""
        phi, dphi = self.bumps(theta)
        s = (phi ** 2).sum(axis=0)
        ds = 2 * (phi * dphi).sum(axis=0)
        root = np.sqrt(s)
        chi = phi / root
        dchi = dphi / root - 0.5 * phi * ds / (s * root)
        return chi, dchi

    def partition(self, theta) -> np.ndarray:
        return self.evaluate(theta)[0]

    def cocycle(self, s: int, t: int) -> int:
        """Generator exponent on ``A_s ∩ A_t``: +1 on the wrap overlap (2, 0)."""
        if (s, t) == (2, 0):
            return 1
        if (s, t) == (0, 2):
            return -1
        return 0

    def cocycle_table(self) -> np.ndarray:
        return np.array([[self.cocycle(s, t) for t in range(3)] for s in range(3)])

    def audit(self, n_points: int = 10_000) -> CoverAudit:
        theta = np.arange(n_points) / n_points
        chi = self.partition(theta)
        resid = float(np.abs((chi ** 2).sum(axis=0) - 1).max())
        on = chi > 0
        connected = True
        for s, t in itertools.combinations(range(3), 2):
            both = (on[s] & on[t]).astype(int)
            # number of runs on the periodic grid
            runs = int(np.count_nonzero(np.diff(np.concatenate([both, both[:1]])) == 1))
            connected &= runs == 1
        triple = bool(np.any(on.all(axis=0)))
        d2 = []
        for m in (n_points // 4, n_points // 2, n_points):
            th = np.arange(m) / m
            c = self.partition(th)
            sec = (np.roll(c, -1, 1) - 2 * c + np.roll(c, 1, 1)) * m * m
            d2.append(float(np.abs(sec).max()))
        return CoverAudit(resid, connected, not triple, tuple(d2))


@dataclass(frozen=True)
class TorusCocycle:
    """Product cocycle ``g_IJ`` with values in Z^d on the ``3^d`` patches."""

    d: int
    circle: CircleCover = CircleCover()

    def __call__(self, i: Sequence[int], j: Sequence[int]) -> tuple[int, ...]:
        return tuple(self.circle.cocycle(a, b) for a, b in zip(i, j))

    def table(self) -> np.ndarray:
        """Array ``g[I, J, axis]`` over flat patch indices."""
        patches = list(itertools.product(range(3), repeat=self.d))
        c = self.circle.cocycle_table()
        p = np.array(patches)
        return c[p[:, None, :], p[None, :, :]]

    def audit(self, cover: "ProductCover | None" = None, n_points: int = 2000) -> dict:
        """Antisymmetry and the cocycle identity on every nonempty triple overlap.

        Overlaps are detected on a sample grid per circle; the product overlap
        is nonempty exactly when every factor overlap is.
        """
        cover = cover or ProductCover((self.circle,) * self.d)
        per_axis = []
        for c in cover.circles:
            on = c.partition(np.arange(n_points) / n_points) > 0
            per_axis.append(np.array([[[np.any(on[s] & on[t] & on[u]) for u in range(3)]
                                       for t in range(3)] for s in range(3)]))
        g = self.table()
        anti = int(np.count_nonzero(g + np.swapaxes(g, 0, 1)))
        p = np.array(list(itertools.product(range(3), repeat=self.d)))
        nonempty = np.ones((len(p),) * 3, dtype=bool)
        for ax, trip in enumerate(per_axis):
            a = p[:, ax]
            nonempty &= trip[a[:, None, None], a[None, :, None], a[None, None, :]]
        viol = g[:, :, None, :] + g[None, :, :, :] - g[:, None, :, :]
        bad = np.any(viol != 0, axis=-1) & nonempty
        return {"antisymmetry_violations": anti, "triples_checked": int(nonempty.sum()),
                "cocycle_violations": int(bad.sum())}


@dataclass(frozen=True)
class ProductCover:
    circles: tuple[CircleCover, ...]

    @classmethod
    def uniform(cls, d: int, overhang: float = DEFAULT_OVERHANG) -> "ProductCover":
        return cls((CircleCover(overhang),) * d)

    @property
    def d(self) -> int:
        return len(self.circles)

    @property
    def n_patches(self) -> int:
        return 3 ** self.d

    def overlap_constant(self, n_points: int = 4096) -> float:
        """``sum_{I,J,K} sup |chi_I chi_J^2 chi_K|`` (factorizes over circles)."""
        total = 1.0
        for c in self.circles:
            chi = c.partition(np.arange(n_points) / n_points)
            s = 0.0
            for i, j, k in itertools.product(range(3), repeat=3):
                s += float(np.max(np.abs(chi[i] * chi[j] ** 2 * chi[k])))
            total *= s
        return total


@dataclass(eq=False)
class PointGroup:
    """Grid points sharing one active patch set.

    ``points`` are flat grid indices, ``patches`` the active patch multi-indices
    (``K x d``) in C order. ``chi``/``dchi`` hold the partition values of the
    active patches; ``psi`` the compressed block matrix of cocycle images.
    Explicit fields (no cover) store ``a``/``da`` directly instead.
    """

    points: np.ndarray
    patches: np.ndarray
    patch_flat: np.ndarray
    m: int
    lam: np.ndarray
    vecs: np.ndarray
    psi: np.ndarray | None = None
    chi: np.ndarray | None = None
    dchi: np.ndarray | None = None
    a: np.ndarray | None = None
    da: np.ndarray | None = None

    @property
    def size(self) -> int:
        return len(self.patches) * self.m

    def __len__(self) -> int:
        return len(self.points)

    def weights(self, sel=slice(None)) -> np.ndarray:
        c = self.chi[sel]
        return c[:, :, None] * c[:, None, :]

    def d_weights(self, mu: int, sel=slice(None)) -> np.ndarray:
        c, dc = self.chi[sel], self.dchi[mu, sel]
        return dc[:, :, None] * c[:, None, :] + c[:, :, None] * dc[:, None, :]

    def moves_along(self, mu: int) -> bool:
        """False when the block ``a`` is constant along axis ``mu`` on this group."""
        if self.da is not None:
            return bool(np.any(self.da[mu]))
        return bool(np.any(self.dchi[mu]))

    def a_blocks(self, sel=slice(None)) -> np.ndarray:
        if self.a is not None:
            return self.a[sel]
        return kernels._kernels_py.build_blocks(self.psi, self.weights(sel), self.m)

    def da_blocks(self, sel=slice(None)) -> np.ndarray:
        """``(d, B, s, s)`` exact partial derivatives of the compressed ``a``."""
        if self.da is not None:
            return self.da[:, sel]
        d = self.dchi.shape[0]
        return np.stack([kernels._kernels_py.build_blocks(self.psi, self.d_weights(mu, sel), self.m)
                         for mu in range(d)])

    def q_blocks(self, sel=slice(None), threshold: float = 0.5) -> np.ndarray:
        lam, v = self.lam[sel], self.vecs[sel]
        hi = lam >= threshold
        return (v * hi[:, None, :]) @ np.conj(np.swapaxes(v, -1, -2))


@dataclass(frozen=True)
class GapStats:
    min_gap: float
    eigenvalue: float
    point: tuple[int, ...]


@dataclass(eq=False)
class BundleField:
    """Projection field ``q`` on a periodic grid over T^d, stored by patch groups."""

    d: int
    grid_shape: tuple[int, ...]
    n_patches: int
    m: int
    rank: int
    groups: list[PointGroup]
    gap_stats: GapStats
    threshold: float = 0.5
    gap_tol: float = DEFAULT_GAP_TOL
    cover: ProductCover | None = None
    rep: object = None
    meta: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.n_patches * self.m

    @property
    def n_points(self) -> int:
        return int(np.prod(self.grid_shape))

    @cached_property
    def _lookup(self) -> tuple[np.ndarray, np.ndarray]:
        gid = np.empty(self.n_points, dtype=np.int64)
        pos = np.empty(self.n_points, dtype=np.int64)
        for k, g in enumerate(self.groups):
            gid[g.points] = k
            pos[g.points] = np.arange(len(g))
        return gid, pos

    def locate(self, point) -> tuple[PointGroup, int]:
        flat = int(np.ravel_multi_index(tuple(point), self.grid_shape))
        gid, pos = self._lookup
        return self.groups[gid[flat]], int(pos[flat])

    def _embed(self, g: PointGroup, block: np.ndarray) -> np.ndarray:
        return container.embed_block(g.patch_flat, block, self.n_patches, self.m)

    def q_at(self, point) -> np.ndarray:
        g, k = self.locate(point)
        return self._embed(g, g.q_blocks(slice(k, k + 1), self.threshold)[0])

    def a_at(self, point) -> np.ndarray:
        g, k = self.locate(point)
        return self._embed(g, g.a_blocks(slice(k, k + 1))[0])

    def q_dense(self, max_bytes: float = 4e8) -> np.ndarray:
        """All of ``q`` as an array ``(*grid_shape, N m, N m)``."""
        nbytes = self.n_points * self.size ** 2 * 16
        if nbytes > max_bytes:
            raise ContractError(f"dense q would take {nbytes / 1e9:.1f} GB")
        out = np.zeros((self.n_points, self.size, self.size), dtype=np.complex128)
        for g in self.groups:
            idx = (g.patch_flat[:, None] * self.m + np.arange(self.m)[None, :]).ravel()
            for start in range(0, len(g), CHUNK):
                sel = slice(start, start + CHUNK)
                pts = g.points[sel]
                out[pts[:, None, None], idx[None, :, None], idx[None, None, :]] = \
                    g.q_blocks(sel, self.threshold)
        return out.reshape(self.grid_shape + (self.size, self.size))

    def iter_q(self):
        """Yield ``(flat_point, patch_flat, q_block)`` in grid order."""
        gid, pos = self._lookup
        for flat in range(self.n_points):
            g = self.groups[gid[flat]]
            k = int(pos[flat])
            yield flat, g.patch_flat, g.q_blocks(slice(k, k + 1), self.threshold)[0]

    def diagnostics(self, ps: Sequence[float] = (1, 2, np.inf)) -> dict:
        """Finite-scale checks of the field's structural inequalities.

        Norms of ``a^2 - a`` and ``a - q`` come from the eigenvalues, since
        both are functions of the Hermitian matrix ``a``.
        """
        out = {"sup_a_inf": 0.0, "idempotency": 0.0, "q_hermiticity": 0.0,
               "a_hermiticity": 0.0, "pnorm_violations": 0}
        sq = {p: 0.0 for p in ps}
        aq = {p: 0.0 for p in ps}
        for g in self.groups:
            lam = g.lam
            out["sup_a_inf"] = max(out["sup_a_inf"], float(np.abs(lam).max()))
            e_sq = np.abs(lam * lam - lam)
            e_aq = np.abs(lam - (lam >= self.threshold))
            for p in ps:
                n_sq = schatten_from_singular(e_sq, p)
                n_aq = schatten_from_singular(e_aq, p)
                sq[p] = max(sq[p], float(n_sq.max()))
                aq[p] = max(aq[p], float(n_aq.max()))
                out["pnorm_violations"] += int(np.count_nonzero(n_aq > 2 * n_sq + 1e-9))
            if g.psi is not None:
                out["a_hermiticity"] = max(out["a_hermiticity"],
                                           float(np.abs(g.psi - g.psi.conj().T).max()))
            for start in range(0, len(g), CHUNK):
                q = g.q_blocks(slice(start, start + CHUNK), self.threshold)
                qh = np.conj(np.swapaxes(q, -1, -2))
                out["idempotency"] = max(out["idempotency"], float(np.abs(q @ q - q).max()))
                out["q_hermiticity"] = max(out["q_hermiticity"], float(np.abs(q - qh).max()))
        out["asquared"] = {str(p): v for p, v in sq.items()}
        out["a_minus_q"] = {str(p): v for p, v in aq.items()}
        out["bounded_ok"] = out["sup_a_inf"] <= self.n_patches ** 2
        return out

    def asquared_check(self) -> dict:
        """``sup ||a^2 - a||_inf`` against ``C * delta``.

        ``delta`` is the largest defect ``||psi(g) psi(h) - psi(g + h)||_inf``
        over cocycle values ``g, h`` in ``{-1, 0, 1}^d``.
        """
        if self.cover is None or self.rep is None:
            raise ContractError("asquared_check needs a cover-assembled field")
        rep = self.rep
        words = list(itertools.product((-1, 0, 1), repeat=self.d))
        delta = 0.0
        for g in words:
            for h in words:
                gh = tuple(a + b for a, b in zip(g, h))
                if max(abs(c) for c in gh) > 1:
                    continue
                delta = max(delta, float(np.linalg.norm(rep(g) @ rep(h) - rep(gh), 2)))
        measured = max(float(np.abs(g.lam * g.lam - g.lam).max()) for g in self.groups)
        c = self.cover.overlap_constant()
        return {"constant": c, "defect": delta, "measured": measured,
                "bound": c * delta, "holds": measured <= c * delta + 1e-9}

    # -- export and cache ------------------------------------------------

    def header(self) -> dict:
        return {"kind": "bundle", "d": self.d, "grid_shape": list(self.grid_shape),
                "patches": self.n_patches, "block": self.m, "rank": self.rank,
                "components": 1, "threshold": self.threshold}

    def export(self, path) -> None:
        """Stream ``q`` to the binary container, one record per grid point."""
        with open(path, "wb") as fh:
            w = container.ContainerWriter(fh, self.header())
            for _, patches, block in self.iter_q():
                w.write(patches, block)

    def save(self, path) -> None:
        """Cache the eigensystems (not the raw ``a``) in an ``.npz`` file."""
        arrays = {}
        for k, g in enumerate(self.groups):
            for name in ("points", "patches", "patch_flat", "lam", "vecs",
                         "psi", "chi", "dchi", "a", "da"):
                val = getattr(g, name)
                if val is not None:
                    arrays[f"g{k}_{name}"] = val
        hdr = self.header()
        hdr.update(n_groups=len(self.groups), gap=[self.gap_stats.min_gap,
                   self.gap_stats.eigenvalue, list(self.gap_stats.point)],
                   gap_tol=self.gap_tol, meta=self.meta)
        if self.cover is not None:
            hdr["overhangs"] = [c.overhang for c in self.cover.circles]
        np.savez(path, header=np.array(_json_dumps(hdr)), **arrays)

    @classmethod
    def load(cls, path) -> "BundleField":
        import json
        with np.load(path) as z:
            hdr = json.loads(str(z["header"]))
            groups = []
            for k in range(hdr["n_groups"]):
                kw = {name: z[f"g{k}_{name}"] for name in
                      ("points", "patches", "patch_flat", "lam", "vecs", "psi", "chi",
                       "dchi", "a", "da") if f"g{k}_{name}" in z}
                groups.append(PointGroup(m=hdr["block"], **kw))
        cover = None
        if "overhangs" in hdr:
            cover = ProductCover(tuple(CircleCover(o) for o in hdr["overhangs"]))
        gap = GapStats(hdr["gap"][0], hdr["gap"][1], tuple(hdr["gap"][2]))
        return cls(hdr["d"], tuple(hdr["grid_shape"]), hdr["patches"], hdr["block"],
                   hdr["rank"], groups, gap, hdr["threshold"], hdr["gap_tol"], cover,
                   None, hdr.get("meta", {}))


def _json_dumps(obj) -> str:
    import json
    return json.dumps(obj, sort_keys=True)


def _as_resolution(resolution, d: int) -> tuple[int, ...]:
    if np.isscalar(resolution):
        shape = (int(resolution),) * d
    else:
        shape = tuple(int(r) for r in resolution)
    if len(shape) != d or min(shape) < 1:
        raise ContractError(f"resolution {resolution!r} does not fit rank {d}")
    return shape


def _as_cover(cover, d: int) -> ProductCover:
    if cover is None:
        return ProductCover.uniform(d)
    if isinstance(cover, CircleCover):
        return ProductCover((cover,) * d)
    if isinstance(cover, ProductCover):
        if cover.d != d:
            raise ContractError(f"cover rank {cover.d} differs from rep rank {d}")
        return cover
    return ProductCover(tuple(cover))


def _finish(groups, d, shape, n_patches, m, threshold, gap_tol, cover, rep, meta):
    best = None
    ranks = set()
    for g in groups:
        dist = np.abs(g.lam - threshold)
        k = int(np.argmin(dist.min(axis=1)))
        j = int(np.argmin(dist[k]))
        if best is None or dist[k, j] < best[0]:
            best = (float(dist[k, j]), float(g.lam[k, j]), int(g.points[k]))
        ranks.update(np.unique((g.lam >= threshold).sum(axis=1)).tolist())
    point = tuple(int(i) for i in np.unravel_index(best[2], shape))
    if best[0] < gap_tol:
        raise SpectralGapError(best[1], threshold, gap_tol, point)
    if len(ranks) != 1:
        raise ContractError(f"rank of q varies over the grid: {sorted(ranks)}")
    return BundleField(d, shape, n_patches, m, ranks.pop(), groups,
                       GapStats(best[0], best[1], point), threshold, gap_tol, cover, rep, meta)


def assemble_bundle(rep, cover=None, resolution=64, gap_tol: float = DEFAULT_GAP_TOL,
                    threshold: float = 0.5, threads: int | None = None,
                    backend: str | None = None) -> BundleField:
    """Assemble ``a(x)`` on the grid and take its spectral projection.

    Parameters
    ----------
    rep : normalized map (see :func:`obstruction_lab.almost_rep.normalize`)
        A plain :class:`AlmostRep` is rejected, since ``a`` must be Hermitian.
    cover : CircleCover, ProductCover or sequence of CircleCover, optional
    resolution : int or sequence of int
        Grid points per axis.

    Raises
    ------
    SpectralGapError
        Some eigenvalue of ``a(x)`` lies within ``gap_tol`` of ``threshold``.
    """
    if not isinstance(rep, (NormalizedRep, NormalizedSum)):
        raise ContractError("assemble_bundle needs a normalized map; call normalize() first")
    d, m = rep.rank, rep.dim
    cov = _as_cover(cover, d)
    shape = _as_resolution(resolution, d)
    kern = kernels.get(backend)
    threads = threads or kernels.default_threads()
    ctab = cov.circles[0].cocycle_table()

    chis, dchis, configs = [], [], []
    for c, n in zip(cov.circles, shape):
        chi, dchi = c.evaluate(np.arange(n) / n)
        chis.append(chi)
        dchis.append(dchi)
        act = [tuple(np.flatnonzero(chi[:, i] > 0)) for i in range(n)]
        by = {}
        for i, a in enumerate(act):
            by.setdefault(a, []).append(i)
        configs.append(sorted(by.items()))

    psi_cache: dict = {}

    def psi_of(g):
        if g not in psi_cache:
            psi_cache[g] = np.asarray(rep(g), dtype=np.complex128)
        return psi_cache[g]

    groups = []
    for combo in itertools.product(*configs):
        actives = [a for a, _ in combo]
        idx_lists = [np.array(ix) for _, ix in combo]
        mesh = np.meshgrid(*idx_lists, indexing="ij")
        coords = np.stack([x.ravel() for x in mesh], axis=1)
        points = np.ravel_multi_index(tuple(coords.T), shape)
        patches = np.array(list(itertools.product(*actives)), dtype=np.int64)
        patch_flat = np.ravel_multi_index(tuple(patches.T), (3,) * d)
        k = len(patches)

        vals = np.stack([chis[mu][patches[:, mu]][:, coords[:, mu]] for mu in range(d)])
        ders = np.stack([dchis[mu][patches[:, mu]][:, coords[:, mu]] for mu in range(d)])
        chi_act = vals.prod(axis=0).T
        dchi_act = np.empty((d,) + chi_act.shape)
        for mu in range(d):
            others = np.prod(np.delete(vals, mu, axis=0), axis=0) if d > 1 else 1.0
            dchi_act[mu] = (ders[mu] * others).T

        psi = np.zeros((k * m, k * m), dtype=np.complex128)
        for i in range(k):
            for j in range(k):
                g = tuple(int(ctab[patches[i, ax], patches[j, ax]]) for ax in range(d))
                psi[i * m:(i + 1) * m, j * m:(j + 1) * m] = psi_of(g)
        if np.abs(psi - psi.conj().T).max() > 1e-10:
            raise ContractError("cocycle images are not Hermitian-paired; normalize the map")

        lam = np.empty((len(points), k * m))
        vecs = np.empty((len(points), k * m, k * m), dtype=np.complex128)
        w_all = chi_act[:, :, None] * chi_act[:, None, :]
        for start in range(0, len(points), CHUNK):
            sel = slice(start, start + CHUNK)
            with kernels.blas_pinned(threads):
                lam[sel], vecs[sel] = kern.assemble_eigh(psi, np.ascontiguousarray(w_all[sel]),
                                                         m, threads)
        groups.append(PointGroup(points, patches, patch_flat, m, lam, vecs,
                                 psi=psi, chi=chi_act, dchi=dchi_act))
    meta = {"source": "cover", "backend": getattr(kern, "BACKEND", "?")}
    return _finish(groups, d, shape, 3 ** d, m, threshold, gap_tol, cov, rep, meta)


def projection_field(a_fn, resolution, threshold: float = 0.5,
                     gap_tol: float = DEFAULT_GAP_TOL) -> BundleField:
    """Field from an explicit Hermitian family ``a(x)`` and its derivatives.

    ``a_fn(*coords)`` receives coordinate arrays of shape ``(P,)`` and returns
    ``(a, da)`` with shapes ``(P, s, s)`` and ``(d, P, s, s)``.
    """
    shape = tuple(int(r) for r in resolution)
    d = len(shape)
    mesh = np.meshgrid(*[np.arange(n) / n for n in shape], indexing="ij")
    coords = [x.ravel() for x in mesh]
    a, da = a_fn(*coords)
    a = np.asarray(a, dtype=np.complex128)
    da = np.asarray(da, dtype=np.complex128)
    lam, vecs = np.linalg.eigh(a)
    s = a.shape[-1]
    group = PointGroup(np.arange(len(coords[0])), np.zeros((1, d), dtype=np.int64),
                       np.zeros(1, dtype=np.int64), s, lam, vecs, a=a, da=da)
    return _finish([group], d, shape, 1, s, threshold, gap_tol, None, None,
                   {"source": "explicit"})


def bott_field(w: int, resolution, mass: float = 1.0) -> BundleField:
    """Rank-one projection ``(1 + n.sigma)/2`` on T^2 with ``<ch_1, [T^2]> = w``.

    ``n`` is the normalized lattice-Dirac vector
    ``(sin 2 pi v x, sin 2 pi y, mass + cos 2 pi v x + cos 2 pi y)`` with
    ``v = -w``; for ``0 < mass < 2`` and ``|w| <= 1`` the pairing is ``w``.
    """
    sig = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=np.complex128)
    tau = 2 * np.pi
    w = -w

    def fn(x, y):
        v = np.stack([np.sin(tau * w * x), np.sin(tau * y),
                      mass + np.cos(tau * w * x) + np.cos(tau * y)])
        dv = np.stack([
            np.stack([tau * w * np.cos(tau * w * x), 0 * x, -tau * w * np.sin(tau * w * x)]),
            np.stack([0 * y, tau * np.cos(tau * y), -tau * np.sin(tau * y)]),
        ])
        r = np.sqrt((v ** 2).sum(axis=0))
        nvec = v / r
        dn = (dv - nvec[None] * (nvec[None] * dv).sum(axis=1, keepdims=True)) / r
        a = 0.5 * (np.eye(2) + np.einsum("kp,kij->pij", nvec, sig))
        da = 0.5 * np.einsum("mkp,kij->mpij", dn, sig)
        return a, da

    return projection_field(fn, resolution)


# -- pullbacks and sums -------------------------------------------------------


@dataclass(eq=False)
class PullbackField:
    """``q(x) = q_src(x_axes) (x) |c(x_rest)><c(x_rest)|`` on T^d.

    ``rest`` is the trivial-map field on the remaining axes, whose ``q`` is the
    rank-one projection onto the partition vector ``c``. Matrix indices follow
    the same flat patch-major order as :func:`assemble_bundle`.
    """

    source: BundleField
    axes: tuple[int, ...]
    rest: BundleField
    d: int

    def __post_init__(self):
        if len(set(self.axes)) != len(self.axes) or len(self.axes) != self.source.d:
            raise ContractError(f"axes {self.axes} do not match a rank-{self.source.d} source")
        if any(a < 0 or a >= self.d for a in self.axes):
            raise ContractError(f"axes {self.axes} leave the range 0..{self.d - 1}")

    @property
    def rest_axes(self) -> tuple[int, ...]:
        return tuple(a for a in range(self.d) if a not in self.axes)

    @property
    def grid_shape(self) -> tuple[int, ...]:
        shape = [0] * self.d
        for a, n in zip(self.axes, self.source.grid_shape):
            shape[a] = n
        for a, n in zip(self.rest_axes, self.rest.grid_shape):
            shape[a] = n
        return tuple(shape)

    @property
    def m(self) -> int:
        return self.source.m

    @property
    def n_patches(self) -> int:
        return 3 ** self.d

    @property
    def size(self) -> int:
        return self.n_patches * self.m

    @property
    def rank(self) -> int:
        return self.source.rank * self.rest.rank

    @cached_property
    def permutation(self) -> np.ndarray:
        """``perm[canonical_index] = kron_index`` for ``kron(q_src, q_rest)``."""
        m, n_rest = self.m, self.rest.n_patches
        out = np.empty(self.size, dtype=np.int64)
        for flat, patch in enumerate(itertools.product(range(3), repeat=self.d)):
            src = np.ravel_multi_index(tuple(patch[a] for a in self.axes), (3,) * len(self.axes))
            rst = np.ravel_multi_index(tuple(patch[a] for a in self.rest_axes),
                                       (3,) * len(self.rest_axes)) if self.rest_axes else 0
            for r in range(m):
                out[flat * m + r] = (src * m + r) * n_rest + rst
        return out

    def split(self, point) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return (tuple(point[a] for a in self.axes), tuple(point[a] for a in self.rest_axes))

    def q_at(self, point) -> np.ndarray:
        ps, pr = self.split(point)
        k = np.kron(self.source.q_at(ps), self.rest.q_at(pr))
        perm = self.permutation
        return k[perm[:, None], perm[None, :]]

    def restrict(self, rest_point) -> np.ndarray:
        """Compress onto the fiber over ``rest_point``; returns ``q_src`` on its grid.

        Uses ``(1 (x) <c|) q (1 (x) |c>)`` with the unit vector ``c`` spanning
        the rest factor's range.
        """
        qr = self.rest.q_at(tuple(rest_point))
        lam, v = np.linalg.eigh(qr)
        c = v[:, -1]
        n_src = self.source.size
        out = np.empty(tuple(self.source.grid_shape) + (n_src, n_src), dtype=np.complex128)
        inv = np.argsort(self.permutation)
        for ps in np.ndindex(*self.source.grid_shape):
            point = [0] * self.d
            for a, i in zip(self.axes, ps):
                point[a] = i
            for a, i in zip(self.rest_axes, rest_point):
                point[a] = i
            q = self.q_at(tuple(point))[inv[:, None], inv[None, :]]
            q4 = q.reshape(n_src, len(c), n_src, len(c))
            out[ps] = np.einsum("i,aibj,j->ab", c.conj(), q4, c)
        return out


@dataclass(eq=False)
class FieldSum:
    """Orthogonal direct sum of pullback fields on one grid.

    Block ``k`` occupies rows ``r`` of every patch with
    ``offset_k <= r < offset_k + m_k``, matching assembly of the direct-sum map.
    """

    parts: tuple[PullbackField, ...]

    def __post_init__(self):
        shapes = {p.grid_shape for p in self.parts}
        if len(shapes) != 1 or len({p.d for p in self.parts}) != 1:
            raise ContractError("summands must live on one grid")

    @property
    def d(self) -> int:
        return self.parts[0].d

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return self.parts[0].grid_shape

    @property
    def m(self) -> int:
        return sum(p.m for p in self.parts)

    @property
    def n_patches(self) -> int:
        return 3 ** self.d

    @property
    def rank(self) -> int:
        return sum(p.rank for p in self.parts)

    def q_at(self, point) -> np.ndarray:
        n, m = self.n_patches, self.m
        out = np.zeros((n, m, n, m), dtype=np.complex128)
        off = 0
        for p in self.parts:
            mp = p.m
            out[:, off:off + mp, :, off:off + mp] = p.q_at(point).reshape(n, mp, n, mp)
            off += mp
        return out.reshape(n * m, n * m)


def pullback_field(source: BundleField, axes: Sequence[int], d: int,
                   resolution=None, cover=None) -> PullbackField:
    """Pull a field on T^k back to T^d along the projection onto ``axes``.

    The remaining axes carry the trivial-map field, built on ``resolution``
    (default: the source's first axis resolution) with ``cover`` (default: the
    source's first circle).
    """
    axes = tuple(int(a) for a in axes)
    if len(axes) != source.d:
        raise ContractError(f"need {source.d} target axes, got {axes}")
    n_rest = d - len(axes)
    if n_rest < 1:
        raise ContractError("pullback needs at least one extra axis")
    if resolution is None:
        resolution = source.grid_shape[0]
    if cover is None:
        cover = source.cover.circles[0] if source.cover is not None else CircleCover()
    rest = assemble_bundle(normalize(trivial_rep(n_rest, 1)), cover, resolution)
    return PullbackField(source, axes, rest, d)
