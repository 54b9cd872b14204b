"""Matrix-valued differential forms on uniform periodic grids over T^d.

A degree-k form stores one matrix per grid point for every increasing
multi-index ``I`` with ``|I| = k`` (the coefficient of ``dx^I``). Coordinates
run over ``[0, 1)`` with the flat metric, so the ``dx^I`` are orthonormal.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from . import container
from .errors import ContractError, DegreeError
from .linalg_core import schatten_norm

LITERAL_COST_GATE = 4096


@lru_cache(maxsize=None)
def multi_indices(d: int, k: int) -> tuple[tuple[int, ...], ...]:
    return tuple(itertools.combinations(range(d), k))


def merge_sign(i: tuple[int, ...], j: tuple[int, ...]) -> int:
    """Sign of ``dx^I ^ dx^J`` relative to the sorted union; 0 if they meet."""
    if set(i) & set(j):
        return 0
    inversions = sum(1 for a in i for b in j if a > b)
    return -1 if inversions % 2 else 1


@lru_cache(maxsize=None)
def wedge_table(d: int, k: int, j: int) -> tuple[tuple[int, int, int, int], ...]:
    """Entries ``(out_index, a_index, b_index, sign)`` for degree-k ^ degree-j."""
    out_pos = {idx: n for n, idx in enumerate(multi_indices(d, k + j))}
    table = []
    for ia, i in enumerate(multi_indices(d, k)):
        for ib, jj in enumerate(multi_indices(d, j)):
            s = merge_sign(i, jj)
            if s:
                table.append((out_pos[tuple(sorted(i + jj))], ia, ib, s))
    return tuple(table)


def wedge_arrays(a: np.ndarray, k: int, b: np.ndarray, j: int, d: int) -> np.ndarray:
    """Wedge of component stacks ``a[C(d,k), ..., s, s]`` and ``b[C(d,j), ..., s, s]``.

    Matrix order is preserved: the coefficient of ``dx^K`` is
    ``sum sign(I, J) a_I @ b_J`` over disjoint ``I, J`` with union ``K``.
    """
    if k + j > d:
        raise DegreeError(f"wedge of degrees {k} and {j} exceeds dimension {d}")
    out = np.zeros((comb(d, k + j),) + np.broadcast_shapes(a.shape[1:], b.shape[1:]),
                   dtype=np.result_type(a, b))
    for o, ia, ib, s in wedge_table(d, k, j):
        if s > 0:
            out[o] += a[ia] @ b[ib]
        else:
            out[o] -= a[ia] @ b[ib]
    return out


@dataclass
class MatrixFormField:
    """A degree-k matrix-valued form sampled on a periodic grid.

    ``comps`` has shape ``(C(d, k), *grid_shape, s, s)``.
    """

    d: int
    degree: int
    comps: np.ndarray

    def __post_init__(self):
        self.comps = np.asarray(self.comps)
        if not 0 <= self.degree <= self.d:
            raise DegreeError(f"degree {self.degree} outside 0..{self.d}")
        want = comb(self.d, self.degree)
        if self.comps.ndim != self.d + 3 or self.comps.shape[0] != want:
            raise ContractError(
                f"components must have shape ({want}, *grid, s, s); got {self.comps.shape}")
        if self.comps.shape[-1] != self.comps.shape[-2]:
            raise ContractError("component matrices must be square")

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return self.comps.shape[1:1 + self.d]

    @property
    def size(self) -> int:
        return self.comps.shape[-1]

    @property
    def index_table(self):
        return multi_indices(self.d, self.degree)

    def component(self, idx) -> np.ndarray:
        return self.comps[self.index_table.index(tuple(idx))]

    def at(self, point) -> np.ndarray:
        """Component matrices at one grid point, shape ``(C, s, s)``."""
        return self.comps[(slice(None),) + tuple(point)]

    @classmethod
    def zeros(cls, d, degree, grid_shape, s, dtype=np.complex128):
        shape = (comb(d, degree),) + tuple(grid_shape) + (s, s)
        return cls(d, degree, np.zeros(shape, dtype=dtype))

    @classmethod
    def from_function(cls, fn, grid_shape, s: int = 1):
        """Sample a 0-form ``fn(*coords) -> (..., s, s)`` on the grid."""
        grid_shape = tuple(grid_shape)
        coords = np.meshgrid(*[np.arange(n) / n for n in grid_shape], indexing="ij")
        vals = np.asarray(fn(*coords), dtype=np.complex128)
        vals = np.broadcast_to(vals.reshape(grid_shape + (s, s)), grid_shape + (s, s))
        return cls(len(grid_shape), 0, vals[None].copy())

    def __add__(self, other: "MatrixFormField") -> "MatrixFormField":
        _check_compatible(self, other)
        if self.degree != other.degree:
            raise DegreeError("cannot add forms of different degree")
        return MatrixFormField(self.d, self.degree, self.comps + other.comps)

    def __sub__(self, other: "MatrixFormField") -> "MatrixFormField":
        return self + other.scaled(-1.0)

    def scaled(self, c) -> "MatrixFormField":
        return MatrixFormField(self.d, self.degree, self.comps * c)


def _check_compatible(a: MatrixFormField, b: MatrixFormField) -> None:
    if a.d != b.d or a.grid_shape != b.grid_shape:
        raise ContractError("forms live on different grids")
    if a.size != b.size:
        raise ContractError(f"matrix size mismatch: {a.size} vs {b.size}")


def partial(values: np.ndarray, axis: int, n: int, order: int = 2) -> np.ndarray:
    """Periodic central difference along ``axis`` with spacing ``1/n``."""
    h = 1.0 / n
    if order == 2:
        return (np.roll(values, -1, axis) - np.roll(values, 1, axis)) / (2 * h)
    if order == 4:
        return (-np.roll(values, -2, axis) + 8 * np.roll(values, -1, axis)
                - 8 * np.roll(values, 1, axis) + np.roll(values, 2, axis)) / (12 * h)
    raise ContractError(f"unsupported stencil order {order}")


def ext_d(f: MatrixFormField, order: int = 2) -> MatrixFormField:
    """Discrete exterior derivative with periodic central differences."""
    d, k = f.d, f.degree
    if k >= d:
        raise DegreeError(f"exterior derivative of a top-degree ({k}) form")
    if min(f.grid_shape) < 4:
        raise ContractError("ext_d needs at least 4 grid points per axis")
    out = MatrixFormField.zeros(d, k + 1, f.grid_shape, f.size, dtype=np.result_type(f.comps, 1j))
    pos = {idx: n for n, idx in enumerate(multi_indices(d, k + 1))}
    for ii, idx in enumerate(multi_indices(d, k)):
        for mu in range(d):
            if mu in idx:
                continue
            s = merge_sign((mu,), idx)
            target = pos[tuple(sorted((mu,) + idx))]
            out.comps[target] += s * partial(f.comps[ii], mu, f.grid_shape[mu], order)
    return out


def wedge(a: MatrixFormField, b: MatrixFormField) -> MatrixFormField:
    _check_compatible(a, b)
    return MatrixFormField(a.d, a.degree + b.degree,
                           wedge_arrays(a.comps, a.degree, b.comps, b.degree, a.d))


def form_trace(a: MatrixFormField) -> MatrixFormField:
    tr = np.trace(a.comps, axis1=-2, axis2=-1)
    return MatrixFormField(a.d, a.degree, tr[..., None, None])


@lru_cache(maxsize=None)
def exterior_multipliers(d: int, k: int) -> np.ndarray:
    """Matrices of left multiplication by ``dx^I`` on the full exterior algebra.

    Basis vectors are the subsets of ``{0..d-1}`` in bitmask order.
    """
    basis = [tuple(i for i in range(d) if mask >> i & 1) for mask in range(2 ** d)]
    where = {b: n for n, b in enumerate(basis)}
    mats = np.zeros((comb(d, k), 2 ** d, 2 ** d))
    for ii, idx in enumerate(multi_indices(d, k)):
        for col, j in enumerate(basis):
            s = merge_sign(idx, j)
            if s:
                mats[ii, where[tuple(sorted(idx + j))], col] = s
    return mats


def left_multiplication(comps: np.ndarray, d: int, k: int) -> np.ndarray:
    """Operator of left multiplication by a form on ``Lambda(R^d) (x) C^s``.

    ``comps`` has shape ``(C(d, k), ..., s, s)``; the result has shape
    ``(..., 2^d s, 2^d s)``.
    """
    e = exterior_multipliers(d, k)
    s = comps.shape[-1]
    op = np.einsum("cab,c...ij->...aibj", e, comps)
    return op.reshape(comps.shape[1:-2] + (2 ** d * s, 2 ** d * s))


@dataclass(frozen=True)
class FormNormReport:
    p: float
    mode: str
    pointwise: np.ndarray
    normalized: bool = True

    @property
    def sup(self) -> float:
        return float(np.max(self.pointwise, initial=0.0))


def pointwise_literal_norm(comps: np.ndarray, d: int, k: int, p, normalized: bool = True):
    s = comps.shape[-1]
    if 2 ** d * s > LITERAL_COST_GATE:
        raise ContractError(
            f"literal norm needs 2^d * s = {2 ** d * s} <= {LITERAL_COST_GATE}; use the estimator")
    op = left_multiplication(comps, d, k)
    vals = np.asarray(schatten_norm(op, p))
    if normalized and p != np.inf:
        vals = vals / 2 ** (d / p)
    return vals


def pointwise_estimator_norm(comps: np.ndarray, p) -> np.ndarray:
    return np.asarray(schatten_norm(comps, p)).sum(axis=0)


def form_norm(a: MatrixFormField, p, mode: str = "estimator", normalized: bool = True) -> FormNormReport:
    """Pointwise Schatten norm of a matrix form and its sup over the grid.

    ``literal`` builds the left-multiplication operator on the full exterior
    algebra and divides its Schatten norm by ``2^{d/p}`` (skipped when
    ``normalized`` is false); ``estimator`` returns ``sum_I ||a_I||_p``.
    """
    if mode == "literal":
        vals = pointwise_literal_norm(a.comps, a.d, a.degree, p, normalized)
    elif mode == "estimator":
        vals = pointwise_estimator_norm(a.comps, p)
    else:
        raise ContractError(f"unknown norm mode {mode!r}")
    return FormNormReport(p, mode, np.asarray(vals, dtype=float), normalized)


def euclidean_scalar_norm(a: MatrixFormField) -> np.ndarray:
    """Pointwise metric norm of a scalar (s = 1) form."""
    if a.size != 1:
        raise ContractError("euclidean_scalar_norm expects a scalar form")
    return np.sqrt((np.abs(a.comps[..., 0, 0]) ** 2).sum(axis=0))


def c1_norm(a: MatrixFormField, da: MatrixFormField | None = None, mode: str = "literal") -> float:
    """``||a||_inf + ||da||_inf`` for a matrix 0-form; ``da`` defaults to ext_d(a)."""
    if a.degree != 0:
        raise DegreeError("C^1 norm is defined for 0-forms")
    if da is None:
        da = ext_d(a)
    if mode == "literal" and 2 ** a.d * a.size > LITERAL_COST_GATE:
        mode = "estimator"
    return form_norm(a, np.inf, mode).sup + form_norm(da, np.inf, mode).sup


def export_form(field: MatrixFormField, path) -> None:
    header = {
        "kind": "form", "d": field.d, "grid_shape": list(field.grid_shape),
        "patches": 1, "block": field.size, "degree": field.degree,
        "components": field.comps.shape[0],
        "multi_indices": [list(i) for i in field.index_table],
    }
    with open(path, "wb") as fh:
        w = container.ContainerWriter(fh, header)
        for point in np.ndindex(*field.grid_shape):
            w.write([0], field.at(point))


def load_form(path) -> MatrixFormField:
    with open(path, "rb") as fh:
        blocks = []
        header = None
        for header, _, data in container.iter_records(fh):
            blocks.append(data)
    if header is None:
        raise ContractError("empty form container")
    grid = tuple(header["grid_shape"])
    arr = np.stack(blocks).reshape(grid + blocks[0].shape)
    comps = np.moveaxis(arr, len(grid), 0)
    return MatrixFormField(header["d"], header["degree"], comps)
