"""Dense complex matrix kernel: Schatten norms, Hermitian and normal
eigendecompositions, and the functional calculus built on top of them.

Matrices are plain ``numpy.ndarray`` objects of complex dtype. Functions that
accept a single matrix validate it; functions with a ``_batch`` suffix or
documented stack support operate on the last two axes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .errors import BranchCutError, ContractError, DomainError, SpectralGapError

ABS_FLOOR = 1e-12
HERMITIAN_RTOL = 1e-9
NORMAL_RTOL = 1e-9
UNITARY_TOL = 1e-8
DEFAULT_GAP_TOL = 1e-3


def as_cmatrix(a, square: bool = False) -> np.ndarray:
    """Return ``a`` as a finite complex 2-d array, raising on bad input."""
    arr = np.asarray(a)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ContractError(f"expected a non-empty 2-d matrix, got shape {arr.shape}")
    arr = arr.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(arr)):
        raise ContractError("matrix has non-finite entries")
    if square and arr.shape[0] != arr.shape[1]:
        raise ContractError(f"expected a square matrix, got shape {arr.shape}")
    return arr


def op_norm(a) -> float:
    """Operator norm of a single matrix (largest singular value)."""
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def _tol(scale: float, rtol: float) -> float:
    return max(rtol * scale, ABS_FLOOR)


def schatten_from_singular(s, p) -> np.ndarray:
    """Schatten p-norm from singular values stored along the last axis."""
    s = np.asarray(s, dtype=float)
    if p == np.inf:
        return s.max(axis=-1) if s.shape[-1] else np.zeros(s.shape[:-1])
    if p == 1:
        return s.sum(axis=-1)
    if p == 2:
        return np.sqrt((s * s).sum(axis=-1))
    # scale before powering so large p does not overflow
    top = s.max(axis=-1, keepdims=True)
    safe = np.where(top > 0, top, 1.0)
    return safe[..., 0] * ((s / safe) ** p).sum(axis=-1) ** (1.0 / p)


def _check_p(p) -> float:
    if p == np.inf or p == float("inf"):
        return np.inf
    p = float(p)
    if not p >= 1.0:
        raise DomainError(f"Schatten exponent must satisfy p >= 1, got {p}")
    return p


def schatten_norm(a, p) -> float | np.ndarray:
    """Unnormalized Schatten p-norm ``(sum_i s_i**p)**(1/p)``.

    Parameters
    ----------
    a : array_like
        A matrix, or a stack of matrices in the last two axes.
    p : float
        Exponent in ``[1, inf]``.

    Returns
    -------
    float or ndarray
        The norm; an array of norms for stacked input.
    """
    p = _check_p(p)
    arr = np.asarray(a)
    if arr.ndim < 2:
        raise ContractError("schatten_norm needs at least a 2-d array")
    if not np.all(np.isfinite(arr)):
        raise ContractError("matrix has non-finite entries")
    if arr.shape[-1] == 0 or arr.shape[-2] == 0:
        out = np.zeros(arr.shape[:-2])
    elif p == 2:
        out = np.sqrt((np.abs(arr) ** 2).sum(axis=(-2, -1)))
    else:
        s = np.linalg.svd(arr, compute_uv=False)
        out = schatten_from_singular(s, p)
    if arr.ndim == 2:
        return float(out)
    return out


def schatten_norm_trace_formula(a, p: float) -> float:
    """``Tr((a* a)^{p/2})^{1/p}`` computed through an eigendecomposition of
    ``a* a``; an independent route to :func:`schatten_norm` for finite p."""
    a = as_cmatrix(a)
    p = _check_p(p)
    if p == np.inf:
        raise DomainError("trace formula only defined for finite p")
    # the smaller Gram matrix avoids structural zero eigenvalues
    g = a.conj().T @ a if a.shape[1] <= a.shape[0] else a @ a.conj().T
    w = np.linalg.eigvalsh((g + g.conj().T) / 2)
    w = np.clip(w, 0.0, None)
    return float(np.sum(w ** (p / 2.0)) ** (1.0 / p))


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues and a unitary matrix of eigenvectors (columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T

    def reconstruction_residual(self, a) -> float:
        return float(np.abs(self.reconstruct() - a).max(initial=0.0))

    def orthonormality_residual(self) -> float:
        v = self.eigenvectors
        return float(np.abs(v.conj().T @ v - np.eye(v.shape[1])).max(initial=0.0))


def hermiticity_defect(a) -> float:
    a = np.asarray(a)
    return op_norm(a - a.conj().T)


def hermitian_eig(a, tol: float | None = None) -> EigenSystem:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    The input is symmetrized to ``(a + a*)/2`` first. A matrix whose
    anti-Hermitian part exceeds ``tol`` (default ``1e-9 * ||a||``) is rejected.
    """
    a = as_cmatrix(a, square=True)
    scale = op_norm(a)
    limit = _tol(scale, HERMITIAN_RTOL) if tol is None else tol
    defect = hermiticity_defect(a)
    if defect > limit:
        raise ContractError(f"matrix is not Hermitian: ||a - a*|| = {defect:.3e} > {limit:.3e}")
    w, v = np.linalg.eigh((a + a.conj().T) / 2)
    return EigenSystem(w, v)


def spectral_projector(a, threshold: float = 0.5, gap_tol: float = DEFAULT_GAP_TOL) -> np.ndarray:
    """Spectral projection of a Hermitian matrix onto eigenvalues ``>= threshold``.

    Raises
    ------
    SpectralGapError
        If some eigenvalue lies strictly within ``gap_tol`` of ``threshold``.
    """
    es = hermitian_eig(a)
    dist = np.abs(es.eigenvalues - threshold)
    k = int(np.argmin(dist))
    if dist[k] < gap_tol:
        raise SpectralGapError(float(es.eigenvalues[k]), threshold, gap_tol)
    v = es.eigenvectors[:, es.eigenvalues >= threshold]
    return v @ v.conj().T


def normality_defect(a) -> float:
    a = np.asarray(a)
    return op_norm(a @ a.conj().T - a.conj().T @ a)


def normal_schur(a, tol: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and unitary eigenbasis of a normal matrix via complex Schur."""
    a = as_cmatrix(a, square=True)
    scale = op_norm(a)
    limit = _tol(scale * scale, NORMAL_RTOL) if tol is None else tol
    defect = normality_defect(a)
    if defect > limit:
        raise ContractError(f"matrix is not normal: ||aa* - a*a|| = {defect:.3e} > {limit:.3e}")
    t, z = scipy.linalg.schur(a, output="complex")
    return np.diag(t).copy(), z


def normal_funcalc(a, f: Callable) -> np.ndarray:
    """Apply a scalar function to a normal matrix through its eigenbasis.

    ``f`` is called once with the array of eigenvalues and must return an
    array of the same length (numpy ufuncs and vectorized lambdas work).
    """
    lam, z = normal_schur(a)
    vals = np.asarray(f(lam), dtype=complex)
    if vals.shape != lam.shape:
        vals = np.array([complex(f(x)) for x in lam])
    return (z * vals) @ z.conj().T


def unitarity_defect(u) -> float:
    u = np.asarray(u)
    return op_norm(u.conj().T @ u - np.eye(u.shape[1]))


def _check_unitary(u, tol=UNITARY_TOL) -> np.ndarray:
    u = as_cmatrix(u, square=True)
    d = unitarity_defect(u)
    if d > tol:
        raise ContractError(f"matrix is not unitary: ||u*u - 1|| = {d:.3e}")
    return u


def chi_half_plane(z, cut: float = 0.5, closed: bool = True) -> np.ndarray:
    """Indicator of ``Re z >= cut`` (``closed``) or ``Re z > cut``."""
    re = np.real(z)
    return (re >= cut if closed else re > cut).astype(float)


def sign_unitarize(u, gap_tol: float = DEFAULT_GAP_TOL) -> np.ndarray:
    """Replace a unitary by the self-adjoint unitary ``2 chi_{Re>0}(u) - 1``.

    Every eigenvalue ``z`` moves by ``|z - sgn Re z| <= |z**2 - 1|``; this is
    verified per eigenvalue before returning.
    """
    u = _check_unitary(u)
    lam, z = normal_schur(u)
    k = int(np.argmin(np.abs(lam.real)))
    if abs(lam[k].real) < gap_tol:
        raise SpectralGapError(complex(lam[k]), 0.0, gap_tol,
                               message=f"eigenvalue {lam[k]!r} is within {gap_tol:g} "
                                       "of the imaginary axis")
    sgn = 2.0 * chi_half_plane(lam, 0.0, closed=False) - 1.0
    moved = np.abs(lam - sgn)
    bound = np.abs(lam * lam - 1.0)
    if np.any(moved > bound + 1e-12):
        raise AssertionError("eigenvalue displacement exceeds |z^2 - 1|")
    v = (z * sgn) @ z.conj().T
    return (v + v.conj().T) / 2


def unitary_log_trace(u, gap_tol: float = DEFAULT_GAP_TOL) -> complex:
    """``Tr Log u`` with the principal branch applied to each eigenvalue."""
    u = _check_unitary(u)
    lam = np.linalg.eigvals(u)
    dist = np.abs(lam + 1.0)
    k = int(np.argmin(dist))
    if dist[k] < gap_tol:
        raise BranchCutError(complex(lam[k]), -1.0, gap_tol)
    return complex(np.sum(np.log(lam)))


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Gaussian matrix."""
    g = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(g)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_hermitian(n: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (g + g.conj().T) / 2


def random_matrix(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
