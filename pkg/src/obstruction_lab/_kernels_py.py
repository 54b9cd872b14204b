"""Pure numpy implementation of the per-grid-point kernels.

Every function works on a batch of points sharing one block layout. The
compiled module ``_kernels`` exposes the same functions with the same
signatures; :mod:`obstruction_lab.kernels` picks one at import time.
"""

from __future__ import annotations

import numpy as np

BACKEND = "numpy"


def assemble_eigh(psi, w, m, threads=1):
    """Eigendecompose ``a = (w (x) 1_m) * psi`` for every point of the batch.

    Parameters
    ----------
    psi : (s, s) complex array, ``s = K m``
        Block matrix of cocycle images.
    w : (B, K, K) real array
        Products ``chi_I chi_J`` per point.
    m : int
        Block size.

    Returns
    -------
    lam : (B, s) float array, ascending
    vecs : (B, s, s) complex array, eigenvectors in columns
    """
    a = build_blocks(psi, w, m)
    lam, vecs = np.linalg.eigh(a)
    return lam, vecs


def build_blocks(psi, w, m):
    b, k, _ = w.shape
    p4 = psi.reshape(k, m, k, m)
    return (w[:, :, None, :, None] * p4[None]).reshape(b, k * m, k * m)


def _dk_weights(lam, threshold):
    hi = lam >= threshold
    diff = np.abs(lam[:, :, None] - lam[:, None, :])
    cross = hi[:, :, None] != hi[:, None, :]
    with np.errstate(divide="ignore"):
        g = np.where(cross, 1.0 / np.where(cross, diff, 1.0), 0.0)
    return hi, g


def projector_derivatives(lam, vecs, da, threshold, threads=1):
    """Spectral projector ``q`` and its exact directional derivatives.

    ``da`` has shape ``(d, B, s, s)``; the derivative of ``chi(a)`` along
    ``da[mu]`` is ``V (G o (V* da V)) V*`` with divided differences ``G``.
    """
    hi, g = _dk_weights(lam, threshold)
    vh = np.conj(np.swapaxes(vecs, -1, -2))
    q = (vecs * hi[:, None, :]) @ vh
    dq = np.empty_like(da)
    for mu in range(da.shape[0]):
        dq[mu] = vecs @ (g * (vh @ da[mu] @ vecs)) @ vh
    return q, dq


def curvature_components(lam, vecs, da, threshold, pairs, threads=1):
    """``q`` and ``F_{mu nu} = q (dq_mu dq_nu - dq_nu dq_mu)`` for each pair."""
    q, dq = projector_derivatives(lam, vecs, da, threshold)
    out = np.empty((len(pairs),) + q.shape, dtype=q.dtype)
    for n, (mu, nu) in enumerate(pairs):
        out[n] = q @ (dq[mu] @ dq[nu] - dq[nu] @ dq[mu])
    return q, out
