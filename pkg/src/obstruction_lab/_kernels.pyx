# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-grid-point kernels (OpenMP over points, LAPACK/BLAS per point).

Same signatures and results as ``_kernels_py``. Arrays are C-contiguous
(row-major); BLAS is column-major, so a row-major product ``C = op(A) op(B)``
is issued as the column-major product ``C^T = op(B)^T op(A)^T``.
"""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange, parallel, threadid
from libc.stdlib cimport malloc, free
from libc.math cimport fabs
from scipy.linalg.cython_lapack cimport zheevd
from scipy.linalg.cython_blas cimport zgemm

cnp.import_array()

BACKEND = "compiled"

ctypedef double complex cplx


cdef inline void mm(char opa, char opb, int n, cplx alpha, cplx* a, cplx* b,
                    cplx beta, cplx* c) noexcept nogil:
    zgemm(&opb, &opa, &n, &n, &n, &alpha, b, &n, a, &n, &beta, c, &n)


def build_blocks(psi, w, m):
    from ._kernels_py import build_blocks as _bb
    return _bb(psi, w, m)


def assemble_eigh(cplx[:, ::1] psi, double[:, :, ::1] w, int m, int threads=1):
    """Eigendecompose ``a = (w (x) 1_m) * psi`` point by point."""
    cdef int nb = w.shape[0], k = w.shape[1], s = k * m
    lam_arr = np.empty((nb, s), dtype=np.float64)
    vec_arr = np.empty((nb, s, s), dtype=np.complex128)
    cdef double[:, ::1] lam = lam_arr
    cdef cplx[:, :, ::1] vecs = vec_arr
    cdef int b, i, j, info, lwork, lrwork, liwork
    cdef char jobz = b'V', uplo = b'L'
    cdef cplx* buf
    cdef cplx* work
    cdef double* rwork
    cdef int* iwork
    cdef cplx wq
    cdef double rq
    cdef int iq
    cdef int failed = 0
    if nb == 0:
        return lam_arr, vec_arr
    # workspace query
    lwork = -1
    lrwork = -1
    liwork = -1
    buf = <cplx*> malloc(sizeof(cplx) * s * s)
    zheevd(&jobz, &uplo, &s, buf, &s, &lam[0, 0], &wq, &lwork, &rq, &lrwork, &iq, &liwork, &info)
    free(buf)
    lwork = <int> wq.real
    lrwork = <int> rq
    liwork = iq
    with nogil, parallel(num_threads=threads):
        buf = <cplx*> malloc(sizeof(cplx) * s * s)
        work = <cplx*> malloc(sizeof(cplx) * lwork)
        rwork = <double*> malloc(sizeof(double) * lrwork)
        iwork = <int*> malloc(sizeof(int) * liwork)
        for b in prange(nb, schedule="static"):
            # column-major: buf[i + j*s] = a[i, j]
            for j in range(s):
                for i in range(s):
                    buf[i + j * s] = w[b, i // m, j // m] * psi[i, j]
            zheevd(&jobz, &uplo, &s, buf, &s, &lam[b, 0], work, &lwork, rwork, &lrwork,
                   iwork, &liwork, &info)
            if info != 0:
                failed = 1
            for i in range(s):
                for j in range(s):
                    vecs[b, i, j] = buf[i + j * s]
        free(buf)
        free(work)
        free(rwork)
        free(iwork)
    if failed:
        raise np.linalg.LinAlgError("zheevd did not converge")
    return lam_arr, vec_arr


cdef void _point_derivatives(int s, int nd, double* lam, cplx* v, cplx* da_b, long da_stride,
                             double threshold, cplx* q, cplx* dq, cplx* t1, cplx* t2) noexcept nogil:
    """q and dq[mu] (each s x s, row-major) at one point."""
    cdef int i, j, mu
    cdef int hi_i, hi_j
    cdef double g
    cdef cplx one = 1.0, zero = 0.0
    # t1 = V with low columns zeroed
    for i in range(s):
        for j in range(s):
            t1[i * s + j] = v[i * s + j] if lam[j] >= threshold else zero
    mm(b'N', b'C', s, one, t1, v, zero, q)
    for mu in range(nd):
        # t1 = V^H da V
        mm(b'C', b'N', s, one, v, da_b + mu * da_stride, zero, t2)
        mm(b'N', b'N', s, one, t2, v, zero, t1)
        for i in range(s):
            hi_i = lam[i] >= threshold
            for j in range(s):
                hi_j = lam[j] >= threshold
                if hi_i != hi_j:
                    g = 1.0 / fabs(lam[i] - lam[j])
                    t1[i * s + j] = t1[i * s + j] * g
                else:
                    t1[i * s + j] = zero
        mm(b'N', b'N', s, one, v, t1, zero, t2)
        mm(b'N', b'C', s, one, t2, v, zero, dq + mu * s * s)


def projector_derivatives(double[:, ::1] lam, cplx[:, :, ::1] vecs, cplx[:, :, :, ::1] da,
                          double threshold, int threads=1):
    """Spectral projector ``q`` and its exact derivatives along ``da[mu]``."""
    cdef int nd = da.shape[0], nb = lam.shape[0], s = lam.shape[1]
    q_arr = np.empty((nb, s, s), dtype=np.complex128)
    dq_arr = np.empty((nd, nb, s, s), dtype=np.complex128)
    cdef cplx[:, :, ::1] q = q_arr
    cdef cplx[:, :, :, ::1] dq = dq_arr
    cdef int b, mu, i
    cdef long ss = s * s
    cdef long da_stride = <long> nb * ss
    cdef cplx* t1
    cdef cplx* t2
    cdef cplx* dbuf
    cdef cplx* abuf
    if nb == 0:
        return q_arr, dq_arr
    with nogil, parallel(num_threads=threads):
        t1 = <cplx*> malloc(sizeof(cplx) * ss)
        t2 = <cplx*> malloc(sizeof(cplx) * ss)
        dbuf = <cplx*> malloc(sizeof(cplx) * ss * nd)
        abuf = <cplx*> malloc(sizeof(cplx) * ss * nd)
        for b in prange(nb, schedule="static"):
            for mu in range(nd):
                for i in range(ss):
                    abuf[mu * ss + i] = (&da[mu, b, 0, 0])[i]
            _point_derivatives(s, nd, &lam[b, 0], &vecs[b, 0, 0], abuf, ss, threshold,
                               &q[b, 0, 0], dbuf, t1, t2)
            for mu in range(nd):
                for i in range(ss):
                    (&dq[mu, b, 0, 0])[i] = dbuf[mu * ss + i]
        free(t1)
        free(t2)
        free(dbuf)
        free(abuf)
    return q_arr, dq_arr


def curvature_components(double[:, ::1] lam, cplx[:, :, ::1] vecs, cplx[:, :, :, ::1] da,
                         double threshold, pairs, int threads=1):
    """``q`` and ``F_{mu nu} = q (dq_mu dq_nu - dq_nu dq_mu)`` for each pair."""
    cdef int nd = da.shape[0], nb = lam.shape[0], s = lam.shape[1]
    cdef int[:, ::1] pr = np.ascontiguousarray(np.asarray(pairs, dtype=np.intc).reshape(-1, 2))
    cdef int npairs = pr.shape[0]
    q_arr = np.empty((nb, s, s), dtype=np.complex128)
    f_arr = np.empty((npairs, nb, s, s), dtype=np.complex128)
    cdef cplx[:, :, ::1] q = q_arr
    cdef cplx[:, :, :, ::1] f = f_arr
    cdef int b, mu, i, n, a, c
    cdef long ss = s * s
    cdef cplx one = 1.0, mone = -1.0, zero = 0.0
    cdef cplx* t1
    cdef cplx* t2
    cdef cplx* dbuf
    cdef cplx* abuf
    if nb == 0 or npairs == 0:
        return q_arr, f_arr
    with nogil, parallel(num_threads=threads):
        t1 = <cplx*> malloc(sizeof(cplx) * ss)
        t2 = <cplx*> malloc(sizeof(cplx) * ss)
        dbuf = <cplx*> malloc(sizeof(cplx) * ss * nd)
        abuf = <cplx*> malloc(sizeof(cplx) * ss * nd)
        for b in prange(nb, schedule="static"):
            for mu in range(nd):
                for i in range(ss):
                    abuf[mu * ss + i] = (&da[mu, b, 0, 0])[i]
            _point_derivatives(s, nd, &lam[b, 0], &vecs[b, 0, 0], abuf, ss, threshold,
                               &q[b, 0, 0], dbuf, t1, t2)
            for n in range(npairs):
                a = pr[n, 0]
                c = pr[n, 1]
                mm(b'N', b'N', s, one, dbuf + a * ss, dbuf + c * ss, zero, t1)
                mm(b'N', b'N', s, mone, dbuf + c * ss, dbuf + a * ss, one, t1)
                mm(b'N', b'N', s, one, &q[b, 0, 0], t1, zero, &f[n, b, 0, 0])
        free(t1)
        free(t2)
        free(dbuf)
        free(abuf)
    return q_arr, f_arr
