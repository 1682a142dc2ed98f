# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch kernel for the likelihood-ratio recursion.

Same contract as ``randur._lrt_py.lrt_batch`` with ``renorm_every=1``.
The row loop runs without the GIL so callers can split rows across threads.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log
from libc.stdlib cimport malloc, free

cnp.import_array()


def lrt_batch(y, double mu1, double mu2, double sigma, p1, p2, p1_tail, p2_tail,
              bint paper_init=False, int renorm_every=1):
    if renorm_every != 1:
        raise ValueError("compiled kernel renormalises every step")
    cdef const double[:, ::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef const double[::1] p1v = np.ascontiguousarray(p1, dtype=np.float64)
    cdef const double[::1] p2v = np.ascontiguousarray(p2, dtype=np.float64)
    cdef const double[::1] tail = np.ascontiguousarray(np.concatenate([p1_tail, p2_tail]), dtype=np.float64)
    cdef Py_ssize_t n_runs = yv.shape[0], horizon = yv.shape[1]
    cdef Py_ssize_t delta = p1v.shape[0]
    out = np.empty((n_runs, horizon), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef int status = 0
    if horizon == 0 or n_runs == 0:
        return out
    with nogil:
        status = _run(yv, ov, mu1, mu2, sigma, p1v, p2v, tail, delta, paper_init)
    if status < 0:
        raise MemoryError()
    if status > 0:
        raise FloatingPointError(f"likelihood state vanished at t={status}")
    return out


cdef int _run(const double[:, ::1] y, double[:, ::1] out, double mu1, double mu2, double sigma,
              const double[::1] p1, const double[::1] p2, const double[::1] tail, Py_ssize_t delta,
              bint paper_init) noexcept nogil:
    cdef Py_ssize_t n_runs = y.shape[0], horizon = y.shape[1]
    cdef Py_ssize_t j, k, d, width = 2 * delta
    cdef double inv_var = 1.0 / (sigma * sigma)
    cdef double f1, f2, fmax, a, b, s1, s2, norm, log_scale, readout
    cdef double *lam = <double *> malloc(2 * width * sizeof(double))
    cdef double *nxt
    cdef double *tmp
    if lam == NULL:
        return -1
    nxt = lam + width
    for j in range(n_runs):
        f1 = (mu1 * y[j, 0] - 0.5 * mu1 * mu1) * inv_var
        f2 = (mu2 * y[j, 0] - 0.5 * mu2 * mu2) * inv_var
        fmax = f1 if f1 > f2 else f2
        for d in range(width):
            lam[d] = 0.0
        lam[0] = exp(f1 - fmax)
        if paper_init:
            lam[delta] = exp(f2 - fmax)
        log_scale = fmax
        norm = 0.0
        for d in range(width):
            norm += lam[d]
        readout = 0.0
        for d in range(width):
            lam[d] /= norm
            readout += lam[d] * tail[d]
        log_scale += log(norm)
        out[j, 0] = log(readout) + log_scale
        for k in range(1, horizon):
            f1 = (mu1 * y[j, k] - 0.5 * mu1 * mu1) * inv_var
            f2 = (mu2 * y[j, k] - 0.5 * mu2 * mu2) * inv_var
            fmax = f1 if f1 > f2 else f2
            a = exp(f1 - fmax)
            b = exp(f2 - fmax)
            s1 = 0.0
            s2 = 0.0
            for d in range(delta):
                s2 += lam[delta + d] * p2[d]
                s1 += lam[d] * p1[d]
            nxt[0] = a * s2
            nxt[delta] = b * s1
            for d in range(1, delta):
                nxt[d] = a * lam[d - 1]
                nxt[delta + d] = b * lam[delta + d - 1]
            tmp = lam
            lam = nxt
            nxt = tmp
            norm = 0.0
            for d in range(width):
                norm += lam[d]
            if not norm > 0.0:
                free(lam if lam < nxt else nxt)
                return <int> (k + 1)
            readout = 0.0
            for d in range(width):
                lam[d] /= norm
                readout += lam[d] * tail[d]
            log_scale += fmax + log(norm)
            out[j, k] = log(readout) + log_scale
    free(lam if lam < nxt else nxt)
    return 0
