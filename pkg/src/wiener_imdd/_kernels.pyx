# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops.

Loop-form counterparts of :mod:`wiener_imdd._kernels_py`; both modules expose
the same three functions with the same signatures and return types.
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline double abs2(double complex x) nogil:
    return x.real * x.real + x.imag * x.imag


def gram_terms(psi_mat):
    """Operator-only building blocks of the observation statistics.

    Returns ``(w, z, q4, hg, xre, y3)``; see ``_kernels_py.gram_terms``.
    """
    cdef const double complex[:, ::1] P = np.ascontiguousarray(psi_mat, dtype=np.complex128)
    cdef Py_ssize_t K = P.shape[0], N = P.shape[1]
    cdef Py_ssize_t k, l, n
    w_arr = np.zeros(K, dtype=np.complex128)
    z_arr = np.zeros(K, dtype=np.float64)
    q4_arr = np.zeros((K, K), dtype=np.float64)
    hg_arr = np.zeros((K, K), dtype=np.float64)
    xre_arr = np.zeros((K, K), dtype=np.float64)
    y3_arr = np.zeros((K, K), dtype=np.float64)
    # real and imaginary planes, |Psi|^2 and Re{conj(w_k) Psi[k, n]}
    cdef double[:, ::1] pr = np.empty((K, N))
    cdef double[:, ::1] pi = np.empty((K, N))
    cdef double[:, ::1] a2 = np.empty((K, N))
    cdef double[:, ::1] rw = np.empty((K, N))
    cdef double complex[::1] w = w_arr
    cdef double[::1] z = z_arr
    cdef double[:, ::1] q4 = q4_arr
    cdef double[:, ::1] hg = hg_arr
    cdef double[:, ::1] xre = xre_arr
    cdef double[:, ::1] y3 = y3_arr
    cdef double a, b, c, d, g1r, g1i, g2r, g2i, q, r1, r2
    cdef double wkr, wki, wlr, wli, t1, t2
    with nogil:
        for k in range(K):
            g1r = 0.0
            g1i = 0.0
            q = 0.0
            for n in range(N):
                a = P[k, n].real
                b = P[k, n].imag
                pr[k, n] = a
                pi[k, n] = b
                a2[k, n] = a * a + b * b
                g1r = g1r + a
                g1i = g1i + b
                q = q + a * a + b * b
            w[k] = g1r + 1j * g1i
            z[k] = q
            for n in range(N):
                rw[k, n] = g1r * pr[k, n] + g1i * pi[k, n]
        # every product is symmetric in (k, l); fill the upper triangle and mirror
        for k in range(K):
            wkr = w[k].real
            wki = w[k].imag
            for l in range(k, K):
                wlr = w[l].real
                wli = w[l].imag
                g1r = 0.0
                g1i = 0.0
                g2r = 0.0
                g2i = 0.0
                q = 0.0
                r1 = 0.0
                r2 = 0.0
                for n in range(N):
                    a = pr[k, n]
                    b = pi[k, n]
                    c = pr[l, n]
                    d = pi[l, n]
                    g1r = g1r + a * c + b * d
                    g1i = g1i + b * c - a * d
                    g2r = g2r + a * c - b * d
                    g2i = g2i + a * d + b * c
                    q = q + a2[k, n] * a2[l, n]
                    r1 = r1 + rw[k, n] * a2[l, n]
                    r2 = r2 + a2[k, n] * rw[l, n]
                q4[k, l] = q
                hg[k, l] = g1r * g1r + g1i * g1i + g2r * g2r + g2i * g2i
                # Re{conj(w_k) g2 conj(w_l)} and Re{conj(w_k) g1 w_l}
                t1 = (wkr * wlr - wki * wli) * g2r + (wkr * wli + wki * wlr) * g2i
                t2 = (wkr * wlr + wki * wli) * g1r - (wkr * wli - wki * wlr) * g1i
                xre[k, l] = 2.0 * t1 + 2.0 * t2
                y3[k, l] = r1 + r2
                q4[l, k] = q4[k, l]
                hg[l, k] = hg[k, l]
                xre[l, k] = xre[k, l]
                y3[l, k] = y3[k, l]
    return w_arr, z_arr, q4_arr, hg_arr, xre_arr, y3_arr


def sliding_estimate(u, g, Py_ssize_t step, Py_ssize_t n_out):
    """``out[n] = sum_k g[k] * u[n*step + k]`` for real ``u`` and ``g``."""
    cdef const double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef const double[::1] gv = np.ascontiguousarray(g, dtype=np.float64)
    cdef Py_ssize_t K = gv.shape[0]
    if n_out < 0 or (n_out > 0 and (n_out - 1) * step + K > uv.shape[0]):
        raise ValueError("observation stream too short for the requested estimates")
    out_arr = np.empty(n_out, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t n, k, base
    cdef double acc
    with nogil:
        for n in range(n_out):
            base = n * step
            acc = 0.0
            for k in range(K):
                acc = acc + gv[k] * uv[base + k]
            out[n] = acc
    return out_arr


def accumulate_moments(psi_mat, symbols, noise, targets, shift_u, double shift_t):
    """Streaming power sums of shifted observations and targets.

    Returns ``(s_d, s_t, s_t2, s_dd, s_dd2, s_td, s_td2)``; see
    ``_kernels_py.accumulate_moments``.
    """
    cdef const double complex[:, ::1] P = np.ascontiguousarray(psi_mat, dtype=np.complex128)
    cdef const double[:, ::1] S = np.ascontiguousarray(symbols, dtype=np.float64)
    cdef const double[:, ::1] E = np.ascontiguousarray(noise, dtype=np.float64)
    cdef const double[::1] T = np.ascontiguousarray(targets, dtype=np.float64)
    cdef const double[::1] c = np.ascontiguousarray(shift_u, dtype=np.float64)
    cdef Py_ssize_t K = P.shape[0], N = P.shape[1], V = S.shape[0]
    if S.shape[1] != N or E.shape[0] != V or E.shape[1] != K or T.shape[0] != V:
        raise ValueError("shape mismatch between operator, symbols, noise and targets")
    s_d_arr = np.zeros(K)
    s_dd_arr = np.zeros((K, K))
    s_dd2_arr = np.zeros((K, K))
    s_td_arr = np.zeros(K)
    s_td2_arr = np.zeros(K)
    cdef double[::1] s_d = s_d_arr
    cdef double[:, ::1] s_dd = s_dd_arr
    cdef double[:, ::1] s_dd2 = s_dd2_arr
    cdef double[::1] s_td = s_td_arr
    cdef double[::1] s_td2 = s_td2_arr
    d_arr = np.empty(K)
    cdef double[::1] d = d_arr
    cdef double s_t = 0.0, s_t2 = 0.0, e, p
    cdef double complex a
    cdef Py_ssize_t v, k, l, n
    with nogil:
        for v in range(V):
            for k in range(K):
                a = 0
                for n in range(N):
                    a = a + P[k, n] * S[v, n]
                d[k] = abs2(a) + E[v, k] - c[k]
            e = T[v] - shift_t
            s_t = s_t + e
            s_t2 = s_t2 + e * e
            for k in range(K):
                s_d[k] += d[k]
                p = e * d[k]
                s_td[k] += p
                s_td2[k] += p * p
                for l in range(K):
                    p = d[k] * d[l]
                    s_dd[k, l] += p
                    s_dd2[k, l] += p * p
    return s_d_arr, s_t, s_t2, s_dd_arr, s_dd2_arr, s_td_arr, s_td2_arr
