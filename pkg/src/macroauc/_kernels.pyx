# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled SVRG inner loops.

Both functions update ``W`` in place and mirror ``_fallback`` step for step.
"""
from libc.math cimport tanh

import numpy as np

cdef double LN2 = 0.6931471805599453


cdef inline double _deriv(double t, int code) nogil:
    cdef double g
    if code == 0:
        return -1.0 if t < 1.0 else 0.0
    g = -0.5 * (1.0 - tanh(0.5 * t))
    if code == 1:
        return g / LN2
    return g


cdef inline void _drift(double[:, ::1] W, const double[:, ::1] Ws, const double[:, ::1] mu,
                        double eta, double lam) nogil:
    # W <- W - eta * (mu + 2 lam (W - Ws))
    cdef Py_ssize_t k, j
    for k in range(W.shape[0]):
        for j in range(W.shape[1]):
            W[k, j] -= eta * (mu[k, j] + 2.0 * lam * (W[k, j] - Ws[k, j]))


def svrg_epoch_univariate(double[:, ::1] W, const double[:, ::1] Ws, const double[:, ::1] mu,
                          const double[:, ::1] X, const double[:, ::1] Y, const double[:, ::1] Cn,
                          const double[:, ::1] Ss, const long long[::1] idx,
                          double eta, double lam, int loss_code):
    """One SVRG inner loop for the instance-sampled objectives.

    ``Cn`` holds ``n`` times the per-instance risk weights, ``Ss`` the
    snapshot scores ``X @ Ws.T``.
    """
    cdef Py_ssize_t K = W.shape[0], d = W.shape[1]
    cdef Py_ssize_t t, k, j, i
    cdef double s, y, coef
    cdef double[::1] coefs = np.empty(max(K, 1))
    with nogil:
        for t in range(idx.shape[0]):
            i = idx[t]
            for k in range(K):
                s = 0.0
                for j in range(d):
                    s += W[k, j] * X[i, j]
                y = Y[i, k]
                coefs[k] = Cn[i, k] * y * (_deriv(y * s, loss_code) - _deriv(y * Ss[i, k], loss_code))
            _drift(W, Ws, mu, eta, lam)
            for k in range(K):
                coef = eta * coefs[k]
                if coef != 0.0:
                    for j in range(d):
                        W[k, j] -= coef * X[i, j]


def svrg_epoch_pairwise(double[:, ::1] W, const double[:, ::1] Ws, const double[:, ::1] mu,
                        const double[:, ::1] X, const long long[::1] ks, const long long[::1] ps,
                        const long long[::1] qs, double eta, double lam, int loss_code):
    """One SVRG inner loop over sampled ``(label, positive, negative)`` triples."""
    cdef Py_ssize_t d = W.shape[1]
    cdef Py_ssize_t t, j, k, p, q
    cdef double s, ss, diff, coef
    with nogil:
        for t in range(ks.shape[0]):
            k = ks[t]
            p = ps[t]
            q = qs[t]
            s = 0.0
            ss = 0.0
            for j in range(d):
                diff = X[p, j] - X[q, j]
                s += W[k, j] * diff
                ss += Ws[k, j] * diff
            coef = _deriv(s, loss_code) - _deriv(ss, loss_code)
            _drift(W, Ws, mu, eta, lam)
            coef = eta * coef
            if coef != 0.0:
                for j in range(d):
                    W[k, j] -= coef * (X[p, j] - X[q, j])

