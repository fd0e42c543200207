# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of ``_kernels_py``. Keep the arithmetic order identical."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, pow

cnp.import_array()

cdef double EXP_CAP = 700.0


cdef inline double _fraction(double dose, const double[::1] prm) noexcept nogil:
    cdef double a = prm[8]
    cdef double y0 = prm[11]
    cdef double arg = dose * (1.0 + y0) / prm[10]
    if arg > EXP_CAP:
        arg = EXP_CAP
    cdef double e = y0 * exp(arg)
    cdef double y = 1.0 - (1.0 + y0) / (1.0 + e)
    cdef double x = a * (1.0 - exp(-dose / prm[9])) + (1.0 - a) * y
    if x > 1.0:
        x = 1.0
    return x


cdef inline double _memristance(double dose, const double[::1] prm) noexcept nogil:
    return prm[0] - _fraction(dose, prm) * (prm[0] - prm[1])


def programmed_fraction(double dose, prm):
    cdef const double[::1] p = np.ascontiguousarray(prm, dtype=np.float64)
    return _fraction(dose, p)


def memristance(double dose, prm):
    cdef const double[::1] p = np.ascontiguousarray(prm, dtype=np.float64)
    return _memristance(dose, p)


def integrate_dose(double dose, volts, double h, double r_series, prm, double gain, out=None):
    cdef const double[::1] v_arr = np.ascontiguousarray(volts, dtype=np.float64)
    cdef const double[::1] p = np.ascontiguousarray(prm, dtype=np.float64)
    cdef double[::1] o
    cdef bint record = out is not None
    if record:
        o = out
    cdef double v_set = p[2]
    cdef double v_reset = p[3]
    cdef double a_set = p[4] * gain
    cdef double b_set = p[5]
    cdef double a_reset = p[6] * gain
    cdef double b_reset = p[7]
    cdef Py_ssize_t n = v_arr.shape[0]
    cdef Py_ssize_t k
    cdef double v, m
    with nogil:
        for k in range(n):
            v = v_arr[k]
            if r_series > 0.0:
                m = _memristance(dose, p)
                v = v * m / (m + r_series)
            if v >= v_set:
                dose = dose + a_set * pow(v - v_set, b_set) * h
            elif v <= v_reset:
                dose = dose - a_reset * pow(v_reset - v, b_reset) * h
                if dose < 0.0:
                    dose = 0.0
            if record:
                o[k] = dose
    return dose


cdef inline int _update(double h, int current, bint hold) noexcept nogil:
    if h > 0.0:
        return 1
    if h < 0.0:
        return -1
    if hold:
        return current
    return 1


cdef inline double _field(const double[:, ::1] J, long long[::1] s, Py_ssize_t i,
                          Py_ssize_t n) noexcept nogil:
    cdef double h = 0.0
    cdef Py_ssize_t j
    for j in range(n):
        h = h + J[i, j] * s[j]
    return h


cdef inline bint _is_fixed(const double[:, ::1] J, long long[::1] s, Py_ssize_t n,
                           bint hold) noexcept nogil:
    cdef Py_ssize_t i
    for i in range(n):
        if _update(_field(J, s, i, n), <int>s[i], hold) != s[i]:
            return False
    return True


def retrieve_batch(J, starts, idx, Py_ssize_t updates_per_iter, bint hold):
    cdef const double[:, ::1] Jv = np.ascontiguousarray(J, dtype=np.float64)
    finals_arr = np.array(starts, dtype=np.int64, order="C", copy=True)
    cdef long long[:, ::1] fin = finals_arr
    cdef const long long[:, ::1] ix = np.ascontiguousarray(idx, dtype=np.int64)
    cdef Py_ssize_t T = fin.shape[0]
    cdef Py_ssize_t n = fin.shape[1]
    cdef Py_ssize_t max_iter = ix.shape[1] // updates_per_iter
    iters_arr = np.zeros(T, dtype=np.int64)
    conv_arr = np.zeros(T, dtype=np.uint8)
    cdef long long[::1] iters = iters_arr
    cdef unsigned char[::1] conv = conv_arr
    cdef Py_ssize_t t, it, u, i, base
    cdef bint c
    with nogil:
        for t in range(T):
            c = False
            it = 0
            while it < max_iter:
                if _is_fixed(Jv, fin[t], n, hold):
                    c = True
                    break
                base = it * updates_per_iter
                for u in range(updates_per_iter):
                    i = ix[t, base + u]
                    fin[t, i] = _update(_field(Jv, fin[t], i, n), <int>fin[t, i], hold)
                it += 1
            if not c and _is_fixed(Jv, fin[t], n, hold):
                c = True
            iters[t] = it
            conv[t] = c
    return finals_arr, iters_arr, conv_arr
