# cython: language_level=3
"""Compiled hot loops: Gray-code Ryser permanent and batched amplitude sandwiches."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def permanent_ryser(const double complex[:, ::1] a):
    """Ryser permanent with Gray-code subset order.

    Subsets are visited in reflected-binary order and summed sequentially,
    so the result is bit-identical between runs.
    """
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, j
    cdef unsigned long long g, gray, ngray
    cdef double complex prod, total = 0.0
    cdef int parity = 0
    cdef double complex[::1] rowsum
    if n == 0:
        return 1.0 + 0.0j
    rowsum = np.zeros(n, dtype=np.complex128)
    ngray = (<unsigned long long>1) << n
    with nogil:
        gray = 0
        for g in range(1, ngray):
            j = 0
            while not ((g >> j) & 1):
                j += 1
            gray ^= (<unsigned long long>1) << j
            if (gray >> j) & 1:
                for i in range(n):
                    rowsum[i] = rowsum[i] + a[i, j]
            else:
                for i in range(n):
                    rowsum[i] = rowsum[i] - a[i, j]
            parity ^= 1
            prod = rowsum[0]
            for i in range(1, n):
                prod = prod * rowsum[i]
            if parity:
                total = total - prod
            else:
                total = total + prod
    if n & 1:
        return -total
    return total


def sandwich_amplitudes(const double complex[:, ::1] m,
                        const double complex[:, :, ::1] kets,
                        const double complex[:, :, ::1] bras):
    """Evaluate <b_1...b_q| m |k_1...k_p> for a batch of product states.

    ``kets`` has shape (n, p, 2) and ``bras`` (n, q, 2); ``m`` has shape
    (2**q, 2**p) with big-endian qubit order. Bras are conjugated here.
    """
    cdef Py_ssize_t n = kets.shape[0]
    cdef Py_ssize_t p = kets.shape[1]
    cdef Py_ssize_t q = bras.shape[1]
    cdef Py_ssize_t ncol = m.shape[1]
    cdef Py_ssize_t nrow = m.shape[0]
    cdef Py_ssize_t s, r, c, b
    cdef double complex acc, rowacc, w
    out = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] out_v = out
    cdef double complex[::1] kin = np.empty(ncol, dtype=np.complex128)
    cdef double complex[::1] bout = np.empty(nrow, dtype=np.complex128)
    with nogil:
        for s in range(n):
            for c in range(ncol):
                w = 1.0
                for b in range(p):
                    w = w * kets[s, b, (c >> (p - 1 - b)) & 1]
                kin[c] = w
            for r in range(nrow):
                w = 1.0
                for b in range(q):
                    w = w * bras[s, b, (r >> (q - 1 - b)) & 1].conjugate()
                bout[r] = w
            acc = 0.0
            for r in range(nrow):
                rowacc = 0.0
                for c in range(ncol):
                    rowacc = rowacc + m[r, c] * kin[c]
                acc = acc + bout[r] * rowacc
            out_v[s] = acc
    return out
