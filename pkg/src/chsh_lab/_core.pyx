# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the hot loops.

Must stay in arithmetic lockstep with chsh_lab._pykernels: same operations
in the same order on the same pre-drawn uniforms, so both backends produce
bit-identical output. Any change here needs the mirror change there.
"""

import numpy as np

BACKEND_NAME = "compiled-ext"


def sim_deterministic(double[:, ::1] u, int r1a, int r1ap, int r2b, int r2bp):
    cdef Py_ssize_t n = u.shape[0]
    a_arr = np.empty(n, dtype=np.uint8)
    b_arr = np.empty(n, dtype=np.uint8)
    d1_arr = np.empty(n, dtype=np.int8)
    d2_arr = np.empty(n, dtype=np.int8)
    cdef unsigned char[::1] a = a_arr
    cdef unsigned char[::1] b = b_arr
    cdef signed char[::1] d1 = d1_arr
    cdef signed char[::1] d2 = d2_arr
    cdef Py_ssize_t i
    cdef int ac, bc
    with nogil:
        for i in range(n):
            ac = 0 if u[i, 0] < 0.5 else 1
            bc = 0 if u[i, 1] < 0.5 else 1
            a[i] = ac
            b[i] = bc
            d1[i] = r1a if ac == 0 else r1ap
            d2[i] = r2b if bc == 0 else r2bp
    return a_arr, b_arr, d1_arr, d2_arr


def sim_quantum(double[:, ::1] u, double e_ab, double e_apb, double e_abp,
                double e_apbp):
    cdef Py_ssize_t n = u.shape[0]
    a_arr = np.empty(n, dtype=np.uint8)
    b_arr = np.empty(n, dtype=np.uint8)
    d1_arr = np.empty(n, dtype=np.int8)
    d2_arr = np.empty(n, dtype=np.int8)
    cdef unsigned char[::1] a = a_arr
    cdef unsigned char[::1] b = b_arr
    cdef signed char[::1] d1 = d1_arr
    cdef signed char[::1] d2 = d2_arr
    cdef double corr[2][2]
    corr[0][0] = e_ab
    corr[0][1] = e_abp
    corr[1][0] = e_apb
    corr[1][1] = e_apbp
    cdef Py_ssize_t i
    cdef int ac, bc, v1
    cdef double p_same
    with nogil:
        for i in range(n):
            ac = 0 if u[i, 0] < 0.5 else 1
            bc = 0 if u[i, 1] < 0.5 else 1
            v1 = 1 if u[i, 2] < 0.5 else -1
            p_same = (1.0 + corr[ac][bc]) / 2.0
            a[i] = ac
            b[i] = bc
            d1[i] = v1
            d2[i] = v1 if u[i, 3] < p_same else -v1
    return a_arr, b_arr, d1_arr, d2_arr


def sim_finite_local(double[:, ::1] u, double[::1] cumw, double[:, ::1] p1,
                     double[:, ::1] p2):
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t m = cumw.shape[0]
    a_arr = np.empty(n, dtype=np.uint8)
    b_arr = np.empty(n, dtype=np.uint8)
    d1_arr = np.empty(n, dtype=np.int8)
    d2_arr = np.empty(n, dtype=np.int8)
    cdef unsigned char[::1] a = a_arr
    cdef unsigned char[::1] b = b_arr
    cdef signed char[::1] d1 = d1_arr
    cdef signed char[::1] d2 = d2_arr
    cdef Py_ssize_t i, lam
    cdef int ac, bc
    with nogil:
        for i in range(n):
            ac = 0 if u[i, 0] < 0.5 else 1
            bc = 0 if u[i, 1] < 0.5 else 1
            lam = 0
            while lam < m - 1 and u[i, 2] >= cumw[lam]:
                lam += 1
            a[i] = ac
            b[i] = bc
            d1[i] = 1 if u[i, 3] < p1[lam, ac] else -1
            d2[i] = 1 if u[i, 4] < p2[lam, bc] else -1
    return a_arr, b_arr, d1_arr, d2_arr


def sim_memory_table(double[:, ::1] u, double[::1] table):
    cdef Py_ssize_t n = u.shape[0]
    a_arr = np.empty(n, dtype=np.uint8)
    b_arr = np.empty(n, dtype=np.uint8)
    d1_arr = np.empty(n, dtype=np.int8)
    d2_arr = np.empty(n, dtype=np.int8)
    cdef unsigned char[::1] a = a_arr
    cdef unsigned char[::1] b = b_arr
    cdef signed char[::1] d1 = d1_arr
    cdef signed char[::1] d2 = d2_arr
    cdef Py_ssize_t i
    cdef unsigned long long bits = 0
    cdef int ac, bc, success, c, prod, v1
    with nogil:
        for i in range(n):
            ac = 0 if u[i, 0] < 0.5 else 1
            bc = 0 if u[i, 1] < 0.5 else 1
            success = 1 if u[i, 3] < table[((<unsigned long long>1) << i) - 1 + bits] else 0
            bits = (bits << 1) | <unsigned long long>success
            c = 1 if success else -1
            prod = -c if (ac == 1 and bc == 0) else c
            v1 = 1 if u[i, 2] < 0.5 else -1
            a[i] = ac
            b[i] = bc
            d1[i] = v1
            d2[i] = prod * v1
    return a_arr, b_arr, d1_arr, d2_arr


def sim_memory_count(double[:, ::1] u, double[:, ::1] ptab):
    cdef Py_ssize_t n = u.shape[0]
    a_arr = np.empty(n, dtype=np.uint8)
    b_arr = np.empty(n, dtype=np.uint8)
    d1_arr = np.empty(n, dtype=np.int8)
    d2_arr = np.empty(n, dtype=np.int8)
    cdef unsigned char[::1] a = a_arr
    cdef unsigned char[::1] b = b_arr
    cdef signed char[::1] d1 = d1_arr
    cdef signed char[::1] d2 = d2_arr
    cdef Py_ssize_t i, k = 0
    cdef int ac, bc, success, c, prod, v1
    with nogil:
        for i in range(n):
            ac = 0 if u[i, 0] < 0.5 else 1
            bc = 0 if u[i, 1] < 0.5 else 1
            success = 1 if u[i, 3] < ptab[i, k] else 0
            k += success
            c = 1 if success else -1
            prod = -c if (ac == 1 and bc == 0) else c
            v1 = 1 if u[i, 2] < 0.5 else -1
            a[i] = ac
            b[i] = bc
            d1[i] = v1
            d2[i] = prod * v1
    return a_arr, b_arr, d1_arr, d2_arr


cdef inline int _popcount(unsigned long long x) nogil:
    cdef int c = 0
    while x:
        x &= x - 1
        c += 1
    return c


def count_distribution_tree(double[::1] table, int n):
    cdef Py_ssize_t size = (<Py_ssize_t>1) << n
    reach_arr = np.zeros(size, dtype=np.float64)
    nxt_arr = np.zeros(size, dtype=np.float64)
    probs_arr = np.zeros(n + 1, dtype=np.float64)
    cdef double[::1] reach = reach_arr
    cdef double[::1] nxt = nxt_arr
    cdef double[::1] probs = probs_arr
    cdef Py_ssize_t level, width, base, b
    cdef double r, p
    reach[0] = 1.0
    with nogil:
        for level in range(n):
            width = (<Py_ssize_t>1) << level
            base = width - 1
            for b in range(width):
                r = reach[b]
                p = table[base + b]
                nxt[(b << 1) | 1] = r * p
                nxt[b << 1] = r * (1.0 - p)
            for b in range(width << 1):
                reach[b] = nxt[b]
        for b in range(size):
            probs[_popcount(<unsigned long long>b)] += reach[b]
    return probs_arr
