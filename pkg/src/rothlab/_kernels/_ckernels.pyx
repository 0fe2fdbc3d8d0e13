# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the pure-numpy kernels.

Same contracts and same exact results as ``_pykernels``; the cyclic paths
step slot indices incrementally (one conditional subtract per step, no
divisions in the inner loop), the general paths recombine precomputed
per-axis digit tables.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline long _norm_mod(long a, long n) nogil:
    cdef long r = a % n
    if r < 0:
        r += n
    return r


# ---------------------------------------------------------------------------
# pattern_count


cdef unsigned long long _pattern_cyclic(
    const cnp.uint8_t[::1] m1, const cnp.uint8_t[::1] m2, const cnp.uint8_t[::1] m3,
    long a1, long b1, long a2, long b2, long a3, long b3, long n,
) nogil:
    cdef long x, y, s1, s2, s3
    cdef long t1 = 0, t2 = 0, t3 = 0
    cdef long sa1 = _norm_mod(a1, n), sa2 = _norm_mod(a2, n), sa3 = _norm_mod(a3, n)
    cdef long sb1 = _norm_mod(b1, n), sb2 = _norm_mod(b2, n), sb3 = _norm_mod(b3, n)
    cdef unsigned long long total = 0
    for x in range(n):
        s1 = t1
        s2 = t2
        s3 = t3
        for y in range(n):
            total += <unsigned long long> (m1[s1] & m2[s2] & m3[s3])
            s1 += sb1
            if s1 >= n:
                s1 -= n
            s2 += sb2
            if s2 >= n:
                s2 -= n
            s3 += sb3
            if s3 >= n:
                s3 -= n
        t1 += sa1
        if t1 >= n:
            t1 -= n
        t2 += sa2
        if t2 >= n:
            t2 -= n
        t3 += sa3
        if t3 >= n:
            t3 -= n
    return total


cdef unsigned long long _pattern_general(
    const cnp.uint8_t[::1] m1, const cnp.uint8_t[::1] m2, const cnp.uint8_t[::1] m3,
    const cnp.int64_t[:, ::1] tx1, const cnp.int64_t[:, ::1] ty1,
    const cnp.int64_t[:, ::1] tx2, const cnp.int64_t[:, ::1] ty2,
    const cnp.int64_t[:, ::1] tx3, const cnp.int64_t[:, ::1] ty3,
    const cnp.int64_t[::1] mods, const cnp.int64_t[::1] strides,
) nogil:
    cdef long n = tx1.shape[0], k = tx1.shape[1]
    cdef long x, y, j, c, s1, s2, s3
    cdef unsigned long long total = 0
    for x in range(n):
        for y in range(n):
            s1 = 0
            s2 = 0
            s3 = 0
            for j in range(k):
                c = tx1[x, j] + ty1[y, j]
                if c >= mods[j]:
                    c -= mods[j]
                s1 += c * strides[j]
                c = tx2[x, j] + ty2[y, j]
                if c >= mods[j]:
                    c -= mods[j]
                s2 += c * strides[j]
                c = tx3[x, j] + ty3[y, j]
                if c >= mods[j]:
                    c -= mods[j]
                s3 += c * strides[j]
            total += <unsigned long long> (m1[s1] & m2[s2] & m3[s3])
    return total


# ---------------------------------------------------------------------------
# trilinear_sum


cdef double complex _trilinear_cyclic(
    const double complex[::1] f1, const double complex[::1] f2, const double complex[::1] f3,
    long a1, long b1, long a2, long b2, long a3, long b3, long n,
) noexcept nogil:
    cdef long x, y, s1, s2, s3
    cdef long t1 = 0, t2 = 0, t3 = 0
    cdef long sa1 = _norm_mod(a1, n), sa2 = _norm_mod(a2, n), sa3 = _norm_mod(a3, n)
    cdef long sb1 = _norm_mod(b1, n), sb2 = _norm_mod(b2, n), sb3 = _norm_mod(b3, n)
    cdef double complex total = 0
    for x in range(n):
        s1 = t1
        s2 = t2
        s3 = t3
        for y in range(n):
            total += f1[s1] * f2[s2] * f3[s3]
            s1 += sb1
            if s1 >= n:
                s1 -= n
            s2 += sb2
            if s2 >= n:
                s2 -= n
            s3 += sb3
            if s3 >= n:
                s3 -= n
        t1 += sa1
        if t1 >= n:
            t1 -= n
        t2 += sa2
        if t2 >= n:
            t2 -= n
        t3 += sa3
        if t3 >= n:
            t3 -= n
    return total


cdef double complex _trilinear_general(
    const double complex[::1] f1, const double complex[::1] f2, const double complex[::1] f3,
    const cnp.int64_t[:, ::1] tx1, const cnp.int64_t[:, ::1] ty1,
    const cnp.int64_t[:, ::1] tx2, const cnp.int64_t[:, ::1] ty2,
    const cnp.int64_t[:, ::1] tx3, const cnp.int64_t[:, ::1] ty3,
    const cnp.int64_t[::1] mods, const cnp.int64_t[::1] strides,
) noexcept nogil:
    cdef long n = tx1.shape[0], k = tx1.shape[1]
    cdef long x, y, j, c, s1, s2, s3
    cdef double complex total = 0
    for x in range(n):
        for y in range(n):
            s1 = 0
            s2 = 0
            s3 = 0
            for j in range(k):
                c = tx1[x, j] + ty1[y, j]
                if c >= mods[j]:
                    c -= mods[j]
                s1 += c * strides[j]
                c = tx2[x, j] + ty2[y, j]
                if c >= mods[j]:
                    c -= mods[j]
                s2 += c * strides[j]
                c = tx3[x, j] + ty3[y, j]
                if c >= mods[j]:
                    c -= mods[j]
                s3 += c * strides[j]
            total += f1[s1] * f2[s2] * f3[s3]
    return total


# ---------------------------------------------------------------------------
# pair_progression_count


cdef unsigned long long _pairs_cyclic_tab(
    const cnp.uint8_t[::1] memb, const cnp.int64_t[::1] doubled,
    const cnp.int64_t[::1] negated, long n,
) nogil:
    cdef long i, j, s, base
    cdef long m = doubled.shape[0]
    cdef unsigned long long total = 0
    for i in range(m):
        base = negated[i]
        for j in range(m):
            s = doubled[j] + base
            if s >= n:
                s -= n
            total += <unsigned long long> memb[s]
    return total


cdef unsigned long long _pairs_general(
    const cnp.uint8_t[::1] memb,
    const cnp.int64_t[:, ::1] tneg, const cnp.int64_t[:, ::1] tdbl,
    const cnp.int64_t[::1] mods, const cnp.int64_t[::1] strides,
) nogil:
    cdef long m = tneg.shape[0], k = tneg.shape[1]
    cdef long i, j, a, c, s
    cdef unsigned long long total = 0
    for i in range(m):
        for j in range(m):
            s = 0
            for a in range(k):
                c = tneg[i, a] + tdbl[j, a]
                if c >= mods[a]:
                    c -= mods[a]
                s += c * strides[a]
            total += <unsigned long long> memb[s]
    return total


# ---------------------------------------------------------------------------
# python-level wrappers (same signatures as _pykernels)


def _axis_table(idx, coef, factors):
    """(len(idx), k) int64 table of (coef * digit_j(idx)) mod m_j."""
    idx = np.asarray(idx, dtype=np.int64)
    k = len(factors)
    out = np.empty((len(idx), k), dtype=np.int64)
    rest = idx.copy()
    for j in range(k - 1, -1, -1):
        m = int(factors[j])
        out[:, j] = (coef * (rest % m)) % m
        rest //= m
    return out


def pattern_count(factors, strides, masks, coeffs):
    factors = np.asarray(factors, dtype=np.int64)
    strides = np.asarray(strides, dtype=np.int64)
    m1, m2, m3 = (np.ascontiguousarray(m, dtype=np.uint8) for m in masks)
    (a1, b1), (a2, b2), (a3, b3) = coeffs
    n = int(factors.prod())
    if len(factors) == 1:
        return int(_pattern_cyclic(m1, m2, m3, a1, b1, a2, b2, a3, b3, n))
    xs = np.arange(n, dtype=np.int64)
    tx1, ty1 = _axis_table(xs, a1, factors), _axis_table(xs, b1, factors)
    tx2, ty2 = _axis_table(xs, a2, factors), _axis_table(xs, b2, factors)
    tx3, ty3 = _axis_table(xs, a3, factors), _axis_table(xs, b3, factors)
    return int(
        _pattern_general(m1, m2, m3, tx1, ty1, tx2, ty2, tx3, ty3, factors, strides)
    )


def trilinear_sum(factors, strides, values, coeffs):
    factors = np.asarray(factors, dtype=np.int64)
    strides = np.asarray(strides, dtype=np.int64)
    f1, f2, f3 = (np.ascontiguousarray(v, dtype=np.complex128) for v in values)
    (a1, b1), (a2, b2), (a3, b3) = coeffs
    n = int(factors.prod())
    if len(factors) == 1:
        return complex(_trilinear_cyclic(f1, f2, f3, a1, b1, a2, b2, a3, b3, n))
    xs = np.arange(n, dtype=np.int64)
    tx1, ty1 = _axis_table(xs, a1, factors), _axis_table(xs, b1, factors)
    tx2, ty2 = _axis_table(xs, a2, factors), _axis_table(xs, b2, factors)
    tx3, ty3 = _axis_table(xs, a3, factors), _axis_table(xs, b3, factors)
    return complex(
        _trilinear_general(f1, f2, f3, tx1, ty1, tx2, ty2, tx3, ty3, factors, strides)
    )


def pair_progression_count(factors, strides, membership, elements):
    factors = np.asarray(factors, dtype=np.int64)
    strides = np.asarray(strides, dtype=np.int64)
    memb = np.ascontiguousarray(membership, dtype=np.uint8)
    elems = np.ascontiguousarray(elements, dtype=np.int64)
    if len(elems) == 0:
        return 0
    n = int(factors.prod())
    if len(factors) == 1:
        doubled = (2 * elems) % n
        negated = (-elems) % n
        return int(_pairs_cyclic_tab(memb, doubled, negated, n))
    tneg = _axis_table(elems, -1, factors)
    tdbl = _axis_table(elems, 2, factors)
    return int(_pairs_general(memb, tneg, tdbl, factors, strides))
