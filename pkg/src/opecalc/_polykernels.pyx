# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled twin of _polykernels_py.

Coefficients are exact rational Python objects (gmpy2.mpq or Fraction), so
the win here is loop and indexing overhead, which dominates for the small
dense polynomials these kernels see.  Signatures match _polykernels_py
exactly; kernels.py picks whichever imports.
"""

from .rationals import QQ, QZERO, QONE


def pstrip(cs):
    cdef Py_ssize_t n = len(cs)
    while n and not cs[n - 1]:
        n -= 1
    return tuple(cs[:n])


def pconst(q):
    return (q,) if q else ()


def padd(a, b):
    cdef Py_ssize_t i
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i in range(len(b)):
        out[i] = out[i] + b[i]
    return pstrip(out)


def pneg(a):
    return tuple(-c for c in a)


def psub(a, b):
    cdef Py_ssize_t i, na = len(a), nb = len(b)
    out = list(a)
    if nb > na:
        out.extend([QZERO] * (nb - na))
    for i in range(nb):
        out[i] = out[i] - b[i]
    return pstrip(out)


def pmul(a, b):
    cdef Py_ssize_t i, j, na = len(a), nb = len(b)
    if na == 0 or nb == 0:
        return ()
    out = [QZERO] * (na + nb - 1)
    for i in range(na):
        ca = a[i]
        if not ca:
            continue
        for j in range(nb):
            out[i + j] = out[i + j] + ca * b[j]
    return pstrip(out)


def pscale(a, q):
    if not q:
        return ()
    return tuple(c * q for c in a)


def pdivmod(a, b):
    cdef Py_ssize_t i, j, db
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    if len(a) < len(b):
        return (), a
    rem = list(a)
    db = len(b) - 1
    lead = b[db]  # no negative indexing: wraparound is disabled
    quo = [QZERO] * (len(a) - db)
    for i in range(len(a) - 1, db - 1, -1):
        c = rem[i]
        if not c:
            continue
        q = c / lead
        quo[i - db] = q
        rem[i] = QZERO
        for j in range(db):
            rem[i - db + j] = rem[i - db + j] - q * b[j]
    return pstrip(quo), pstrip(rem)


def pgcd(a, b):
    while b:
        a, b = b, pdivmod(a, b)[1]
    if not a:
        return ()
    lead = a[len(a) - 1]
    if lead == QONE:
        return a
    return tuple(c / lead for c in a)


def pmonic(a):
    if not a:
        return (), QONE
    lead = a[len(a) - 1]
    if lead == QONE:
        return a, QONE
    return tuple(c / lead for c in a), lead


def peval(a, x):
    acc = QZERO
    for c in reversed(a):
        acc = acc * x + c
    return acc


def ppow(a, n):
    cdef long m = n
    out = (QONE,)
    base = a
    while m:
        if m & 1:
            out = pmul(out, base)
        base = pmul(base, base)
        m >>= 1
    return out
