"""Dense univariate polynomial kernels over exact rationals.

A polynomial in k is a tuple of coefficients in ascending degree order with
no trailing zeros; the zero polynomial is the empty tuple.  These functions
are the hot path of all scalar arithmetic, so they stay free of class
machinery.  A Cython twin with the same signatures may replace this module
at import time (see kernels.py).
"""

from .rationals import QQ, QZERO, QONE


def pstrip(cs):
    """Drop trailing zeros, returning a canonical tuple."""
    n = len(cs)
    while n and not cs[n - 1]:
        n -= 1
    return tuple(cs[:n])


def pconst(q):
    return (q,) if q else ()


def padd(a, b):
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, c in enumerate(b):
        out[i] = out[i] + c
    return pstrip(out)


def pneg(a):
    return tuple(-c for c in a)


def psub(a, b):
    out = list(a) + [QZERO] * (len(b) - len(a))
    for i, c in enumerate(b):
        out[i] = out[i] - c
    return pstrip(out)


def pmul(a, b):
    if not a or not b:
        return ()
    out = [QZERO] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        if not ca:
            continue
        for j, cb in enumerate(b):
            out[i + j] = out[i + j] + ca * cb
    return pstrip(out)


def pscale(a, q):
    if not q:
        return ()
    return tuple(c * q for c in a)


def pdivmod(a, b):
    """Euclidean division; b must be nonzero."""
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    if len(a) < len(b):
        return (), a
    rem = list(a)
    lead = b[-1]
    db = len(b) - 1
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
    """Monic gcd via the Euclidean algorithm; gcd((), ()) == ()."""
    while b:
        a, b = b, pdivmod(a, b)[1]
    if not a:
        return ()
    lead = a[-1]
    if lead == QONE:
        return a
    return tuple(c / lead for c in a)


def pmonic(a):
    """Return (monic polynomial, leading coefficient)."""
    if not a:
        return (), QONE
    lead = a[-1]
    if lead == QONE:
        return a, QONE
    return tuple(c / lead for c in a), lead


def peval(a, x):
    """Horner evaluation at an exact rational point."""
    acc = QZERO
    for c in reversed(a):
        acc = acc * x + c
    return acc


def ppow(a, n):
    out = (QONE,)
    base = a
    while n:
        if n & 1:
            out = pmul(out, base)
        base = pmul(base, base)
        n >>= 1
    return out
