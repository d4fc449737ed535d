"""Exact rational arithmetic backend.

Uses gmpy2.mpq when available (much faster for the polynomial kernels),
otherwise falls back to fractions.Fraction.  Everything downstream goes
through the QQ constructor and treats the values as opaque exact rationals.
"""

from fractions import Fraction

try:
    from gmpy2 import mpq as _mpq

    def QQ(a, b=1):
        return _mpq(a, b)

    BACKEND = "gmpy2"
except ImportError:  # pragma: no cover - exercised only without gmpy2
    def QQ(a, b=1):
        return Fraction(a, b)

    BACKEND = "fractions"

QZERO = QQ(0)
QONE = QQ(1)


def qq_from_fraction(fr):
    return QQ(fr.numerator, fr.denominator)


def qq_to_fraction(q):
    return Fraction(int(q.numerator), int(q.denominator))


def qq_str(q):
    """Canonical string: "3", "-2/5"."""
    if q.denominator == 1:
        return str(int(q.numerator))
    return f"{int(q.numerator)}/{int(q.denominator)}"
