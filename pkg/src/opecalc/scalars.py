"""Exact scalar ring QQ(k)[h, t].

Coefficients of all vertex-algebra computations live here: rational
functions in the level parameter k, polynomial in the formal parameter h
(Planck weight) and the tracked character variable t.  Everything is exact:
GMP rationals under dense polynomial kernels, no floats.

Two layers:

  RatFuncK  reduced fraction of polynomials in k (den monic, gcd 1)
  Scalar    finitely many terms (h_deg, t_deg) -> RatFuncK

Both are immutable and hashable.  An optional h-adic truncation order can
be installed via the hbar_truncation context variable; when set to N, all
scalar results drop terms of h-degree > N (the whole computation then runs
modulo h^(N+1)).
"""

from contextlib import contextmanager
from contextvars import ContextVar

from .errors import NotAUnit, ParseError, PoleAtLevel, ZeroDenominator
from .kernels import (
    padd,
    pdivmod,
    pgcd,
    pmonic,
    pmul,
    pneg,
    peval,
    ppow,
    pscale,
    pstrip,
    psub,
)
from .rationals import QONE, QQ, QZERO, qq_str

P_ZERO = ()
P_ONE = (QONE,)
P_K = (QZERO, QONE)

hbar_truncation = ContextVar("hbar_truncation", default=None)


@contextmanager
def truncate_hbar(order):
    """Run a block with all scalar arithmetic truncated modulo h^(order+1)."""
    token = hbar_truncation.set(order)
    try:
        yield
    finally:
        hbar_truncation.reset(token)


# ---------------------------------------------------------------------------
# rational functions in k


class RatFuncK:
    """Reduced fraction num/den of polynomials in k; den monic and nonzero."""

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num, den, _reduced=False):
        if not den:
            raise ZeroDenominator("rational function with zero denominator")
        if not _reduced:
            if not num:
                den = P_ONE
            else:
                g = pgcd(num, den)
                if len(g) > 1:
                    num = pdivmod(num, g)[0]
                    den = pdivmod(den, g)[0]
                den, lead = pmonic(den)
                if lead != QONE:
                    num = tuple(c / lead for c in num)
        self.num = num
        self.den = den
        self._hash = hash((num, den))

    def __bool__(self):
        return bool(self.num)

    def __eq__(self, other):
        if not isinstance(other, RatFuncK):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        return self._hash

    def __neg__(self):
        return RatFuncK(pneg(self.num), self.den, _reduced=True)

    def __add__(self, other):
        if self.den == P_ONE and other.den == P_ONE:
            return RatFuncK(padd(self.num, other.num), P_ONE, _reduced=True)
        if self.den == other.den:
            return RatFuncK(padd(self.num, other.num), self.den)
        return RatFuncK(
            padd(pmul(self.num, other.den), pmul(other.num, self.den)),
            pmul(self.den, other.den),
        )

    def __sub__(self, other):
        if self.den == P_ONE and other.den == P_ONE:
            return RatFuncK(psub(self.num, other.num), P_ONE, _reduced=True)
        if self.den == other.den:
            return RatFuncK(psub(self.num, other.num), self.den)
        return RatFuncK(
            psub(pmul(self.num, other.den), pmul(other.num, self.den)),
            pmul(self.den, other.den),
        )

    def __mul__(self, other):
        if self.den == P_ONE and other.den == P_ONE:
            return RatFuncK(pmul(self.num, other.num), P_ONE, _reduced=True)
        return RatFuncK(pmul(self.num, other.num), pmul(self.den, other.den))

    def __truediv__(self, other):
        if not other.num:
            raise ZeroDenominator("division by zero rational function")
        return RatFuncK(pmul(self.num, other.den), pmul(self.den, other.num))

    def inverse(self):
        if not self.num:
            raise ZeroDenominator("inverse of zero rational function")
        return RatFuncK(self.den, self.num)

    def is_constant(self):
        return self.den == P_ONE and len(self.num) <= 1

    def constant_value(self):
        """The rational value of a constant; only valid when is_constant."""
        return self.num[0] if self.num else QZERO

    def eval_at_k(self, kval):
        d = peval(self.den, kval)
        if not d:
            raise PoleAtLevel(f"pole at level k = {qq_str(kval)}")
        return peval(self.num, kval) / d

    def __repr__(self):
        return f"RatFuncK({format_ratfunc(self)!r})"


RF_ZERO = RatFuncK(P_ZERO, P_ONE, _reduced=True)
RF_ONE = RatFuncK(P_ONE, P_ONE, _reduced=True)
RF_K = RatFuncK(P_K, P_ONE, _reduced=True)


def rf_from_qq(q):
    q = QQ(q) if not isinstance(q, type(QONE)) else q
    return RatFuncK((q,) if q else (), P_ONE, _reduced=True)


def rf_from_polyk(coeffs):
    """Polynomial in k from ascending rational coefficients."""
    return RatFuncK(pstrip(tuple(QQ(c) for c in coeffs)), P_ONE)


def polyk_rational_roots(p):
    """All rational roots of a nonzero polynomial over QQ, sorted."""
    if not p:
        raise ZeroDenominator("rational roots of the zero polynomial")
    # Strip the root at 0, clear denominators to an integer polynomial.
    roots = set()
    low = 0
    while not p[low]:
        low += 1
    if low:
        roots.add(QZERO)
        p = p[low:]
    den_lcm = 1
    for c in p:
        d = int(c.denominator)
        den_lcm = den_lcm * d // _gcd_int(den_lcm, d)
    ip = [int(c.numerator) * (den_lcm // int(c.denominator)) for c in p]
    a0, an = abs(ip[0]), abs(ip[-1])
    for r in _divisors(a0):
        for s in _divisors(an):
            for cand in (QQ(r, s), QQ(-r, s)):
                if not peval(p, cand):
                    roots.add(cand)
    return sorted(roots)


def _gcd_int(a, b):
    while b:
        a, b = b, a % b
    return a


def _divisors(n):
    if n == 0:
        return [1]
    out = []
    d = 1
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            if d != n // d:
                out.append(n // d)
        d += 1
    return out


# ---------------------------------------------------------------------------
# scalars


class Scalar:
    """Element of QQ(k)[h, t]: sorted terms ((h_deg, t_deg), RatFuncK)."""

    __slots__ = ("terms", "_hash")

    def __init__(self, terms, _canonical=False):
        if not _canonical:
            raise TypeError("use the scalar constructors, not Scalar() directly")
        self.terms = terms
        self._hash = hash(terms)

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if not isinstance(other, Scalar):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return self._hash

    def __neg__(self):
        return Scalar(tuple((key, -rf) for key, rf in self.terms), _canonical=True)

    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if not self.terms:
            return other
        if not other.terms:
            return self
        acc = dict(self.terms)
        for key, rf in other.terms:
            cur = acc.get(key)
            if cur is None:
                acc[key] = rf
            else:
                acc[key] = cur + rf
        return _from_dict(acc)

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if not self.terms or not other.terms:
            return S_ZERO
        trunc = hbar_truncation.get()
        acc = {}
        for (ha, ta), ra in self.terms:
            for (hb, tb), rb in other.terms:
                key = (ha + hb, ta + tb)
                if trunc is not None and key[0] > trunc:
                    continue
                cur = acc.get(key)
                prod = ra * rb
                acc[key] = prod if cur is None else cur + prod
        return _from_dict(acc)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.unit_inverse()

    def __pow__(self, n):
        if n < 0:
            return self.unit_inverse() ** (-n)
        out = S_ONE
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def unit_inverse(self):
        """Inverse of a unit (a nonzero element of QQ(k))."""
        if not self.terms:
            raise ZeroDenominator("division by the zero scalar")
        if len(self.terms) != 1 or self.terms[0][0] != (0, 0):
            raise NotAUnit(
                "scalar is not a unit: only nonzero elements of QQ(k) are invertible"
            )
        return Scalar((((0, 0), self.terms[0][1].inverse()),), _canonical=True)

    def is_unit(self):
        return len(self.terms) == 1 and self.terms[0][0] == (0, 0)

    def coefficient(self, h_deg, t_deg):
        for key, rf in self.terms:
            if key == (h_deg, t_deg):
                return rf
        return RF_ZERO

    def hbar_valuation(self):
        """Minimal h-degree over all terms; None for the zero scalar."""
        if not self.terms:
            return None
        return min(h for (h, _t), _ in self.terms)

    def divide_hbar(self, r=1):
        """Exact division by h^r; every term must have h-degree >= r."""
        out = []
        for (h, t), rf in self.terms:
            if h < r:
                raise NotAUnit(f"scalar is not divisible by h^{r}")
            out.append(((h - r, t), rf))
        return Scalar(tuple(out), _canonical=True)

    def t_degree(self):
        """Maximal t-degree over all terms; 0 for the zero scalar."""
        return max((key[1] for key, _ in self.terms), default=0)

    def weight(self):
        """Conformal weight carried by the scalar: its t-degree if pure.

        Terms of mixed t-degree have no single weight; returns the maximum
        (used for bracket vanishing bounds, where an upper bound suffices).
        """
        return self.t_degree()

    def eval_at_k(self, kval):
        """Specialize k to an exact rational; raises PoleAtLevel on poles."""
        kval = QQ(kval)
        out = {}
        for key, rf in self.terms:
            v = rf.eval_at_k(kval)
            if v:
                out[key] = rf_from_qq(v)
        return _from_dict(out)

    def hbar_specialize(self, value):
        """Set h to an exact rational value (typically 0 or 1)."""
        value = QQ(value)
        acc = {}
        for (h, t), rf in self.terms:
            if h and not value:
                continue
            scaled = (
                rf
                if not h
                else RatFuncK(pscale(rf.num, value**h), rf.den, _reduced=True)
            )
            key = (0, t)
            cur = acc.get(key)
            acc[key] = scaled if cur is None else cur + scaled
        return _from_dict(acc)

    def t_specialize(self, value):
        """Set t to an exact rational value (typically 1)."""
        value = QQ(value)
        acc = {}
        for (h, t), rf in self.terms:
            if t and not value:
                continue
            scaled = (
                rf
                if not t
                else RatFuncK(pscale(rf.num, value**t), rf.den, _reduced=True)
            )
            key = (h, 0)
            cur = acc.get(key)
            acc[key] = scaled if cur is None else cur + scaled
        return _from_dict(acc)

    def __repr__(self):
        return f"Scalar({format_scalar(self)!r})"


def _coerce(x):
    if isinstance(x, Scalar):
        return x
    if isinstance(x, int):
        return scalar_from_qq(QQ(x))
    return NotImplemented


def _from_dict(acc):
    trunc = hbar_truncation.get()
    items = []
    for key in sorted(acc):
        rf = acc[key]
        if not rf:
            continue
        if trunc is not None and key[0] > trunc:
            continue
        items.append((key, rf))
    return Scalar(tuple(items), _canonical=True)


def scalar_term(h_deg, t_deg, rf):
    if not rf:
        return S_ZERO
    return Scalar((((h_deg, t_deg), rf),), _canonical=True)


def scalar_from_qq(q):
    return scalar_term(0, 0, rf_from_qq(q))


def scalar_from_rf(rf):
    return scalar_term(0, 0, rf)


S_ZERO = Scalar((), _canonical=True)
S_ONE = scalar_from_qq(1)
S_MINUS_ONE = scalar_from_qq(-1)
S_K = scalar_from_rf(RF_K)
S_H = scalar_term(1, 0, RF_ONE)
S_T = scalar_term(0, 1, RF_ONE)


# ---------------------------------------------------------------------------
# formatting


def format_polyk(p):
    """Canonical polynomial string, descending powers: "k^2-3*k+2"."""
    if not p:
        return "0"
    parts = []
    for d in range(len(p) - 1, -1, -1):
        c = p[d]
        if not c:
            continue
        if d == 0:
            parts.append(qq_str(c))
            continue
        var = "k" if d == 1 else f"k^{d}"
        if c == QONE:
            parts.append(var)
        elif c == -QONE:
            parts.append("-" + var)
        else:
            parts.append(f"{qq_str(c)}*{var}")
    out = parts[0]
    for piece in parts[1:]:
        out += piece if piece.startswith("-") else "+" + piece
    return out


def _poly_nterms(p):
    return sum(1 for c in p if c)


def format_ratfunc(rf):
    if not rf.num:
        return "0"
    if rf.den == P_ONE:
        return format_polyk(rf.num)
    num_s = format_polyk(rf.num)
    if _poly_nterms(rf.num) > 1:
        num_s = f"({num_s})"
    den_s = format_polyk(rf.den)
    if _poly_nterms(rf.den) > 1:
        den_s = f"({den_s})"
    return f"{num_s}/{den_s}"


def _format_letters(h, t):
    parts = []
    if h == 1:
        parts.append("h")
    elif h:
        parts.append(f"h^{h}")
    if t == 1:
        parts.append("t")
    elif t:
        parts.append(f"t^{t}")
    return "*".join(parts)


def format_scalar(s):
    """Canonical scalar string; parse(format(s)) rebuilds s exactly."""
    if not s.terms:
        return "0"
    parts = []
    for (h, t), rf in s.terms:
        letters = _format_letters(h, t)
        if not letters:
            parts.append(format_ratfunc(rf))
            continue
        if rf == RF_ONE:
            parts.append(letters)
        elif rf == -RF_ONE:
            parts.append("-" + letters)
        else:
            coeff = format_ratfunc(rf)
            if rf.den == P_ONE and _poly_nterms(rf.num) > 1:
                coeff = f"({coeff})"
            parts.append(f"{coeff}*{letters}")
    out = parts[0]
    for piece in parts[1:]:
        out += piece if piece.startswith("-") else "+" + piece
    return out


# ---------------------------------------------------------------------------
# parsing

_OPS = "+-*/^():,"


def tokenize(text):
    """Shared tokenizer: ints, identifiers, single-char operators.

    Returns a list of (kind, text, line, column) with a trailing "end"
    token; kind is one of "int", "name", "op", "end".  Raises ParseError on
    unexpected characters.
    """
    tokens = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(("int", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("name", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch in _OPS:
            tokens.append(("op", ch, line, col))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(("end", "", line, col))
    return tokens


class TokenStream:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        if tok[0] != "end":
            self.pos += 1
        return tok

    def expect_op(self, op):
        kind, text, line, col = self.peek()
        if kind != "op" or text != op:
            shown = text if text else "end of input"
            raise ParseError(f"expected {op!r}, found {shown!r}", line, col)
        return self.next()

    def error(self, message):
        _, text, line, col = self.peek()
        raise ParseError(message, line, col)


def parse_scalar_stream(ts):
    """Parse a scalar expression from a TokenStream (additive level)."""
    value = _parse_s_term(ts)
    while True:
        kind, text, _, _ = ts.peek()
        if kind == "op" and text in "+-":
            ts.next()
            rhs = _parse_s_term(ts)
            value = value + rhs if text == "+" else value - rhs
        else:
            return value


def _parse_s_term(ts):
    value = _parse_s_factor(ts)
    while True:
        kind, text, _, _ = ts.peek()
        if kind == "op" and text in "*/":
            ts.next()
            rhs = _parse_s_factor(ts)
            value = value * rhs if text == "*" else value / rhs
        else:
            return value


def _parse_s_factor(ts):
    kind, text, _, _ = ts.peek()
    if kind == "op" and text == "-":
        ts.next()
        return -_parse_s_factor(ts)
    if kind == "op" and text == "+":
        ts.next()
        return _parse_s_factor(ts)
    return _parse_s_power(ts)


def _parse_s_power(ts):
    base = _parse_s_atom(ts)
    kind, text, _, _ = ts.peek()
    if kind == "op" and text == "^":
        ts.next()
        expo = _parse_int_exponent(ts)
        return base**expo
    return base


def _parse_int_exponent(ts):
    sign = 1
    kind, text, _, _ = ts.peek()
    if kind == "op" and text == "-":
        ts.next()
        sign = -1
        kind, text, _, _ = ts.peek()
    if kind != "int":
        ts.error("expected an integer exponent")
    ts.next()
    return sign * int(text)


def _parse_s_atom(ts):
    kind, text, line, col = ts.peek()
    if kind == "int":
        ts.next()
        return scalar_from_qq(QQ(int(text)))
    if kind == "name":
        if text == "k":
            ts.next()
            return S_K
        if text == "h":
            ts.next()
            return S_H
        if text == "t":
            ts.next()
            return S_T
        raise ParseError(f"unknown symbol {text!r} in scalar expression", line, col)
    if kind == "op" and text == "(":
        ts.next()
        value = parse_scalar_stream(ts)
        ts.expect_op(")")
        return value
    shown = text if text else "end of input"
    raise ParseError(f"unexpected {shown!r} in scalar expression", line, col)


def parse_scalar(text):
    """Parse a full scalar expression; the entire text must be consumed."""
    ts = TokenStream(tokenize(text))
    value = parse_scalar_stream(ts)
    kind, text_, line, col = ts.peek()
    if kind != "end":
        raise ParseError(f"unexpected trailing {text_!r}", line, col)
    return value
