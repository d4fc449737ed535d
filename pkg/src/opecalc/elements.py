"""Monomials, elements, and lambda-polynomials.

A monomial is a tuple of letters (gen_idx, sub) in canonical PBW order:
ascending gen_idx, and for equal gen_idx descending sub.  For ordinary
generators sub is the number of derivatives applied; for the exponential
family of a lattice-localized presentation sub is the lattice charge m != 0
and at most one such letter occurs (it is rightmost because the family is
assigned the last generator index).  The empty tuple is the vacuum.

An Element maps monomials to nonzero Scalars.  A LambdaPoly collects the
j-th products of a bracket: [x lambda y] = sum_j lambda^j / j! * coeffs[j].
"""

from fractions import Fraction

from .errors import ParseError
from .scalars import (
    S_ONE,
    Scalar,
    TokenStream,
    format_scalar,
    parse_scalar_stream,
    tokenize,
)

VACUUM = ()


def mono_parity(mono, pres):
    p = 0
    for idx, _sub in mono:
        p ^= pres.parity[idx]
    return p


def mono_weight(mono, pres):
    """Conformal weight of the letters (excludes any t-degree of scalars)."""
    w = Fraction(0)
    for idx, sub in mono:
        if idx == pres.exp_idx:
            w += pres.weight[idx]
        else:
            w += pres.weight[idx] + sub
    return w


def mono_kappa(mono, pres):
    """Integral Kazhdan degree of the letters (excludes scalar h-degree)."""
    kap = 0
    for idx, sub in mono:
        if idx == pres.exp_idx:
            kap += pres.kappa[idx] * sub
        else:
            kap += pres.kappa[idx] + sub
    return kap


def mono_ghost(mono, pres):
    g = 0
    for idx, _sub in mono:
        g += pres.ghost[idx]
    return g


def mono_echarge(mono, pres):
    if pres.exp_idx is None:
        return 0
    return sum(sub for idx, sub in mono if idx == pres.exp_idx)


def mono_length(mono):
    return len(mono)


def mono_is_canonical(mono, pres):
    """Canonical PBW order with squarefree odd letters, one e-letter max."""
    prev = None
    seen_exp = False
    for idx, sub in mono:
        if idx == pres.exp_idx:
            if seen_exp or sub == 0:
                return False
            seen_exp = True
            key = (idx, 0)
        else:
            if sub < 0:
                return False
            key = (idx, -sub)
        if prev is not None:
            if key < prev:
                return False
            if key == prev and pres.parity[idx]:
                return False
        prev = key
    return True


class Element(dict):
    """Finite Scalar-linear combination of monomials; zero terms dropped."""

    __slots__ = ()

    def add_term(self, mono, scalar):
        cur = self.get(mono)
        if cur is None:
            if scalar:
                self[mono] = scalar
            return
        s = cur + scalar
        if s:
            self[mono] = s
        else:
            del self[mono]

    def iadd(self, other, scale=None):
        if scale is None:
            for mono, sc in other.items():
                self.add_term(mono, sc)
        elif scale:
            for mono, sc in other.items():
                self.add_term(mono, scale * sc)
        return self

    def plus(self, other):
        out = Element(self)
        out.iadd(other)
        return out

    def minus(self, other):
        out = Element(self)
        for mono, sc in other.items():
            out.add_term(mono, -sc)
        return out

    def scaled(self, scalar):
        if not scalar:
            return Element()
        out = Element()
        for mono, sc in self.items():
            v = scalar * sc
            if v:
                out[mono] = v
        return out

    def negated(self):
        return Element((mono, -sc) for mono, sc in self.items())

    def map_scalars(self, fn):
        out = Element()
        for mono, sc in self.items():
            v = fn(sc)
            if v:
                out[mono] = v
        return out

    def is_zero(self):
        return not self

    # Grading helpers: return the single common value, or None when mixed.
    # Weight and kappa include the scalar contributions (t and h degrees).

    def grading_values(self, pres):
        """Set of (weight, kappa, ghost, parity, e_charge) over all terms."""
        vals = set()
        for mono, sc in self.items():
            mw = mono_weight(mono, pres)
            mk = mono_kappa(mono, pres)
            mg = mono_ghost(mono, pres)
            mp = mono_parity(mono, pres)
            me = mono_echarge(mono, pres)
            for (h, t), _rf in sc.terms:
                vals.add((mw + t, mk + h, mg, mp, me))
        return vals

    def _single(self, pres, pick):
        vals = {pick(v) for v in self.grading_values(pres)}
        if len(vals) == 1:
            return vals.pop()
        return None

    def weight(self, pres):
        return self._single(pres, lambda v: v[0])

    def kappa(self, pres):
        return self._single(pres, lambda v: v[1])

    def ghost(self, pres):
        return self._single(pres, lambda v: v[2])

    def parity(self, pres):
        return self._single(pres, lambda v: v[3])

    def e_charge(self, pres):
        return self._single(pres, lambda v: v[4])


def el_term(mono, scalar=S_ONE):
    out = Element()
    if scalar:
        out[mono] = scalar
    return out


def el_gen(idx, scalar=S_ONE):
    return el_term(((idx, 0),), scalar)


def el_zero():
    return Element()


class LambdaPoly:
    """Bracket expansion [x lambda y] = sum_j lambda^j/j! * coeffs[j]."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=None):
        self.coeffs = {}
        if coeffs:
            for j, el in coeffs.items():
                if el:
                    self.coeffs[j] = el

    def add_term(self, j, el, scale=None):
        cur = self.coeffs.get(j)
        if cur is None:
            cur = self.coeffs[j] = Element()
        cur.iadd(el, scale)
        if not cur:
            del self.coeffs[j]

    def coeff(self, j):
        return self.coeffs.get(j, Element())

    def is_zero(self):
        return not self.coeffs

    def max_power(self):
        return max(self.coeffs, default=-1)

    def __eq__(self, other):
        if not isinstance(other, LambdaPoly):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __repr__(self):
        return f"LambdaPoly({self.coeffs!r})"


# ---------------------------------------------------------------------------
# element grammar
#
#   element  := term {(+|-) term}
#   term     := factor {* factor}
#   factor   := scalar-atom | letter | ":" letter+ ":"
#   letter   := NAME | NAME "^" INT          (exponential family only)
#             | "D" ["^" INT] "(" NAME ")"
#   scalar-atom := INT | "k" | "h" | "t" | "(" scalar-expression ")"
#
# Letters of a term must already stand in canonical PBW order; the parser
# rejects anything else rather than silently reordering, because reordering
# is an engine operation, not a notation.

_SCALAR_NAMES = frozenset(("k", "h", "t"))


def parse_element(text, pres):
    ts = TokenStream(tokenize(text))
    el = _parse_el_expr(ts, pres)
    kind, text_, line, col = ts.peek()
    if kind != "end":
        raise ParseError(f"unexpected trailing {text_!r}", line, col)
    return el


def _parse_el_expr(ts, pres):
    out = Element()
    negate = False
    kind, text, _, _ = ts.peek()
    if kind == "op" and text in "+-":
        ts.next()
        negate = text == "-"
    while True:
        mono, scalar = _parse_el_term(ts, pres)
        out.add_term(mono, -scalar if negate else scalar)
        kind, text, _, _ = ts.peek()
        if kind == "op" and text in "+-":
            ts.next()
            negate = text == "-"
        else:
            return out


def _parse_el_term(ts, pres):
    letters = []
    scalar = S_ONE
    while True:
        scalar, consumed = _parse_el_factor(ts, pres, letters, scalar)
        if not consumed:
            ts.error("expected a term")
        kind, text, _, _ = ts.peek()
        if kind == "op" and text == "*":
            ts.next()
            continue
        if kind == "op" and text == "/":
            ts.next()
            scalar = scalar / _parse_scalar_atom_factor(ts)
            continue
        break
    mono = _letters_to_mono(letters, ts, pres)
    return mono, scalar


def _parse_el_factor(ts, pres, letters, scalar):
    kind, text, line, col = ts.peek()
    if (
        kind == "int"
        or (kind == "name" and text in _SCALAR_NAMES)
        or (kind == "op" and text == "(")
    ):
        return scalar * _parse_scalar_atom_factor(ts), True
    if kind == "op" and text == "-":
        ts.next()
        inner_scalar, consumed = _parse_el_factor(ts, pres, letters, scalar)
        if not consumed:
            ts.error("expected a factor after '-'")
        return -inner_scalar, True
    if kind == "op" and text == ":":
        ts.next()
        while True:
            k2, t2, l2, c2 = ts.peek()
            if k2 == "op" and t2 == ":":
                ts.next()
                break
            if k2 == "end":
                raise ParseError("unterminated ':...:' product", l2, c2)
            letters.append(_parse_letter(ts, pres))
        return scalar, True
    if kind == "name":
        letters.append(_parse_letter(ts, pres))
        return scalar, True
    return scalar, False


def _parse_scalar_atom_factor(ts):
    from .scalars import S_H, S_K, S_T, scalar_from_qq

    kind, text, _, _ = ts.peek()
    if kind == "int":
        ts.next()
        base = scalar_from_qq(int(text))
    elif kind == "name" and text in _SCALAR_NAMES:
        ts.next()
        base = {"k": S_K, "h": S_H, "t": S_T}[text]
    elif kind == "op" and text == "(":
        ts.next()
        base = parse_scalar_stream(ts)
        ts.expect_op(")")
    else:
        ts.error("expected a scalar factor")
    k2, t2, _, _ = ts.peek()
    if k2 == "op" and t2 == "^":
        ts.next()
        n = _parse_signed_int(ts)
        return base**n
    return base


def _parse_signed_int(ts):
    sign = 1
    kind, text, line, col = ts.peek()
    if kind == "op" and text == "-":
        ts.next()
        sign = -1
        kind, text, line, col = ts.peek()
    if kind != "int":
        raise ParseError("expected an integer exponent", line, col)
    ts.next()
    return sign * int(text)


def _parse_letter(ts, pres):
    kind, text, line, col = ts.peek()
    if kind != "name":
        shown = text if text else "end of input"
        raise ParseError(f"expected a generator name, found {shown!r}", line, col)
    if text == "D":
        ts.next()
        n = 1
        k2, t2, _, _ = ts.peek()
        if k2 == "op" and t2 == "^":
            ts.next()
            n = _parse_signed_int(ts)
            if n < 0:
                raise ParseError("negative derivative order", line, col)
        ts.expect_op("(")
        k3, t3, l3, c3 = ts.peek()
        if k3 != "name" or t3 not in pres.index:
            raise ParseError(
                "D(...) applies to a single generator name; expand composite "
                "derivatives by the Leibniz rule first",
                l3,
                c3,
            )
        ts.next()
        idx = pres.index[t3]
        if idx == pres.exp_idx:
            raise ParseError("derivatives of exponential letters are rewritten "
                             "as :a e^m: products", l3, c3)
        ts.expect_op(")")
        return (idx, n)
    if text not in pres.index:
        raise ParseError(f"unknown generator {text!r}", line, col)
    ts.next()
    idx = pres.index[text]
    if idx == pres.exp_idx:
        m = 1
        k2, t2, _, _ = ts.peek()
        if k2 == "op" and t2 == "^":
            ts.next()
            m = _parse_signed_int(ts)
        return (idx, m)
    k2, t2, l2, c2 = ts.peek()
    if k2 == "op" and t2 == "^":
        raise ParseError(
            "powers of generators are not letters; write repeated letters "
            "inside ':...:' (derivatives are D^n(name))",
            l2,
            c2,
        )
    return (idx, 0)


def _letters_to_mono(letters, ts, pres):
    if pres.exp_idx is not None:
        letters = [(i, s) for (i, s) in letters if not (i == pres.exp_idx and s == 0)]
    mono = tuple(letters)
    if not mono_is_canonical(mono, pres):
        ts.error(
            "letters are not in canonical order (ascending generator index, "
            "descending derivative order, odd letters squarefree)"
        )
    return mono


# ---------------------------------------------------------------------------
# formatting


def format_letter(letter, pres):
    idx, sub = letter
    name = pres.generators[idx].name
    if idx == pres.exp_idx:
        return name if sub == 1 else f"{name}^{sub}"
    if sub == 0:
        return name
    if sub == 1:
        return f"D({name})"
    return f"D^{sub}({name})"


def format_mono(mono, pres):
    if not mono:
        return "1"
    if len(mono) == 1:
        return format_letter(mono[0], pres)
    return ":" + " ".join(format_letter(l, pres) for l in mono) + ":"


def format_element(el, pres):
    """Canonical element string; parse_element round-trips it exactly."""
    if not el:
        return "0"
    parts = []
    for mono in sorted(el):
        sc = el[mono]
        ms = format_mono(mono, pres)
        if not mono:
            parts.append(format_scalar(sc))
            continue
        if sc == S_ONE:
            parts.append(ms)
            continue
        ss = format_scalar(sc)
        if ss == "-1":
            parts.append(f"-{ms}")
            continue
        if "+" in ss[1:] or "-" in ss[1:]:
            ss = f"({ss})"
        parts.append(f"{ss}*{ms}")
    out = parts[0]
    for piece in parts[1:]:
        out += piece if piece.startswith("-") else "+" + piece
    return out


def format_lambda_poly(lp, pres):
    """Human-readable bracket: "(el0) + (el1)*lambda + (el2)*lambda^2/2!"."""
    if lp.is_zero():
        return "0"
    parts = []
    for j in sorted(lp.coeffs):
        el_s = format_element(lp.coeffs[j], pres)
        if j == 0:
            parts.append(f"({el_s})")
        elif j == 1:
            parts.append(f"({el_s})*lambda")
        else:
            parts.append(f"({el_s})*lambda^{j}/{j}!")
    return " + ".join(parts)
