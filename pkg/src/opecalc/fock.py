"""Mode-algebra oracle on the vacuum Fock module.

For presentations whose bracket table is linear (every table value is a
scalar multiple of the vacuum or of a single possibly-derived generator),
the modes x_(n) span a Lie superalgebra acting on the vacuum module, and
products can be computed by pure mode pushing:

    [x_(m), y_(n)] = sum_r C(m, r) (x_(r) y)_(m+n-r)

with x_(n)|0> = 0 for n >= 0.  States are PBW words of creation modes
(n <= -1) over a charge sector; the lattice sector of a localized
presentation is handled by the standard vertex operator

    Y(e^m, z) = S_m exp(m sum_{j>=1} a_(-j) z^j / j)
                    exp(-m sum_{j>=1} a_(j) z^-j / j)

with no z-power factor (the lattice pairing is isotropic) and charge shift
S_m.  Everything here is independent of the normal-ordering engine: no Wick
corrections, no quasi-associativity, only mode commutators, so agreement
with the engine is a genuine two-route check.

Raises OracleUnsupported when a table value is a composite monomial.
"""

import math
from fractions import Fraction

from .errors import OpecalcError, OracleUnsupported
from .rationals import QQ
from .scalars import S_MINUS_ONE, S_ONE, scalar_from_qq

_MAX_DEPTH = 600


class StateVector(dict):
    """Map (charge, mode word) -> Scalar; zero coefficients dropped."""

    __slots__ = ()

    def add_term(self, key, scalar):
        cur = self.get(key)
        if cur is None:
            if scalar:
                self[key] = scalar
            return
        s = cur + scalar
        if s:
            self[key] = s
        else:
            del self[key]

    def iadd(self, other, scale=None):
        if scale is None:
            for key, sc in other.items():
                self.add_term(key, sc)
        elif scale:
            for key, sc in other.items():
                self.add_term(key, scale * sc)
        return self

    def scaled(self, scalar):
        out = StateVector()
        if scalar:
            for key, sc in self.items():
                out[key] = scalar * sc
        return out


def _sv_term(key, scalar=S_ONE):
    out = StateVector()
    if scalar:
        out[key] = scalar
    return out


def _falling(n, d):
    out = 1
    for i in range(d):
        out *= n - i
    return out


def _binom_general(m, r):
    """C(m, r) for any integer m and r >= 0."""
    return _falling(m, r) // math.factorial(r)


class FockOracle:
    def __init__(self, pres):
        self.pres = pres
        if pres.classical:
            raise OracleUnsupported(
                "the mode oracle covers quantum presentations only"
            )
        self.exp_idx = pres.exp_idx
        self._mode_table = {}
        for (i, j), lp in pres.table.items():
            entries = []
            for r in sorted(lp.coeffs):
                el = lp.coeffs[r]
                for mono, sc in sorted(el.items()):
                    if len(mono) == 0:
                        entries.append((r, ("c", sc)))
                    elif len(mono) == 1 and mono[0][0] != pres.exp_idx:
                        g, sub = mono[0]
                        entries.append((r, ("g", g, sub, sc)))
                    else:
                        raise OracleUnsupported(
                            "bracket "
                            f"[{pres.generators[i].name} "
                            f"{pres.generators[j].name}] has a composite "
                            "value; the mode oracle needs a linear table"
                        )
            self._mode_table[(i, j)] = entries
        self._app_memo = {}
        self._prod_memo = {}
        self._depth = 0

    # -- gradings ----------------------------------------------------------

    def word_weight(self, word):
        w = Fraction(0)
        for g, n in word:
            w += self.pres.weight[g] - n - 1
        return w

    def mono_weight(self, mono):
        w = Fraction(0)
        for idx, sub in mono:
            if idx == self.exp_idx:
                w += self.pres.weight[idx]
            else:
                w += self.pres.weight[idx] + sub
        return w

    # -- single mode application -------------------------------------------

    def apply_mode(self, g, m, state):
        out = StateVector()
        for (charge, word), c in state.items():
            res = self._app_word(g, m, charge, word)
            if res:
                out.iadd(res, c)
        return out

    def _app_word(self, g, m, charge, word):
        key = (g, m, charge, word)
        hit = self._app_memo.get(key)
        if hit is not None:
            return hit
        self._depth += 1
        if self._depth > _MAX_DEPTH:
            raise OpecalcError("mode pushing exceeded the depth bound")
        try:
            out = self._app_word_raw(g, m, charge, word)
        finally:
            self._depth -= 1
        self._app_memo[key] = out
        return out

    def _app_word_raw(self, g, m, charge, word):
        pres = self.pres
        if not word:
            if m <= -1:
                return _sv_term((charge, ((g, m),)))
            if m == 0 and charge:
                pair = pres.exp_pairings.get(g)
                if pair is not None:
                    return _sv_term((charge, ()), pair * charge)
            return StateVector()
        y = word[0]
        rest = word[1:]
        kx, ky = (m, g), (y[1], y[0])
        odd_x = pres.parity[g]
        odd_y = pres.parity[y[0]]
        if m <= -1 and (kx < ky or (kx == ky and not odd_x)):
            return _sv_term((charge, ((g, m),) + word))
        if (g, m) == y and odd_x:
            # x_m x_m = (1/2)[x_m, x_m]_+
            out = self._bracket_onto(g, m, y, charge, rest)
            return out.scaled(scalar_from_qq(QQ(1, 2)))
        out = self._bracket_onto(g, m, y, charge, rest)
        inner = self._app_word(g, m, charge, rest)
        if inner:
            swapped = self.apply_mode(y[0], y[1], inner)
            out.iadd(swapped, S_MINUS_ONE if odd_x and odd_y else None)
        return out

    def _bracket_onto(self, g, m, y, charge, rest):
        """[x_m, y_n] applied to the state (charge, rest)."""
        out = StateVector()
        entries = self._mode_table.get((g, y[0]))
        if not entries:
            return out
        n = y[1]
        for r, kind in entries:
            bi = _binom_general(m, r)
            if bi == 0:
                continue
            q = m + n - r
            if kind[0] == "c":
                if q == -1:
                    out.add_term((charge, rest), kind[1] * bi)
                continue
            _, gg, sub, sc = kind
            fall = _falling(q, sub)
            if fall == 0:
                continue
            if sub % 2:
                fall = -fall
            res = self._app_word(gg, q - sub, charge, rest)
            if res:
                out.iadd(res, sc * (bi * fall))
        return out

    # -- lattice vertex operator -------------------------------------------

    def _apply_exp(self, mcharge, n, state):
        """(e^mcharge)_(n) applied to a state via the vertex operator.

        Coefficient of z^(-n-1) in S E-(z) E+(z) acting on the state:
        E- carries creators a_(-j) z^j, E+ annihilators a_(j) z^-j, S shifts
        the charge by mcharge.  No z-power factor: the pairing is isotropic.
        """
        a_idx = self.pres.exp_log_idx
        out = StateVector()
        for (charge, word), c in state.items():
            base = _sv_term((charge, word), c)
            wlim = max(0, math.floor(self.word_weight(word)))
            for jtot in range(wlim + 1):
                ltot = jtot - n - 1
                if ltot < 0:
                    continue
                for jparts, jcoeff in self._partition_coeffs(-mcharge, jtot):
                    st = base
                    for part in jparts:
                        st = self.apply_mode(a_idx, part, st)
                        if not st:
                            break
                    if not st:
                        continue
                    if jcoeff != 1:
                        st = st.scaled(scalar_from_qq(jcoeff))
                    for lparts, lcoeff in self._partition_coeffs(mcharge, ltot):
                        st2 = st
                        for part in lparts:
                            st2 = self.apply_mode(a_idx, -part, st2)
                            if not st2:
                                break
                        if not st2:
                            continue
                        if lcoeff != 1:
                            st2 = st2.scaled(scalar_from_qq(lcoeff))
                        for (ch2, w2), c2 in st2.items():
                            out.add_term((ch2 + mcharge, w2), c2)
        return out

    def _partition_coeffs(self, base_num, total):
        """Partitions of total with coefficient prod (base/j)^mult / mult!."""
        out = []

        def rec(j, rem, parts, coeff):
            if rem == 0:
                out.append((tuple(parts), coeff))
                return
            if j > rem:
                return
            rec(j + 1, rem, parts, coeff)
            term = QQ(base_num, j)
            mult = 0
            acc = coeff
            while j * (mult + 1) <= rem:
                mult += 1
                acc = acc * term / mult
                rec(j + 1, rem - j * mult, parts + [j] * mult, acc)

        rec(1, total, [], QQ(1))
        return out

    # -- states of elements ------------------------------------------------

    def state_of_element(self, el):
        out = StateVector()
        for mono, sc in el.items():
            st = self._state_of_mono(mono)
            if st:
                out.iadd(st, sc)
        return out

    def _state_of_mono(self, mono):
        charge = 0
        letters = mono
        if letters and letters[-1][0] == self.exp_idx:
            charge = letters[-1][1]
            letters = letters[:-1]
        state = _sv_term((charge, ()))
        for idx, sub in reversed(letters):
            state = self.apply_mode(idx, -1 - sub, state)
            if sub:
                state = state.scaled(scalar_from_qq(QQ(math.factorial(sub))))
            if not state:
                break
        return state

    # -- products ----------------------------------------------------------

    def product_state(self, x_el, n, y_el):
        """x_(n) y as a state vector, all by mode pushing."""
        ystate = self.state_of_element(y_el)
        out = StateVector()
        for mono, sc in x_el.items():
            for key, c in ystate.items():
                res = self._prod_word(mono, n, key)
                if res:
                    out.iadd(res, sc * c)
        return out

    def _prod_word(self, mono, n, key):
        mkey = (mono, n, key)
        hit = self._prod_memo.get(mkey)
        if hit is not None:
            return hit
        out = self._prod_word_raw(mono, n, key)
        self._prod_memo[mkey] = out
        return out

    def _prod_word_raw(self, mono, n, key):
        charge, word = key
        if not mono:
            return _sv_term(key) if n == -1 else StateVector()
        state = _sv_term(key)
        if len(mono) == 1:
            return self._letter_mode(mono[0], n, state)
        l0, xs = mono[0], mono[1:]
        p_l = self.pres.parity[l0[0]]
        p_x = 0
        for idx, _ in xs:
            p_x ^= self.pres.parity[idx]
        sgn = p_l and p_x
        out = StateVector()
        bound_x = math.floor(self.mono_weight(xs) + self.word_weight(word)) - 1
        for i in range(0, bound_x - n + 1):
            inner = StateVector()
            for k2, c2 in self._prod_for(xs, n + i, state).items():
                inner.add_term(k2, c2)
            if not inner:
                continue
            res = self._letter_mode(l0, -1 - i, inner)
            out.iadd(res)
        bound_l = math.floor(
            self.mono_weight((l0,)) + self.word_weight(word)
        ) - 1
        for i in range(0, bound_l + 1):
            inner = self._letter_mode(l0, i, state)
            if not inner:
                continue
            res = self._prod_for(xs, n - 1 - i, inner)
            out.iadd(res, scalar_from_qq(QQ(-1)) if sgn else None)
        return out

    def _prod_for(self, mono, n, state):
        out = StateVector()
        for key, c in state.items():
            res = self._prod_word(mono, n, key)
            if res:
                out.iadd(res, c)
        return out

    def _letter_mode(self, letter, q, state):
        """(single letter)_(q) applied to a state."""
        idx, sub = letter
        if idx == self.exp_idx:
            return self._apply_exp(sub, q, state)
        if sub == 0:
            return self.apply_mode(idx, q, state)
        fall = _falling(q, sub)
        if fall == 0:
            return StateVector()
        if sub % 2:
            fall = -fall
        res = self.apply_mode(idx, q - sub, state)
        return res.scaled(scalar_from_qq(QQ(fall))) if res else res


_ORACLES = {}


def oracle_for(pres):
    orc = _ORACLES.get(id(pres))
    if orc is None or orc.pres is not pres:
        orc = FockOracle(pres)
        _ORACLES[id(pres)] = orc
    return orc


def mode_oracle_product(pres, x, n, y):
    """x_(n) y computed on the Fock module; returns a StateVector."""
    return oracle_for(pres).product_state(x, n, y)


def oracle_state(pres, el):
    return oracle_for(pres).state_of_element(el)


def oracle_agrees(pres, x, n, y, engine_result):
    """Two-route check: mode-oracle product vs an engine element."""
    orc = oracle_for(pres)
    return orc.product_state(x, n, y) == orc.state_of_element(engine_result)
