"""Inverse reduction: embed an affine vertex algebra into the next
W-algebra tensored with localized chiral differential operators.

The solver side is deliberately separated from the verification side:
solve_embedding finds candidate generator images by staged linear algebra
plus bounded-degree elimination, and verify_embedding recomputes every
ordered pair of lambda brackets from scratch (engine plus, where the
target table is linear, the mode oracle) before a solution is released.
stages_check compares the classical staged reduction against the direct
slice character.
"""

from fractions import Fraction

from .dsred import extract_generators
from .elements import Element, el_gen, el_term, format_element
from .engine import classical_limit, engine_for, enumerate_basis
from .errors import (
    AnsatzTooSmall,
    NoComoment,
    OpecalcError,
    OracleUnsupported,
    ResidualNonzero,
    Unsolvable,
)
from .fock import oracle_for
from .kernels import pmul
from .liedata import (
    CorootAlpha,
    GoodGrading,
    PartitionMu,
    coroot_add,
    free_character,
    kazhdan_weights,
)
from .poisson import Comoment, classical_brst, classical_cohomology_dims
from .presentations import affine_gl, localized_cdo, tensor
from .rationals import QQ, QZERO
from .scalars import (
    RF_ONE,
    RF_ZERO,
    RatFuncK,
    S_ONE,
    rf_from_qq,
    scalar_from_rf,
    scalar_term,
)

# Degree cap for the elimination step: substituting one solved unknown into
# the remaining quadratic constraints can raise the degree, and anything
# past this bound is treated as unsolvable rather than ground through.
DEG_CAP = 4


# ---------------------------------------------------------------------------
# localized chiral differential operators


def build_localized(length):
    """D^ch_loc on an affine cell of the given dimension: the lattice pair
    (p, e^m) with its log-derivative current, plus length-1 beta/gamma
    pairs."""
    length = int(length)
    if length < 1:
        raise OpecalcError(f"localized cell dimension must be >= 1, got {length}")
    return localized_cdo(length - 1)


# ---------------------------------------------------------------------------
# embedding problems


class EmbeddingProblem:
    """Source and target presentations with a grade assignment for each
    source generator's image.

    assign maps source generator name -> dict with keys weight, ghost,
    charge.  comoment lists (source name, target element) pairs declaring
    the comoment currents; pin_comoment turns them into fixed images.
    """

    def __init__(
        self,
        source,
        target,
        assign,
        comoment=(),
        ansatz_cap=4,
        hbar_cap=4,
    ):
        self.source = source
        self.target = target
        self.assign = assign
        self.comoment = tuple(comoment)
        self.ansatz_cap = ansatz_cap
        self.hbar_cap = hbar_cap
        self.pinned = {}
        self._pair_cache = {}
        for g in source.generators:
            if g.name not in assign:
                raise OpecalcError(f"no image grade assigned for {g.name!r}")

    def with_charge(self, name, charge):
        """Copy of the problem with one generator's image charge replaced
        (grade bookkeeping only; used for control runs)."""
        assign = {n: dict(a) for n, a in self.assign.items()}
        assign[name]["charge"] = int(charge)
        return EmbeddingProblem(
            self.source,
            self.target,
            assign,
            self.comoment,
            self.ansatz_cap,
            self.hbar_cap,
        )


class EmbeddingSolution:
    """Generator images plus the verification certificate that released
    them; the certificate is recomputed by verify_embedding, never copied
    from solver state."""

    def __init__(self, problem, images, certificate=None):
        self.problem = problem
        self.images = images
        self.certificate = certificate

    def formatted_images(self):
        return {
            name: format_element(el, self.problem.target)
            for name, el in sorted(self.images.items())
        }


def gl_problem(N, mu, alpha, ansatz_cap=4, hbar_cap=4):
    """Standard inverse-reduction problem: V^k(gl_N) into the W-algebra of
    mu + alpha tensored with the localized cell.

    Image e-charges pair each current with the coroot direction, and image
    weights are shifted by the charge so that the comoment current can pin
    to the weight-0 unit e^1.
    """
    if not isinstance(mu, PartitionMu):
        mu = PartitionMu(mu)
    if not isinstance(alpha, CorootAlpha):
        alpha = CorootAlpha(*alpha)
    if mu.N != int(N):
        raise OpecalcError(f"partition {mu} does not sum to N = {N}")
    if mu.parts != (1,) * mu.N:
        raise OpecalcError(
            "embedding problems are built from the affine source mu = [1^N]; "
            f"got mu = [{mu}]"
        )
    mu_plus = coroot_add(mu, alpha)
    wmax = max(int(w) for w in kazhdan_weights(mu_plus))
    walg = extract_generators(mu_plus, wmax)
    loc = build_localized(alpha.length)
    target = tensor(
        walg.presentation, loc, name=f"w-{mu_plus}-x-loc{alpha.length}"
    )
    source = affine_gl(N)
    assign = {}
    for a in range(1, N + 1):
        for b in range(1, N + 1):
            charge = (1 if a == alpha.i else 0) - (1 if b == alpha.i else 0)
            assign[f"J{a}{b}"] = {
                "weight": Fraction(1) - charge,
                "ghost": 0,
                "charge": charge,
            }
    e_idx = target.exp_idx
    pin_el = el_term(((e_idx, 1),))
    comoment = ((f"J{alpha.i}{alpha.j}", pin_el),)
    return EmbeddingProblem(source, target, assign, comoment, ansatz_cap, hbar_cap)


def pin_comoment(prob):
    """Fix the declared comoment images, removing their unknowns.

    The pinned element must sit in the assigned grade, and the lattice
    charge current p may not appear in it (the moment map lands in the
    unit coordinates only).
    """
    if not prob.comoment:
        raise NoComoment(
            "the problem declares no comoment currents; nothing to pin"
        )
    out = EmbeddingProblem(
        prob.source,
        prob.target,
        prob.assign,
        prob.comoment,
        prob.ansatz_cap,
        prob.hbar_cap,
    )
    tgt = prob.target
    p_idx = tgt.index.get("p")
    for name, el in prob.comoment:
        if name not in prob.assign:
            raise OpecalcError(f"comoment current {name!r} is not a source generator")
        a = prob.assign[name]
        if el.weight(tgt) != a["weight"] or el.ghost(tgt) != a["ghost"]:
            raise OpecalcError(
                f"pinned image of {name!r} is not in its assigned grade"
            )
        if tgt.exp_idx is not None and el.e_charge(tgt) != a["charge"]:
            raise OpecalcError(
                f"pinned image of {name!r} has the wrong e-charge"
            )
        if p_idx is not None:
            for mono in el:
                if any(idx == p_idx for idx, _sub in mono):
                    raise OpecalcError(
                        "the charge current p cannot appear in a pinned "
                        "comoment image"
                    )
        out.pinned[name] = el
    return out


# ---------------------------------------------------------------------------
# small polynomial system solver over RatFuncK
#
# Constraint rows are multivariate polynomials in the unknown coefficients:
# dict mapping a sorted tuple of unknown ids (with multiplicity) to a
# RatFuncK coefficient; the empty tuple holds the constant term.


def _row_add(row, key, rf):
    cur = row.get(key)
    s = rf if cur is None else cur + rf
    if s:
        row[key] = s
    elif cur is not None:
        del row[key]


def _merge_keys(ka, kb):
    return tuple(sorted(ka + kb))


def _substitute_value(row, var, value):
    """Replace one unknown by a RatFuncK value."""
    out = {}
    for key, rf in row.items():
        m = key.count(var)
        if m:
            rest = tuple(v for v in key if v != var)
            for _ in range(m):
                rf = rf * value
            if rf:
                _row_add(out, rest, rf)
        else:
            _row_add(out, key, rf)
    return out


def _substitute_expr(row, var, expr):
    """Replace one unknown by a polynomial expression in other unknowns;
    returns None when the degree cap is exceeded."""
    out = {}
    for key, rf in row.items():
        m = key.count(var)
        if not m:
            _row_add(out, key, rf)
            continue
        rest = tuple(v for v in key if v != var)
        terms = {rest: rf}
        for _ in range(m):
            nxt = {}
            for tkey, trf in terms.items():
                for ekey, erf in expr.items():
                    merged = _merge_keys(tkey, ekey)
                    if len(merged) > DEG_CAP:
                        return None
                    _row_add(nxt, merged, trf * erf)
            terms = nxt
        for tkey, trf in terms.items():
            _row_add(out, tkey, trf)
    return out


def _polyk_sqrt(p):
    """Square root of a dense rational-coefficient polynomial, or None."""
    if not p:
        return ()
    deg = len(p) - 1
    if deg % 2:
        return None
    m = deg // 2
    lead = p[-1]
    if lead < 0:
        return None
    ln, ld = int(lead.numerator), int(lead.denominator)
    rn = _frac_sqrt(ln)
    rd = _frac_sqrt(ld)
    if rn is None or rd is None:
        return None
    g = [QZERO] * (m + 1)
    g[m] = QQ(rn, rd)
    for i in range(2 * m - 1, -1, -1):
        acc = QZERO
        lo = max(0, i - m)
        for a2 in range(lo, m + 1):
            b2 = i - a2
            if b2 < 0 or b2 > m:
                continue
            if a2 <= i - m and b2 <= i - m:
                continue
            if a2 == i - m or b2 == i - m:
                continue
            acc += g[a2] * g[b2]
        if i - m < 0:
            if acc != p[i]:
                return None
            continue
        g[i - m] = (p[i] - acc) / (2 * g[m])
    gt = tuple(g)
    if pmul(gt, gt) != tuple(p):
        return None
    return gt


def _frac_sqrt(n):
    if n < 0:
        return None
    r = _isqrt(n)
    return r if r * r == n else None


def _isqrt(n):
    if n < 2:
        return n
    x = 1 << ((n.bit_length() + 1) // 2)
    while True:
        y = (x + n // x) // 2
        if y >= x:
            return x
        x = y


def _rf_sqrt(rf):
    if not rf:
        return RF_ZERO
    num = _polyk_sqrt(rf.num)
    den = _polyk_sqrt(rf.den)
    if num is None or den is None:
        return None
    return RatFuncK(num, den)


def _quad_roots(c2, c1, c0):
    """Roots in QQ(k) of c2 s^2 + c1 s + c0, exact only."""
    if not c2:
        if not c1:
            return []
        return [-(c0 / c1)]
    disc = c1 * c1 - rf_from_qq(QQ(4)) * c2 * c0
    sq = _rf_sqrt(disc)
    if sq is None:
        return []
    two_a = (rf_from_qq(QQ(2)) * c2).inverse()
    roots = [(-c1 + sq) * two_a]
    if sq:
        roots.append((-c1 - sq) * two_a)
    return roots


def _solve_rows(rows, var_order):
    """Depth-first solutions of a polynomial system over RatFuncK.

    Strategy: propagate single-unknown linear rows; branch on univariate
    rows of degree <= 2; eliminate unknowns whose coefficient in some row
    is constant, capping the resulting degree; freeze leftover unknowns to
    zero.  Yields complete assignments {var: RatFuncK}."""
    var_rank = {v: i for i, v in enumerate(var_order)}
    yield from _solve_branch([dict(r) for r in rows], {}, [], var_rank)


def _row_vars(row):
    out = set()
    for key in row:
        out.update(key)
    return out


def _solve_branch(rows, assign, pending, var_rank):
    rows = [r for r in rows if r]
    while True:
        progress = False
        clean = []
        for row in rows:
            if not row:
                continue
            if set(row) == {()}:
                return  # inconsistent: nonzero constant
            clean.append(row)
        rows = clean

        # single-unknown linear rows
        for row in rows:
            vs = _row_vars(row)
            if len(vs) == 1:
                (v,) = vs
                deg = max(len(k) for k in row if k)
                if deg == 1:
                    val = -(row.get((), RF_ZERO) / row[(v,)])
                    assign = dict(assign)
                    assign[v] = val
                    rows = [_substitute_value(r, v, val) for r in rows]
                    progress = True
                    break
        if progress:
            continue

        # univariate rows of degree 2: branch on exact roots
        for row in rows:
            vs = _row_vars(row)
            if len(vs) == 1:
                (v,) = vs
                c2 = row.get((v, v), RF_ZERO)
                c1 = row.get((v,), RF_ZERO)
                c0 = row.get((), RF_ZERO)
                extra = set(row) - {(), (v,), (v, v)}
                if extra:
                    continue  # degree > 2 in one unknown: no exact step
                for val in _quad_roots(c2, c1, c0):
                    sub_rows = [_substitute_value(r, v, val) for r in rows]
                    sub_assign = dict(assign)
                    sub_assign[v] = val
                    yield from _solve_branch(
                        sub_rows, sub_assign, pending, var_rank
                    )
                return
        # elimination: an unknown appearing linearly with constant coefficient
        elim = None
        for row in rows:
            for key in sorted(row, key=lambda k: [var_rank[v] for v in k]):
                if len(key) != 1:
                    continue
                (v,) = key
                if any(v in k and k != key for k in row):
                    continue
                elim = (row, v)
                break
            if elim:
                break
        if elim:
            row, v = elim
            a = row[(v,)]
            expr = {}
            for key, rf in row.items():
                if key == (v,):
                    continue
                expr[key] = -(rf / a)
            new_rows = []
            ok = True
            for r in rows:
                if r is row:
                    continue
                sub = _substitute_expr(r, v, expr)
                if sub is None:
                    ok = False
                    break
                new_rows.append(sub)
            if ok:
                rows = new_rows
                pending = pending + [(v, expr)]
                continue

        # freeze: deepest-ranked unknown still free goes to zero
        free = set()
        for row in rows:
            free |= _row_vars(row)
        if not free:
            break
        v = max(free, key=lambda u: var_rank[u])
        assign = dict(assign)
        assign[v] = RF_ZERO
        rows = [_substitute_value(r, v, RF_ZERO) for r in rows]

    for row in rows:
        if row:
            return
    # back-substitute eliminated unknowns, then zero anything untouched
    assign = dict(assign)
    for v, expr in reversed(pending):
        val = RF_ZERO
        for key, rf in expr.items():
            for u in key:
                rf = rf * assign.get(u, RF_ZERO)
            val = val + rf
        assign[v] = val
    yield assign


# ---------------------------------------------------------------------------
# constraint assembly


def _candidates(prob, name):
    """Unknown ids and their basis elements for one generator's image."""
    a = prob.assign[name]
    tgt = prob.target
    if tgt.exp_idx is None and a["charge"]:
        return []
    e_charge = a["charge"] if tgt.exp_idx is not None else None
    monos = enumerate_basis(
        tgt,
        a["weight"],
        ghost=a["ghost"],
        e_charge=e_charge,
        max_length=prob.ansatz_cap,
    )
    out = []
    for mono in monos:
        for hpow in range(prob.hbar_cap + 1):
            uid = (name, mono, hpow)
            out.append((uid, el_term(mono, scalar_term(hpow, 0, RF_ONE))))
    return out


def _flatten(rows_by_slot, pkey, lp, sign=1):
    """Accumulate a LambdaPoly into per-slot constraint rows; slots are
    (lambda power, target monomial, h degree, t degree)."""
    for n, el in lp.coeffs.items():
        for mono, sc in el.items():
            for (h, t), rf in sc.terms:
                slot = (n, mono, h, t)
                row = rows_by_slot.setdefault(slot, {})
                _row_add(row, pkey, rf if sign > 0 else -rf)


def _map_source_element(el, src, images, eng_t, current, cur_cands, memo):
    """Image of a source element under the partial map.

    Returns (constant LambdaPoly-free Element, {uid: Element}) where the
    uid part collects linear contributions of the generator currently
    being solved; None when the element mentions an undetermined
    generator inside a composite word (the pair is then deferred)."""
    const = Element()
    linear = {}
    for mono, sc in el.items():
        if not mono:
            const.iadd(el_term((), sc))
            continue
        if len(mono) == 1:
            idx, sub = mono[0]
            gname = src.generators[idx].name
            if gname in images:
                img = images[gname]
                if sub:
                    img = eng_t.derive(img, sub)
                const.iadd(img, scale=sc)
                continue
            if gname == current:
                for uid, uel in cur_cands:
                    contrib = eng_t.derive(uel, sub) if sub else uel
                    acc = linear.setdefault(uid, Element())
                    acc.iadd(contrib, scale=sc)
                continue
            return None
        word = _word_image(eng_t, src, images, mono, memo)
        if word is None:
            return None
        const.iadd(word, scale=sc)
    return const, linear


def _word_image(eng_t, src, images, mono, memo):
    """Right-nested normal product of derivative-dressed generator images;
    None when a letter's image is not yet known."""
    hit = memo.get(mono)
    if hit is not None:
        return hit
    if not mono:
        return Element({(): S_ONE})
    idx, sub = mono[0]
    gname = src.generators[idx].name
    img = images.get(gname)
    if img is None:
        return None
    if sub:
        img = eng_t.derive(img, sub)
    if len(mono) == 1:
        val = img
    else:
        rest = _word_image(eng_t, src, images, mono[1:], memo)
        if rest is None:
            return None
        val = eng_t.nth(img, -1, rest)
    memo[mono] = val
    return val


def _pair_rows(src, eng_s, eng_t, images, a, b, current, cur_cands, bcache):
    """Constraint rows from the ordered pair (a, b): bracket of images
    minus image of bracket, per slot.  None if the pair must wait."""
    rows_by_slot = {}

    def image_parts(name):
        if name in images:
            return images[name], None
        if name == current:
            return None, cur_cands
        return None, False

    ka, pa = image_parts(a)
    kb, pb = image_parts(b)
    if pa is False or pb is False:
        return None

    # left side: bracket of images, bilinear over the unknown parts
    if ka is not None and kb is not None:
        _flatten(rows_by_slot, (), eng_t.lambda_bracket(ka, kb))
    elif ka is not None:
        for uid, uel in pb:
            key = ("L", a, uid[1], uid[2])
            lp = bcache.get(key)
            if lp is None:
                lp = eng_t.lambda_bracket(ka, uel)
                bcache[key] = lp
            _flatten(rows_by_slot, (uid,), lp)
    elif kb is not None:
        for uid, uel in pa:
            key = ("R", b, uid[1], uid[2])
            lp = bcache.get(key)
            if lp is None:
                lp = eng_t.lambda_bracket(uel, kb)
                bcache[key] = lp
            _flatten(rows_by_slot, (uid,), lp)
    else:
        for uida, uela in pa:
            for uidb, uelb in pb:
                key = ("B", uida[1], uida[2], uidb[1], uidb[2])
                lp = bcache.get(key)
                if lp is None:
                    lp = eng_t.lambda_bracket(uela, uelb)
                    bcache[key] = lp
                _flatten(rows_by_slot, _merge_keys((uida,), (uidb,)), lp)

    # right side: image of the source bracket
    src_lp = eng_s.lambda_bracket(
        el_gen(src.index[a]), el_gen(src.index[b])
    )
    memo = {}
    for n, el in src_lp.coeffs.items():
        mapped = _map_source_element(
            el, src, images, eng_t, current, cur_cands, memo
        )
        if mapped is None:
            return None
        const, linear = mapped
        one = _one_lp(n, const)
        _flatten(rows_by_slot, (), one, sign=-1)
        for uid, uel in linear.items():
            _flatten(rows_by_slot, (uid,), _one_lp(n, uel), sign=-1)
    return list(rows_by_slot.values())


def _one_lp(n, el):
    from .elements import LambdaPoly

    lp = LambdaPoly()
    lp.add_term(n, el)
    return lp


# ---------------------------------------------------------------------------
# the solver


def solve_embedding(prob, weight_cutoff):
    """Staged search for generator images, released only after the full
    verification pass.

    Stages follow increasing image weight.  Each stage collects the
    constraints that are polynomial in the current generator's unknowns
    alone (pairs against already-determined images, plus the self pair)
    and runs the bounded elimination; remaining branches are explored
    depth-first and arbitrated by verify_embedding.
    """
    src, tgt = prob.source, prob.target
    eng_s = engine_for(src)
    eng_t = engine_for(tgt)
    src_names = [g.name for g in src.generators]

    seed = _identity_seed(prob)
    if seed is not None:
        sol = EmbeddingSolution(prob, seed)
        try:
            sol.certificate = verify_embedding(sol, weight_cutoff)
            return sol
        except ResidualNonzero:
            pass

    # the classical shadow constraints are solved jointly with the quantum
    # ones: the h -> 1 image must be a morphism for the Poisson structures
    src_cl = classical_limit(src)
    tgt_cl = classical_limit(tgt)
    eng_s_cl = engine_for(src_cl)
    eng_t_cl = engine_for(tgt_cl)

    def to_classical(el):
        return el.map_scalars(lambda s: s.hbar_specialize(1))

    cands = {}
    cands_cl = {}
    for name in src_names:
        if name in prob.pinned:
            continue
        cs = _candidates(prob, name)
        if not cs:
            raise AnsatzTooSmall(
                f"no candidate monomials for the image of {name!r} in grade "
                f"{prob.assign[name]}"
            )
        cands[name] = cs
        cands_cl[name] = [(uid, to_classical(uel)) for uid, uel in cs]

    order = sorted(cands, key=lambda n: (prob.assign[n]["weight"], n))
    failures = []

    def stage(idx, images, images_cl):
        if idx == len(order):
            yield dict(images)
            return
        name = order[idx]
        cur = cands[name]
        cur_cl = cands_cl[name]
        bcache = {}
        bcache_cl = {}
        rows = []
        blocked = False
        pair_list = []
        for other in list(images):
            pair_list.extend(((other, name), (name, other)))
        pair_list.append((name, name))
        for a, b in pair_list:
            got = _pair_rows(
                src, eng_s, eng_t, images, a, b, name, cur, bcache
            )
            if got is None:
                blocked = True
                continue
            rows.extend(got)
            got_cl = _pair_rows(
                src_cl, eng_s_cl, eng_t_cl, images_cl, a, b, name, cur_cl,
                bcache_cl,
            )
            if got_cl is not None:
                rows.extend(got_cl)
        if blocked and not rows:
            failures.append(f"{name}: no usable constraints at its stage")
        var_order = [uid for uid, _el in cur]
        for assign in _solve_rows(rows, var_order):
            el = Element()
            for uid, uel in cur:
                rf = assign.get(uid, RF_ZERO)
                if rf:
                    el.iadd(uel, scale=scalar_from_rf(rf))
            images[name] = el
            images_cl[name] = to_classical(el)
            yield from stage(idx + 1, images, images_cl)
            del images[name]
            del images_cl[name]

    pinned_cl = {n: to_classical(el) for n, el in prob.pinned.items()}
    for images in stage(0, dict(prob.pinned), pinned_cl):
        sol = EmbeddingSolution(prob, images)
        try:
            sol.certificate = verify_embedding(sol, weight_cutoff)
            return sol
        except ResidualNonzero as exc:
            failures.append(str(exc))
            continue
    residual = sorted(set(order))
    raise Unsolvable(
        "no verified embedding at this cutoff/ansatz; unresolved generators: "
        + ", ".join(residual)
        + (("; last failures: " + "; ".join(failures[-3:])) if failures else "")
    )


def _identity_seed(prob):
    """Name-matching candidate map when the problem carries no pins and the
    target contains every source generator in the assigned grade."""
    if prob.pinned:
        return None
    tgt = prob.target
    out = {}
    for i, g in enumerate(prob.source.generators):
        j = tgt.index.get(g.name)
        if j is None:
            return None
        a = prob.assign[g.name]
        tg = tgt.generators[j]
        if (
            tg.conformal_weight != a["weight"]
            or tg.ghost_degree != a["ghost"]
            or a["charge"] != (tg.e_charge if tgt.exp_idx == j else 0)
        ):
            return None
        out[g.name] = el_gen(j)
    return out


# ---------------------------------------------------------------------------
# verification


def verify_embedding(sol, weight_cutoff):
    """Recompute every ordered pair of generator brackets, check image
    independence per weight, and take the classical shadow; raises
    ResidualNonzero on the first discrepancy and returns the certificate
    otherwise."""
    prob = sol.problem
    src, tgt = prob.source, prob.target
    eng_s = engine_for(src)
    eng_t = engine_for(tgt)
    images = sol.images
    names = [g.name for g in src.generators]
    for name in names:
        if name not in images:
            raise ResidualNonzero(f"no image recorded for generator {name!r}")
        el = images[name]
        a = prob.assign[name]
        if el and (
            el.weight(tgt) != a["weight"]
            or el.ghost(tgt) != a["ghost"]
            or (tgt.exp_idx is not None and el.e_charge(tgt) != a["charge"])
        ):
            raise ResidualNonzero(
                f"image of {name!r} is not homogeneous in its assigned grade"
            )

    try:
        orc = oracle_for(tgt)
    except OracleUnsupported:
        orc = None

    pairs = 0
    modes = 0
    for a in names:
        for b in names:
            wa = src.weight[src.index[a]]
            wb = src.weight[src.index[b]]
            nmax = int(wa + wb) + 1
            src_lp = eng_s.lambda_bracket(
                el_gen(src.index[a]), el_gen(src.index[b])
            )
            memo = {}
            for n in range(-1, nmax + 1):
                got = eng_t.nth(images[a], n, images[b])
                want = Element()
                el = src_lp.coeffs.get(n)
                if el is not None:
                    mapped = _map_source_element(
                        el, src, images, eng_t, None, (), memo
                    )
                    want = mapped[0]
                if n >= 0:
                    if not got.minus(want).is_zero():
                        raise ResidualNonzero(
                            f"pair ({a}, {b}) fails at lambda power {n}"
                        )
                    modes += 1
                if orc is not None and n >= -1:
                    if orc.product_state(images[a], n, images[b]) != (
                        orc.state_of_element(got)
                    ):
                        raise ResidualNonzero(
                            f"mode oracle disagrees on pair ({a}, {b}) at "
                            f"mode {n}"
                        )
            pairs += 1

    inj = _injectivity_dims(src, images, eng_t, weight_cutoff)
    shadow = _classical_shadow(prob, images, weight_cutoff)

    return {
        "pairs_checked": pairs,
        "modes_checked": modes,
        "mode_oracle": "agrees" if orc is not None else "unsupported",
        "injectivity": inj,
        "classical_shadow": shadow,
        "weight_cutoff": weight_cutoff,
        "pinned": sorted(prob.pinned),
    }


def _injectivity_dims(src, images, eng_t, weight_cutoff):
    """Rank of the image of each weight-graded piece of the source; must
    match the source dimension (the map is injective up to the cutoff)."""
    out = {}
    memo = {}
    for w in range(weight_cutoff + 1):
        monos = enumerate_basis(src, w, ghost=0)
        vecs = []
        for mono in monos:
            img = _word_image(eng_t, src, images, mono, memo)
            flat = {}
            for m, sc in img.items():
                for (h, t), rf in sc.terms:
                    if rf:
                        flat[(m, h, t)] = rf
            vecs.append(flat)
        rank = _rf_rank(vecs)
        if rank != len(monos):
            raise ResidualNonzero(
                f"images of the weight-{w} basis are dependent: rank {rank} "
                f"of {len(monos)}"
            )
        out[w] = rank
    return out


def _rf_rank(vecs):
    rows = []
    rank = 0
    for vec in vecs:
        vec = dict(vec)
        for pivot, prow in rows:
            c = vec.get(pivot)
            if c:
                for key, rf in prow.items():
                    _rf_vec_sub(vec, key, c * rf)
        if not vec:
            continue
        pivot = min(vec)
        inv = vec[pivot].inverse()
        rows.append((pivot, {k: v * inv for k, v in vec.items()}))
        rank += 1
    return rank


def _rf_vec_sub(vec, key, rf):
    cur = vec.get(key, RF_ZERO)
    s = cur - rf
    if s:
        vec[key] = s
    elif key in vec:
        del vec[key]


def _classical_shadow(prob, images, weight_cutoff):
    """The h -> 1 specialization of the images is a morphism for the
    classical (Poisson vertex) structures of source and target."""
    src_cl = classical_limit(prob.source)
    tgt_cl = classical_limit(prob.target)
    eng_s = engine_for(src_cl)
    eng_t = engine_for(tgt_cl)
    cl_images = {
        name: el.map_scalars(lambda s: s.hbar_specialize(1))
        for name, el in images.items()
    }
    names = [g.name for g in src_cl.generators]
    for a in names:
        for b in names:
            wa = src_cl.weight[src_cl.index[a]]
            wb = src_cl.weight[src_cl.index[b]]
            src_lp = eng_s.lambda_bracket(
                el_gen(src_cl.index[a]), el_gen(src_cl.index[b])
            )
            memo = {}
            for n in range(0, int(wa + wb) + 2):
                got = eng_t.nth(cl_images[a], n, cl_images[b])
                want = Element()
                el = src_lp.coeffs.get(n)
                if el is not None:
                    mapped = _map_source_element(
                        el, src_cl, cl_images, eng_t, None, (), memo
                    )
                    want = mapped[0]
                if not got.minus(want).is_zero():
                    raise ResidualNonzero(
                        f"classical shadow fails on pair ({a}, {b}) at "
                        f"lambda power {n}"
                    )
    return "zero-residual"


# ---------------------------------------------------------------------------
# reduction by stages, classical characters


def stage_comoment(mu, alpha, weight_cutoff):
    """Classical W-algebra of mu together with the coroot-direction
    current expressed in its extracted generators.

    The current is the cohomology class whose single-current head is the
    matrix unit E_{i,j} (first-column boxes of the two rows the coroot
    connects), modulo the positively graded directions killed by the
    boundaries."""
    if not isinstance(mu, PartitionMu):
        mu = PartitionMu(mu)
    if not isinstance(alpha, CorootAlpha):
        alpha = CorootAlpha(*alpha)
    coroot_add(mu, alpha)  # validates dominance before any work
    alg = extract_generators(mu, weight_cutoff, classical=True)
    grading = GoodGrading(mu)
    n = mu.N
    units = [(a, b) for a in range(1, n + 1) for b in range(1, n + 1)]
    positive = set(grading.positive_pairs)
    weight_one = [g for g in alg.generators if g["weight"] == 1]
    if not weight_one:
        raise OpecalcError("no weight-1 generators to build the stage comoment")

    # current heads: single-letter components of each generator cocycle
    heads = []
    for g in weight_one:
        head = {}
        for mono, sc in g["element"].items():
            if len(mono) == 1 and mono[0][1] == 0 and mono[0][0] < n * n:
                rf = _scalar_rf(sc)
                if rf:
                    head[units[mono[0][0]]] = rf
        heads.append(head)

    want = {(alpha.i, alpha.j): RF_ONE}
    combo = _solve_head_combo(heads, want, positive)
    if combo is None:
        raise OpecalcError(
            "the coroot direction is not spanned by the weight-1 classes"
        )
    x_el = Element()
    for g, rf in zip(weight_one, combo):
        if rf:
            x_el.iadd(
                el_gen(alg.presentation.index[g["name"]]),
                scale=scalar_from_rf(rf),
            )
    return alg, x_el, alpha


def _scalar_rf(sc):
    for (h, t), rf in sc.terms:
        if h == 0 and t == 0:
            return rf
    return RF_ZERO


def _solve_head_combo(heads, want, positive):
    """Coefficients with sum(c_g head_g) = want modulo positive units."""
    keys = sorted(
        {u for h in heads for u in h} | set(want) - set(positive)
    )
    keys = [u for u in keys if u not in positive]
    rows = []
    rhs = []
    for u in keys:
        rows.append([h.get(u, RF_ZERO) for h in heads])
        rhs.append(want.get(u, RF_ZERO))
    ncols = len(heads)
    sol = [RF_ZERO] * ncols
    pivots = []
    work = [list(r) + [rhs[i]] for i, r in enumerate(rows)]
    col = 0
    r = 0
    for col in range(ncols):
        sel = None
        for i in range(r, len(work)):
            if work[i][col]:
                sel = i
                break
        if sel is None:
            continue
        work[r], work[sel] = work[sel], work[r]
        inv = work[r][col].inverse()
        work[r] = [c * inv for c in work[r]]
        for i in range(len(work)):
            if i != r and work[i][col]:
                f = work[i][col]
                work[i] = [a - f * b for a, b in zip(work[i], work[r])]
        pivots.append(col)
        r += 1
    for i in range(r, len(work)):
        if work[i][ncols]:
            return None
    for i, col in enumerate(pivots):
        sol[col] = work[i][ncols]
    return sol


def stages_check(mu, alpha, weight_cutoff, margin=1):
    """The staged classical reduction along one coroot has the character
    of the direct slice: H^0 of (classical W_mu) tensor one ghost pair,
    differential (x - t) c, versus free generation on the Kazhdan weights
    of mu + alpha; nonzero ghost rows must vanish."""
    if not isinstance(mu, PartitionMu):
        mu = PartitionMu(mu)
    if alpha is None:
        alg = extract_generators(mu, weight_cutoff, classical=True)
        weights = [g["weight"] for g in alg.generators]
        staged = free_character(weights, weight_cutoff)
        direct = free_character(kazhdan_weights(mu), weight_cutoff)
        return {
            "mu": str(mu),
            "alpha": None,
            "weight_cutoff": weight_cutoff,
            "staged": staged,
            "direct": direct,
            "ghost_rest_zero": True,
            "ok": staged == direct,
        }
    alg, x_el, alpha = stage_comoment(mu, alpha, weight_cutoff)
    mu_plus = coroot_add(mu, alpha)
    label = f"s{alpha.i}{alpha.j}"
    com = Comoment((label,), (0,), (x_el,), {})
    cx = classical_brst(
        alg.presentation, com, (Fraction(1),), name=f"stage-{mu}-to-{mu_plus}"
    )
    report = classical_cohomology_dims(cx, weight_cutoff, margin=margin)
    staged = [report["table"][(w, 0)] for w in range(weight_cutoff + 1)]
    direct = free_character(kazhdan_weights(mu_plus), weight_cutoff)
    rest_zero = all(
        v == 0 for (w, g), v in report["table"].items() if g != 0
    )
    return {
        "mu": str(mu),
        "alpha": str(alpha),
        "weight_cutoff": weight_cutoff,
        "staged": staged,
        "direct": direct,
        "ghost_rest_zero": rest_zero,
        "euler_ok": report["euler_ok"],
        "ok": staged == direct and rest_zero and report["euler_ok"] is not False,
    }


# ---------------------------------------------------------------------------
# orchestration used by the command line and the acceptance suite


def run_ihr_verify(N, mu, alpha, weight_cutoff, ansatz_cap=4):
    """Build the standard problem, pin, solve, and report."""
    prob = gl_problem(N, mu, alpha, ansatz_cap=ansatz_cap)
    pinned = pin_comoment(prob)
    sol = solve_embedding(pinned, weight_cutoff)
    return {
        "N": int(N),
        "mu": str(prob_mu(mu)),
        "alpha": str(alpha if isinstance(alpha, CorootAlpha) else CorootAlpha(*alpha)),
        "weight_cutoff": weight_cutoff,
        "images": sol.formatted_images(),
        "certificate": sol.certificate,
    }


def prob_mu(mu):
    return mu if isinstance(mu, PartitionMu) else PartitionMu(mu)
