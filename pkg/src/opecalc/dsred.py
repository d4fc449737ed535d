"""BRST reduction of affine gl_N currents along a nilpotent orbit.

The complex tensors the level-k gl_N currents (Kazhdan weights set by the
grading of each matrix unit) with one fermionic ghost pair per positively
graded root direction, then differentiates by

    d = sum_i :J^{x_i} c_i:  -  t * sum_i chi(x_i) c_i
        -  sum_{i<j} f^k_{ij} :b_k c_i c_j:

where x_i runs over the positive matrix units, chi = (f, -) is the
character of the nilpotent, f^k_{ij} are the structure constants of the
positive subalgebra, and t is the tracked weight-1 deformation scalar.
Cohomology lives in ghost degree 0; its weightwise character is compared
against the free character on the Kazhdan weights of the slice.
"""

from fractions import Fraction

from .cells import MARKER_BASE, ComplexAnalysis, GradedComplex, ghost_range
from .cells import check_d_squared as _cells_check_d_squared
from .elements import Element, el_term, mono_kappa
from .engine import check_axioms, classical_limit, engine_for, enumerate_basis
from .errors import OpecalcError
from .liedata import GoodGrading, PartitionMu, free_character, kazhdan_weights
from .linalg import ColumnSpan, Echelon, mat_solve
from .presentations import (
    Generator,
    LambdaPoly,
    Presentation,
    affine_gl,
    tensor,
)
from .scalars import (RF_ONE, RF_ZERO, S_H, S_ONE, S_T, scalar_from_qq,
                      scalar_term)

HALF = Fraction(1, 2)


def _dressing(hpow, tpow):
    return scalar_term(hpow, tpow, RF_ONE)


def ghost_presentation(grading):
    """One fermionic (b, c) pair per positive matrix unit E_ab.

    b{a}{b} has weight 1 and Kazhdan weight 3/2 - j, c{a}{b} weight 0 and
    Kazhdan weight j - 1/2, where E_ab sits in grade 2j; the only bracket
    is the pairing [b c] = [c b] = h.
    """
    gens = []
    for (a, b) in grading.positive_pairs:
        j = Fraction(grading.grade(a, b), 2)
        gens.append(Generator(f"b{a}{b}", 1, 1, -1, Fraction(3, 2) - j))
        gens.append(Generator(f"c{a}{b}", 1, 0, 1, j - HALF))
    table = {}
    for r in range(len(grading.positive_pairs)):
        bi, ci = 2 * r, 2 * r + 1
        for (i, j2) in ((bi, ci), (ci, bi)):
            lp = LambdaPoly()
            lp.add_term(0, el_term((), S_H))
            table[(i, j2)] = lp
    return Presentation(f"ghosts-{grading.mu}", "ghost", gens, table)


def ds_hbar_weights(grading):
    """Kazhdan weight 1 - j of the current J{a}{b}, E_ab in grade 2j."""
    out = {}
    for a in range(1, grading.N + 1):
        for b in range(1, grading.N + 1):
            g = grading.grade(a, b) if a != b else 0
            out[(a, b)] = 1 - Fraction(g, 2)
    return out


def ds_differential(pres, grading, drop_trilinear=False):
    """The BRST differential as an element of the tensor presentation."""
    idx = pres.index
    d = Element()
    for (a, b) in grading.positive_pairs:
        jn = idx[f"J{a}{b}"]
        cn = idx[f"c{a}{b}"]
        d.add_term(((jn, 0), (cn, 0)), S_ONE)
        chi = grading.chi(a, b)
        if chi:
            d.add_term(((cn, 0),), S_T * scalar_from_qq(-chi))
    if not drop_trilinear:
        pairs = grading.positive_pairs
        consts = grading.structure_constants_positive()
        for (i, j, k), f in sorted(consts.items()):
            if i < j:
                bn = idx[f"b{pairs[k][0]}{pairs[k][1]}"]
                ci = idx[f"c{pairs[i][0]}{pairs[i][1]}"]
                cj = idx[f"c{pairs[j][0]}{pairs[j][1]}"]
                d.add_term(((bn, 0), (ci, 0), (cj, 0)), scalar_from_qq(-f))
    return d


def build_ds_complex(mu, drop_trilinear=False, classical=False):
    """GradedComplex for the reduction of gl_N along the partition mu.

    drop_trilinear omits the cubic ghost term (a control: d^2 != 0 whenever
    the positive subalgebra is nonabelian).  classical builds the Poisson
    shadow carrying the same differential.
    """
    if not isinstance(mu, PartitionMu):
        mu = PartitionMu(mu)
    grading = GoodGrading(mu)
    aff = affine_gl(mu.N, hbar_weights=ds_hbar_weights(grading))
    if grading.positive_pairs:
        pres = tensor(aff, ghost_presentation(grading), name=f"ds-gl{mu.N}-{mu}")
    else:
        pres = Presentation(
            f"ds-gl{mu.N}-{mu}", aff.family, aff.generators, aff.table
        )
    if classical:
        pres = classical_limit(pres)
    d = ds_differential(pres, grading, drop_trilinear)
    cx = GradedComplex(pres, d, name=pres.name)
    cx.mu = mu
    cx.grading = grading
    return cx


def check_d_squared(mu, weight_cutoff, drop_trilinear=False, classical=False):
    """(ok, witnesses) for d_(0)^2 = 0 on all monomials up to the cutoff."""
    cx = build_ds_complex(mu, drop_trilinear=drop_trilinear, classical=classical)
    return _cells_check_d_squared(cx, weight_cutoff)


def cohomology_dims(mu, weight_cutoff, margin=1, classical=False, ghosts=None,
                    euler=True):
    """Weight x ghost table of reduced dimensions, with the free-character
    oracle comparison in ghost degree 0.

    ghosts restricts the computed rows (None means the full detected
    range); the Euler cross-check always runs over full anti-diagonals
    and can be switched off for restricted runs.
    """
    cx = build_ds_complex(mu, classical=classical)
    an = ComplexAnalysis(cx, weight_cutoff, margin=margin)
    if ghosts is None:
        table = an.table()
    else:
        table = {
            (w, g): an.weight_entry(w, g)
            for w in range(weight_cutoff + 1)
            for g in ghosts
        }
    ghost_zero = [table[(w, 0)] for w in range(weight_cutoff + 1)]
    weights = kazhdan_weights(cx.mu)
    oracle = free_character(weights, weight_cutoff)
    euler_ok = (
        [an.euler_check(w) for w in range(weight_cutoff + 1)]
        if euler
        else None
    )
    return {
        "mu": str(cx.mu),
        "classical": not cx.quantum,
        "weight_cutoff": weight_cutoff,
        "ghost_rows": sorted({g for (_w, g) in table}),
        "table": table,
        "ghost_zero": ghost_zero,
        "slice_weights": [str(w) for w in weights],
        "oracle": oracle,
        "oracle_match": ghost_zero == oracle,
        "ghost_rest_zero": all(
            n == 0 for (w, g), n in table.items() if g != 0
        ),
        "euler_ok": euler_ok,
        "special_levels": sorted(str(s) for s in an.specials),
    }


# ---------------------------------------------------------------------------
# generator extraction


class ExtractedAlgebra:
    """Cohomology generators of a reduction complex and their brackets.

    generators: list of dicts (name, weight, kappa, element); presentation:
    the extracted vertex (or Poisson vertex) algebra on those generators,
    with t specialized to 1 in the bracket tables.
    """

    def __init__(self, cx, analysis, generators, presentation):
        self.cx = cx
        self.analysis = analysis
        self.generators = generators
        self.presentation = presentation

    def representative(self, el):
        """Cocycle in the reduction complex representing an element of the
        extracted presentation (words in the stored generator cocycles)."""
        out = Element()
        for mono, sc in el.items():
            out.iadd(_eval_word(self.cx, self.generators, mono), scale=sc)
        return out


def extract_generators(mu, weight_cutoff, margin=1, classical=False, jacobi=True):
    """Find the ghost-0 cohomology generators up to the cutoff and solve
    for their lambda-brackets, returning an ExtractedAlgebra.

    The extracted presentation is validated with the axiom checker; a
    failure raises rather than returning a broken table.
    """
    cx = build_ds_complex(mu, classical=classical)
    an = ComplexAnalysis(cx, weight_cutoff, margin=margin)
    gens_data = _find_generators(cx, an, weight_cutoff)
    shell = _shell_presentation(cx, gens_data)
    table = _solve_brackets(cx, an, gens_data, shell)
    pres = Presentation(
        f"w-{cx.name}",
        "extracted",
        shell.generators,
        table,
        classical=not cx.quantum,
    )
    report = check_axioms(pres, jacobi=jacobi, require_hbar_weight_nonneg=False)
    if not report["ok"]:
        raise OpecalcError(
            "extracted bracket table failed the axiom check: "
            + "; ".join(c["name"] for c in report["checks"] if not c["ok"])
        )
    return ExtractedAlgebra(cx, an, gens_data, pres)


def _find_generators(cx, an, weight_cutoff):
    """New ghost-0 classes per weight that are not normally ordered words
    in earlier generators, as dicts (name, weight, kappa, element)."""
    out = []
    for w in range(1, weight_cutoff + 1):
        found = []
        kappas = []
        if cx.quantum:
            span = cx.kappa_span(w, 0)
            if span is not None:
                kappas = list(range(span[0], span[1] + 1))
        else:
            kappas = [None]
        for kappa in kappas:
            reps = an.new_classes(w, 0, kappa)
            if not reps:
                continue
            ech = _expressible(cx, an, out, w, kappa)
            for vec in reps:
                r = ech.reduce(vec)
                if r:
                    found.append((kappa, an.element_from(r, 0, w, kappa)))
                    ech.add(r)
        for kappa, el in found:
            out.append(
                {
                    "name": f"W{len(out) + 1}",
                    "weight": w,
                    "kappa": kappa,
                    "element": el,
                }
            )
    return out


def _expressible(cx, an, gens_data, w, kappa):
    """Echelon of the cell subspace spanned by boundaries and words in the
    given generators."""
    ech = Echelon(an.specials)
    for col in an.boundary_columns(w, 0, kappa):
        ech.add(dict(col))
    for _mono, _hpow, el in _candidate_words(cx, gens_data, w, kappa):
        ech.add(an.decompose(el, 0, w, kappa))
    return ech


def _candidate_words(cx, gens_data, w, kappa):
    """(mono, hpow, dressed element) for normally ordered words in the
    generators, dressed by h and t powers to land in the cell (w, kappa).
    Includes the vacuum word."""
    shell = _shell_presentation(cx, gens_data)
    out = []
    for wm in range(w + 1):
        for mono in enumerate_basis(shell, wm, ghost=0):
            if cx.quantum:
                mk = mono_kappa(mono, shell)
                if mk > kappa:
                    continue
                hpow = kappa - mk
            else:
                hpow = 0
            el = _eval_word(cx, gens_data, mono)
            out.append((mono, hpow, el.scaled(_dressing(hpow, w - wm))))
    return out


def _eval_word(cx, gens_data, mono):
    """Right-nested normal product of derivative-dressed representatives."""
    memo = getattr(cx, "_word_memo", None)
    if memo is None:
        memo = cx._word_memo = {}
    hit = memo.get(mono)
    if hit is not None:
        return hit
    if not mono:
        val = Element({(): S_ONE})
    else:
        eng = cx.eng
        idx, sub = mono[0]
        letter = gens_data[idx]["element"]
        if sub:
            letter = eng.derive(letter, sub)
        if len(mono) == 1:
            val = letter
        else:
            val = eng.nth(letter, -1, _eval_word(cx, gens_data, mono[1:]))
    memo[mono] = val
    return val


def _shell_presentation(cx, gens_data):
    """Generator-only presentation of the extracted algebra (empty table),
    used to enumerate candidate words."""
    memo = getattr(cx, "_shell_memo", None)
    if memo is None:
        memo = cx._shell_memo = {}
    key = tuple(g["name"] for g in gens_data)
    hit = memo.get(key)
    if hit is not None:
        return hit
    gens = []
    for g in gens_data:
        hw = Fraction(0) if g["kappa"] is None else Fraction(g["kappa"], 2)
        gens.append(Generator(g["name"], 0, Fraction(g["weight"]), 0, hw))
    shell = Presentation(
        f"w-{cx.name}-shell", "extracted", gens, {}, classical=not cx.quantum
    )
    memo[key] = shell
    return shell


def _solve_brackets(cx, an, gens_data, shell):
    """Express every [W_a lambda W_b] mode in generator words modulo
    boundaries; t goes to 1 in the stored table."""
    eng = cx.eng
    table = {}
    for ia, ga in enumerate(gens_data):
        for ib, gb in enumerate(gens_data):
            lp = LambdaPoly()
            nmax = ga["weight"] + gb["weight"] - 1
            for n in range(nmax + 1):
                prod = eng.nth(ga["element"], n, gb["element"])
                if prod.is_zero():
                    continue
                wt = ga["weight"] + gb["weight"] - n - 1
                if cx.quantum:
                    kt = ga["kappa"] + gb["kappa"] - n - 1
                else:
                    kt = None
                entry = _express(cx, an, gens_data, prod, wt, kt)
                if not entry.is_zero():
                    lp.add_term(n, entry)
            for n in range(nmax + 1, nmax + 3):
                if not eng.nth(ga["element"], n, gb["element"]).is_zero():
                    raise OpecalcError(
                        f"[{ga['name']} {gb['name']}]_({n}) is nonzero "
                        "above the weight bound"
                    )
            if not lp.is_zero():
                table[(ia, ib)] = lp
    return table


def _express(cx, an, gens_data, prod, wt, kappa):
    """Solve prod = sum_M alpha_M * dressed(M) + (boundary) in the cell
    (wt, 0, kappa); return sum_M alpha_M * M with the t-dressing dropped
    (t -> 1) and the h-dressing kept in the scalar."""
    rhs = an.decompose(prod, 0, wt, kappa)
    words = _candidate_words(cx, gens_data, wt, kappa)
    span = ColumnSpan(MARKER_BASE, an.specials)
    for _m, _h, el in words:
        span.add_column(an.decompose(el, 0, wt, kappa))
    for col in an.boundary_columns(wt, 0, kappa):
        span.add_column(col)
    sol = span.solve(rhs)
    if sol is None:
        raise OpecalcError("bracket value is not expressible in generators")
    out = Element()
    for j, (mono, hpow, _el) in enumerate(words):
        alpha = sol.get(j)
        if alpha:
            out.add_term(mono, scalar_term(hpow, 0, alpha))
    return out


# ---------------------------------------------------------------------------
# conformal structure


def _append_equations(rows, rhs, images, want):
    """One linear equation per (monomial, scalar-bidegree) key matching
    sum_j alpha_j images[j] = want."""
    keys = set()
    for el in list(images) + [want]:
        for mono, sc in el.items():
            for ht, _rf in sc.terms:
                keys.add((mono, ht))
    wantmap = {}
    for mono, sc in want.items():
        for ht, rf in sc.terms:
            wantmap[(mono, ht)] = rf
    imaps = []
    for el in images:
        m = {}
        for mono, sc in el.items():
            for ht, rf in sc.terms:
                m[(mono, ht)] = rf
        imaps.append(m)
    for key in sorted(keys):
        rows.append([m.get(key, RF_ZERO) for m in imaps])
        rhs.append(wantmap.get(key, RF_ZERO))


def identify_virasoro(algebra):
    """Find the conformal vector of an extracted quantum algebra.

    Solves the linear conditions L_(0) x = h^2 dx and L_(1) x = wt(x) h^2 x
    over the generators x, with L ranging over weight-2 Kazhdan-degree-4
    words, then verifies the Virasoro shape of [L lambda L] and reads the
    central charge off L_(3) L = (c/2) h^4.

    Conformal vectors differ by improvement terms d(a) along weight-1
    currents a, which the mode-0 and mode-1 conditions cannot see but
    which shift the central charge.  The canonical vector is pinned by
    L_(2) a = 0 on every weight-1 generator: its currents carry no
    lambda^2 central term.
    """
    pres = algebra.presentation
    if pres.classical:
        raise OpecalcError("conformal identification expects a quantum algebra")
    eng = engine_for(pres)
    cands = []
    for mono in enumerate_basis(pres, 2, ghost=0):
        if not mono:
            continue
        mk = mono_kappa(mono, pres)
        if mk > 4:
            continue
        cands.append(Element({mono: _dressing(4 - mk, 0)}))
    if not cands:
        raise OpecalcError("no weight-2 candidates for a conformal vector")

    h2 = S_H * S_H
    rows, rhs = [], []
    for i, g in enumerate(pres.generators):
        x = Element({((i, 0),): S_ONE})
        wants = [
            (0, eng.derive(x).scaled(h2)),
            (1, x.scaled(h2 * scalar_from_qq(g.conformal_weight))),
        ]
        if g.conformal_weight == 1:
            wants.append((2, Element()))
        for n, want in wants:
            _append_equations(
                rows, rhs, [eng.nth(c, n, x) for c in cands], want
            )
    sol = mat_solve(rows, rhs, len(cands))
    if sol is None:
        return {
            "vector": None,
            "central_charge": None,
            "ok": False,
            "checks": [{"name": "conformal-conditions", "ok": False}],
        }
    checks = [{"name": "conformal-conditions", "ok": True}]
    L = Element()
    for cand, alpha in zip(cands, sol):
        if alpha:
            L.iadd(cand.scaled(scalar_term(0, 0, alpha)))

    dL = eng.derive(L).scaled(h2)
    twoL = L.scaled(h2 * scalar_from_qq(2))
    ok_shape = (
        _el_eq(eng.nth(L, 0, L), dL)
        and _el_eq(eng.nth(L, 1, L), twoL)
        and eng.nth(L, 2, L).is_zero()
        and eng.nth(L, 4, L).is_zero()
        and eng.nth(L, 5, L).is_zero()
    )
    checks.append({"name": "virasoro-shape", "ok": ok_shape})

    p3 = eng.nth(L, 3, L)
    central = RF_ZERO
    ok_c = True
    for mono, sc in p3.items():
        if mono != ():
            ok_c = False
            break
        terms = dict(sc.terms)
        if set(terms) - {(4, 0)}:
            ok_c = False
            break
        central = terms.get((4, 0), RF_ZERO)
        central = central + central
    checks.append({"name": "central-term", "ok": ok_c})
    return {
        "vector": L,
        "central_charge": central if ok_c else None,
        "ok": ok_shape and ok_c,
        "checks": checks,
    }


def _el_eq(a, b):
    diff = Element(a)
    diff.iadd(b, scale=scalar_term(0, 0, RF_ZERO - RF_ONE))
    return diff.is_zero()


# ---------------------------------------------------------------------------
# classical comparison


def classical_compare(mu, weight_cutoff):
    """The classical limit of the quantum reduction complex equals the
    classical BRST complex built independently from the finite Poisson
    data (jet lift of gl_N^* with level, comoment on the positive units).

    Compares the generator tuples, the bracket tables, and the
    differential matrices on every monomial up to the cutoff.  Returns
    (ok, mismatches); a mismatch names the layer and carries both sides.
    """
    from .poisson import ds_classical_complex

    limit = build_ds_complex(mu, classical=True)
    indep = ds_classical_complex(mu)
    mismatches = []
    if limit.pres.generators != indep.pres.generators:
        mismatches.append(
            ("generators", limit.pres.generators, indep.pres.generators)
        )
        return False, mismatches
    for key in sorted(set(limit.pres.table) | set(indep.pres.table)):
        la = limit.pres.table.get(key, LambdaPoly())
        lb = indep.pres.table.get(key, LambdaPoly())
        powers = set(la.coeffs) | set(lb.coeffs)
        if any(not la.coeff(n).minus(lb.coeff(n)).is_zero() for n in powers):
            mismatches.append(("table", key, la, lb))
    if mismatches:
        return False, mismatches
    lo, hi = ghost_range(limit, weight_cutoff)
    for w in range(weight_cutoff + 1):
        for g in range(lo, hi + 1):
            for m in limit.monos(w, g):
                da = limit.d_mono(m)
                db = indep.d_mono(m)
                if da != db:
                    mismatches.append(("matrix", (w, g, m), da, db))
    return (not mismatches), mismatches
