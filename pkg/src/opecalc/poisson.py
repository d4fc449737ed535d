"""Vertex Poisson algebras of arc spaces: finite Poisson data, jet lifts,
classical BRST reduction, Casimir search, and graded characters.

A PoissonPresentation is finite-dimensional data: named even coordinates
with conformal weights and polynomial brackets {x_i, x_j}.  Its arc space
is the free differential polynomial algebra on the coordinates; jet_lift
turns the finite bracket into the lambda-bracket table of a classical
chiral presentation, so jet elements are ordinary Elements over that
presentation and the engine supplies the sesquilinear/Leibniz extension
to all jet variables.  classical_brst tensors a lifted presentation with
fermionic ghost pairs along a graded nilpotent comoment and
differentiates by the character-shifted current action; these complexes
are the independent comparison targets for the classical limits of the
quantum reductions.
"""

from dataclasses import dataclass
from fractions import Fraction
from math import lcm

from .cells import MARKER_BASE, ComplexAnalysis, GradedComplex
from .elements import Element, LambdaPoly, el_gen, el_term, format_element
from .engine import engine_for, enumerate_basis
from .errors import InvalidComoment, NotPoisson, OpecalcError
from .liedata import GoodGrading, PartitionMu
from .linalg import ColumnSpan, Echelon
from .presentations import Generator, Presentation, gl_bracket, gl_pairing, tensor
from .scalars import RF_ZERO, S_K, S_ONE, S_T, scalar_from_qq, scalar_term

HALF = Fraction(1, 2)


# ---------------------------------------------------------------------------
# polynomials in the coordinates: {sorted index tuple: Fraction}


def _poly_clean(p):
    return {m: q for m, q in p.items() if q}


def _poly_add(a, b):
    out = dict(a)
    for m, q in b.items():
        out[m] = out.get(m, Fraction(0)) + q
    return _poly_clean(out)


def _poly_scale(a, s):
    if not s:
        return {}
    return {m: q * s for m, q in a.items()}


def _poly_mul(a, b):
    out = {}
    for ma, qa in a.items():
        for mb, qb in b.items():
            m = tuple(sorted(ma + mb))
            out[m] = out.get(m, Fraction(0)) + qa * qb
    return _poly_clean(out)


def _poly_diff(p, a):
    out = {}
    for m, q in p.items():
        cnt = m.count(a)
        if not cnt:
            continue
        lst = list(m)
        lst.remove(a)
        key = tuple(lst)
        out[key] = out.get(key, Fraction(0)) + q * cnt
    return _poly_clean(out)


class PoissonPresentation:
    """Named even coordinates with weights and polynomial brackets.

    brackets maps ordered name pairs to polynomials given as
    {coordinate-name tuple: coefficient}; both orders of every nonzero
    pair must be present, so antisymmetry is a real check on the data.
    pairing optionally records a symmetric bilinear form (Scalar values)
    that jet_lift can install as a lambda-linear central term.
    """

    def __init__(self, name, coordinates, brackets, pairing=None):
        self.name = name
        self.names = tuple(nm for nm, _w in coordinates)
        self.weights = tuple(Fraction(w) for _nm, w in coordinates)
        if len(set(self.names)) != len(self.names):
            raise OpecalcError(f"duplicate coordinate names in {name!r}")
        self.index = {nm: i for i, nm in enumerate(self.names)}
        self.pi = {}
        for (na, nb), poly in brackets.items():
            key = (self._idx(na), self._idx(nb))
            self.pi[key] = _poly_clean(
                {
                    tuple(sorted(self._idx(c) for c in mono)): Fraction(q)
                    for mono, q in poly.items()
                }
            )
        self.pairing = {}
        for (na, nb), sc in (pairing or {}).items():
            if sc:
                self.pairing[(self._idx(na), self._idx(nb))] = sc

    def _idx(self, nm):
        if nm not in self.index:
            raise OpecalcError(f"unknown coordinate {nm!r} in {self.name!r}")
        return self.index[nm]

    def bracket(self, f, g):
        """Leibniz extension {f, g} = sum df/dx_a dg/dx_b {x_a, x_b} on
        polynomials in the coordinates."""
        out = {}
        for (a, b), pab in self.pi.items():
            fa = _poly_diff(f, a)
            if not fa:
                continue
            gb = _poly_diff(g, b)
            if not gb:
                continue
            out = _poly_add(out, _poly_mul(_poly_mul(fa, gb), pab))
        return out

    def validate(self):
        """Antisymmetry and Jacobi on coordinate triples; NotPoisson on
        failure.  Returns self so construction can chain through it."""
        n = len(self.names)
        for a in range(n):
            if self.pi.get((a, a)):
                raise NotPoisson(
                    f"{{{self.names[a]}, {self.names[a]}}} is nonzero"
                )
            for b in range(n):
                fwd = self.pi.get((a, b), {})
                back = self.pi.get((b, a), {})
                if _poly_add(fwd, back):
                    raise NotPoisson(
                        f"{{{self.names[a]}, {self.names[b]}}} is not "
                        "antisymmetric"
                    )
        for a in range(n):
            xa = {(a,): Fraction(1)}
            for b in range(a, n):
                xb = {(b,): Fraction(1)}
                for c in range(b, n):
                    xc = {(c,): Fraction(1)}
                    acc = self.bracket(xa, self.bracket(xb, xc))
                    acc = _poly_add(acc, self.bracket(xb, self.bracket(xc, xa)))
                    acc = _poly_add(acc, self.bracket(xc, self.bracket(xa, xb)))
                    if acc:
                        raise NotPoisson(
                            "Jacobi fails on "
                            f"({self.names[a]}, {self.names[b]}, "
                            f"{self.names[c]})"
                        )
        return self

    def __repr__(self):
        return (
            f"PoissonPresentation({self.name!r}, {len(self.names)} "
            "coordinates)"
        )


def _poly_to_element(poly):
    el = Element()
    for mono, q in sorted(poly.items()):
        el.add_term(tuple((a, 0) for a in mono), scalar_from_qq(q))
    return el


def jet_lift(p, with_level=False, hbar_weights=None, name=None):
    """Classical chiral presentation of the arc space of p.

    The coordinates become even weight-w generators whose lambda-bracket
    constant term is the finite Poisson bracket; the engine extends to
    jets by sesquilinearity and the Leibniz rule.  with_level installs the
    recorded pairing as a lambda-linear central term.  hbar_weights
    optionally overrides the Kazhdan half-degrees (default: the conformal
    weight), for lifts that sit inside reduction complexes.
    """
    p.validate()
    if with_level:
        if not p.pairing:
            raise NotPoisson(
                f"{p.name!r} has no pairing data for a level term"
            )
        for (a, b), sc in p.pairing.items():
            if p.pairing.get((b, a)) != sc:
                raise NotPoisson(
                    f"pairing of ({p.names[a]}, {p.names[b]}) is not "
                    "symmetric"
                )
    gens = []
    for nm, w in zip(p.names, p.weights):
        hw = w
        if hbar_weights is not None and nm in hbar_weights:
            hw = Fraction(hbar_weights[nm])
        gens.append(Generator(nm, 0, w, 0, hw))
    table = {}
    n = len(p.names)
    for i in range(n):
        for j in range(n):
            lp = LambdaPoly()
            pij = p.pi.get((i, j))
            if pij:
                lp.add_term(0, _poly_to_element(pij))
            if with_level:
                sc = p.pairing.get((i, j))
                if sc:
                    lp.add_term(1, el_term((), sc))
            if not lp.is_zero():
                table[(i, j)] = lp
    return Presentation(
        name or f"jets-{p.name}", "poisson-jets", gens, table, classical=True
    )


# ---------------------------------------------------------------------------
# shipped Poisson varieties


def t_star_line(name="t-star-A1"):
    """T*A^1 with {x, y} = 1, coordinates of weight 1/2."""
    one = {(): Fraction(1)}
    neg = {(): Fraction(-1)}
    return PoissonPresentation(
        name,
        [("x", HALF), ("y", HALF)],
        {("x", "y"): one, ("y", "x"): neg},
    )


def t_star_plane(name="t-star-A2"):
    """T*A^2 with {x_i, y_j} = delta_ij, coordinates of weight 1/2."""
    one = {(): Fraction(1)}
    neg = {(): Fraction(-1)}
    brackets = {}
    for r in (1, 2):
        brackets[(f"x{r}", f"y{r}")] = one
        brackets[(f"y{r}", f"x{r}")] = neg
    return PoissonPresentation(
        name,
        [("x1", HALF), ("y1", HALF), ("x2", HALF), ("y2", HALF)],
        brackets,
    )


def plane_zero_bracket(name="A2-zero"):
    """A^2 with the zero bracket: the degenerate everything-is-Casimir
    control."""
    return PoissonPresentation(name, [("x", HALF), ("y", HALF)], {})


def gl_star(N, prefix="E", name=None):
    """gl_N^* with the Kirillov-Kostant-Souriau bracket on the matrix-unit
    coordinates, trace-form pairing (times the level k) recorded for the
    optional central term."""
    units = [(a, b) for a in range(1, N + 1) for b in range(1, N + 1)]
    nm = {u: f"{prefix}{u[0]}{u[1]}" for u in units}
    coords = [(nm[u], Fraction(1)) for u in units]
    brackets = {}
    pairing = {}
    for x in units:
        for y in units:
            comm = gl_bracket(N, x, y)
            if comm:
                brackets[(nm[x], nm[y])] = {
                    (nm[u],): Fraction(c) for u, c in comm.items()
                }
            if gl_pairing(x, y):
                pairing[(nm[x], nm[y])] = S_K
    if name is None:
        name = f"gl{N}-star"
    return PoissonPresentation(name, coords, brackets, pairing=pairing)


# ---------------------------------------------------------------------------
# classical BRST reduction


@dataclass(frozen=True)
class Comoment:
    """Ordered basis data of a graded nilpotent acting on a lifted
    presentation: ghost labels, even grades, comoment images, and the
    structure constants [x_i, x_j] = sum_k f^k_ij x_k."""

    labels: tuple
    grades: tuple
    images: tuple
    structure: dict


class ClassicalBRSTComplex(GradedComplex):
    """Jet algebra tensored with ghost pairs, differentiated by the
    character-shifted comoment currents."""

    def __init__(self, pres, d, base, comoment, chi, name=None):
        super().__init__(pres, d, name=name)
        self.base = base
        self.comoment = comoment
        self.chi = tuple(chi)


def _lp_coeffs_equal(a, b):
    powers = set(a.coeffs) | set(b.coeffs)
    return all(a.coeff(n).minus(b.coeff(n)).is_zero() for n in powers)


def classical_brst(p, comoment, chi, name=None):
    """ClassicalBRSTComplex reducing the lifted presentation p along the
    comoment with character chi.

    The comoment must be a vertex Poisson morphism on generators:
    [Phi(x_i) lambda Phi(x_j)] = Phi([x_i, x_j]) with no lambda tail
    (InvalidComoment otherwise).  The differential is

        d = sum_i :Phi(x_i) c_i: - t sum_i chi_i c_i
            - 1/2 sum_{i,j} f^k_ij :b_k c_i c_j:

    with the weight-1 t-dressing keeping the character term homogeneous;
    the colimit t -> 1 is the reduction differential.
    """
    eng = engine_for(p)
    r = len(comoment.labels)
    chi = tuple(Fraction(c) for c in chi)
    if len(chi) != r or len(comoment.grades) != r or len(comoment.images) != r:
        raise OpecalcError("comoment data lengths disagree")
    for i in range(r):
        for j in range(r):
            got = eng.lambda_bracket(comoment.images[i], comoment.images[j])
            el = Element()
            for k in range(r):
                f = comoment.structure.get((i, j, k))
                if f:
                    el.iadd(comoment.images[k], scale=scalar_from_qq(f))
            want = LambdaPoly()
            if not el.is_zero():
                want.add_term(0, el)
            if not _lp_coeffs_equal(got, want):
                raise InvalidComoment(
                    f"comoment is not a vertex Poisson morphism on "
                    f"({comoment.labels[i]}, {comoment.labels[j]})"
                )
    cname = name or f"clbrst-{p.name}"
    if r:
        ggens = []
        gtable = {}
        for s, (label, grade) in enumerate(zip(comoment.labels, comoment.grades)):
            j = Fraction(grade, 2)
            ggens.append(Generator(f"b{label}", 1, 1, -1, Fraction(3, 2) - j))
            ggens.append(Generator(f"c{label}", 1, 0, 1, j - HALF))
            one = LambdaPoly({0: el_term((), S_ONE)})
            gtable[(2 * s, 2 * s + 1)] = one
            gtable[(2 * s + 1, 2 * s)] = LambdaPoly({0: el_term((), S_ONE)})
        gpres = Presentation(
            f"ghosts-{cname}", "ghost", ggens, gtable, classical=True
        )
        pres = tensor(p, gpres, name=cname)
    else:
        pres = Presentation(cname, p.family, p.generators, p.table, classical=True)
    off = len(p.generators)
    eng2 = engine_for(pres)
    d = Element()
    for i in range(r):
        ci = el_gen(off + 2 * i + 1)
        d.iadd(eng2.nth(comoment.images[i], -1, ci))
        if chi[i]:
            d.iadd(ci.scaled(S_T * scalar_from_qq(-chi[i])))
    for (i, j, k), f in sorted(comoment.structure.items()):
        if not f:
            continue
        bk = el_gen(off + 2 * k)
        cij = eng2.nth(el_gen(off + 2 * i + 1), -1, el_gen(off + 2 * j + 1))
        d.iadd(eng2.nth(bk, -1, cij), scale=scalar_from_qq(Fraction(-f, 2)))
    if not d.is_zero():
        if d.ghost(pres) != 1:
            raise OpecalcError("classical BRST differential has mixed ghost degree")
        if d.weight(pres) != 1:
            raise OpecalcError("classical BRST differential is not a weight-1 density")
    return ClassicalBRSTComplex(pres, d, p, comoment, chi, name=cname)


def ds_comoment(p, grading, prefix="J"):
    """Comoment of the positively graded matrix units acting by their
    currents on a jet lift of gl_N^*."""
    labels = []
    grades = []
    images = []
    for (a, b) in grading.positive_pairs:
        labels.append(f"{a}{b}")
        grades.append(grading.grade(a, b))
        images.append(el_gen(p.index[f"{prefix}{a}{b}"]))
    return Comoment(
        labels=tuple(labels),
        grades=tuple(grades),
        images=tuple(images),
        structure=dict(grading.structure_constants_positive()),
    )


def ds_classical_complex(mu, prefix="J"):
    """Classical reduction complex of gl_N along mu, built from the finite
    Poisson data: jet lift of gl_N^* with level term, comoment on the
    positive matrix units, character chi = (f, -)."""
    if not isinstance(mu, PartitionMu):
        mu = PartitionMu(mu)
    grading = GoodGrading(mu)
    hbar = {}
    for a in range(1, mu.N + 1):
        for b in range(1, mu.N + 1):
            g = grading.grade(a, b) if a != b else 0
            hbar[f"{prefix}{a}{b}"] = 1 - Fraction(g, 2)
    lifted = jet_lift(
        gl_star(mu.N, prefix=prefix),
        with_level=True,
        hbar_weights=hbar,
        name=f"cl-gl{mu.N}-{mu}",
    )
    com = ds_comoment(lifted, grading, prefix=prefix)
    chi = [grading.chi(a, b) for (a, b) in grading.positive_pairs]
    cx = classical_brst(lifted, com, chi, name=f"clbrst-gl{mu.N}-{mu}")
    cx.mu = mu
    cx.grading = grading
    return cx


def classical_cohomology_dims(cx, weight_cutoff, margin=1, ghosts=None,
                              euler=True):
    """Weight x ghost table of exact cohomology dimensions of a classical
    complex; same reduction machinery as the quantum tables."""
    an = ComplexAnalysis(cx, weight_cutoff, margin=margin)
    if ghosts is None:
        table = an.table()
    else:
        table = {
            (w, g): an.weight_entry(w, g)
            for w in range(weight_cutoff + 1)
            for g in ghosts
        }
    euler_ok = (
        [an.euler_check(w) for w in range(weight_cutoff + 1)]
        if euler
        else None
    )
    return {
        "name": cx.name,
        "weight_cutoff": weight_cutoff,
        "ghost_rows": sorted({g for (_w, g) in table}),
        "table": table,
        "ghost_zero": [
            table[(w, 0)]
            for w in range(weight_cutoff + 1)
            if (w, 0) in table
        ],
        "ghost_rest_zero": all(
            n == 0 for (w, g), n in table.items() if g != 0
        ),
        "euler_ok": euler_ok,
        "special_levels": sorted(str(s) for s in an.specials),
    }


# ---------------------------------------------------------------------------
# Casimir search and characters


def _flat_coords(el, idx):
    """{basis index: rf} for an element supported on the indexed monomials
    with undressed scalars."""
    vec = {}
    for mono, sc in el.items():
        i = idx.get(mono)
        if i is None:
            raise OpecalcError("element leaves the enumerated basis")
        for (h, t), rf in sc.terms:
            if h or t:
                raise OpecalcError("unexpected scalar dressing in a jet element")
            if rf:
                vec[i] = vec.get(i, RF_ZERO) + rf
    return {i: v for i, v in vec.items() if v}


def casimir_search(p, weight_cutoff, max_length=None):
    """Basis of the vertex Poisson Casimirs {[a] in V/dV : a_(0) = 0} up
    to the weight cutoff.

    Zero modes act by derivations commuting with d, so a_(0) = 0 exactly
    when a_(0) kills every generator, and the condition only depends on
    the class of a modulo total derivatives.  Classes are represented on
    the monomials outside the derivative span; the kernel of the stacked
    adjoint map is returned as formatted elements per weight.
    """
    if not p.classical:
        raise OpecalcError("Casimir search expects a classical presentation")
    eng = engine_for(p)
    charge = 0 if p.exp_idx is not None else None
    dens = [g.conformal_weight.denominator for g in p.generators]
    step = Fraction(1, lcm(*dens)) if dens else Fraction(1)
    specials = set()
    found = []
    w = Fraction(0)
    while w <= weight_cutoff:
        basis = enumerate_basis(p, w, e_charge=charge, max_length=max_length)
        if basis:
            idx = {m: i for i, m in enumerate(basis)}
            dspan = Echelon(specials)
            for m in enumerate_basis(
                p, w - 1, e_charge=charge, max_length=max_length
            ):
                dspan.add(_flat_coords(eng.derive(el_term(m)), idx))
            reps = [i for i in range(len(basis)) if i not in dspan.rows]
            if reps:
                keymap = {}
                span = ColumnSpan(MARKER_BASE, specials)
                for ri in reps:
                    col = {}
                    for gi in range(len(p.generators)):
                        prod = eng.nth(el_term(basis[ri]), 0, el_gen(gi))
                        for mono, sc in sorted(prod.items()):
                            for (h, t), rf in sc.terms:
                                if h or t:
                                    raise OpecalcError(
                                        "unexpected scalar dressing in an "
                                        "adjoint image"
                                    )
                                if not rf:
                                    continue
                                flat = keymap.setdefault(
                                    (gi, mono), len(keymap)
                                )
                                col[flat] = col.get(flat, RF_ZERO) + rf
                    span.add_column({c: v for c, v in col.items() if v})
                for kv in span.kernel():
                    el = Element()
                    for jj, rf in sorted(kv.items()):
                        el.add_term(basis[reps[jj]], scalar_term(0, 0, rf))
                    found.append(
                        {"weight": str(w), "element": format_element(el, p)}
                    )
        w += step
    return {
        "weight_cutoff": weight_cutoff,
        "casimirs": found,
        "count": len(found),
        "special_levels": sorted(str(s) for s in specials),
    }


def graded_character(p, weight_cutoff, length_cutoff=None):
    """Exact graded dimensions [dim V_0, ..., dim V_cutoff] on the integer
    weight grid."""
    charge = 0 if p.exp_idx is not None else None
    return [
        len(
            enumerate_basis(
                p, w, e_charge=charge, max_length=length_cutoff
            )
        )
        for w in range(weight_cutoff + 1)
    ]
