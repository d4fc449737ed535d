"""Type-A Lie theory inputs: partitions, pyramids, sl2 triples, gradings,
characters, coroot shifts, and Slodowy-slice weight data.

Conventions, fixed once for the whole package:

* Pyramids are left-justified: row r holds parts[r] boxes in columns
  1..parts[r].  Boxes are labeled column-major (column by column, top to
  bottom inside a column).
* For a row of length m with boxes b_1..b_m, the triple is
      f = sum_c E_{b_{c+1} b_c}            (Jordan blocks, ones)
      e = sum_c c(m-c) E_{b_c b_{c+1}}
      h = diag(m+1-2c on box c)
  so [e,f] = h, [h,e] = 2e, [h,f] = -2f exactly.
* The grading element has entry 2*(c_max + 1 - col(box)) on each box,
  mean-centered; the sign is chosen so that e lies in degree +2 and f in
  degree -2.  All ad-eigenvalues are even integers for the shipped shapes.
* chi(x) = tr(f x), so chi(E_ab) = f_{ba}: value 1 exactly on the
  adjacent transposed-Jordan pairs.

Matrices are dicts {(a, b): Fraction} with 1-based indices, matching the
generator names J{a}{b} of the affine presentations.
"""

from fractions import Fraction

from .errors import NotDominant, OpecalcError

# -- partitions -------------------------------------------------------------


class PartitionMu:
    """Weakly decreasing positive parts summing to N."""

    __slots__ = ("parts", "N")

    def __init__(self, parts):
        parts = tuple(int(p) for p in parts)
        if not parts:
            raise OpecalcError("a partition needs at least one part")
        for p in parts:
            if p <= 0:
                raise OpecalcError(f"partition parts must be positive, got {p}")
        for a, b in zip(parts, parts[1:]):
            if a < b:
                raise OpecalcError(
                    f"partition parts must be weakly decreasing, got {parts}"
                )
        self.parts = parts
        self.N = sum(parts)

    @classmethod
    def parse(cls, text):
        try:
            parts = [int(p) for p in str(text).split(",")]
        except ValueError:
            raise OpecalcError(f"cannot parse partition {text!r}")
        return cls(parts)

    def __eq__(self, other):
        return isinstance(other, PartitionMu) and self.parts == other.parts

    def __hash__(self):
        return hash(self.parts)

    def __repr__(self):
        return f"PartitionMu({list(self.parts)})"

    def __str__(self):
        return ",".join(str(p) for p in self.parts)


class CorootAlpha:
    """Coroot alpha_{i,j} on zero-padded parts: add 1 to part i, subtract 1
    from part j; its length is j - i."""

    __slots__ = ("i", "j")

    def __init__(self, i, j):
        i, j = int(i), int(j)
        if not 1 <= i < j:
            raise OpecalcError(f"coroot indices need 1 <= i < j, got ({i},{j})")
        self.i = i
        self.j = j

    @property
    def length(self):
        return self.j - self.i

    @classmethod
    def parse(cls, text):
        try:
            i, j = (int(p) for p in str(text).split(","))
        except ValueError:
            raise OpecalcError(f"cannot parse coroot {text!r}")
        return cls(i, j)

    def __repr__(self):
        return f"CorootAlpha({self.i},{self.j})"

    def __str__(self):
        return f"{self.i},{self.j}"


def coroot_add(mu, alpha):
    """mu + alpha on zero-padded parts; NotDominant if the result is not a
    partition."""
    if not isinstance(mu, PartitionMu):
        mu = PartitionMu(mu)
    if not isinstance(alpha, CorootAlpha):
        alpha = CorootAlpha(*alpha)
    n = max(len(mu.parts), alpha.j)
    padded = list(mu.parts) + [0] * (n - len(mu.parts))
    padded[alpha.i - 1] += 1
    padded[alpha.j - 1] -= 1
    for a, b in zip(padded, padded[1:]):
        if a < b:
            raise NotDominant(
                f"{mu} + alpha({alpha}) = {padded} is not weakly decreasing"
            )
    if padded[-1] < 0:
        raise NotDominant(f"{mu} + alpha({alpha}) = {padded} has a negative part")
    return PartitionMu([p for p in padded if p > 0])


# -- matrix helpers (dict {(a,b): Fraction}) --------------------------------


def _mat_clean(m):
    return {k: v for k, v in m.items() if v}


def mat_bracket(x, y):
    """[x, y] for matrices as {(a,b): coeff} dicts."""
    out = {}
    for (a, b), xv in x.items():
        for (c, d), yv in y.items():
            if b == c:
                out[(a, d)] = out.get((a, d), Fraction(0)) + xv * yv
            if d == a:
                out[(c, b)] = out.get((c, b), Fraction(0)) - xv * yv
    return _mat_clean(out)


def mat_scale(x, s):
    return _mat_clean({k: v * s for k, v in x.items()})


def mat_sub(x, y):
    out = dict(x)
    for k, v in y.items():
        out[k] = out.get(k, Fraction(0)) - v
    return _mat_clean(out)


# -- pyramids and good gradings ---------------------------------------------


class GoodGrading:
    """sl2 triple, pyramid, grading data, and the structure constants of the
    positively graded subalgebra, for one partition of N."""

    def __init__(self, mu, delta=None):
        if not isinstance(mu, PartitionMu):
            mu = PartitionMu(mu)
        self.mu = mu
        self.N = mu.N
        parts = mu.parts
        cmax = parts[0]
        # column-major box labels; box_pos[label] = (row, col), 1-based
        self.box_pos = {}
        label = 0
        for col in range(1, cmax + 1):
            for row, m in enumerate(parts, start=1):
                if m >= col:
                    label += 1
                    self.box_pos[label] = (row, col)
        rows = {}
        for lab, (row, col) in self.box_pos.items():
            rows.setdefault(row, []).append((col, lab))
        e, f, h = {}, {}, {}
        for row, boxes in rows.items():
            boxes.sort()
            m = len(boxes)
            labs = [lab for _c, lab in boxes]
            for c in range(1, m):
                e[(labs[c - 1], labs[c])] = Fraction(c * (m - c))
                f[(labs[c], labs[c - 1])] = Fraction(1)
            for c in range(1, m + 1):
                val = Fraction(m + 1 - 2 * c)
                if val:
                    h[(labs[c - 1], labs[c - 1])] = val
        self.e, self.f, self.h = e, f, h
        if delta is None:
            raw = {
                lab: Fraction(2 * (cmax + 1 - col))
                for lab, (_row, col) in self.box_pos.items()
            }
            mean = sum(raw.values(), Fraction(0)) / self.N
            delta = {lab: v - mean for lab, v in raw.items()}
        else:
            delta = {lab: Fraction(v) for lab, v in zip(range(1, self.N + 1), delta)}
        self.delta = delta
        self._verify()
        self.positive_pairs = sorted(
            (a, b)
            for a in range(1, self.N + 1)
            for b in range(1, self.N + 1)
            if a != b and self.grade(a, b) > 0
        )

    def grade(self, a, b):
        """ad(grading element) eigenvalue of E_ab."""
        g = self.delta[a] - self.delta[b]
        if g.denominator != 1 or g.numerator % 2:
            raise OpecalcError(
                f"grading eigenvalue of E{a}{b} is {g}, not an even integer"
            )
        return int(g)

    def _verify(self):
        if mat_sub(mat_bracket(self.h, self.e), mat_scale(self.e, 2)):
            raise OpecalcError("[h,e] != 2e for this grading")
        if mat_sub(mat_bracket(self.h, self.f), mat_scale(self.f, -2)):
            raise OpecalcError("[h,f] != -2f for this grading")
        if mat_sub(mat_bracket(self.e, self.f), self.h):
            raise OpecalcError("[e,f] != h for this grading")
        for (a, b) in self.e:
            if self.grade(a, b) != 2:
                raise OpecalcError("e is not concentrated in degree 2")
        for (a, b) in self.f:
            if self.grade(a, b) != -2:
                raise OpecalcError("f is not concentrated in degree -2")

    def graded_pieces(self):
        """Map grade -> sorted list of matrix-unit pairs (a, b); the diagonal
        units all sit in grade 0."""
        pieces = {}
        for a in range(1, self.N + 1):
            for b in range(1, self.N + 1):
                g = self.grade(a, b) if a != b else 0
                pieces.setdefault(g, []).append((a, b))
        return {g: sorted(ps) for g, ps in pieces.items()}

    def structure_constants_positive(self):
        """f^k_{ij} on g_{>0}: [x_i, x_j] = sum_k f^k_{ij} x_k in the
        positive-pair basis."""
        idx = {p: i for i, p in enumerate(self.positive_pairs)}
        consts = {}
        for i, (a, b) in enumerate(self.positive_pairs):
            for j, (c, d) in enumerate(self.positive_pairs):
                br = mat_bracket({(a, b): Fraction(1)}, {(c, d): Fraction(1)})
                for pair, v in br.items():
                    if pair not in idx:
                        raise OpecalcError(
                            "positive part is not closed under brackets"
                        )
                    consts[(i, j, idx[pair])] = v
        return consts

    def chi(self, a, b):
        """chi(E_ab) = tr(f E_ab) = f_{ba}."""
        return self.f.get((b, a), Fraction(0))

    def kazhdan_weight(self, a, b):
        """Kazhdan weight 1 + grade/2 of the slice direction E_ab."""
        return 1 + Fraction(self.grade(a, b) if a != b else 0, 2)


def build_nilpotent(mu, grading_element=None):
    """(f, pyramid box positions, GoodGrading) for a partition."""
    g = GoodGrading(mu, delta=grading_element)
    return g.f, g.box_pos, g


def graded_pieces(g):
    return g.graded_pieces()


def chi_mu(g):
    """The character on positive pairs as a dict {(a,b): Fraction}."""
    return {(a, b): g.chi(a, b) for (a, b) in g.positive_pairs}


def chi_alpha(length):
    """(v_1, ..., v_len) -> v_1 as a coefficient vector."""
    if length < 1:
        raise OpecalcError("chi_alpha needs a positive length")
    return tuple([Fraction(1)] + [Fraction(0)] * (length - 1))


# -- Slodowy slice data -----------------------------------------------------


def slice_coordinates(g):
    """Basis of ker ad_e with grades and Kazhdan weights.

    Returns a list of (matrix dict, grade, weight) with weight = 1 + grade/2,
    echelonized over the row-major matrix-unit order for determinism.
    """
    n = g.N
    units = [(a, b) for a in range(1, n + 1) for b in range(1, n + 1)]
    unit_idx = {u: i for i, u in enumerate(units)}
    # ad_e matrix acting on the unit basis, one column per unit
    cols = []
    for u in units:
        br = mat_bracket(g.e, {u: Fraction(1)})
        col = [Fraction(0)] * len(units)
        for pair, v in br.items():
            col[unit_idx[pair]] = v
        cols.append(col)
    # kernel via Fraction Gaussian elimination on the transpose system
    rows = [[cols[j][i] for j in range(len(units))] for i in range(len(units))]
    basis = _fraction_nullspace(rows, len(units))
    out = []
    for vec in basis:
        mat = _mat_clean({units[i]: v for i, v in enumerate(vec)})
        grades = {g.grade(a, b) if a != b else 0 for (a, b) in mat}
        if len(grades) != 1:
            raise OpecalcError("kernel basis vector is not grade-homogeneous")
        grade = grades.pop()
        out.append((mat, grade, 1 + Fraction(grade, 2)))
    out.sort(key=lambda t: (t[2], sorted(t[0])))
    return out


def _fraction_nullspace(rows, ncols):
    work = [list(r) for r in rows]
    nrows = len(work)
    pivots = []
    r = 0
    for c in range(ncols):
        piv = None
        for i in range(r, nrows):
            if work[i][c]:
                piv = i
                break
        if piv is None:
            continue
        work[r], work[piv] = work[piv], work[r]
        pv = work[r][c]
        work[r] = [x / pv for x in work[r]]
        for i in range(nrows):
            if i != r and work[i][c]:
                fct = work[i][c]
                work[i] = [a - fct * b for a, b in zip(work[i], work[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    pivot_set = set(pivots)
    basis = []
    for fc in range(ncols):
        if fc in pivot_set:
            continue
        v = [Fraction(0)] * ncols
        v[fc] = Fraction(1)
        for i, pc in enumerate(pivots):
            if work[i][fc]:
                v[pc] = -work[i][fc]
        basis.append(v)
    return basis


def kazhdan_weights(mu):
    """Sorted multiset of slice Kazhdan weights for a partition."""
    g = GoodGrading(mu)
    return sorted(w for _m, _g, w in slice_coordinates(g))


# -- character oracles ------------------------------------------------------


def free_character(weights, weight_cutoff):
    """Graded dimensions of a free differential polynomial algebra on even
    generators of the given (positive integer) weights.

    Coefficient list of prod_{w in weights} prod_{n >= 0} (1-q^{w+n})^(-1)
    up to q^weight_cutoff.
    """
    dims = [1] + [0] * weight_cutoff
    for w in weights:
        w = int(w)
        if w <= 0:
            raise OpecalcError("free_character needs positive weights")
        for shift in range(weight_cutoff - w + 1):
            step = w + shift
            # multiply by 1/(1 - q^step)
            for i in range(step, weight_cutoff + 1):
                dims[i] += dims[i - step]
    return dims


def heisenberg_character(n_currents, weight_cutoff):
    """Graded dimensions of a polynomial algebra on n_currents weight-1
    currents and their derivatives: free_character([1]*n)."""
    return free_character([1] * n_currents, weight_cutoff)
