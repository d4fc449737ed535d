"""Exact linear algebra over the rational function field QQ(k).

Dense Gauss-Jordan with deterministic pivoting: columns are scanned left to
right and the pivot is the first row with a nonzero entry, so the reduced
echelon form (and every quantity derived from it) is reproducible across
runs and platforms.

Elimination can track "special levels": rational values of k at which a
pivot numerator or denominator vanishes.  A generic-rank statement proved
by the elimination is guaranteed only away from those levels.
"""

from .scalars import RF_ONE, RF_ZERO, polyk_rational_roots


def mat_rref(rows, ncols, specials=None):
    """Reduced row echelon form.

    Returns (reduced nonzero rows, pivot column list).  If specials is a
    set, rational roots of pivot numerators and denominators are added to
    it as Fractions.
    """
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
        if piv != r:
            work[r], work[piv] = work[piv], work[r]
        pv = work[r][c]
        if specials is not None:
            specials.update(polyk_rational_roots(pv.num))
            specials.update(polyk_rational_roots(pv.den))
        inv = pv.inverse()
        work[r] = [x * inv if x else x for x in work[r]]
        rowr = work[r]
        for i in range(nrows):
            if i != r and work[i][c]:
                f = work[i][c]
                rowi = work[i]
                work[i] = [
                    a - f * b if b else a for a, b in zip(rowi, rowr)
                ]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return work[:r], pivots


def mat_rank(rows, ncols, specials=None):
    _, pivots = mat_rref(rows, ncols, specials)
    return len(pivots)


def mat_nullspace(rows, ncols, specials=None):
    """Canonical kernel basis: one vector per free column, in column order,
    with entry 1 at its free column."""
    red, pivots = mat_rref(rows, ncols, specials)
    pivot_set = set(pivots)
    basis = []
    for fc in range(ncols):
        if fc in pivot_set:
            continue
        v = [RF_ZERO] * ncols
        v[fc] = RF_ONE
        for i, pc in enumerate(pivots):
            entry = red[i][fc]
            if entry:
                v[pc] = -entry
        basis.append(v)
    return basis


def reduce_vector(red, pivots, vec):
    """Reduce vec against reduced echelon rows; the residual is zero iff
    vec lies in their span."""
    v = list(vec)
    for i, pc in enumerate(pivots):
        f = v[pc]
        if f:
            rowi = red[i]
            v = [a - f * b if b else a for a, b in zip(v, rowi)]
    return v


def in_span(red, pivots, vec):
    return not any(reduce_vector(red, pivots, vec))


def mat_solve(rows, rhs, ncols, specials=None):
    """One solution of A x = b with free variables set to zero, or None if
    the system is inconsistent."""
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    red, pivots = mat_rref(aug, ncols + 1, specials)
    if ncols in pivots:
        return None
    x = [RF_ZERO] * ncols
    for i, pc in enumerate(pivots):
        x[pc] = red[i][ncols]
    return x


def span_dim_modulo(vecs, modulo_red, modulo_pivots, ncols):
    """Dimension of span(vecs) inside the quotient by an echelonized
    subspace."""
    residuals = [reduce_vector(modulo_red, modulo_pivots, v) for v in vecs]
    return mat_rank(residuals, ncols)


# ---------------------------------------------------------------------------
# sparse echelon forms
#
# Vectors are dicts {column index: nonzero RatFuncK}.  The pivot of a row is
# its smallest column index.  Rows are triangular but not fully reduced
# against each other: skipping the back-substitution keeps insertion cheap,
# which matters because spans here grow to hundreds of rows over QQ(k).
# Insertion order never changes rank, membership, or pivot sets, so
# everything stays deterministic without materializing dense matrices.


class Echelon:
    """Incrementally built sparse triangular basis of a span."""

    def __init__(self, specials=None):
        self.rows = {}  # pivot column -> row dict (pivot coefficient 1)
        self.specials = specials

    @property
    def rank(self):
        return len(self.rows)

    def reduce(self, vec):
        """Residual of vec modulo the span; {} iff vec lies in it.

        Eliminating the smallest column only ever introduces larger ones,
        so iterate on the running minimum; columns without a pivot row are
        final and collect into the residual.
        """
        v = {c: x for c, x in vec.items() if x}
        out = {}
        while v:
            c = min(v)
            f = v.pop(c)
            row = self.rows.get(c)
            if row is None:
                out[c] = f
                continue
            for c2, x in row.items():
                if c2 == c:
                    continue
                nv = v.get(c2, RF_ZERO) - f * x
                if nv:
                    v[c2] = nv
                else:
                    v.pop(c2, None)
        return out

    def add(self, vec):
        """Adjoin vec; returns the normalized new row, or None if vec was
        already in the span."""
        r = self.reduce(vec)
        if not r:
            return None
        p = min(r)
        pv = r[p]
        if self.specials is not None:
            self.specials.update(polyk_rational_roots(pv.num))
            self.specials.update(polyk_rational_roots(pv.den))
        inv = pv.inverse()
        row = {c: x * inv for c, x in r.items()}
        self.rows[p] = row
        return row

    def contains(self, vec):
        return not self.reduce(vec)


class ColumnSpan:
    """Sparse column span with combination tracking.

    Columns live on indices < ndst; each added column j is augmented by a
    marker at ndst + j.  Rows whose pivot lands in the marker block encode
    kernel relations; solving expresses a right-hand side as a combination
    of the added columns.
    """

    def __init__(self, ndst, specials=None):
        self.ndst = ndst
        self.ech = Echelon(specials)
        self.nsrc = 0

    def add_column(self, col):
        aug = {c: x for c, x in col.items() if x}
        aug[self.ndst + self.nsrc] = RF_ONE
        self.ech.add(aug)
        self.nsrc += 1

    def rank(self):
        """Rank of the column map (marker-pivot rows are relations)."""
        return sum(1 for p in self.ech.rows if p < self.ndst)

    def kernel(self):
        """Kernel vectors as dicts {source index: rf}, pivot-normalized,
        ordered by their leading source index."""
        out = []
        for p in sorted(self.ech.rows):
            if p < self.ndst:
                continue
            row = self.ech.rows[p]
            out.append({c - self.ndst: x for c, x in row.items()})
        return out

    def solve(self, rhs):
        """{j: x_j} with sum x_j col_j = rhs, or None if unsolvable."""
        r = self.ech.reduce({c: x for c, x in rhs.items() if x})
        if any(c < self.ndst for c in r):
            return None
        return {c - self.ndst: -x for c, x in r.items()}


def echelon_copy(ech):
    """Independent copy of an Echelon (shared specials set)."""
    out = Echelon(ech.specials)
    out.rows = {p: dict(r) for p, r in ech.rows.items()}
    return out
