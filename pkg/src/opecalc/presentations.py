"""Presentations: generator lists plus lambda-bracket tables.

A presentation fixes a finite ordered list of generators with gradings and
a table of lambda-brackets between generators.  Table entries are stored as
LambdaPoly values (j-th products, divided-power convention) for ordered
pairs of generator indices; pairs absent from the table bracket to zero.
Tables ship complete (both orders of every nonzero pair), so skew-symmetry
is a real check on the data rather than true by construction.

Lattice-localized presentations carry one exponential family generator e
(last index, e_charge 1).  Its brackets are not table entries: the charge-m
member pairs as [x lambda e^m] = m * pairing[x] * e^m, with the pairing map
and the log-derivative current (the a with D(e^m) = m :a e^m:) recorded on
the presentation.
"""

import json
from dataclasses import dataclass, field
from fractions import Fraction

from .elements import (
    VACUUM,
    Element,
    LambdaPoly,
    el_gen,
    el_term,
    format_element,
    format_lambda_poly,
    parse_element,
)
from .scalars import S_H, S_K, S_ONE, Scalar, format_scalar, parse_scalar

_RESERVED_NAMES = frozenset(("k", "h", "t", "D", "lambda"))


@dataclass(frozen=True)
class Generator:
    name: str
    parity: int = 0
    conformal_weight: Fraction = Fraction(0)
    ghost_degree: int = 0
    hbar_weight: Fraction = Fraction(0)
    e_charge: int = 0

    def __post_init__(self):
        object.__setattr__(self, "conformal_weight", Fraction(self.conformal_weight))
        object.__setattr__(self, "hbar_weight", Fraction(self.hbar_weight))


class Presentation:
    """Immutable-by-convention container for generators and bracket table."""

    def __init__(
        self,
        name,
        family,
        generators,
        table=None,
        classical=False,
        exp_log_name=None,
        exp_pairings=None,
    ):
        self.name = name
        self.family = family
        self.generators = tuple(generators)
        self.classical = bool(classical)
        self._validate_generators()

        self.index = {g.name: i for i, g in enumerate(self.generators)}
        self.parity = tuple(g.parity for g in self.generators)
        self.weight = tuple(g.conformal_weight for g in self.generators)
        self.ghost = tuple(g.ghost_degree for g in self.generators)
        kappa = []
        for g in self.generators:
            two_hw = g.hbar_weight * 2
            if two_hw.denominator != 1:
                raise ValueError(
                    f"generator {g.name!r}: 2*hbar_weight must be an integer"
                )
            kappa.append(int(two_hw))
        self.kappa = tuple(kappa)

        exp_idxs = [i for i, g in enumerate(self.generators) if g.e_charge]
        if len(exp_idxs) > 1:
            raise ValueError("at most one exponential family generator is allowed")
        self.exp_idx = exp_idxs[0] if exp_idxs else None
        if self.exp_idx is not None:
            g = self.generators[self.exp_idx]
            if self.exp_idx != len(self.generators) - 1:
                raise ValueError("the exponential family generator must come last")
            if g.e_charge != 1 or g.parity or g.ghost_degree:
                raise ValueError(
                    "the exponential family generator must be even, ghost 0, "
                    "with e_charge 1"
                )
            if exp_log_name is None:
                raise ValueError(
                    "lattice-localized presentations need exp_log_name (the "
                    "current a with D(e^m) = m :a e^m:)"
                )
            self.exp_log_idx = self.index[exp_log_name]
            self.exp_pairings = {
                self.index[n] if isinstance(n, str) else n: sc
                for n, sc in (exp_pairings or {}).items()
            }
        else:
            if exp_log_name is not None or exp_pairings:
                raise ValueError("exp data given without an exponential generator")
            self.exp_log_idx = None
            self.exp_pairings = {}

        self.table = {}
        for (i, j), lp in (table or {}).items():
            if not isinstance(lp, LambdaPoly):
                raise TypeError("table entries must be LambdaPoly values")
            if lp.is_zero():
                continue
            if not (0 <= i < len(self.generators) and 0 <= j < len(self.generators)):
                raise ValueError(f"table pair {(i, j)} out of range")
            self.table[(i, j)] = lp

    def _validate_generators(self):
        seen = set()
        for g in self.generators:
            if not g.name or not (g.name[0].isalpha() or g.name[0] == "_"):
                raise ValueError(f"invalid generator name {g.name!r}")
            if not all(ch.isalnum() or ch == "_" for ch in g.name):
                raise ValueError(f"invalid generator name {g.name!r}")
            if g.name in _RESERVED_NAMES:
                raise ValueError(f"generator name {g.name!r} is reserved")
            if g.name in seen:
                raise ValueError(f"duplicate generator name {g.name!r}")
            seen.add(g.name)
            if g.parity not in (0, 1):
                raise ValueError(f"generator {g.name!r}: parity must be 0 or 1")

    def n_generators(self):
        return len(self.generators)

    def generator_named(self, name):
        return self.generators[self.index[name]]

    def bracket_entry(self, i, j):
        """Stored table entry for the ordered pair, or None."""
        return self.table.get((i, j))

    # -- serialization ------------------------------------------------------

    def to_json_dict(self):
        gens = [
            {
                "name": g.name,
                "parity": g.parity,
                "weight": str(g.conformal_weight),
                "ghost": g.ghost_degree,
                "hbar_weight": str(g.hbar_weight),
                "e_charge": g.e_charge,
            }
            for g in self.generators
        ]
        brackets = []
        for (i, j) in sorted(self.table):
            lp = self.table[(i, j)]
            terms = [
                {
                    "lambda_power": p,
                    "element": format_element(lp.coeffs[p], self),
                }
                for p in sorted(lp.coeffs)
            ]
            brackets.append(
                {
                    "pair": [self.generators[i].name, self.generators[j].name],
                    "terms": terms,
                }
            )
        out = {
            "name": self.name,
            "family": self.family,
            "classical": self.classical,
            "poisson": self.classical,
            "generators": gens,
            "brackets": brackets,
        }
        if self.exp_idx is not None:
            out["exp"] = {
                "log_current": self.generators[self.exp_log_idx].name,
                "pairings": {
                    self.generators[i].name: format_scalar(sc)
                    for i, sc in sorted(self.exp_pairings.items())
                },
            }
        return out

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True, indent=2)
            fh.write("\n")

    @classmethod
    def from_json_dict(cls, data):
        gens = [
            Generator(
                name=g["name"],
                parity=int(g.get("parity", 0)),
                conformal_weight=Fraction(g.get("weight", 0)),
                ghost_degree=int(g.get("ghost", 0)),
                hbar_weight=Fraction(g.get("hbar_weight", 0)),
                e_charge=int(g.get("e_charge", 0)),
            )
            for g in data["generators"]
        ]
        exp = data.get("exp")
        is_classical = bool(data.get("classical", data.get("poisson", False)))
        shell = cls(
            name=data["name"],
            family=data["family"],
            generators=gens,
            table={},
            classical=is_classical,
            exp_log_name=exp["log_current"] if exp else None,
            exp_pairings=(
                {n: parse_scalar(s) for n, s in exp["pairings"].items()} if exp else None
            ),
        )
        table = {}
        for entry in data.get("brackets", []):
            xn, yn = entry["pair"]
            i, j = shell.index[xn], shell.index[yn]
            lp = LambdaPoly()
            for term in entry["terms"]:
                lp.add_term(
                    int(term["lambda_power"]), parse_element(term["element"], shell)
                )
            table[(i, j)] = lp
        return cls(
            name=data["name"],
            family=data["family"],
            generators=gens,
            table=table,
            classical=is_classical,
            exp_log_name=exp["log_current"] if exp else None,
            exp_pairings=(
                {n: parse_scalar(s) for n, s in exp["pairings"].items()} if exp else None
            ),
        )

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))

    def __repr__(self):
        kind = "classical" if self.classical else "quantum"
        return (
            f"Presentation({self.name!r}, {self.family!r}, {kind}, "
            f"{len(self.generators)} generators)"
        )


# ---------------------------------------------------------------------------
# shipped families

HALF = Fraction(1, 2)


def free_field(n_bg=1, n_bc=0, name=None):
    """Tensor of n_bg beta-gamma pairs and n_bc bc pairs, weights 1/2."""
    gens = []
    for r in range(1, n_bg + 1):
        gens.append(Generator(f"beta{r}", 0, HALF, 0, HALF))
        gens.append(Generator(f"gamma{r}", 0, HALF, 0, HALF))
    for r in range(1, n_bc + 1):
        gens.append(Generator(f"b{r}", 1, HALF, 0, HALF))
        gens.append(Generator(f"c{r}", 1, HALF, 0, HALF))
    table = {}
    one_h = el_term(VACUUM, S_H)
    for r in range(n_bg):
        i, j = 2 * r, 2 * r + 1
        table[(i, j)] = LambdaPoly({0: one_h})
        table[(j, i)] = LambdaPoly({0: one_h.negated()})
    for r in range(n_bc):
        i, j = 2 * n_bg + 2 * r, 2 * n_bg + 2 * r + 1
        table[(i, j)] = LambdaPoly({0: one_h})
        table[(j, i)] = LambdaPoly({0: one_h})
    if name is None:
        name = f"free-bg{n_bg}-bc{n_bc}"
    return Presentation(name, "free-field", gens, table)


def heisenberg(name="heisenberg"):
    """One even weight-1 current with [H lambda H] = lambda h^2."""
    gens = [Generator("H", 0, 1, 0, 1)]
    table = {(0, 0): LambdaPoly({1: el_term(VACUUM, S_H * S_H)})}
    return Presentation(name, "free-field", gens, table)


def _gl_basis(N):
    """Elementary matrices E_ij in row-major order, as index pairs."""
    return [(i, j) for i in range(1, N + 1) for j in range(1, N + 1)]


def gl_bracket(N, a, b):
    """[E_ab, E_cd] structure: returns dict (i,j) -> int coefficient."""
    (a1, a2), (b1, b2) = a, b
    out = {}
    if a2 == b1:
        out[(a1, b2)] = out.get((a1, b2), 0) + 1
    if b2 == a1:
        out[(b1, a2)] = out.get((b1, a2), 0) - 1
    return {k: v for k, v in out.items() if v}


def gl_pairing(a, b):
    """Trace form tr(E_ab E_cd)."""
    (a1, a2), (b1, b2) = a, b
    return 1 if (a2 == b1 and b2 == a1) else 0


def affine_gl(N, hbar_weights=None, name=None):
    """Currents J{i}{j} for gl_N at level k, trace-form pairing.

    hbar_weights optionally overrides the Kazhdan half-degrees per box
    (used when the currents sit inside a reduction complex); default 1.
    """
    basis = _gl_basis(N)
    gens = []
    for (i, j) in basis:
        hw = Fraction(1)
        if hbar_weights is not None:
            hw = Fraction(hbar_weights[(i, j)])
        gens.append(Generator(f"J{i}{j}", 0, 1, 0, hw))
    pos = {box: idx for idx, box in enumerate(basis)}
    table = {}
    h2k = S_H * S_H * S_K
    for x in basis:
        for y in basis:
            lp = LambdaPoly()
            comm = gl_bracket(N, x, y)
            for box, cf in comm.items():
                lp.add_term(0, el_gen(pos[box], S_H * cf))
            pr = gl_pairing(x, y)
            if pr:
                lp.add_term(1, el_term(VACUUM, h2k * pr))
            if not lp.is_zero():
                table[(pos[x], pos[y])] = lp
    if name is None:
        name = f"affine-gl{N}"
    return Presentation(name, "affine", gens, table)


def virasoro(central, name="virasoro"):
    """One even weight-2 current with the Virasoro bracket.

    central is the Scalar c appearing as L_(3) L = (c/2) h^4.
    """
    gens = [Generator("L", 0, 2, 0, 2)]
    h2 = S_H * S_H
    h4 = h2 * h2
    lp = LambdaPoly(
        {
            0: el_term(((0, 1),), h2),
            1: el_gen(0, h2 * 2),
            3: el_term(VACUUM, h4 * central / 2),
        }
    )
    return Presentation(name, "virasoro-like", gens, {(0, 0): lp})


def localized_cdo(n_bg=0, name=None):
    """Localized chiral differential operators: p, a, e^m, and bg pairs.

    p measures lattice charge, a is the log-derivative current with
    D(e^m) = m :a e^m:, and the only nonzero pairings are
    [p lambda a] = lambda h and [p lambda e^m] = m h e^m.
    """
    gens = [
        Generator("p", 0, 1, 0, 1),
        Generator("a", 0, 1, 0, HALF),
    ]
    for r in range(1, n_bg + 1):
        gens.append(Generator(f"beta{r}", 0, HALF, 0, HALF))
        gens.append(Generator(f"gamma{r}", 0, HALF, 0, HALF))
    gens.append(Generator("e", 0, 0, 0, 1, e_charge=1))
    one_h = el_term(VACUUM, S_H)
    table = {
        (0, 1): LambdaPoly({1: one_h}),
        (1, 0): LambdaPoly({1: one_h}),
    }
    for r in range(n_bg):
        i, j = 2 + 2 * r, 3 + 2 * r
        table[(i, j)] = LambdaPoly({0: one_h})
        table[(j, i)] = LambdaPoly({0: one_h.negated()})
    if name is None:
        name = f"localized-cdo-bg{n_bg}" if n_bg else "localized-cdo"
    return Presentation(
        name,
        "lattice-localized",
        gens,
        table,
        exp_log_name="a",
        exp_pairings={"p": S_H},
    )


def tensor(pa, pb, name=None):
    """Tensor product; brackets block-diagonal, generators concatenated."""
    if pa.classical != pb.classical:
        raise ValueError("cannot tensor classical with quantum presentations")
    if pa.exp_idx is not None:
        raise ValueError(
            "exponential factor must be the second tensor factor (its family "
            "generator has to stay last)"
        )
    names_a = {g.name for g in pa.generators}
    for g in pb.generators:
        if g.name in names_a:
            raise ValueError(f"tensor factors share generator name {g.name!r}")
    off = len(pa.generators)
    gens = list(pa.generators) + list(pb.generators)
    table = dict(pa.table)
    for (i, j), lp in pb.table.items():
        shifted = LambdaPoly()
        for p, el in lp.coeffs.items():
            out = Element()
            for mono, sc in el.items():
                out[tuple((idx + off, sub) for idx, sub in mono)] = sc
            shifted.add_term(p, out)
        table[(i + off, j + off)] = shifted
    exp_log_name = None
    exp_pairings = None
    if pb.exp_idx is not None:
        exp_log_name = pb.generators[pb.exp_log_idx].name
        exp_pairings = {
            pb.generators[i].name: sc for i, sc in pb.exp_pairings.items()
        }
    if name is None:
        name = f"{pa.name}*{pb.name}"
    return Presentation(
        name,
        "tensor",
        gens,
        table,
        classical=pa.classical,
        exp_log_name=exp_log_name,
        exp_pairings=exp_pairings,
    )


def builtin_presentation(name):
    """Construct a shipped presentation by CLI name."""
    builders = {
        "bg": lambda: free_field(1, 0),
        "bg2": lambda: free_field(2, 0),
        "bc": lambda: free_field(0, 1),
        "bc2": lambda: free_field(0, 2),
        "bgbc": lambda: free_field(1, 1),
        "bg2bc2": lambda: free_field(2, 2),
        "heisenberg": heisenberg,
        "affine-gl2": lambda: affine_gl(2),
        "affine-gl3": lambda: affine_gl(3),
        "virasoro": lambda: virasoro(S_K),
        "localized-cdo": lambda: localized_cdo(0),
        "localized-cdo-bg1": lambda: localized_cdo(1),
    }
    if name not in builders:
        raise KeyError(
            f"unknown builtin presentation {name!r}; known: "
            + ", ".join(sorted(builders))
        )
    return builders[name]()


BUILTIN_NAMES = (
    "bg",
    "bg2",
    "bc",
    "bc2",
    "bgbc",
    "bg2bc2",
    "heisenberg",
    "affine-gl2",
    "affine-gl3",
    "virasoro",
    "localized-cdo",
    "localized-cdo-bg1",
)
