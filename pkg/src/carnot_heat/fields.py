"""First-order differential operators with polynomial coefficients.

Covers the symbolic side of the calculus: applying a field to a polynomial,
commutators, iterated-bracket rank, and assembly of the sublaplacian
-(X_1^2 + ... + X_m^2) as an expanded second-order symbol.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .groups import GroupLaw, StrataShape
from .poly import Polynomial


@dataclass(frozen=True, eq=False)
class VectorField:
    """sum_m  c_m(x) d/dx_m  with polynomial coefficients over d variables."""

    shape: StrataShape
    coeffs: dict[int, Polynomial] = field(default_factory=dict)

    def __post_init__(self):
        for m, p in list(self.coeffs.items()):
            if p.is_zero:
                del self.coeffs[m]

    def coeff(self, m: int) -> Polynomial:
        return self.coeffs.get(m, Polynomial.zero())

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def __eq__(self, other):
        if not isinstance(other, VectorField):
            return NotImplemented
        return self.shape == other.shape and dict(self.coeffs) == dict(other.coeffs)

    def __hash__(self):
        return hash((self.shape, frozenset(self.coeffs.items())))

    def __neg__(self):
        return VectorField(self.shape, {m: -p for m, p in self.coeffs.items()})

    def __add__(self, other):
        if not isinstance(other, VectorField) or other.shape != self.shape:
            return NotImplemented
        coeffs = dict(self.coeffs)
        for m, p in other.coeffs.items():
            coeffs[m] = coeffs.get(m, Polynomial.zero()) + p
        return VectorField(self.shape, coeffs)

    def __sub__(self, other):
        return self + (-other)

    def apply(self, u: Polynomial) -> Polynomial:
        """Exact action  sum_m c_m * du/dx_m."""
        out = Polynomial.zero()
        for m, c in self.coeffs.items():
            out = out + c * u.partial(m)
        return out

    def value_at_zero(self):
        """Coefficient vector at x = 0 (a tuple of Fractions)."""
        zero = {i: 0 for i in range(self.shape.dim)}
        return tuple(
            Fraction(self.coeff(m).subs(zero).terms.get((), Fraction(0)))
            for m in range(self.shape.dim)
        )

    def format(self, names=None) -> str:
        names = names or (lambda i: f"x{i + 1}")
        if self.is_zero:
            return "0"
        parts = []
        for m in sorted(self.coeffs):
            c = self.coeffs[m]
            ctext = c.format(names)
            if ctext == "1":
                parts.append(f"d_{m + 1}")
            elif ctext == "-1":
                parts.append(f"-d_{m + 1}")
            elif ("+" in ctext) or (" - " in ctext):
                parts.append(f"({ctext}) d_{m + 1}")
            else:
                parts.append(f"{ctext} d_{m + 1}")
        return " + ".join(parts).replace("+ -", "- ")

    def __repr__(self):
        return f"VectorField({self.format()})"


def bracket(f: VectorField, g: VectorField) -> VectorField:
    """Commutator [f, g] = fg - gf as a first-order field.

    Second-order terms cancel identically for true vector fields, so the
    coefficient of d/dx_m is f(g_m) - g(f_m).
    """
    if f.shape != g.shape:
        raise ValueError("bracket of fields over different shapes")
    coeffs = {}
    for m in set(f.coeffs) | set(g.coeffs):
        c = f.apply(g.coeff(m)) - g.apply(f.coeff(m))
        if not c.is_zero:
            coeffs[m] = c
    return VectorField(f.shape, coeffs)


def derive_left_invariant_fields(law: GroupLaw) -> list[VectorField]:
    """Left-invariant frame from the group law.

    Field k is column k of the Jacobian of y -> x . y at y = 0:
    the coefficient of d/dx_m is delta_mk + dQ_m/dy_k |_{y=0}, a polynomial
    in x alone.  The first d_1 fields are the generators.
    """
    d = law.shape.dim
    zero_y = {d + i: 0 for i in range(d)}
    fields = []
    for k in range(d):
        coeffs = {k: Polynomial.constant(1)}
        for m, q in law.q.items():
            c = q.partial(d + k).subs(zero_y)
            if not c.is_zero:
                coeffs[m] = coeffs.get(m, Polynomial.zero()) + c
        fields.append(VectorField(law.shape, coeffs))
    return fields


def _rational_rank(rows) -> int:
    """Rank over Q by exact Gaussian elimination."""
    mat = [list(map(Fraction, row)) for row in rows]
    if not mat:
        return 0
    ncols = len(mat[0])
    rank, pivot_row = 0, 0
    for col in range(ncols):
        pivot = next(
            (r for r in range(pivot_row, len(mat)) if mat[r][col] != 0), None
        )
        if pivot is None:
            continue
        mat[pivot_row], mat[pivot] = mat[pivot], mat[pivot_row]
        pr = mat[pivot_row]
        for r in range(len(mat)):
            if r != pivot_row and mat[r][col] != 0:
                factor = mat[r][col] / pr[col]
                mat[r] = [a - factor * b for a, b in zip(mat[r], pr)]
        pivot_row += 1
        rank += 1
        if rank == ncols:
            break
    return rank


def hormander_rank(generators: list[VectorField]) -> tuple[int, int]:
    """(rank, achieved_step) of the iterated-bracket span at the origin.

    Brackets the generators against the previous layer until the span of all
    values at 0 saturates; for a valid stratified group the rank equals the
    ambient dimension and the step equals the number of strata.  Evaluating
    at the single point 0 is enough for dilation-homogeneous frames.
    """
    if not generators:
        raise ValueError("no generators supplied")
    d = generators[0].shape.dim
    layers = [list(generators)]
    vectors = [f.value_at_zero() for f in generators]
    rank = _rational_rank(vectors)
    achieved = 1
    step = 1
    while rank < d and step < d:
        new_layer = []
        for g in generators:
            for h in layers[-1]:
                b = bracket(g, h)
                if not b.is_zero:
                    new_layer.append(b)
        step += 1
        if not new_layer:
            break
        layers.append(new_layer)
        vectors.extend(f.value_at_zero() for f in new_layer)
        new_rank = _rational_rank(vectors)
        if new_rank > rank:
            rank = new_rank
            achieved = step
        else:
            break
    return rank, achieved


@dataclass(frozen=True, eq=False)
class SublaplacianSymbol:
    """Expanded form of -(X_1^2 + ... + X_m^2).

    ``second`` maps (m, n) with m <= n to the coefficient of d^2/dx_m dx_n
    (off-diagonal entries already include both orderings); ``first`` maps m
    to the coefficient of d/dx_m.
    """

    shape: StrataShape
    generators: tuple[VectorField, ...]
    second: dict[tuple[int, int], Polynomial]
    first: dict[int, Polynomial]

    def apply(self, u: Polynomial) -> Polynomial:
        out = Polynomial.zero()
        for (m, n), c in self.second.items():
            out = out + c * u.partial(m).partial(n)
        for m, c in self.first.items():
            out = out + c * u.partial(m)
        return out

    def apply_factored(self, u: Polynomial) -> Polynomial:
        """-sum X_i(X_i u); must agree with apply() identically."""
        out = Polynomial.zero()
        for x in self.generators:
            out = out - x.apply(x.apply(u))
        return out


def sublaplacian(generators) -> SublaplacianSymbol:
    """Assemble the expanded symbol of -(sum_i X_i^2).

    X_i^2 u = sum_{m,n} c_m c_n d_m d_n u + sum_n (X_i c_n) d_n u, so the
    second-order coefficient of (m, n), m <= n, collects c_m c_n from both
    orderings and the first-order part is sum_i X_i applied to each of its
    own coefficients.
    """
    generators = tuple(generators)
    if not generators:
        raise ValueError("no generators supplied")
    shape = generators[0].shape
    second: dict[tuple[int, int], Polynomial] = {}
    first: dict[int, Polynomial] = {}
    for x in generators:
        items = sorted(x.coeffs.items())
        for ai, (m, cm) in enumerate(items):
            for n, cn in items[ai:]:
                key = (m, n)
                prod = cm * cn
                if m != n:
                    prod = prod * 2
                second[key] = second.get(key, Polynomial.zero()) - prod
        for n, cn in items:
            c = x.apply(cn)
            if not c.is_zero:
                first[n] = first.get(n, Polynomial.zero()) - c
    second = {k: p for k, p in second.items() if not p.is_zero}
    first = {k: p for k, p in first.items() if not p.is_zero}
    return SublaplacianSymbol(shape, generators, second, first)
