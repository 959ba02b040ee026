"""Validated group specifications and the builtin catalog.

A GroupSpec bundles a validated law with its derived left-invariant frame
and generator fields.  Builtins: ``euclidean(n)``, ``heisenberg`` (R^3,
step 2), ``htype22`` (R^6, H-type with 2-dimensional center, step 2) and
``step3I`` (R^4, step 3).  Builtin laws are stored in the text format and
go through the parser, so the catalog and the DSL can never drift apart.

Note on htype22: the derived frame is the Jacobian frame of the composition
law; the commutator table is exactly what that law induces.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import groups
from .fields import (
    SublaplacianSymbol,
    VectorField,
    derive_left_invariant_fields,
    hormander_rank,
    sublaplacian,
)
from .groupdef import parse_group
from .groups import GroupLaw, StrataShape, validate_group_law

_BUILTIN_SOURCES = {
    "heisenberg": """\
group heisenberg
strata 2 1
Q 3 : -1/2 x1 y2 ; 1/2 x2 y1
""",
    "htype22": """\
group htype22
strata 4 2
# coordinates: x1 x2 x3=y_1 x4=y_2 x5=s_1 x6=s_2
Q 5 : -1/2 x1 y2 ; 1/2 x2 y1 ; -1/2 x3 y4 ; 1/2 x4 y3
Q 6 : 1/2 x1 y3 ; -1/2 x2 y4 ; -1/2 x3 y1 ; 1/2 x4 y2
""",
    "step3I": """\
group step3I
strata 2 1 1
Q 3 : 1/2 x1 y2 ; -1/2 x2 y1
Q 4 : 1/2 x1 y3 ; -1/2 x3 y1 ; 1/12 x1 x1 y2 ; -1/12 x1 x2 y1 ; -1/12 x1 y1 y2 ; 1/12 x2 y1 y1
""",
}


class GroupSpecError(ValueError):
    pass


@dataclass(eq=False)
class GroupSpec:
    """A validated stratified group with its derived invariant frame."""

    name: str
    law: GroupLaw
    jacobian_basis: tuple[VectorField, ...]

    @property
    def shape(self) -> StrataShape:
        return self.law.shape

    @property
    def dim(self) -> int:
        return self.shape.dim

    @property
    def step(self) -> int:
        return self.shape.step

    @property
    def homogeneous_dimension(self) -> int:
        return self.shape.homogeneous_dimension

    @property
    def generators(self) -> tuple[VectorField, ...]:
        return self.jacobian_basis[: self.shape.dims[0]]

    # -- point operations ---------------------------------------------------

    def compose(self, x, y):
        return groups.compose(self.law, x, y)

    def inverse(self, x):
        return groups.inverse(self.law, x)

    def dilate(self, lam, x):
        return groups.dilate(self.shape, lam, x)

    def hom_norm(self, x):
        return groups.hom_norm(self.shape, x)

    def identity(self):
        return groups.identity_point(self.law)

    # -- vectorised numeric paths (used by the grid machinery) --------------

    def compose_arrays(self, x, y):
        """Group product on stacked coordinate arrays of shape (..., d)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        d = self.dim
        values = {i: x[..., i] for i in range(d)}
        values.update({d + i: y[..., i] for i in range(d)})
        out = np.empty(np.broadcast(x[..., 0], y[..., 0]).shape + (d,))
        for j in range(d):
            zj = x[..., j] + y[..., j]
            qj = self.law.q.get(j)
            if qj is not None:
                zj = zj + qj.evaluate(values)
            out[..., j] = zj
        return out

    def inverse_arrays(self, x):
        x = np.asarray(x, dtype=float)
        d = self.dim
        values = {i: x[..., i] for i in range(d)}
        out = np.empty_like(x)
        for j in sorted(range(d), key=self.shape.weight):
            yj = -x[..., j]
            qj = self.law.q.get(j)
            if qj is not None:
                yj = yj - qj.evaluate(values)
            out[..., j] = yj
            values[d + j] = yj
        return out

    def dilate_arrays(self, lam, x):
        x = np.asarray(x, dtype=float)
        scales = np.array([float(lam) ** w for w in self.shape.weights])
        return x * scales

    def hom_norm_arrays(self, x):
        x = np.asarray(x, dtype=float)
        r = self.step
        two_rfact = 2 * math.factorial(r)
        total = np.zeros(x.shape[:-1])
        for k, (a, b) in enumerate(self.shape.stratum_slices(), start=1):
            block_sq = np.sum(x[..., a:b] ** 2, axis=-1)
            total += block_sq ** (two_rfact / (2 * k))
        return total ** (1.0 / two_rfact)

    # -- operators -----------------------------------------------------------

    def sublaplacian(self) -> SublaplacianSymbol:
        return _sublaplacian_of(self)

    def __repr__(self):
        return (
            f"GroupSpec({self.name!r}, d={self.dim}, step={self.step}, "
            f"N={self.homogeneous_dimension})"
        )


@lru_cache(maxsize=None)
def _sublaplacian_of(g: GroupSpec) -> SublaplacianSymbol:
    return sublaplacian(g.generators)


def make_group_spec(name: str, law: GroupLaw, user_generators=None) -> GroupSpec:
    """Validate a law and derive its frame; cross-check supplied generators.

    If generator fields are supplied they must equal the derived ones as
    exact polynomial identities, otherwise the definition is rejected.
    """
    report = validate_group_law(law)
    if not report.ok:
        failed = ", ".join(c.name for c in report.failures())
        raise GroupSpecError(f"group law for {name!r} is invalid: {failed}")
    basis = derive_left_invariant_fields(law)
    d1 = law.shape.dims[0]
    if user_generators is not None:
        supplied = list(user_generators)
        if len(supplied) != d1:
            raise GroupSpecError(
                f"expected {d1} generators for {name!r}, got {len(supplied)}"
            )
        for k, (mine, theirs) in enumerate(zip(basis[:d1], supplied), start=1):
            if mine != theirs:
                raise GroupSpecError(
                    f"supplied generator {k} of {name!r} disagrees with the "
                    f"law-derived field: {theirs.format()} != {mine.format()}"
                )
    rank, achieved = hormander_rank(basis[:d1])
    if rank != law.shape.dim or achieved != law.shape.step:
        raise GroupSpecError(
            f"generators of {name!r} have bracket rank {rank} at step {achieved}; "
            f"expected rank {law.shape.dim} at step {law.shape.step}"
        )
    _check_generator_homogeneity(name, law.shape, basis[:d1])
    return GroupSpec(name, law, tuple(basis))


def _check_generator_homogeneity(name, shape, gens):
    # generator fields have homogeneity one: the coefficient of d_m must be
    # homogeneous of degree weight(m) - 1
    for k, f in enumerate(gens, start=1):
        for m, c in f.coeffs.items():
            degs = c.weighted_degrees(shape.weight)
            want = shape.weight(m) - 1
            if degs and degs != {want}:
                raise GroupSpecError(
                    f"generator {k} of {name!r}: coefficient of d_{m + 1} has "
                    f"weighted degrees {sorted(degs)}, expected {want}"
                )


_EUCLIDEAN_RE = re.compile(r"^euclidean\((\d+)\)$")


def builtin_names() -> list[str]:
    return ["euclidean(n)", *sorted(_BUILTIN_SOURCES)]


@lru_cache(maxsize=None)
def builtin(name: str) -> GroupSpec:
    """Return a validated builtin group by name.

    Accepted: ``euclidean(n)`` for n >= 1, ``heisenberg``, ``htype22``,
    ``step3I``.
    """
    m = _EUCLIDEAN_RE.match(name.replace(" ", ""))
    if m:
        n = int(m.group(1))
        if n < 1:
            raise GroupSpecError("euclidean dimension must be >= 1")
        law = GroupLaw(StrataShape((n,)), {})
        return make_group_spec(name.replace(" ", ""), law)
    source = _BUILTIN_SOURCES.get(name)
    if source is None:
        raise GroupSpecError(
            f"unknown builtin group {name!r}; known: {', '.join(builtin_names())}"
        )
    result = parse_group(source, provenance="builtin")
    if not result.ok:
        raise AssertionError(
            f"builtin source for {name} failed to parse: {result.diagnostics}"
        )
    return make_group_spec(name, result.law)


def load_group(ref: str) -> GroupSpec:
    """Resolve a builtin name or a .group file path to a GroupSpec."""
    try:
        return builtin(ref)
    except GroupSpecError:
        pass
    from pathlib import Path

    path = Path(ref)
    if not path.exists():
        raise GroupSpecError(f"{ref!r} is neither a builtin name nor a file")
    result = parse_group(path.read_text(), provenance=str(path))
    if not result.ok:
        msgs = "\n".join(str(d) for d in result.diagnostics)
        raise GroupSpecError(f"invalid group definition {ref}:\n{msgs}")
    return make_group_spec(result.name or path.stem, result.law)
