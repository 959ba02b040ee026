"""Exact sparse multivariate polynomials with rational coefficients.

Variables are identified by integer index.  A term is stored as a tuple of
(variable, power) pairs sorted by variable index; coefficients are
``fractions.Fraction``, so addition, multiplication, differentiation,
substitution and evaluation at rational points are all exact.  Evaluation at
floats or numpy arrays switches to floating arithmetic at the boundary.
"""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational

Monomial = tuple[tuple[int, int], ...]

_RAT_TYPES = (int, Fraction)


def _as_coeff(value):
    if isinstance(value, Rational):
        return Fraction(value)
    raise TypeError(
        f"cannot use {type(value).__name__} as coefficient; the symbolic layer is exact-rational"
    )


class Polynomial:
    """Sparse polynomial  sum_m  c_m * prod_i x_i**e_i  over Q."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms: dict[Monomial, Fraction] = {}
        if terms:
            for mono, coeff in terms.items():
                coeff = Fraction(coeff)
                if coeff != 0:
                    self.terms[mono] = coeff

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero() -> "Polynomial":
        return Polynomial()

    @staticmethod
    def constant(c) -> "Polynomial":
        c = _as_coeff(c)
        return Polynomial({(): c}) if c != 0 else Polynomial()

    @staticmethod
    def variable(i: int) -> "Polynomial":
        if i < 0:
            raise ValueError("variable index must be non-negative")
        return Polynomial({((i, 1),): Fraction(1)})

    @staticmethod
    def monomial(powers: dict[int, int], coeff=1) -> "Polynomial":
        mono = tuple(sorted((i, p) for i, p in powers.items() if p != 0))
        return Polynomial({mono: _as_coeff(coeff)})

    # -- predicates / views ------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def sorted_terms(self):
        """Terms in a canonical (lexicographic-by-monomial) order."""
        return sorted(self.terms.items(), key=lambda kv: kv[0])

    def variables(self) -> set[int]:
        return {i for mono in self.terms for i, _ in mono}

    def degree(self) -> int:
        if not self.terms:
            return 0
        return max(sum(p for _, p in mono) for mono in self.terms)

    def weighted_degrees(self, weight) -> set[int]:
        """Set of weighted total degrees present, with per-variable weight(i)."""
        return {sum(p * weight(i) for i, p in mono) for mono in self.terms}

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        other = other if isinstance(other, Polynomial) else Polynomial.constant(other)
        terms = dict(self.terms)
        for mono, coeff in other.terms.items():
            s = terms.get(mono, Fraction(0)) + coeff
            if s == 0:
                terms.pop(mono, None)
            else:
                terms[mono] = s
        out = Polynomial()
        out.terms = terms
        return out

    __radd__ = __add__

    def __neg__(self):
        out = Polynomial()
        out.terms = {mono: -coeff for mono, coeff in self.terms.items()}
        return out

    def __sub__(self, other):
        other = other if isinstance(other, Polynomial) else Polynomial.constant(other)
        return self + (-other)

    def __rsub__(self, other):
        return Polynomial.constant(other) + (-self)

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            c = _as_coeff(other)
            if c == 0:
                return Polynomial()
            out = Polynomial()
            out.terms = {mono: coeff * c for mono, coeff in self.terms.items()}
            return out
        terms: dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                powers: dict[int, int] = dict(m1)
                for i, p in m2:
                    powers[i] = powers.get(i, 0) + p
                mono = tuple(sorted(powers.items()))
                s = terms.get(mono, Fraction(0)) + c1 * c2
                if s == 0:
                    terms.pop(mono, None)
                else:
                    terms[mono] = s
        out = Polynomial()
        out.terms = terms
        return out

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("polynomial powers must be non-negative integers")
        result = Polynomial.constant(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.terms == other.terms
        if isinstance(other, _RAT_TYPES):
            return self == Polynomial.constant(other)
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    # -- calculus ----------------------------------------------------------

    def partial(self, i: int) -> "Polynomial":
        """Exact partial derivative with respect to variable i."""
        terms: dict[Monomial, Fraction] = {}
        for mono, coeff in self.terms.items():
            powers = dict(mono)
            p = powers.get(i, 0)
            if p == 0:
                continue
            if p == 1:
                del powers[i]
            else:
                powers[i] = p - 1
            new = tuple(sorted(powers.items()))
            terms[new] = terms.get(new, Fraction(0)) + coeff * p
        out = Polynomial()
        out.terms = {m: c for m, c in terms.items() if c != 0}
        return out

    def subs(self, mapping) -> "Polynomial":
        """Substitute variables by polynomials or rational constants.

        ``mapping`` is a dict var -> Polynomial | rational; unmapped
        variables stay themselves.
        """
        table = {}
        for i, v in mapping.items():
            table[i] = v if isinstance(v, Polynomial) else Polynomial.constant(v)
        result = Polynomial()
        for mono, coeff in self.terms.items():
            term = Polynomial.constant(coeff)
            for i, p in mono:
                factor = table.get(i)
                if factor is None:
                    factor = Polynomial.variable(i)
                term = term * factor**p
            result = result + term
        return result

    def evaluate(self, values):
        """Evaluate at a point.

        ``values`` maps variable index to a value (Fraction/int for the exact
        path, float or numpy array for the numeric path).  Exact iff every
        used value is rational.
        """
        exact = all(isinstance(values[i], _RAT_TYPES) for i in self.variables())
        if exact:
            total = Fraction(0)
            for mono, coeff in self.sorted_terms():
                term = coeff
                for i, p in mono:
                    term *= Fraction(values[i]) ** p
                total += term
            return total
        total = 0.0
        for mono, coeff in self.sorted_terms():
            term = float(coeff)
            for i, p in mono:
                term = term * values[i] ** p
            total = total + term
        return total

    # -- presentation ------------------------------------------------------

    def format(self, names) -> str:
        """Human-readable form; ``names`` maps variable index -> string."""
        if self.is_zero:
            return "0"
        parts = []
        for mono, coeff in self.sorted_terms():
            factors = " ".join(
                names(i) if p == 1 else f"{names(i)}^{p}" for i, p in mono
            )
            if not factors:
                parts.append(str(coeff))
            elif coeff == 1:
                parts.append(factors)
            elif coeff == -1:
                parts.append(f"-{factors}")
            else:
                parts.append(f"{coeff} {factors}")
        text = " + ".join(parts)
        return text.replace("+ -", "- ")

    def __repr__(self):
        return f"Polynomial({self.format(lambda i: f'v{i}')})"
