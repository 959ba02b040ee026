"""Power-type nonlinearities F(u) and their derivative bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

KINDS = ("signed_power", "absolute_power")


@dataclass(frozen=True)
class Nonlinearity:
    """F(u) = |u|^(a-1) u (signed_power) or |u|^a (absolute_power), a > 1.

    F(0) = 0; |F(x) - F(y)| <= a |x - y| (|x|^(a-1) + |y|^(a-1)); the j-th
    derivative exists for j <= floor(a) and satisfies |F^(j)| <= C |x|^(a-j).
    """

    kind: str = "signed_power"
    alpha: float = 2.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if not self.alpha > 1:
            raise ValueError("exponent must exceed 1")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "signed_power":
            return np.sign(x) * np.abs(x) ** self.alpha
        return np.abs(x) ** self.alpha

    def derivative(self, j: int):
        """j-th derivative as a callable; valid for 0 <= j <= floor(alpha)."""
        if j < 0 or j > math.floor(self.alpha):
            raise ValueError(f"derivative order {j} outside 0..floor(alpha)")
        if j == 0:
            return self
        a = self.alpha
        factor = math.prod(a - i for i in range(j))
        sign_power = j + 1 if self.kind == "signed_power" else j

        def deriv(x):
            x = np.asarray(x, dtype=float)
            out = factor * np.abs(x) ** (a - j)
            if sign_power % 2 == 1:
                out = out * np.sign(x)
            return out

        return deriv

    def lipschitz_ratio(self, rng, n: int = 2000) -> float:
        """max |F(x)-F(y)| / (|x-y| (|x|^(a-1)+|y|^(a-1))) over samples.

        Bounded by alpha for power nonlinearities.
        """
        xs = rng.normal(scale=2.0, size=n)
        ys = rng.normal(scale=2.0, size=n)
        keep = np.abs(xs - ys) > 1e-9
        xs, ys = xs[keep], ys[keep]
        num = np.abs(self(xs) - self(ys))
        den = np.abs(xs - ys) * (
            np.abs(xs) ** (self.alpha - 1) + np.abs(ys) ** (self.alpha - 1)
        )
        return float(np.max(num / den))

    def holder_ratio(self, rng, n: int = 2000) -> float:
        """Sampled Hoelder constant of the floor(alpha)-th derivative.

        Only meaningful for non-integer alpha, where
        |F^(l)(x) - F^(l)(y)| <= C |x-y|^(alpha-l) with l = floor(alpha).
        """
        l = math.floor(self.alpha)
        if self.alpha == l:
            raise ValueError("Hoelder check applies to non-integer exponents only")
        exponent = self.alpha - l
        d = self.derivative(l)
        xs = rng.normal(scale=2.0, size=n)
        ys = rng.normal(scale=2.0, size=n)
        keep = np.abs(xs - ys) > 1e-9
        xs, ys = xs[keep], ys[keep]
        return float(np.max(np.abs(d(xs) - d(ys)) / np.abs(xs - ys) ** exponent))
