"""Fractional powers by subordination, Sobolev norms, inequality checks.

Powers of L and Id+L are quadratures over the heat semigroup:

    M^(-s) f = 1/Gamma(s)   * int nu^(s-1)  [e^-nu] e^(-nu L) f dnu
    M^(+s) f = 1/Gamma(k-s) * int nu^(k-s-1) M^k [e^-nu] e^(-nu L) f dnu

with k = floor(s)+1 and the e^-nu factor present for M = Id+L.  The nodes
are log-spaced and share one incremental semigroup sweep; below the first
node the integrand is replaced by its nu -> 0 limit, which contributes a
closed-form head term.  On the truncated grid the operator spectrum is
bounded away from zero, so the homogeneous integrals converge; a warning
fires when a boundary node still carries more than 1% of the answer.

The inequality checks (embedding, interpolation, product and composition
rules, nonlinear norm control) all report ratio families: the theory fixes
the exponents but not the constants, so boundedness and spread are the
testable content.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .catalog import GroupSpec
from .grid import Grid, GridFunction, lp_norm, sublaplacian_operator
from .heat import HeatPropagator, PropagatorConfig
from .nonlin import Nonlinearity


class QuadratureRangeWarning(UserWarning):
    pass


class ParameterError(ValueError):
    pass


SWEEP_CONFIG = PropagatorConfig(integrator="expm")


@dataclass(frozen=True)
class SubordinationRule:
    """Log-spaced quadrature for one fractional power."""

    exponent: float
    nodes: tuple[float, ...]
    log_weights: tuple[float, ...]  # trapezoid weights in log nu (d tau)

    @staticmethod
    def make(s: float, n_nodes: int = 60, nu_min: float = 1e-4, nu_max: float = 30.0):
        if not nu_min < nu_max:
            raise ValueError("need nu_min < nu_max")
        if abs(s) > 4:
            raise ValueError("exponent outside the validated range |s| <= 4")
        nodes = np.geomspace(nu_min, nu_max, n_nodes)
        dtau = math.log(nu_max / nu_min) / (n_nodes - 1)
        w = np.full(n_nodes, dtau)
        w[0] *= 0.5
        w[-1] *= 0.5
        return SubordinationRule(float(s), tuple(nodes), tuple(w))

    @property
    def k(self) -> int:
        """Semigroup-derivative order for the positive branch."""
        return math.floor(self.exponent) + 1

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.nodes, self.nodes[1:])):
            raise ValueError("nodes must be strictly increasing")
        if self.exponent > 0 and not self.k > self.exponent:
            raise ValueError("positive branch requires k > s")


def frac_power_block(
    g: GroupSpec,
    grid: Grid,
    fs,
    s: float,
    inhomogeneous: bool = False,
    rule: SubordinationRule | None = None,
    config: PropagatorConfig | None = None,
) -> list[GridFunction]:
    """Apply L^s (or (Id+L)^s) to several fields with one shared sweep.

    The semigroup evaluations e^(-nu L) are the expensive part, so all
    columns ride the same incremental evolution.  The sweep stops early
    once the integrand tail is negligible for every column.
    """
    fs = list(fs)
    if not fs:
        return []
    if s == 0:
        return [f.copy() for f in fs]
    rule = rule or SubordinationRule.make(s)
    if rule.exponent != s:
        raise ValueError("rule exponent does not match s")
    config = config or SWEEP_CONFIG
    prop = HeatPropagator(g, grid, config)
    lmat = prop.matrix
    n = grid.size

    def op_power(mat, k):
        out = mat
        for _ in range(k):
            out = (lmat @ out) + (out if inhomogeneous else 0.0)
        return out

    sigma = abs(s)
    k = rule.k if s > 0 else 0
    gamma = math.gamma(k - s) if s > 0 else math.gamma(sigma)

    block = np.stack([f.values.reshape(-1) for f in fs], axis=1).astype(float)
    acc = np.zeros_like(block)
    first_contrib = None
    last_contrib = None
    prev = 0.0
    small_streak = 0
    v = block.copy()
    for nu, w in zip(rule.nodes, rule.log_weights):
        v, _ = prop._run_segment(v, prev, nu, None, 0)
        prev = nu
        if s > 0:
            term = op_power(v, k) * nu ** (k - s - 1)
        else:
            term = v * nu ** (sigma - 1)
        if inhomogeneous:
            term = term * math.exp(-nu)
        term = term * (w * nu)  # trapezoid in log nu
        acc += term
        contrib = np.linalg.norm(term, axis=0)
        last_contrib = contrib
        if first_contrib is None:
            first_contrib = contrib
        # once the integrand tail is uniformly negligible, later nodes
        # cannot matter (the integrand is decreasing there)
        totals = np.linalg.norm(acc, axis=0)
        if nu > 1.0 and np.all(contrib <= 1e-6 * np.maximum(totals, 1e-300)):
            small_streak += 1
            if small_streak >= 2:
                last_contrib = contrib
                break
        else:
            small_streak = 0

    # head of the integral: on [0, nu_min] the semigroup is close to the
    # identity, so the integrand limit gives a closed-form contribution
    nu0 = rule.nodes[0]
    if s > 0:
        acc += op_power(block, k) * nu0 ** (k - s) / (k - s)
    else:
        acc += block * nu0**sigma / sigma

    totals = np.linalg.norm(acc, axis=0)
    safe = np.maximum(totals, 1e-300)
    sides = [("lower", first_contrib)]
    if small_streak < 2:  # ran to the last node without the tail dying
        sides.append(("upper", last_contrib))
    for side, contrib in sides:
        worst = float(np.max(contrib / safe))
        if worst > 0.01:
            warnings.warn(
                f"{side} quadrature node carries {worst:.1%} of the integral; "
                "widen the node range",
                QuadratureRangeWarning,
                stacklevel=2,
            )
    acc /= gamma
    return [GridFunction(grid, acc[:, i].reshape(grid.npoints)) for i in range(len(fs))]


def frac_power(
    g: GroupSpec,
    grid: Grid,
    f: GridFunction,
    s: float,
    inhomogeneous: bool = False,
    rule: SubordinationRule | None = None,
    config: PropagatorConfig | None = None,
) -> GridFunction:
    """Apply L^s (or (Id+L)^s with ``inhomogeneous``) by subordination.

    s = 0 returns a copy; see frac_power_block for the shared-sweep form.
    """
    if s == 0:
        return f.copy()
    (out,) = frac_power_block(g, grid, [f], s, inhomogeneous, rule, config)
    return out


@dataclass(frozen=True)
class SobolevNormReport:
    lp: float
    homogeneous: float  # ||L^(s/2) f||_p
    inhomogeneous: float  # ||(Id+L)^(s/2) f||_p
    surrogate: float  # ||f||_p + ||L^(s/2) f||_p
    equivalence_ratio: float  # inhomogeneous / surrogate


def sobolev_norm(
    g: GroupSpec,
    grid: Grid,
    f: GridFunction,
    s: float,
    p,
    rule: SubordinationRule | None = None,
    config: PropagatorConfig | None = None,
) -> SobolevNormReport:
    """Fractional Sobolev norms of order s plus the equivalence diagnostic."""
    base = lp_norm(f, p)
    if s == 0:
        return SobolevNormReport(base, base, base, 2 * base, 0.5 if base else float("nan"))
    half = s / 2
    hom = lp_norm(frac_power(g, grid, f, half, False, rule, config), p)
    inhom = lp_norm(frac_power(g, grid, f, half, True, rule, config), p)
    surrogate = base + hom
    ratio = inhom / surrogate if surrogate > 0 else float("nan")
    return SobolevNormReport(base, hom, inhom, surrogate, ratio)


def inhomogeneous_norm(g, grid, f, s, p, config=None) -> float:
    """||f||_{L^p_s} = ||(Id+L)^(s/2) f||_p, any sign of s."""
    if s == 0:
        return lp_norm(f, p)
    return lp_norm(frac_power(g, grid, f, s / 2, True, None, config), p)


def homogeneous_norm(g, grid, f, s, p, config=None) -> float:
    if s == 0:
        return lp_norm(f, p)
    return lp_norm(frac_power(g, grid, f, s / 2, False, None, config), p)


def inhomogeneous_norms(g, grid, fs, s, p, config=None) -> list[float]:
    """Block form of inhomogeneous_norm (one shared semigroup sweep)."""
    if s == 0:
        return [lp_norm(f, p) for f in fs]
    return [
        lp_norm(v, p)
        for v in frac_power_block(g, grid, fs, s / 2, True, None, config)
    ]


def homogeneous_norms(g, grid, fs, s, p, config=None) -> list[float]:
    if s == 0:
        return [lp_norm(f, p) for f in fs]
    return [
        lp_norm(v, p)
        for v in frac_power_block(g, grid, fs, s / 2, False, None, config)
    ]


# ---------------------------------------------------------------------------
# ratio-family checks


@dataclass
class RatioFamily:
    name: str
    params: dict
    ratios: list[float] = field(default_factory=list)
    skipped: int = 0

    @property
    def spread(self) -> float:
        vals = [r for r in self.ratios if np.isfinite(r) and r > 0]
        return max(vals) / min(vals) if vals else float("nan")

    @property
    def max_ratio(self) -> float:
        return max(self.ratios) if self.ratios else float("nan")

    @property
    def all_finite(self) -> bool:
        return bool(self.ratios) and all(np.isfinite(r) for r in self.ratios)


def embedding_check(g, grid, p, q, b, family, config=None) -> RatioFamily:
    """Critical-index inclusion: ||f||_{L^q_a} <= C ||f||_{L^p_b}.

    a = b - N (1/p - 1/q) must be non-negative.
    """
    if not (1 < p < q < np.inf):
        raise ParameterError("need 1 < p < q < inf")
    n_hom = g.homogeneous_dimension
    a = b - n_hom * (1 / p - 1 / q)
    if a < -1e-12:
        raise ParameterError(f"derived lower index a = {a:.3g} is negative")
    a = max(a, 0.0)
    out = RatioFamily("embedding", {"p": p, "q": q, "b": b, "a": a})
    family = list(family)
    lows = inhomogeneous_norms(g, grid, family, a, q, config)
    highs = inhomogeneous_norms(g, grid, family, b, p, config)
    for lo, hi in zip(lows, highs):
        if hi < 1e-300:
            raise FloatingPointError("norm underflow in embedding denominator")
        out.ratios.append(lo / hi)
    return out


def embedding_sup_check(g, grid, p, s, family, config=None) -> RatioFamily:
    """Supremum-norm inclusion for s above the critical index N/p."""
    if not s > g.homogeneous_dimension / p:
        raise ParameterError("sup-norm inclusion needs s > N/p")
    out = RatioFamily("embedding-sup", {"p": p, "s": s})
    family = list(family)
    denoms = inhomogeneous_norms(g, grid, family, s, p, config)
    for f, denom in zip(family, denoms):
        if denom < 1e-300:
            raise FloatingPointError("norm underflow")
        out.ratios.append(lp_norm(f, np.inf) / denom)
    return out


def gn_check(g, grid, alpha, p, q, theta, family, config=None) -> RatioFamily:
    """Interpolation bound for ||f|| in the intermediate homogeneous norm.

    gamma = theta * alpha and 1/r = theta/p + (1-theta)/q, the unique
    exponent for which both sides scale identically under dilations; ratios
    of ||f||_{hom, r, gamma} against
    ||f||_{hom, p, alpha}^theta ||f||_q^(1-theta).
    """
    if not (0 < theta <= 1):
        raise ParameterError("need 0 < theta <= 1")
    if not (alpha > 0 and 1 < p < np.inf):
        raise ParameterError("need alpha > 0 and 1 < p < inf")
    gamma = theta * alpha
    inv_q = 0.0 if q in (np.inf, "inf") else 1.0 / float(q)
    r = 1.0 / (theta / p + (1 - theta) * inv_q)
    out = RatioFamily("gagliardo-nirenberg", {"alpha": alpha, "p": p, "q": q, "theta": theta, "gamma": gamma, "r": r})
    live = [f for f in family if np.any(f.values)]
    out.skipped = len(list(family)) - len(live)
    mids = homogeneous_norms(g, grid, live, gamma, r, config)
    highs = homogeneous_norms(g, grid, live, alpha, p, config)
    for f, lhs, hi in zip(live, mids, highs):
        rhs = hi**theta * lp_norm(f, q) ** (1 - theta)
        if rhs < 1e-300:
            raise FloatingPointError("norm underflow in interpolation denominator")
        out.ratios.append(lhs / rhs)
    return out


def leibniz_check(g, grid, s, exponents, pairs, config=None) -> RatioFamily:
    """Product rule in the fractional scale.

    exponents = (r, p1, q1, p2, q2) with 1/r = 1/p_i + 1/q_i; ratios of
    ||f g||_{hom, r, s} against ||f||_{p1} ||g||_{hom, q1, s} +
    ||g||_{q2} ||f||_{hom, p2, s}.
    """
    r, p1, q1, p2, q2 = exponents
    for inv in (abs(1 / r - 1 / p1 - 1 / q1), abs(1 / r - 1 / p2 - 1 / q2)):
        if inv > 1e-9:
            raise ParameterError("exponents must satisfy 1/r = 1/p_i + 1/q_i")
    out = RatioFamily("leibniz", {"s": s, "r": r, "p1": p1, "q1": q1, "p2": p2, "q2": q2})
    live = [(f, h) for f, h in pairs if np.any(f.values) and np.any(h.values)]
    out.skipped = len(list(pairs)) - len(live)
    if not live:
        return out
    products = [GridFunction(grid, f.values * h.values) for f, h in live]
    # one sweep covers products, left and right factors (same exponent s/2)
    stacked = products + [h for _, h in live] + [f for f, _ in live]
    powered = frac_power_block(g, grid, stacked, s / 2, False, None, config) if s else stacked
    m = len(live)
    for i, (f, h) in enumerate(live):
        lhs = lp_norm(powered[i], r)
        rhs = lp_norm(f, p1) * lp_norm(powered[m + i], q1) + lp_norm(h, q2) * lp_norm(
            powered[2 * m + i], p2
        )
        if rhs < 1e-300:
            raise FloatingPointError("norm underflow in product-rule denominator")
        out.ratios.append(lhs / rhs)
    return out


def chain_rule_check(g, grid, alpha, delta, p, q, r, family, nonlinearity=None, config=None) -> RatioFamily:
    """Composition rule: ||L^(d/2) F(u)||_p <= C ||u||_r^(a-1) ||L^(d/2) u||_q."""
    if abs(1 / p - (alpha - 1) / r - 1 / q) > 1e-9:
        raise ParameterError("exponents must satisfy 1/p = (alpha-1)/r + 1/q")
    if not (0 <= delta <= math.floor(alpha)):
        raise ParameterError("need 0 <= delta <= floor(alpha)")
    nl = nonlinearity or Nonlinearity("signed_power", alpha)
    out = RatioFamily("chain-rule", {"alpha": alpha, "delta": delta, "p": p, "q": q, "r": r, "kind": nl.kind})
    live = [u for u in family if np.any(u.values)]
    out.skipped = len(list(family)) - len(live)
    if not live:
        return out
    composed = [GridFunction(grid, nl(u.values)) for u in live]
    stacked = composed + live
    powered = (
        frac_power_block(g, grid, stacked, delta / 2, False, None, config)
        if delta
        else stacked
    )
    m = len(live)
    for i, u in enumerate(live):
        lhs = lp_norm(powered[i], p)
        rhs = lp_norm(u, r) ** (alpha - 1) * lp_norm(powered[m + i], q)
        if rhs < 1e-300:
            raise FloatingPointError("norm underflow in chain-rule denominator")
        out.ratios.append(lhs / rhs)
    return out


@dataclass(frozen=True)
class CompositionExponents:
    """Derived indices for the nonlinear norm-control estimate."""

    n_hom: int
    p: float
    alpha: float
    s: float

    @property
    def s_alpha(self) -> float:
        return self.s - (self.alpha - 1) * (self.n_hom / self.p - self.s)

    @property
    def regime(self) -> str:
        if not (self.s >= 0 and self.n_hom / self.p - self.n_hom / self.alpha < self.s < self.n_hom / self.p):
            return "invalid"
        sa = self.s_alpha
        if sa <= 0:
            return "N1"
        if sa < self.alpha - 1:
            return "N2"
        return "invalid"


def theorem2_exponents(g: GroupSpec, alpha, p, s) -> CompositionExponents:
    return CompositionExponents(g.homogeneous_dimension, float(p), float(alpha), float(s))


def theorem2_check(g, grid, alpha, p, s, family, nonlinearity=None, config=None) -> RatioFamily:
    """Nonlinear norm control: ||F(u)||_{L^p_{s_a}} <= C ||u||_{L^p_s}^alpha.

    Negative s_a norms use the inhomogeneous negative power.  Raises
    ParameterError outside the admissible regime, naming the failed
    condition.
    """
    exps = theorem2_exponents(g, alpha, p, s)
    n_hom = g.homogeneous_dimension
    if s < 0:
        raise ParameterError("need s >= 0")
    if not s > n_hom / p - n_hom / alpha:
        raise ParameterError(
            f"need s > N/p - N/alpha = {n_hom / p - n_hom / alpha:.3g}"
        )
    if not s < n_hom / p:
        raise ParameterError(f"need s < N/p = {n_hom / p:.3g}")
    if exps.regime == "invalid":
        raise ParameterError(
            f"loss index s_alpha = {exps.s_alpha:.3g} outside (-inf, alpha-1)"
        )
    nl = nonlinearity or Nonlinearity("signed_power", alpha)
    out = RatioFamily(
        "composition-norm-control",
        {"alpha": alpha, "p": p, "s": s, "s_alpha": exps.s_alpha, "regime": exps.regime},
    )
    live = [u for u in family if np.any(u.values)]
    out.skipped = len(list(family)) - len(live)
    if not live:
        return out
    composed = [GridFunction(grid, nl(u.values)) for u in live]
    lhs_norms = inhomogeneous_norms(g, grid, composed, exps.s_alpha, p, config)
    rhs_norms = inhomogeneous_norms(g, grid, live, s, p, config)
    for lhs, rhs in zip(lhs_norms, rhs_norms):
        if rhs**alpha < 1e-300:
            raise FloatingPointError("norm underflow")
        out.ratios.append(lhs / rhs**alpha)
    return out


# ---------------------------------------------------------------------------
# square function


def lp_square_function(g, grid, f, p, j_range, config=None, max_time=64.0):
    """Dyadic square-function norm from heat-semigroup differences.

    Band j is psi_j(L) f = e^(-t_j L) f - e^(-4 t_j L) f with t_j = 4^-j;
    the reported diagnostic compares || (sum_j |psi_j f|^2)^(1/2) ||_p with
    ||f||_p, which it reproduces up to two-sided constants for p = 2.
    Returns (square_norm, ratio).
    """
    config = config or SWEEP_CONFIG
    js = sorted(int(j) for j in j_range)
    if not js:
        raise ValueError("empty band range")
    times = sorted({4.0 ** (-j) for j in js} | {4.0 ** (-j + 1) for j in js})
    from .heat import policy_dt

    dt = policy_dt(g, grid, config.safety)
    if times[0] < 4 * dt:
        raise ValueError(
            f"finest band time {times[0]:.3g} unresolvable (4 dt = {4 * dt:.3g})"
        )
    if times[-1] > max_time:
        raise ValueError(f"coarsest band time {times[-1]:.3g} exceeds the run window")
    prop = HeatPropagator(g, grid, config)
    _, snaps = prop.run(f, times[-1], checkpoints=times)
    total = np.zeros(grid.npoints)
    for j in js:
        band = snaps[4.0 ** (-j)].values - snaps[4.0 ** (-j + 1)].values
        total += band**2
    square = GridFunction(grid, np.sqrt(total))
    norm = lp_norm(square, p)
    base = lp_norm(f, p)
    return norm, (norm / base if base > 0 else float("nan"))


# ---------------------------------------------------------------------------
# estimates.csv


def write_estimates_csv(path, rows):
    """rows: iterables of (check_name, params_text, value, bound, passed)."""
    lines = ["check_name,params,value,bound,pass"]
    for name, params, value, bound, passed in rows:
        lines.append(
            f"{name},{params},{value:.17g},{bound:.17g},{1 if passed else 0}"
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
