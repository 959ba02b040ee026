"""Heat semigroup on grids: time stepping, kernel probes, smoothing rates.

The semigroup exp(-t L) is realized by stepping du/dt = -L u with the
compiled sublaplacian.  Integrators: classical RK4 (default), explicit
Euler, and "expm" (Krylov/Taylor action of the sparse matrix exponential via
scipy), which is the backend of choice for long-horizon sweeps where a
CFL-limited explicit step count would be prohibitive.  The step-size policy
is dt = safety * h_min^2 / A with A an operator-norm surrogate built from
the generator coefficients maximized over the box.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse.linalg import expm_multiply

from .catalog import GroupSpec
from .grid import Grid, GridFunction, lp_norm, sublaplacian_operator


class BlowUpDetected(RuntimeError):
    def __init__(self, step: int, t: float):
        super().__init__(f"non-finite values at step {step}, t = {t:.6g}")
        self.step = step
        self.t = t


class CflViolation(ValueError):
    pass


class InsufficientSamples(ValueError):
    pass


@dataclass(frozen=True)
class PropagatorConfig:
    safety: float = 0.25
    integrator: str = "rk4"  # "rk4" | "euler" | "expm"
    dt: float | None = None  # explicit override, validated against the policy
    allow_unstable: bool = False
    scheme: str = "compact"


def cfl_surrogate(g: GroupSpec, grid: Grid) -> float:
    """A = (max_x sum_i sum_m |c_im(x)|)^2 over the generator coefficients."""
    coords = grid.coords()
    total = np.zeros(grid.npoints)
    for x in g.generators:
        for _, poly in sorted(x.coeffs.items()):
            vals = poly.evaluate({i: coords[i] for i in range(grid.dim)})
            total = total + np.abs(np.broadcast_to(np.asarray(vals, float), grid.npoints))
    return float(np.max(total)) ** 2


def policy_dt(g: GroupSpec, grid: Grid, safety: float = 0.25) -> float:
    a = cfl_surrogate(g, grid)
    return safety * min(grid.spacings) ** 2 / max(a, 1e-300)


@dataclass
class Metrics:
    rows: list = field(default_factory=list)  # (t, mass, linf, l2, shell_mass)

    def record(self, t: float, u: GridFunction, shell_mask):
        vals = u.values
        vol = u.grid.cell_volume
        self.rows.append(
            (
                t,
                float(vals.sum() * vol),
                float(np.max(np.abs(vals))),
                float(np.sqrt(np.sum(vals**2) * vol)),
                float(np.abs(vals[shell_mask]).sum() * vol),
            )
        )


def write_metrics_csv(metrics: Metrics, path):
    lines = ["t,mass,linf,l2,shell_mass"]
    for row in metrics.rows:
        lines.append(",".join(f"{v:.17g}" for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


class HeatPropagator:
    """Time stepper for du/dt = -L u (+ forcing) on a fixed grid."""

    def __init__(self, g: GroupSpec, grid: Grid, config: PropagatorConfig | None = None):
        self.group = g
        self.grid = grid
        self.config = config or PropagatorConfig()
        self.operator = sublaplacian_operator(g, grid, self.config.scheme)
        self.matrix = self.operator.matrix
        self.dt_policy = policy_dt(g, grid, self.config.safety)
        if self.config.dt is not None:
            if self.config.dt > self.dt_policy * (1 + 1e-12) and not self.config.allow_unstable:
                raise CflViolation(
                    f"dt = {self.config.dt:.3g} exceeds the policy step "
                    f"{self.dt_policy:.3g}; pass allow_unstable to override"
                )
            self.dt = self.config.dt
        else:
            self.dt = self.dt_policy

    # -- single segments -----------------------------------------------------

    def _rhs(self, t, v, forcing):
        out = -(self.matrix @ v)
        if forcing is not None:
            out = out + forcing(t)
        return out

    def _run_segment(self, v, t0, t1, forcing, step_offset):
        """Advance from t0 to t1 with uniform steps; returns (v, steps_taken)."""
        span = t1 - t0
        if span <= 0:
            return v, 0
        integrator = self.config.integrator
        if integrator == "expm":
            if forcing is not None:
                raise ValueError("the expm integrator does not support forcing")
            v = expm_multiply(-span * self.matrix, v)
            if not np.all(np.isfinite(v)):
                raise BlowUpDetected(step_offset, t1)
            return v, 1
        nsteps = max(1, math.ceil(span / self.dt - 1e-12))
        dt = span / nsteps
        for k in range(nsteps):
            t = t0 + k * dt
            if integrator == "rk4":
                k1 = self._rhs(t, v, forcing)
                k2 = self._rhs(t + dt / 2, v + (dt / 2) * k1, forcing)
                k3 = self._rhs(t + dt / 2, v + (dt / 2) * k2, forcing)
                k4 = self._rhs(t + dt, v + dt * k3, forcing)
                v = v + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
            elif integrator == "euler":
                v = v + dt * self._rhs(t, v, forcing)
            else:
                raise ValueError(f"unknown integrator {integrator!r}")
            if not np.all(np.isfinite(v)):
                raise BlowUpDetected(step_offset + k + 1, t + dt)
        return v, nsteps

    # -- public driver ---------------------------------------------------------

    def run(self, u0: GridFunction, t: float, checkpoints=(), forcing=None, metrics: Metrics | None = None):
        """Evolve u0 to time t, snapshotting at the checkpoint times.

        Returns (final GridFunction, dict time -> GridFunction).
        """
        if t < 0:
            raise ValueError("evolution time must be non-negative")
        times = sorted(set(float(s) for s in checkpoints))
        if times and (times[0] < 0 or times[-1] > t + 1e-12):
            raise ValueError("checkpoints must lie in [0, t]")
        shell = self.grid.shell_mask()
        v = u0.values.reshape(-1).astype(float).copy()
        snapshots: dict[float, GridFunction] = {}
        current = 0.0
        steps = 0
        if metrics is not None:
            metrics.record(0.0, u0, shell)

        def snap(time, vec):
            gf = GridFunction(self.grid, vec.reshape(self.grid.npoints).copy())
            snapshots[time] = gf
            if metrics is not None and time > 0:
                metrics.record(time, gf, shell)

        for s in times:
            if s <= current + 1e-15:
                snap(s, v)
                continue
            v, n = self._run_segment(v, current, s, forcing, steps)
            steps += n
            current = s
            snap(s, v)
        if t > current + 1e-15:
            v, n = self._run_segment(v, current, t, forcing, steps)
            steps += n
        final = GridFunction(self.grid, v.reshape(self.grid.npoints))
        if metrics is not None and t not in snapshots:
            metrics.record(t, final, shell)
        return final, snapshots


def evolve(g: GroupSpec, grid: Grid, u0: GridFunction, t: float, config: PropagatorConfig | None = None) -> GridFunction:
    """Approximate exp(-t L) u0; t = 0 returns a copy of u0."""
    if t == 0:
        return u0.copy()
    prop = HeatPropagator(g, grid, config)
    final, _ = prop.run(u0, t)
    return final


# ---------------------------------------------------------------------------
# interpolation


def interp_at(u: GridFunction, pts: np.ndarray) -> np.ndarray:
    """Multilinear interpolation at arbitrary points, zero outside the box."""
    axes = [u.grid.axis(m) for m in range(u.grid.dim)]
    rgi = RegularGridInterpolator(
        axes, u.values, method="linear", bounds_error=False, fill_value=0.0
    )
    return rgi(pts)


# ---------------------------------------------------------------------------
# kernel probes


@dataclass
class KernelProbe:
    group: GroupSpec
    grid: Grid
    times: tuple[float, ...]
    snapshots: dict[float, GridFunction]
    masses: dict[float, float]
    min_values: dict[float, float]

    def bulk_mask(self, t: float, floor: float = 1e-6, radius_fraction: float = 0.7) -> np.ndarray:
        """Points where the kernel is above noise and well inside the box."""
        h = self.snapshots[t].values
        rho = self.group.hom_norm_arrays(self.grid.points_matrix()).reshape(self.grid.npoints)
        return (h > floor * h.max()) & (rho < radius_fraction * min(self.grid.half_widths))

    def symmetry_error(self, t: float) -> float:
        """sup |h_t(x) - h_t(x^-1)| / sup h_t over the bulk."""
        u = self.snapshots[t]
        mask = self.bulk_mask(t)
        pts = self.grid.points_matrix().reshape(self.grid.npoints + (self.grid.dim,))
        inv = self.group.inverse_arrays(pts[mask])
        at_inverse = interp_at(u, inv)
        return float(np.max(np.abs(u.values[mask] - at_inverse)) / np.max(u.values[mask]))

    def scaling_error(self, r: float, t: float) -> float:
        """Error in  h_{r^2 t}(dil_r x) = r^-N h_t(x)  on the usable bulk."""
        t2 = r * r * t
        if t not in self.snapshots or t2 not in self.snapshots:
            raise KeyError(f"need snapshots at t = {t} and r^2 t = {t2}")
        base = self.snapshots[t]
        other = self.snapshots[t2]
        mask = self.bulk_mask(t)
        pts = self.grid.points_matrix().reshape(self.grid.npoints + (self.grid.dim,))
        scaled_pts = self.group.dilate_arrays(r, pts[mask])
        inside = np.all(
            np.abs(scaled_pts) <= np.array(self.grid.half_widths) * (1 - 1e-9), axis=-1
        )
        if not np.any(inside):
            raise InsufficientSamples("no bulk points remain inside the box after dilation")
        lhs = interp_at(other, scaled_pts[inside])
        rhs = r ** (-self.group.homogeneous_dimension) * base.values[mask][inside]
        return float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs)))


def kernel_probe(g: GroupSpec, grid: Grid, times, config: PropagatorConfig | None = None) -> KernelProbe:
    """Evolve a unit-mass spike at the identity and snapshot at the times.

    Times must sit at least four policy steps above zero so the spike has
    smoothed into a trustworthy kernel approximation.
    """
    config = config or PropagatorConfig()
    times = tuple(sorted(float(t) for t in times))
    if not times:
        raise ValueError("no probe times given")
    dt = policy_dt(g, grid, config.safety)
    if times[0] < 4 * dt:
        raise ValueError(f"earliest probe time {times[0]:.3g} is below 4 dt = {4 * dt:.3g}")
    prop = HeatPropagator(g, grid, config)
    _, snaps = prop.run(GridFunction.delta(grid), times[-1], checkpoints=times)
    masses = {t: snaps[t].integral() for t in times}
    min_values = {t: float(snaps[t].values.min()) for t in times}
    return KernelProbe(g, grid, times, snaps, masses, min_values)


def euclidean_kernel(grid: Grid, t: float) -> GridFunction:
    """Closed-form Gaussian heat kernel on R^d (oracle for step-1 groups)."""
    pts = grid.points_matrix()
    d = grid.dim
    sq = np.sum(pts**2, axis=-1)
    vals = (4 * np.pi * t) ** (-d / 2) * np.exp(-sq / (4 * t))
    return GridFunction(grid, vals.reshape(grid.npoints))


@dataclass
class GaussianBoundFit:
    decay: float  # fitted b in  log h + (N/2) log t <= a - b |x|^2 / t
    offset: float
    violation_rate: float
    n_samples: int

    @property
    def ok(self) -> bool:
        return self.decay > 0 and self.violation_rate <= 0.05


def gaussian_bound_diagnostic(probe: KernelProbe, margin: float = 0.5) -> GaussianBoundFit:
    """Fit the log-Gaussian envelope of the probe and report the decay rate.

    Least-squares fit of log h_t(x) + (N/2) log t against |x|_G^2 / t over
    all bulk samples; the diagnostic passes when the fitted decay is positive
    and at most 5% of samples exceed the fitted line by the margin.
    """
    n_hom = probe.group.homogeneous_dimension
    rho = probe.group.hom_norm_arrays(probe.grid.points_matrix()).reshape(probe.grid.npoints)
    ys, xis = [], []
    for t in probe.times:
        h = probe.snapshots[t].values
        mask = probe.bulk_mask(t) & (h > 0)
        if not np.any(mask):
            continue
        ys.append(np.log(h[mask]) + (n_hom / 2) * np.log(t))
        xis.append(rho[mask] ** 2 / t)
    if not ys:
        raise InsufficientSamples("no usable bulk samples above the noise floor")
    y = np.concatenate(ys)
    xi = np.concatenate(xis)
    if y.size < 50:
        raise InsufficientSamples(f"only {y.size} samples, need at least 50")
    slope, offset = np.polyfit(xi, y, 1)
    decay = -float(slope)
    violations = float(np.mean(y > offset + slope * xi + margin))
    return GaussianBoundFit(decay, float(offset), violations, int(y.size))


# ---------------------------------------------------------------------------
# smoothing rates


@dataclass
class SlopeFit:
    slope: float
    intercept: float
    times: tuple[float, ...]
    values: tuple[float, ...]


def smoothing_rate(g: GroupSpec, grid: Grid, beta, times, config: PropagatorConfig | None = None) -> SlopeFit:
    """Fitted slope of log ||h_t||_beta against log t on mass-one spike data.

    The expected decay exponent is -(N/2)(1 - 1/beta).
    """
    times = tuple(sorted(float(t) for t in times))
    if len(times) < 4:
        raise ValueError("need at least 4 checkpoint times for a rate fit")
    probe = kernel_probe(g, grid, times, config)
    norms = [lp_norm(probe.snapshots[t], beta) for t in times]
    slope, intercept = np.polyfit(np.log(times), np.log(norms), 1)
    return SlopeFit(float(slope), float(intercept), times, tuple(norms))


def expected_smoothing_slope(g: GroupSpec, alpha, beta) -> float:
    inv_a = 0.0 if alpha in (np.inf, "inf") else 1.0 / float(alpha)
    inv_b = 0.0 if beta in (np.inf, "inf") else 1.0 / float(beta)
    return -(g.homogeneous_dimension / 2) * (inv_a - inv_b)


def smoothing_inequality_check(
    g: GroupSpec,
    grid: Grid,
    alpha,
    beta,
    lambdas,
    base_fn,
    t_grid,
    config: PropagatorConfig | None = None,
) -> dict[float, float]:
    """C(lam) = max_t ||exp(-tL) f_lam||_beta * t^((N/2)(1/a-1/b)) / ||f_lam||_a.

    f_lam = base_fn composed with dil_lam, evaluated analytically on the
    grid.  Boundedness of the family is the caller's assertion.
    """
    if not (1 <= _as_exp(alpha) <= _as_exp(beta)):
        raise ValueError("need 1 <= alpha <= beta <= inf")
    rate = -expected_smoothing_slope(g, alpha, beta)
    out = {}
    for lam in lambdas:
        f = GridFunction.sample(grid, lambda pts: base_fn(g.dilate_arrays(lam, pts)))
        denom = lp_norm(f, alpha)
        if denom < 1e-300:
            raise FloatingPointError(f"norm underflow for lambda = {lam}")
        prop = HeatPropagator(g, grid, config)
        _, snaps = prop.run(f, max(t_grid), checkpoints=t_grid)
        out[lam] = max(
            lp_norm(snaps[t], beta) * t**rate / denom for t in t_grid
        )
    return out


def _as_exp(p) -> float:
    return np.inf if p in (np.inf, "inf") else float(p)
