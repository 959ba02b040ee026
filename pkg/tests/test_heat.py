import numpy as np
import pytest

from carnot_heat.catalog import builtin
from carnot_heat.grid import Grid, GridFunction, lp_norm
from carnot_heat.heat import (
    BlowUpDetected,
    CflViolation,
    GaussianBoundFit,
    HeatPropagator,
    InsufficientSamples,
    Metrics,
    PropagatorConfig,
    euclidean_kernel,
    evolve,
    expected_smoothing_slope,
    gaussian_bound_diagnostic,
    kernel_probe,
    policy_dt,
    smoothing_inequality_check,
    smoothing_rate,
    write_metrics_csv,
)


def line_grid(n=161, half=6.0):
    g = builtin("euclidean(1)")
    return g, Grid.for_group(g, half, n)


def gaussian_1d(grid, sigma2=1.0):
    return GridFunction.from_callable(grid, lambda x: np.exp(-(x**2) / (2 * sigma2)))


def test_evolve_zero_time_returns_copy():
    g, grid = line_grid()
    u = gaussian_1d(grid)
    out = evolve(g, grid, u, 0.0)
    assert np.array_equal(out.values, u.values)
    assert out.values is not u.values


def test_gaussian_variance_growth_on_line():
    # d/dt u = u'' spreads a Gaussian of variance s^2 to s^2 + 2t
    g, grid = line_grid(n=161, half=8.0)
    sigma2 = 1.0
    t = 0.25
    u0 = gaussian_1d(grid, sigma2)
    out = evolve(g, grid, u0, t)
    xs = grid.coords()[0]
    s2 = sigma2 + 2 * t
    exact = np.sqrt(sigma2 / s2) * np.exp(-(xs**2) / (2 * s2))
    assert np.max(np.abs(out.values - exact)) < 1e-3


def test_mass_conservation_before_boundary_losses():
    for name, half, n in (("euclidean(1)", 8.0, 161), ("heisenberg", 6.0, 21)):
        g = builtin(name)
        grid = Grid.for_group(g, half, n)
        u0 = GridFunction.sample(
            grid, lambda p: np.exp(-2 * np.sum(p**2, axis=-1))
        )
        out = evolve(g, grid, u0, 0.1)
        assert out.integral() == pytest.approx(u0.integral(), rel=1e-6)


def test_semigroup_property():
    g, grid = line_grid()
    u0 = gaussian_1d(grid)
    a = evolve(g, grid, evolve(g, grid, u0, 0.13), 0.17)
    b = evolve(g, grid, u0, 0.30)
    rel = lp_norm(a - b, 2) / lp_norm(b, 2)
    assert rel < 1e-6


def test_contraction_in_lp():
    for name, half, n in (("euclidean(1)", 8.0, 161), ("heisenberg", 5.0, 17)):
        g = builtin(name)
        grid = Grid.for_group(g, half, n)
        u0 = GridFunction.sample(grid, lambda p: np.exp(-np.sum(p**2, axis=-1)))
        out = evolve(g, grid, u0, 0.2)
        for p in (2, 4, np.inf):
            assert lp_norm(out, p) <= lp_norm(u0, p) * (1 + 1e-6)


def test_positivity_preservation():
    g = builtin("heisenberg")
    grid = Grid.for_group(g, 5.0, 21)
    u0 = GridFunction.sample(grid, lambda p: np.exp(-np.sum(p**2, axis=-1)))
    out = evolve(g, grid, u0, 0.3)
    assert out.values.min() >= -1e-8 * out.values.max()


def test_expm_agrees_with_rk4():
    g = builtin("heisenberg")
    grid = Grid.for_group(g, 5.0, 17)
    u0 = GridFunction.sample(grid, lambda p: np.exp(-np.sum(p**2, axis=-1)))
    a = evolve(g, grid, u0, 0.25, PropagatorConfig(integrator="rk4"))
    b = evolve(g, grid, u0, 0.25, PropagatorConfig(integrator="expm"))
    assert lp_norm(a - b, 2) / lp_norm(b, 2) < 1e-6


def test_euler_agrees_to_first_order():
    g, grid = line_grid()
    u0 = gaussian_1d(grid)
    a = evolve(g, grid, u0, 0.2, PropagatorConfig(integrator="euler"))
    b = evolve(g, grid, u0, 0.2, PropagatorConfig(integrator="rk4"))
    assert lp_norm(a - b, 2) / lp_norm(b, 2) < 1e-2


def test_cfl_override_policy():
    g, grid = line_grid()
    dt = policy_dt(g, grid)
    with pytest.raises(CflViolation):
        HeatPropagator(g, grid, PropagatorConfig(dt=10 * dt))
    # explicit opt-out is allowed (and Euler at 100x policy step blows up
    # once the unstable modes have amplified from the spike's content)
    prop = HeatPropagator(
        g, grid, PropagatorConfig(dt=100 * dt, integrator="euler", allow_unstable=True)
    )
    with pytest.raises(BlowUpDetected) as exc:
        prop.run(GridFunction.delta(grid), 40.0)
    assert exc.value.step > 0


def test_checkpoints_and_metrics():
    g, grid = line_grid(n=81)
    u0 = gaussian_1d(grid)
    prop = HeatPropagator(g, grid)
    metrics = Metrics()
    final, snaps = prop.run(u0, 0.2, checkpoints=[0.05, 0.1, 0.2], metrics=metrics)
    assert set(snaps) == {0.05, 0.1, 0.2}
    assert np.array_equal(snaps[0.2].values, final.values)
    ts = [row[0] for row in metrics.rows]
    assert ts == sorted(ts) and ts[0] == 0.0
    assert all(len(row) == 5 for row in metrics.rows)


def test_metrics_csv(tmp_path):
    g, grid = line_grid(n=81)
    prop = HeatPropagator(g, grid)
    metrics = Metrics()
    prop.run(gaussian_1d(grid), 0.1, checkpoints=[0.05, 0.1], metrics=metrics)
    path = tmp_path / "metrics.csv"
    write_metrics_csv(metrics, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,mass,linf,l2,shell_mass"
    assert len(lines) == 1 + len(metrics.rows)


# ---------------------------------------------------------------------------
# kernel probes


def test_kernel_probe_matches_euclidean_gaussian():
    g = builtin("euclidean(2)")
    grid = Grid.for_group(g, 6.0, 97)
    probe = kernel_probe(g, grid, [0.25])
    h = probe.snapshots[0.25]
    exact = euclidean_kernel(grid, 0.25)
    mask = probe.bulk_mask(0.25)
    err = np.max(np.abs(h.values[mask] - exact.values[mask])) / np.max(
        exact.values[mask]
    )
    assert err < 0.02
    assert probe.masses[0.25] == pytest.approx(1.0, abs=1e-6)


def test_kernel_probe_requires_smoothing_time():
    g, grid = line_grid()
    dt = policy_dt(g, grid)
    with pytest.raises(ValueError, match="below 4 dt"):
        kernel_probe(g, grid, [dt])


def test_heisenberg_kernel_laws_coarse():
    # coarse smoke test; the acceptance suite runs the full-resolution version
    g = builtin("heisenberg")
    grid = Grid.for_group(g, 5.0, 33)
    probe = kernel_probe(g, grid, [0.3, 1.2], PropagatorConfig(integrator="expm"))
    for t in (0.3, 1.2):
        assert probe.masses[t] == pytest.approx(1.0, abs=1e-2)
        assert probe.min_values[t] >= -1e-8 * probe.snapshots[t].values.max()
        assert probe.symmetry_error(t) < 0.02
    assert probe.scaling_error(2.0, 0.3) < 0.15


def test_gaussian_bound_diagnostic_on_line():
    g, grid = line_grid(n=257, half=6.0)
    probe = kernel_probe(g, grid, [0.1, 0.2, 0.4])
    fit = gaussian_bound_diagnostic(probe)
    assert isinstance(fit, GaussianBoundFit)
    assert fit.decay == pytest.approx(0.25, rel=0.1)
    assert fit.ok


def test_gaussian_bound_needs_samples():
    g, grid = line_grid(n=81)
    probe = kernel_probe(g, grid, [0.1])
    # wreck the snapshot: pure noise has no bulk above the floor
    probe.snapshots[0.1].values[:] = -1.0
    with pytest.raises(InsufficientSamples):
        gaussian_bound_diagnostic(probe)


# ---------------------------------------------------------------------------
# smoothing


def test_smoothing_rate_on_line():
    g, grid = line_grid(n=257, half=6.0)
    times = np.geomspace(0.05, 0.4, 6)
    fit = smoothing_rate(g, grid, 2, times)
    assert fit.slope == pytest.approx(expected_smoothing_slope(g, 1, 2), rel=0.1)
    assert expected_smoothing_slope(g, 1, 2) == -0.25


def test_smoothing_rate_needs_four_checkpoints():
    g, grid = line_grid()
    with pytest.raises(ValueError, match="at least 4"):
        smoothing_rate(g, grid, 2, [0.1, 0.2, 0.3])


def test_smoothing_inequality_contraction_case():
    g, grid = line_grid(n=161, half=8.0)
    base = lambda pts: np.exp(-np.sum(pts**2, axis=-1))
    out = smoothing_inequality_check(
        g, grid, 2, 2, [1.0], base, t_grid=[0.05, 0.1, 0.2]
    )
    assert out[1.0] <= 1 + 1e-6


def test_smoothing_inequality_family_spread():
    g, grid = line_grid(n=161, half=8.0)
    base = lambda pts: np.exp(-2 * np.sum(pts**2, axis=-1))
    out = smoothing_inequality_check(
        g, grid, 2, 4, [0.5, 1.0, 2.0], base, t_grid=[0.05, 0.1, 0.2]
    )
    vals = list(out.values())
    assert max(vals) / min(vals) <= 2.0
    with pytest.raises(ValueError):
        smoothing_inequality_check(g, grid, 4, 2, [1.0], base, t_grid=[0.1])
