import numpy as np
import pytest
from scipy.optimize import linprog

from paratime.engine import TrajectoryVec
from paratime.errors import BlowUpError, ConfigError
from paratime.integrators import RK4, Propagator
from paratime.metrics import (basin_scan, lyapunov_estimate, serial_work,
                              speedup_model, trajectory_w1, wasserstein1)
from paratime.systems import make_linear, make_logistic, make_lorenz63


def transport_lp_oracle(a, b):
    """Optimal-transport cost between equal-weight empirical measures."""
    m, n = len(a), len(b)
    cost = np.abs(np.subtract.outer(a, b)).ravel()
    A_eq = np.zeros((m + n, m * n))
    for i in range(m):
        A_eq[i, i * n:(i + 1) * n] = 1.0
    for j in range(n):
        A_eq[m + j, j::n] = 1.0
    b_eq = np.concatenate([np.full(m, 1.0 / m), np.full(n, 1.0 / n)])
    res = linprog(cost, A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    assert res.success
    return res.fun


def test_wasserstein_point_masses():
    assert wasserstein1([0.0], [1.0]) == 1.0
    assert wasserstein1([0, 1, 2], [1, 2, 3]) == pytest.approx(1.0)
    assert wasserstein1([3.0, 1.0], [1.0, 3.0]) == 0.0


def test_wasserstein_identical_samples():
    rng = np.random.default_rng(0)
    a = rng.normal(size=37)
    assert wasserstein1(a, a.copy()) == 0.0


def test_wasserstein_empty_rejected():
    with pytest.raises(ConfigError):
        wasserstein1([], [1.0])


def test_wasserstein_matches_lp_oracle_small():
    rng = np.random.default_rng(1)
    for _ in range(25):
        m = int(rng.integers(2, 30))
        a = rng.normal(size=m) * rng.uniform(0.5, 2.0)
        b = rng.normal(size=m) + rng.uniform(-1.0, 1.0)
        assert wasserstein1(a, b) == pytest.approx(transport_lp_oracle(a, b),
                                                   abs=1e-10)


def test_wasserstein_unequal_sizes_quantile_form():
    # {0} vs {0, 1}: quantile gap is 1 on half the mass
    assert wasserstein1([0.0], [0.0, 1.0]) == pytest.approx(0.5)
    rng = np.random.default_rng(2)
    from scipy.stats import wasserstein_distance
    for _ in range(50):
        a = rng.normal(size=int(rng.integers(1, 25)))
        b = rng.normal(size=int(rng.integers(1, 25)))
        assert wasserstein1(a, b) == pytest.approx(wasserstein_distance(a, b),
                                                   abs=1e-12)


def test_wasserstein_metric_properties():
    rng = np.random.default_rng(3)
    for _ in range(200):
        a = rng.normal(size=12)
        b = rng.normal(size=12)
        c = rng.normal(size=12)
        dab = wasserstein1(a, b)
        dba = wasserstein1(b, a)
        assert dab == pytest.approx(dba, abs=1e-14)
        assert dab >= 0.0
        assert dab <= wasserstein1(a, c) + wasserstein1(c, b) + 1e-12
    a = rng.normal(size=12)
    assert wasserstein1(a, np.sort(a)) == 0.0


def test_wasserstein_translation_covariance():
    rng = np.random.default_rng(4)
    a = rng.normal(size=20)
    b = rng.normal(size=20)
    base = wasserstein1(a, b)
    for t in (-2.0, 0.5, 3.0):
        shifted = wasserstein1(a, b + t)
        assert shifted <= base + abs(t) + 1e-12
    # disjoint supports: exact equality
    a = rng.uniform(0, 1, size=15)
    b = a + 10.0
    assert wasserstein1(a, b) == pytest.approx(10.0)


def test_trajectory_w1_modes():
    rng = np.random.default_rng(5)
    states = rng.normal(size=(9, 3))
    ref = rng.normal(size=(9, 3))
    U, R = TrajectoryVec(states), TrajectoryVec(ref)
    assert trajectory_w1(U, U) == 0.0
    per = trajectory_w1(U, R)
    expected = np.mean([wasserstein1(states[1:, i], ref[1:, i])
                        for i in range(3)])
    assert per == pytest.approx(expected)
    first = trajectory_w1(U, R, mode="first-coordinate")
    assert first == pytest.approx(wasserstein1(states[1:, 0], ref[1:, 0]))
    with pytest.raises(ConfigError):
        trajectory_w1(U, R, mode="sliced")


def test_trajectory_w1_scalar_system_reduces():
    rng = np.random.default_rng(6)
    a = rng.normal(size=(7, 1))
    b = rng.normal(size=(7, 1))
    got = trajectory_w1(TrajectoryVec(a), TrajectoryVec(b))
    assert got == pytest.approx(wasserstein1(a[1:, 0], b[1:, 0]))


def test_speedup_model_values():
    assert f"{speedup_model(4, 1, 100):.2f}" == "3.85"
    assert speedup_model(128, 2, 100) == pytest.approx(28.07, abs=5e-3)
    # free coarse solver limit -> N/K
    assert speedup_model(64, 4, 10**9) == pytest.approx(16.0, rel=1e-6)
    with pytest.raises(ConfigError):
        speedup_model(0, 1, 10)


def test_speedup_model_monotonicity():
    S = [speedup_model(32, K, 50) for K in range(1, 8)]
    assert all(a > b for a, b in zip(S, S[1:]))
    S = [speedup_model(32, 2, xi) for xi in (2, 8, 32, 128, 512)]
    assert all(a < b for a, b in zip(S, S[1:]))
    assert serial_work(3, 0.25) == pytest.approx(0.75)


def test_lyapunov_linear_exact():
    lin = make_linear(0.37)
    lam = lyapunov_estimate(lin, np.array([1.0]), spinup=0.0, horizon=50.0,
                            renorm_interval=1.0, h=0.01)
    assert abs(lam - 0.37) < 1e-6


def test_lyapunov_logistic_negative():
    sys1 = make_logistic()
    lam = lyapunov_estimate(sys1, np.array([0.5]), spinup=5.0, horizon=50.0,
                            renorm_interval=1.0, h=0.01)
    assert lam < -0.5  # attracting equilibrium with rate -1


def test_lyapunov_lorenz_band_and_consistency():
    """Tangent-growth estimate lands on the known exponent and is stable
    under horizon doubling and renormalization-interval halving."""
    sys3 = make_lorenz63()
    u0 = np.array([1.0, 1.0, 1.0])
    lam = lyapunov_estimate(sys3, u0, spinup=20.0, horizon=200.0,
                            renorm_interval=1.0, h=5e-3)
    lam2 = lyapunov_estimate(sys3, u0, spinup=20.0, horizon=400.0,
                             renorm_interval=1.0, h=5e-3)
    assert 0.85 <= lam <= 0.95
    assert 0.85 <= lam2 <= 0.95
    assert abs(lam2 - lam) / lam2 < 0.02
    lam3 = lyapunov_estimate(sys3, u0, spinup=20.0, horizon=200.0,
                             renorm_interval=0.5, h=5e-3)
    assert abs(lam3 - lam) / lam < 0.02


def test_lyapunov_rejects_bad_args():
    lin = make_linear(1.0)
    with pytest.raises(ConfigError):
        lyapunov_estimate(lin, np.array([1.0]), 0.0, -1.0, 1.0)


def test_basin_scan_geometry():
    sys3 = make_lorenz63()
    fine = Propagator(tableau=RK4, step=1e-3, steps_per_call=1000)
    u_prev = np.array([13.8, 13.0, 34.9])
    from paratime.integrators import propagate
    center = propagate(fine, sys3, 0.0, u_prev)
    lo_i, hi_i = center[0] - 2.0, center[0] + 2.0
    lo_j, hi_j = center[1] - 3.0, center[1] + 3.0
    grid = basin_scan(sys3, fine, u_prev, 0, 1,
                      ((lo_i, hi_i), (lo_j, hi_j)), resolution=9)
    assert grid.values.shape == (9, 9)
    assert np.all(grid.values >= 0.0)
    # residual is exactly the in-plane distance to the fine image
    for a in (0, 4, 8):
        for b in (0, 3, 8):
            expected = np.hypot(grid.x_values[a] - center[0],
                                grid.y_values[b] - center[1])
            assert grid.values[a, b] == pytest.approx(expected, rel=1e-12)
    # minimum sits at the grid point nearest the fine image
    amin = np.unravel_index(np.argmin(grid.values), grid.values.shape)
    assert grid.x_values[amin[0]] == pytest.approx(center[0], abs=0.5)
    assert grid.y_values[amin[1]] == pytest.approx(center[1], abs=0.75)


def test_basin_scan_validation():
    sys3 = make_lorenz63()
    fine = Propagator(tableau=RK4, step=1e-3, steps_per_call=10)
    u = np.array([1.0, 1.0, 1.0])
    with pytest.raises(ConfigError):
        basin_scan(sys3, fine, u, 0, 0, ((0, 1), (0, 1)), 4)
    with pytest.raises(ConfigError):
        basin_scan(sys3, fine, u, 0, 1, ((0, 1), (0, 1)), 1)
