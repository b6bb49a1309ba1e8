"""Statistical and scalability metrics for runs.

Statistical agreement between a chunk-parallel solution and the serial fine
reference is measured with the 1-Wasserstein distance between the empirical
distributions of their interface values; pointwise agreement is hopeless for
chaotic runs, distributional agreement is the meaningful target.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BlowUpError, ConfigError
from .integrators import (Propagator, get_tableau, propagate,
                          propagate_with_tangent)
from .systems import OdeSystem

Array = np.ndarray


@dataclass(frozen=True)
class MetricsReport:
    """Headline per-run metrics."""

    K: int
    S: float
    serial_work: float
    w1: float
    error_l2: float


@dataclass(frozen=True)
class BasinGrid:
    """Residual landscape over a 2-D slice of one interface state."""

    coord_i: int
    coord_j: int
    x_values: Array
    y_values: Array
    values: Array
    center: Array


def wasserstein1(a, b) -> float:
    """1-Wasserstein distance between two empirical 1-D distributions.

    Equal-size samples reduce to the mean absolute difference of the sorted
    values; unequal sizes integrate the gap between the two piecewise-constant
    quantile functions exactly.
    """
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise ConfigError("wasserstein1 needs non-empty samples")
    if a.size == b.size:
        return float(np.mean(np.abs(a - b)))
    # Merge the quantile breakpoints i/m and j/n and integrate piecewise.
    m, n = a.size, b.size
    qs = np.union1d(np.arange(1, m + 1) / m, np.arange(1, n + 1) / n)
    widths = np.diff(np.concatenate(([0.0], qs)))
    # Quantile function at the midpoint of each segment.
    mids = qs - widths / 2.0
    qa = a[np.minimum((mids * m).astype(int), m - 1)]
    qb = b[np.minimum((mids * n).astype(int), n - 1)]
    return float(np.sum(widths * np.abs(qa - qb)))


def trajectory_w1(U, ref, mode: str = "per-coordinate-mean") -> float:
    """Scalar distributional distance between two trajectories.

    Compares the N interface states (the initial state is shared by
    construction) coordinate by coordinate.  ``per-coordinate-mean`` averages
    the per-coordinate distances; ``first-coordinate`` uses coordinate 0 only.
    """
    a = np.asarray(getattr(U, "states", U))
    b = np.asarray(getattr(ref, "states", ref))
    if a.shape != b.shape:
        raise ConfigError(f"trajectory_w1: shape mismatch {a.shape} vs {b.shape}")
    a, b = a[1:], b[1:]
    if mode == "first-coordinate":
        return wasserstein1(a[:, 0], b[:, 0])
    if mode == "per-coordinate-mean":
        d = a.shape[1]
        return float(np.mean([wasserstein1(a[:, i], b[:, i]) for i in range(d)]))
    raise ConfigError(f"trajectory_w1: unknown mode {mode!r}")


def speedup_model(N: int, K: int, xi: int) -> float:
    """Algorithmic speedup limit N / (K (1 + N/xi)).

    Fine chunk work is the unit; each iteration adds one parallel fine chunk
    plus a serial coarse sweep costing N/xi.  With a free coarse solver
    (xi -> inf) this tends to the headline ratio N/K.
    """
    if N < 1 or K < 1 or xi < 1:
        raise ConfigError("speedup_model needs N, K, xi >= 1")
    return N / (K * (1.0 + N / xi))


def serial_work(K: int, dT: float) -> float:
    """Effective sequential bottleneck K * dT in time units."""
    return K * dT


def lyapunov_estimate(system: OdeSystem, u0: Array, spinup: float,
                      horizon: float, renorm_interval: float,
                      h: float = 1e-3, tableau: str = "rk4") -> float:
    """Leading Lyapunov exponent by tangent propagation with renormalization.

    A unit tangent vector rides the variational dynamics alongside the state;
    its log-growth is harvested and the vector rescaled every
    ``renorm_interval``, and the mean growth rate after the spin-up is
    returned.
    """
    if horizon <= 0.0 or renorm_interval <= 0.0 or h <= 0.0:
        raise ConfigError("lyapunov_estimate needs positive horizon, "
                          "renorm_interval and h")
    steps_per_block = max(1, int(round(renorm_interval / h)))
    blocks = max(1, int(round(horizon / (steps_per_block * h))))
    tab = get_tableau(tableau)
    block_prop = Propagator(tableau=tab, step=h, steps_per_call=steps_per_block)

    u = np.asarray(u0, dtype=float)
    if spinup > 0.0:
        spin_steps = int(round(spinup / h))
        if spin_steps > 0:
            u = propagate(Propagator(tableau=tab, step=h,
                                     steps_per_call=spin_steps),
                          system, 0.0, u)

    v = np.ones((system.dim, 1)) / np.sqrt(system.dim)
    log_sum = 0.0
    t = spinup
    for _ in range(blocks):
        u, v = propagate_with_tangent(block_prop, system, t, u, v)
        growth = float(np.linalg.norm(v))
        if growth == 0.0:
            raise BlowUpError("tangent vector collapsed to zero")
        if not np.isfinite(growth):
            raise BlowUpError("tangent vector blew up")
        log_sum += np.log(growth)
        v /= growth
        t += steps_per_block * h
    return log_sum / (blocks * steps_per_block * h)


def basin_scan(system: OdeSystem, fine: Propagator, U_prev: Array,
               coord_i: int, coord_j: int, ranges, resolution: int) -> BasinGrid:
    """Residual ||U_n - F(U_prev)|| over a 2-D grid of candidate states U_n.

    The fine image of ``U_prev`` is computed once; grid candidates vary the
    two scanned coordinates and keep the rest at the fine image's values, so
    the landscape is exactly the distance-to-truth in the scanned plane.
    """
    U_prev = np.asarray(U_prev, dtype=float)
    d = U_prev.shape[-1]
    if not (0 <= coord_i < d and 0 <= coord_j < d) or coord_i == coord_j:
        raise ConfigError(f"basin_scan: bad coordinate pair ({coord_i}, {coord_j})")
    if resolution < 2:
        raise ConfigError("basin_scan: resolution must be >= 2")
    (lo_i, hi_i), (lo_j, hi_j) = ranges
    center = propagate(fine, system, 0.0, U_prev)
    xs = np.linspace(lo_i, hi_i, resolution)
    ys = np.linspace(lo_j, hi_j, resolution)
    values = np.empty((resolution, resolution))
    for a, x in enumerate(xs):
        for b, y in enumerate(ys):
            cand = center.copy()
            cand[coord_i] = x
            cand[coord_j] = y
            values[a, b] = np.linalg.norm(cand - center)
    return BasinGrid(coord_i=coord_i, coord_j=coord_j, x_values=xs,
                     y_values=ys, values=values, center=center)
