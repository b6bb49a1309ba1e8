"""Runge-Kutta propagators over time chunks, with tangent propagation.

States are numpy arrays of shape ``(..., d)``: any leading axes are treated
as independent batch dimensions, so a whole set of time chunks can be
advanced in lock-step.  Elementwise arithmetic is identical whether states
are advanced one at a time or as a batch, which is what makes the engine's
chunk-parallel sweep schedule-independent.

Tangent blocks of shape ``(..., d, m)`` can be carried along any step; they
are advanced with the exact derivative of the discrete step map (each stage
is differentiated), so ``m = d`` with an identity seed yields the exact
Jacobian of the numerical chunk map.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BlowUpError, ConfigError, StepFailureError
from .systems import OdeSystem

Array = np.ndarray

# Implicit stage solves: residual tolerance is scaled by the state magnitude
# so large-amplitude systems are not asked to beat the rounding floor.
NEWTON_TOL = 1e-14
NEWTON_MAXITER = 50


@dataclass(frozen=True)
class ButcherTableau:
    """Runge-Kutta coefficients (A, b, c) with stated order."""

    name: str
    A: Array
    b: Array
    c: Array
    order: int
    is_explicit: bool = field(init=False)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).ravel()
        c = np.asarray(self.c, dtype=float).ravel()
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        s = b.size
        if A.shape != (s, s) or c.size != s:
            raise ConfigError(f"tableau {self.name!r}: inconsistent shapes")
        if abs(b.sum() - 1.0) > 1e-12:
            raise ConfigError(f"tableau {self.name!r}: weights must sum to 1")
        if np.max(np.abs(A.sum(axis=1) - c)) > 1e-12:
            raise ConfigError(f"tableau {self.name!r}: c must equal row sums of A")
        explicit = bool(np.all(np.triu(A) == 0.0))
        object.__setattr__(self, "is_explicit", explicit)

    @property
    def s(self) -> int:
        return self.b.size


RK4 = ButcherTableau(
    name="rk4",
    A=[[0.0, 0.0, 0.0, 0.0],
       [0.5, 0.0, 0.0, 0.0],
       [0.0, 0.5, 0.0, 0.0],
       [0.0, 0.0, 1.0, 0.0]],
    b=[1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
    c=[0.0, 0.5, 0.5, 1.0],
    order=4,
)

IMPLICIT_EULER = ButcherTableau(
    name="implicit_euler", A=[[1.0]], b=[1.0], c=[1.0], order=1)

EULER = ButcherTableau(name="euler", A=[[0.0]], b=[1.0], c=[0.0], order=1)

HEUN = ButcherTableau(
    name="heun", A=[[0.0, 0.0], [1.0, 0.0]], b=[0.5, 0.5], c=[0.0, 1.0],
    order=2)

TABLEAUX = {t.name: t for t in (RK4, IMPLICIT_EULER, EULER, HEUN)}


def get_tableau(name: str) -> ButcherTableau:
    if name not in TABLEAUX:
        raise ConfigError(
            f"unknown tableau {name!r}; expected one of {sorted(TABLEAUX)}")
    return TABLEAUX[name]


def stability_function(tableau: ButcherTableau, z: complex) -> complex:
    """R(z) = 1 + z b^T (I - z A)^{-1} 1, the scalar step amplification."""
    s = tableau.s
    M = np.eye(s) - z * tableau.A
    return 1.0 + z * (tableau.b @ np.linalg.solve(M, np.ones(s)))


@dataclass(frozen=True)
class GridSpec:
    """Uniform chunk grid: N chunks of length dT = T/N, dT = L * xi * h."""

    T: float
    N: int
    dT: float
    xi: int
    L: int
    h: float

    def __post_init__(self):
        if self.N < 1 or self.L < 1 or self.xi < 1:
            raise ConfigError("grid needs N >= 1, L >= 1, xi >= 1")
        if not np.isclose(self.N * self.dT, self.T, rtol=1e-9, atol=0.0):
            raise ConfigError(f"grid: N*dT = {self.N * self.dT} != T = {self.T}")
        if not np.isclose(self.L * self.xi * self.h, self.dT, rtol=1e-9, atol=0.0):
            raise ConfigError(
                f"grid: L*xi*h = {self.L * self.xi * self.h} != dT = {self.dT}")

    @classmethod
    def make(cls, T: float, N: int, xi: int, h: float | None = None,
             L: int | None = None) -> "GridSpec":
        """Resolve the grid from T, N, xi and exactly one of h, L.

        If both are given they must be consistent; the one omitted is derived.
        """
        if N < 1:
            raise ConfigError(f"grid: N must be >= 1, got {N}")
        dT = T / N
        if h is None and L is None:
            raise ConfigError("grid: provide at least one of h, L")
        if L is None:
            L_float = dT / (xi * h)
            L = int(round(L_float))
            if L < 1 or not np.isclose(L, L_float, rtol=1e-9, atol=0.0):
                raise ConfigError(
                    f"grid: dT/(xi*h) = {L_float} is not a positive integer; "
                    f"choose h so the coarse step count per chunk is whole")
        if h is None:
            h = dT / (L * xi)
        return cls(T=T, N=N, dT=dT, xi=int(xi), L=int(L), h=float(h))

    @property
    def interface_times(self) -> Array:
        return np.arange(self.N + 1) * self.dT


@dataclass(frozen=True)
class Propagator:
    """A fixed-step RK map applied ``steps_per_call`` times per chunk."""

    tableau: ButcherTableau
    step: float
    steps_per_call: int

    def __post_init__(self):
        if self.step <= 0.0:
            raise ConfigError(f"propagator: step must be > 0, got {self.step}")
        if self.steps_per_call < 1:
            raise ConfigError("propagator: steps_per_call must be >= 1")


def fine_propagator(grid: GridSpec, tableau: ButcherTableau) -> Propagator:
    return Propagator(tableau=tableau, step=grid.h,
                      steps_per_call=grid.L * grid.xi)


def coarse_propagator(grid: GridSpec, tableau: ButcherTableau) -> Propagator:
    return Propagator(tableau=tableau, step=grid.xi * grid.h,
                      steps_per_call=grid.L)


def _step_explicit(tableau, system, t, u, h, tangent):
    """One explicit RK step; state arithmetic identical with/without tangent."""
    A, b, c = tableau.A, tableau.b, tableau.c
    s = tableau.s
    k = [None] * s
    kt = [None] * s
    for i in range(s):
        Y = u
        for j in range(i):
            if A[i, j] != 0.0:
                Y = Y + (h * A[i, j]) * k[j]
        ti = t + c[i] * h
        k[i] = system.rhs(ti, Y)
        if tangent is not None:
            G = tangent
            for j in range(i):
                if A[i, j] != 0.0:
                    G = G + (h * A[i, j]) * kt[j]
            kt[i] = system.jac(ti, Y) @ G
    u_next = u
    for i in range(s):
        if b[i] != 0.0:
            u_next = u_next + (h * b[i]) * k[i]
    if tangent is None:
        return u_next, None
    t_next = tangent
    for i in range(s):
        if b[i] != 0.0:
            t_next = t_next + (h * b[i]) * kt[i]
    return u_next, t_next


def _assemble_newton_matrix(tableau, system, t, Y, h):
    """I - h (A (x) J) with J evaluated per stage at the current stage values."""
    A, c = tableau.A, tableau.c
    s = tableau.s
    d = Y.shape[-1]
    batch = Y.shape[:-2]
    J = np.empty(batch + (s, d, d))
    for j in range(s):
        J[..., j, :, :] = system.jac(t + c[j] * h, Y[..., j, :])
    M = np.zeros(batch + (s * d, s * d))
    eye = np.eye(d)
    for i in range(s):
        for j in range(s):
            blk = M[..., i * d:(i + 1) * d, j * d:(j + 1) * d]
            if A[i, j] != 0.0:
                blk -= (h * A[i, j]) * J[..., j, :, :]
            if i == j:
                blk += eye
    return M, J


def _solve_small(M, rhs):
    """Batched linear solve of M x = rhs for matrix-shaped rhs.

    1x1 systems reduce to elementwise division, which keeps the arithmetic
    identical between batched and one-at-a-time evaluation.
    """
    if M.shape[-1] == 1 and M.shape[-2] == 1:
        return rhs / M[..., 0:1, 0:1]
    return np.linalg.solve(M, rhs)


def _step_implicit_single_stage(tableau, system, t, u, h, tangent,
                                tol, maxiter):
    """One-stage implicit step (e.g. backward Euler) without stage stacking."""
    a00 = tableau.A[0, 0]
    b0 = tableau.b[0]
    ts = t + tableau.c[0] * h
    d = u.shape[-1]
    eye = np.eye(d)
    y = u.copy()
    tol_eff = tol * np.maximum(1.0, np.max(np.abs(u), axis=-1))
    for _ in range(maxiter):
        f = system.rhs(ts, y)
        R = y - u - (h * a00) * f
        res = np.max(np.abs(R), axis=-1)
        converged = res <= tol_eff
        if np.all(converged):
            break
        M = eye - (h * a00) * system.jac(ts, y)
        delta = _solve_small(M, -R[..., np.newaxis])[..., 0]
        if np.all(~converged):
            y = y + delta
        else:
            y = np.where(converged[..., np.newaxis], y, y + delta)
    else:
        raise StepFailureError(
            f"implicit stage solve did not converge in {maxiter} iterations "
            f"(max residual {np.max(res):.3e})", residual=float(np.max(res)))
    u_next = u + (h * b0) * f
    if tangent is None:
        return u_next, None
    J = system.jac(ts, y)
    M = eye - (h * a00) * J
    G = _solve_small(M, tangent)
    return u_next, tangent + (h * b0) * (J @ G)


def _step_implicit(tableau, system, t, u, h, tangent,
                   tol=NEWTON_TOL, maxiter=NEWTON_MAXITER):
    """One implicit RK step: Newton iteration on the stacked stage values."""
    A, b, c = tableau.A, tableau.b, tableau.c
    s = tableau.s
    if s == 1:
        return _step_implicit_single_stage(tableau, system, t, u, h, tangent,
                                           tol, maxiter)
    d = u.shape[-1]
    batch = u.shape[:-1]

    Y = np.repeat(u[..., np.newaxis, :], s, axis=-2)
    F = np.empty_like(Y)
    scale = np.maximum(1.0, np.max(np.abs(u), axis=-1))
    tol_eff = tol * scale

    converged = np.zeros(batch, dtype=bool)
    for _ in range(maxiter):
        for j in range(s):
            F[..., j, :] = system.rhs(t + c[j] * h, Y[..., j, :])
        R = Y - u[..., np.newaxis, :] - h * np.einsum("ij,...jd->...id", A, F)
        res = np.max(np.abs(R), axis=(-2, -1))
        converged = res <= tol_eff
        if np.all(converged):
            break
        M, _ = _assemble_newton_matrix(tableau, system, t, Y, h)
        if s * d == 1:
            delta = (-R.reshape(batch + (1,)) / M[..., 0]).reshape(Y.shape)
        else:
            delta = np.linalg.solve(M, -R.reshape(batch + (s * d,))[..., np.newaxis])
            delta = delta[..., 0].reshape(batch + (s, d))
        # Converged batch elements are frozen so their arithmetic path does
        # not depend on what the rest of the batch is doing.
        if np.all(~converged):
            Y = Y + delta
        else:
            mask = (~converged)[..., np.newaxis, np.newaxis]
            Y = np.where(mask, Y + delta, Y)
    else:
        raise StepFailureError(
            f"implicit stage solve did not converge in {maxiter} iterations "
            f"(max residual {np.max(res):.3e})", residual=float(np.max(res)))

    u_next = u + h * np.einsum("i,...id->...d", b, F)
    if tangent is None:
        return u_next, None

    # Stage tangents solve the linearized stage equations at the converged Y.
    M, J = _assemble_newton_matrix(tableau, system, t, Y, h)
    m = tangent.shape[-1]
    rhs = np.concatenate([tangent] * s, axis=-2)
    if s * d == 1:
        G = rhs.reshape(batch + (s * d, m)) / M[..., 0:1]
    else:
        G = np.linalg.solve(M, rhs.reshape(batch + (s * d, m)))
    G = G.reshape(batch + (s, d, m))
    t_next = tangent + h * np.einsum("i,...idm->...dm", b, J @ G)
    return u_next, t_next


def rk_step(tableau: ButcherTableau, system: OdeSystem, t, u: Array,
            h: float) -> Array:
    """Advance ``u`` by one step of size ``h`` with the given tableau."""
    if h < 0.0:
        raise ConfigError(f"rk_step: h must be >= 0, got {h}")
    if h == 0.0:
        return u.copy()
    if tableau.is_explicit:
        u_next, _ = _step_explicit(tableau, system, t, u, h, None)
    else:
        u_next, _ = _step_implicit(tableau, system, t, u, h, None)
    return u_next


def rk_step_with_tangent(tableau: ButcherTableau, system: OdeSystem, t,
                         u: Array, tangent: Array, h: float):
    """One RK step carrying a tangent block (exact step-map derivative)."""
    if h == 0.0:
        return u.copy(), tangent.copy()
    if tableau.is_explicit:
        return _step_explicit(tableau, system, t, u, h, tangent)
    return _step_implicit(tableau, system, t, u, h, tangent)


def _check_finite(u, step_index):
    ok = np.isfinite(u).all(axis=-1)
    if np.all(ok):
        return
    if ok.ndim == 0:
        raise BlowUpError(f"state became non-finite at internal step {step_index}",
                          step_index=step_index)
    bad = int(np.argmin(ok))
    raise BlowUpError(
        f"state became non-finite at internal step {step_index} "
        f"(batch element {bad})", step_index=step_index, chunk_index=bad)


def _locate_blowup(prop, system, t0, u):
    """Re-run a failed chunk with per-step checks to name the failing step."""
    for i in range(prop.steps_per_call):
        t = t0 + i * prop.step
        u = rk_step(prop.tableau, system, t, u, prop.step)
        _check_finite(u, i)
    raise BlowUpError("chunk output non-finite but no failing step found")


def propagate(prop: Propagator, system: OdeSystem, t0, u: Array) -> Array:
    """Apply the propagator over one chunk: steps_per_call fixed RK steps.

    ``u`` may carry leading batch axes; ``t0`` may then be an array of
    matching shape (per-chunk start times).
    """
    t0 = np.asarray(t0, dtype=float)
    u_in = u
    for i in range(prop.steps_per_call):
        t = t0 + i * prop.step
        u = rk_step(prop.tableau, system, t, u, prop.step)
    # Finite check once per chunk; polynomial vector fields keep non-finite
    # values non-finite, so a blow-up always surfaces at the chunk end.  The
    # failed chunk is re-run stepwise only to report the failing step.
    if not np.isfinite(u).all():
        _locate_blowup(prop, system, t0, u_in)
    return u


def propagate_with_tangent(prop: Propagator, system: OdeSystem, t0, u: Array,
                           tangent: Array):
    """Chunk propagation carrying a tangent block alongside the state.

    The state output is bit-identical to :func:`propagate` on the same input:
    the state arithmetic is shared, the tangent recursion only reads it.
    """
    t0 = np.asarray(t0, dtype=float)
    u_in = u
    for i in range(prop.steps_per_call):
        t = t0 + i * prop.step
        u, tangent = rk_step_with_tangent(prop.tableau, system, t, u, tangent,
                                          prop.step)
    if not np.isfinite(u).all():
        _locate_blowup(prop, system, t0, u_in)
    if not np.isfinite(tangent).all():
        raise BlowUpError("tangent block became non-finite")
    return u, tangent


def propagate_with_jacobian(prop: Propagator, system: OdeSystem, t0,
                            u: Array):
    """Chunk propagation returning (output state, exact chunk-map Jacobian)."""
    d = u.shape[-1]
    eye = np.broadcast_to(np.eye(d), u.shape[:-1] + (d, d)).copy()
    return propagate_with_tangent(prop, system, t0, u, eye)
