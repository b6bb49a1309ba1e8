"""Test problems: right-hand sides with analytic Jacobians.

Each system is a plain container of callables.  Right-hand sides and
Jacobians are vectorized over leading axes: ``rhs(t, u)`` accepts ``u``
of shape ``(..., d)`` and returns the same shape, ``jac(t, u)`` returns
``(..., d, d)``.  All built-in systems are autonomous and ignore ``t``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError

Array = np.ndarray


@dataclass(frozen=True)
class OdeSystem:
    """An autonomous ODE u' = f(u) with analytic Jacobian.

    ``known_lambda`` is the leading Lyapunov exponent per unit time, when a
    reliable literature value exists; it is informational only and never
    used implicitly by solvers.
    """

    name: str
    dim: int
    params: dict = field(default_factory=dict)
    rhs: Callable[[float, Array], Array] = None
    jac: Callable[[float, Array], Array] = None
    known_lambda: Optional[float] = None


def make_logistic() -> OdeSystem:
    """Scalar logistic growth u' = u(1 - u)."""

    def rhs(t, u):
        return u * (1.0 - u)

    def jac(t, u):
        return (1.0 - 2.0 * u)[..., np.newaxis]

    return OdeSystem(name="logistic", dim=1, params={}, rhs=rhs, jac=jac,
                     known_lambda=-1.0)


def make_linear(a: float = 1.0) -> OdeSystem:
    """Scalar linear test problem u' = a u (growth rate exactly ``a``)."""

    def rhs(t, u):
        return a * u

    def jac(t, u):
        out = np.empty(u.shape + (1,))
        out[...] = a
        return out

    return OdeSystem(name="linear", dim=1, params={"a": a}, rhs=rhs, jac=jac,
                     known_lambda=a)


def make_lorenz63(sigma: float = 10.0, rho: float = 28.0,
                  b: float = 8.0 / 3.0) -> OdeSystem:
    """Three-variable convection model in its chaotic standard regime."""

    def rhs(t, u):
        x, y, z = u[..., 0], u[..., 1], u[..., 2]
        out = np.empty_like(u)
        out[..., 0] = sigma * (y - x)
        out[..., 1] = x * (rho - z) - y
        out[..., 2] = x * y - b * z
        return out

    def jac(t, u):
        x, y, z = u[..., 0], u[..., 1], u[..., 2]
        out = np.zeros(u.shape + (3,))
        out[..., 0, 0] = -sigma
        out[..., 0, 1] = sigma
        out[..., 1, 0] = rho - z
        out[..., 1, 1] = -1.0
        out[..., 1, 2] = -x
        out[..., 2, 0] = y
        out[..., 2, 1] = x
        out[..., 2, 2] = -b
        return out

    return OdeSystem(name="lorenz63", dim=3,
                     params={"sigma": sigma, "rho": rho, "b": b},
                     rhs=rhs, jac=jac, known_lambda=0.9056)


def make_lorenz96(D: int = 40, F: float = 8.0) -> OdeSystem:
    """Cyclic advection-forcing chain x_i' = (x_{i+1} - x_{i-2}) x_{i-1} - x_i + F.

    Indices are cyclic modulo ``D``; requires ``D >= 4`` so the four coupled
    neighbours are distinct.
    """
    if D < 4:
        raise ConfigError(f"lorenz96 needs dimension D >= 4, got D={D}")

    idx = np.arange(D)
    ip1 = (idx + 1) % D
    im1 = (idx - 1) % D
    im2 = (idx - 2) % D

    def rhs(t, u):
        return (u[..., ip1] - u[..., im2]) * u[..., im1] - u + F

    def jac(t, u):
        out = np.zeros(u.shape + (D,))
        out[..., idx, ip1] = u[..., im1]
        out[..., idx, im2] = -u[..., im1]
        out[..., idx, im1] = u[..., ip1] - u[..., im2]
        out[..., idx, idx] += -1.0
        return out

    # known_lambda: literature value for the standard D=40, F=8 setup.
    lam = 1.67 if (D == 40 and F == 8.0) else None
    return OdeSystem(name="lorenz96", dim=D, params={"D": D, "F": F},
                     rhs=rhs, jac=jac, known_lambda=lam)


_BUILDERS = {
    "logistic": make_logistic,
    "lorenz63": make_lorenz63,
    "lorenz96": make_lorenz96,
}


def build_system(name: str, params: dict | None = None) -> OdeSystem:
    """Construct a built-in system by name with optional parameter overrides."""
    if name not in _BUILDERS:
        raise ConfigError(
            f"unknown system {name!r}; expected one of {sorted(_BUILDERS)}")
    params = dict(params or {})
    try:
        return _BUILDERS[name](**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for system {name!r}: {exc}") from exc


def default_initial_state(system: OdeSystem) -> Array:
    """Conventional starting point for a built-in system.

    logistic: small positive seed below the carrying capacity;
    lorenz63: the classic (1, 1, 1); lorenz96: rest state ``x_i = F`` with a
    small perturbation on the first coordinate.  All are overridable through
    the run configuration.
    """
    if system.name == "logistic":
        return np.array([1e-3])
    if system.name == "lorenz63":
        return np.array([1.0, 1.0, 1.0])
    if system.name == "lorenz96":
        F = system.params["F"]
        u0 = np.full(system.dim, F, dtype=float)
        u0[0] += 0.01
        return u0
    if system.name == "linear":
        return np.array([1.0])
    raise ConfigError(f"no default initial state for system {system.name!r}")
