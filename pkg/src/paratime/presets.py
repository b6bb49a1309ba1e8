"""Named experiment configurations.

These pin everything the scaling studies need: solver pair, grid family,
tolerance, and a starting state already settled onto the attractor (chaotic
runs started off-attractor spend their first chunks in a transient that is
not representative).  The starting states below were produced by integrating
the conventional seeds forward with RK4 (h = 1e-3): 20 time units for the
three-variable convection system, 10 for the cyclic chain.

Horizons are chosen so that, at the largest chunk count, the standard check
degenerates toward one iteration per chunk while the weighted checks stay
flat; chunk lengths remain whole multiples of the coarse step everywhere in
each sweep.
"""

from __future__ import annotations

from .config import SolveConfig, SweepConfig

LORENZ63_START = [13.793229089796364, 12.951847113617873, 34.901636990810765]

LORENZ96_START = [
    3.3586610288463623, -0.02875271196624417, -4.020715674224542,
    -0.12721210483216147, 4.723008888656288, 7.928824441915652,
    1.5659231754478282, 3.090984381504443, 1.5696150067353716,
    -2.5679901520116863, 2.3126302833464893, 4.437839902602332,
    5.841510806488787, -2.0715705131616207, -3.8408496451153793,
    0.4255584555468692, 5.77306512020044, 2.776972753694891,
    -2.7568210404619338, 2.0811704000780384, 2.7129416955616974,
    6.253647732597979, 3.1460442773808066, -6.01658137090393,
    3.671764427346999, 5.186969580604815, 5.68776580618963,
    -0.9609748101158772, 1.6275949315659226, 0.10126415382352902,
    7.119872973948007, 5.961834747875501, -1.8903056867568124,
    3.567265214485032, 6.941472440801234, -0.2596855694949578,
    0.2622267048602335, 5.39074310101683, 8.933207194326036,
    2.61401166128952]

# Benettin estimate on the standard chaotic regime (spinup 20, horizon 400).
LORENZ63_LAMBDA = 0.9062

_DOUBLINGS = [2, 4, 8, 16, 32, 64, 128]


def logistic_base() -> SolveConfig:
    return SolveConfig(system="logistic", u0=[0.5], fine="implicit_euler",
                       coarse="implicit_euler", T=1024.0, N=128, xi=100,
                       h=1e-3, eps=1e-12)


def lorenz63_base() -> SolveConfig:
    return SolveConfig(system="lorenz63", u0=list(LORENZ63_START), fine="rk4",
                       coarse="rk4", T=80.64, N=128, xi=100, h=1e-4, eps=1e-9,
                       lam=LORENZ63_LAMBDA)


def lorenz96_base() -> SolveConfig:
    return SolveConfig(system="lorenz96", u0=list(LORENZ96_START), fine="rk4",
                       coarse="rk4", T=64.0, N=128, xi=100, h=1e-4, eps=1e-9)


def table_logistic(mode: str = "strong") -> SweepConfig:
    return SweepConfig(base=logistic_base(), mode=mode, N_list=list(_DOUBLINGS),
                       criteria=[{"check": "standard", "weight": "unit"},
                                 {"check": "psi", "weight": "unit"}])


def table_lorenz63(mode: str = "strong") -> SweepConfig:
    return SweepConfig(base=lorenz63_base(), mode=mode, N_list=list(_DOUBLINGS),
                       criteria=[{"check": "standard", "weight": "unit"},
                                 {"check": "psi", "weight": "unit"},
                                 {"check": "psi", "weight": "lyapunov"},
                                 {"check": "psi", "weight": "lipschitz"}])


def table_lorenz96(mode: str = "strong") -> SweepConfig:
    return SweepConfig(base=lorenz96_base(), mode=mode, N_list=list(_DOUBLINGS),
                       criteria=[{"check": "standard", "weight": "unit"},
                                 {"check": "psi", "weight": "unit"},
                                 {"check": "psi", "weight": "lipschitz"}])


def serial_work_sweep() -> SweepConfig:
    """Horizon-doubling study at fixed chunk count, moderate coarsening."""
    base = SolveConfig(system="lorenz63", u0=list(LORENZ63_START), fine="rk4",
                       coarse="rk4", T=128.0, N=64, xi=10, h=1e-3, eps=1e-9,
                       lam=LORENZ63_LAMBDA)
    return SweepConfig(base=base, mode="time",
                       T_list=[16.0, 32.0, 64.0, 128.0],
                       criteria=[{"check": "standard", "weight": "unit"},
                                 {"check": "psi", "weight": "lipschitz"},
                                 {"check": "psi", "weight": "lyapunov"}])


PRESETS = {
    "logistic-single": logistic_base(),
    "lorenz63-single": lorenz63_base(),
    "lorenz96-single": lorenz96_base(),
    "table-logistic-strong": table_logistic("strong"),
    "table-logistic-weak": table_logistic("weak"),
    "table-lorenz63-strong": table_lorenz63("strong"),
    "table-lorenz63-weak": table_lorenz63("weak"),
    "table-lorenz96-strong": table_lorenz96("strong"),
    "table-lorenz96-weak": table_lorenz96("weak"),
    "serial-work-time-scaling": serial_work_sweep(),
}
