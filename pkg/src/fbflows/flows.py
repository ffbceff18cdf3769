"""Right-hand sides of the four continuous-time flows.

Each builder returns a FlowRHS: a first-order field dx/dt = rhs(t, x) or a
second-order field d2x/dt2 = rhs(t, x, v).  Time-dependent relaxation and
damping enter through a Schedule.  The fields are defined for every t >= 0;
trajectories are understood as absolutely continuous solutions, so isolated
non-smooth points of the data are harmless.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable, Optional

import numpy as np

from .operators import FunctionOracle, MonotoneMap, ResolventOracle, as_vector


class ScheduleError(ValueError):
    """A schedule violates its declared bounds or monotonicity flags."""


@dataclasses.dataclass
class Schedule:
    """Time-dependent coefficients lambda(t), gamma(t), alpha(t) with declared bounds.

    ``lam`` is the relaxation and is always required.  ``gamma`` (damping) and
    ``alpha`` (a second-order relaxation floor profile) are optional.  Bounds
    and monotonicity flags are declarations; ``check`` probes them on a dense
    grid with finite differences.
    """

    lam: Callable[[float], float]
    lambda_lower: float
    lambda_upper: float
    gamma: Optional[Callable[[float], float]] = None
    alpha: Optional[Callable[[float], float]] = None
    gamma_nonincreasing: bool = False
    gamma_over_lambda_nonincreasing: bool = False

    def __post_init__(self):
        if not (0.0 < self.lambda_lower <= self.lambda_upper):
            raise ScheduleError(
                "need 0 < lambda_lower <= lambda_upper, got [%r, %r]"
                % (self.lambda_lower, self.lambda_upper)
            )

    @classmethod
    def constant(cls, lam: float, gamma: Optional[float] = None,
                 alpha: Optional[float] = None) -> "Schedule":
        lam = float(lam)
        if not (lam > 0.0):
            raise ScheduleError("constant relaxation must be positive, got %r" % lam)
        return cls(
            lam=lambda t: lam,
            lambda_lower=lam,
            lambda_upper=lam,
            gamma=(None if gamma is None else (lambda t, g=float(gamma): g)),
            alpha=(None if alpha is None else (lambda t, a=float(alpha): a)),
            gamma_nonincreasing=gamma is not None,
            gamma_over_lambda_nonincreasing=gamma is not None,
        )

    def check(self, t_end: float, n: int = 2000, slack: float = 1e-9) -> None:
        """Verify bounds and declared flags on an even grid over [0, t_end]."""
        ts = np.linspace(0.0, float(t_end), n)
        lam = np.array([self.lam(t) for t in ts])
        if np.any(lam < self.lambda_lower - slack) or np.any(lam > self.lambda_upper + slack):
            raise ScheduleError("lambda(t) leaves its declared bounds")
        if self.gamma is not None:
            gam = np.array([self.gamma(t) for t in ts])
            if self.gamma_nonincreasing and np.any(np.diff(gam) > slack):
                raise ScheduleError("gamma(t) declared nonincreasing but increases on the grid")
            if self.gamma_over_lambda_nonincreasing and np.any(np.diff(gam / lam) > slack):
                raise ScheduleError(
                    "gamma(t)/lambda(t) declared nonincreasing but increases on the grid"
                )
        elif self.gamma_nonincreasing or self.gamma_over_lambda_nonincreasing:
            raise ScheduleError("monotonicity flags set but no gamma(t) given")


@dataclasses.dataclass(frozen=True)
class FlowRHS:
    """A flow field.  order==1: rhs(t, x); order==2: rhs(t, x, v) (acceleration)."""

    order: int
    rhs: Callable
    description: str = ""

    def __call__(self, t, x, v=None):
        if self.order == 1:
            return self.rhs(t, x)
        return self.rhs(t, x, v)


def _forward_backward_step(a: ResolventOracle, b: MonotoneMap, eta: float, x):
    return a.resolve(eta, x - eta * b.eval(x))


def fb1_rhs(a: ResolventOracle, b: MonotoneMap, eta: float, sched: Schedule) -> FlowRHS:
    """First-order flow dx/dt = lambda(t) * (J_{eta A}(x - eta*B(x)) - x)."""
    eta = float(eta)
    if not (eta > 0.0) or not math.isfinite(eta):
        raise ValueError("eta must be positive and finite, got %r" % eta)

    def rhs(t, x):
        x = np.asarray(x, dtype=float)
        return sched.lam(t) * (_forward_backward_step(a, b, eta, x) - x)

    return FlowRHS(order=1, rhs=rhs, description="first-order forward-backward flow")


def fb2_rhs(a: ResolventOracle, b: MonotoneMap, eta: float, sched: Schedule) -> FlowRHS:
    """Damped second-order flow x'' + gamma(t) x' + lambda(t) (x - J_{eta A}(x - eta*B(x))) = 0."""
    eta = float(eta)
    if not (eta > 0.0) or not math.isfinite(eta):
        raise ValueError("eta must be positive and finite, got %r" % eta)
    if sched.gamma is None:
        raise ValueError("second-order flow needs a damping gamma(t) in the schedule")

    def rhs(t, x, v):
        x = np.asarray(x, dtype=float)
        return -sched.gamma(t) * np.asarray(v, dtype=float) - sched.lam(t) * (
            x - _forward_backward_step(a, b, eta, x)
        )

    return FlowRHS(order=2, rhs=rhs, description="second-order forward-backward flow")


def grad1_rhs(g: FunctionOracle, sched: Schedule) -> FlowRHS:
    """Relaxed gradient flow dx/dt = -lambda(t) * grad g(x)."""
    if g.gradient is None:
        raise ValueError("gradient flow needs a smooth oracle with a gradient")

    def rhs(t, x):
        return -sched.lam(t) * np.asarray(g.gradient(np.asarray(x, dtype=float)), dtype=float)

    return FlowRHS(order=1, rhs=rhs, description="first-order gradient flow")


def grad2_rhs(g: FunctionOracle, sched: Schedule) -> FlowRHS:
    """Damped second-order gradient flow x'' + gamma(t) x' + lambda(t) grad g(x) = 0."""
    if g.gradient is None:
        raise ValueError("gradient flow needs a smooth oracle with a gradient")
    if sched.gamma is None:
        raise ValueError("second-order flow needs a damping gamma(t) in the schedule")

    def rhs(t, x, v):
        grad = np.asarray(g.gradient(np.asarray(x, dtype=float)), dtype=float)
        return -sched.gamma(t) * np.asarray(v, dtype=float) - sched.lam(t) * grad

    return FlowRHS(order=2, rhs=rhs, description="second-order gradient flow")


def proxgrad1_rhs(f: FunctionOracle, g: FunctionOracle, eta: float,
                  sched: Schedule) -> FlowRHS:
    """The first-order flow specialized to A = subdifferential of f, B = grad g.

    Built directly from the prox of f, bypassing the resolvent wrapper; used
    to cross-check fb1_rhs.
    """
    if f.prox is None or g.gradient is None:
        raise ValueError("need prox of f and gradient of g")
    eta = float(eta)
    if not (eta > 0.0):
        raise ValueError("eta must be positive, got %r" % eta)

    def rhs(t, x):
        x = np.asarray(x, dtype=float)
        step = f.prox(eta, x - eta * np.asarray(g.gradient(x), dtype=float))
        return sched.lam(t) * (step - x)

    return FlowRHS(order=1, rhs=rhs, description="proximal-gradient flow")


def residual(a: ResolventOracle, b: MonotoneMap, eta: float, x) -> float:
    """Fixed-point residual ||x - J_{eta A}(x - eta*B(x))||; zero exactly at solutions."""
    x = as_vector(x)
    return float(np.linalg.norm(x - _forward_backward_step(a, b, eta, x)))
