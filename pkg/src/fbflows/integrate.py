"""Numerical integration of the flows with dense trajectory recording.

The adaptive path is the Dormand-Prince 5(4) embedded pair with PI step-size
control and a 4th-order dense interpolant, so trajectories can be sampled on
an even grid much finer than the accepted steps.  A plain fixed-step RK4 is
included for order checks.  Second-order flows are integrated by state
augmentation (x, v).
"""

from __future__ import annotations

import dataclasses
import math
from typing import Optional

import numpy as np

from .flows import FlowRHS


class IntegrationError(RuntimeError):
    """Integration aborted; ``diagnostics`` holds where and why."""

    def __init__(self, message: str, diagnostics: Optional[dict] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclasses.dataclass(frozen=True)
class Adaptive:
    """Embedded-pair control: local error below abs_tol + rel_tol*|y|."""

    rel_tol: float = 1e-9
    abs_tol: float = 1e-12


@dataclasses.dataclass(frozen=True)
class FixedStep:
    """Fixed-step RK4; the step is rounded to divide the interval evenly."""

    h: float


@dataclasses.dataclass
class Trajectory:
    """Sampled solution: times (strictly increasing), states, velocities.

    For first-order flows ``v`` holds the rhs re-evaluated at the samples (the
    exact velocity), not a finite difference.  Sample 0 is the initial data,
    untouched by interpolation.
    """

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    order: int
    meta: dict


@dataclasses.dataclass
class MetricSeries:
    """Decay metrics along a trajectory, in the un-halved convention.

    h(t) = ||x - x*||^2, u(t) = ||dx/dt||^2, gap(t) = F(x) - F(x*) when a
    value oracle exists, gradnorm(t) = ||grad g(x)|| when g is smooth.
    """

    t: np.ndarray
    h: np.ndarray
    u: np.ndarray
    gap: Optional[np.ndarray]
    gradnorm: Optional[np.ndarray]
    x_star: np.ndarray


# Dormand-Prince 5(4) tableau.
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
# 5th-order weights coincide with the last tableau row (first-same-as-last).
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)
# Dense-output coefficients of the 4th-order interpolant.
_D = (
    -12715105075 / 11282082432,
    0.0,
    87487479700 / 32700410799,
    -10690763975 / 1880347072,
    701980252875 / 199316789632,
    -1453857185 / 822651844,
    69997945 / 29380423,
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_PI_BETA = 0.04
_EXPO = 0.2 - 0.75 * _PI_BETA


def _rms(v) -> float:
    return float(np.sqrt(np.mean(np.square(v))))


def _initial_step(fun, t0, y0, f0, t_end, rtol, atol):
    sc = atol + rtol * np.abs(y0)
    d0, d1 = _rms(y0 / sc), _rms(f0 / sc)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    f1 = fun(t0 + h0, y1)
    d2 = _rms((f1 - f0) / sc) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h0, h1, t_end - t0)


def _dopri5(fun, t0, y0, t_end, rtol, atol, max_steps=1_000_000):
    """Returns (segment list, stats).  Each segment: (t_left, h, cont[5])."""
    span = t_end - t0
    t = t0
    y = np.array(y0, dtype=float)
    k1 = np.asarray(fun(t, y), dtype=float)
    if not np.all(np.isfinite(k1)):
        raise IntegrationError("non-finite rhs at the initial point",
                               {"t": t, "y": y.tolist()})
    h = _initial_step(fun, t0, y, k1, t_end, rtol, atol)
    n_rhs = 2  # initial-step estimator
    n_acc = n_rej = 0
    facold = 1e-4
    rejected = False
    segments = []
    ks = [None] * 7

    while t < t_end - 1e-14 * max(span, 1.0):
        if n_acc + n_rej >= max_steps:
            raise IntegrationError(
                "step budget exhausted",
                {"t": t, "accepted": n_acc, "rejected": n_rej})
        if h < 1e-14 * max(span, 1.0):
            raise IntegrationError(
                "step size underflow",
                {"t": t, "h": h, "accepted": n_acc, "rejected": n_rej})
        h = min(h, t_end - t)

        ks[0] = k1
        for i in range(1, 7):
            yi = y + h * sum(a * ks[j] for j, a in enumerate(_A[i]) if a != 0.0)
            ks[i] = np.asarray(fun(t + _C[i] * h, yi), dtype=float)
        n_rhs += 6
        y_new = yi  # stage 7 argument is the 5th-order solution (FSAL)
        err_vec = h * sum(e * ks[j] for j, e in enumerate(_E) if e != 0.0)
        if not (np.all(np.isfinite(y_new)) and np.all(np.isfinite(err_vec))):
            raise IntegrationError(
                "non-finite state during integration",
                {"t": t, "h": h, "accepted": n_acc, "rejected": n_rej})
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = _rms(err_vec / sc)

        fac11 = err ** _EXPO if err > 0.0 else 1e-10
        if err <= 1.0:
            # accept; PI growth limited by the previous error
            facold_term = facold ** _PI_BETA
            fac = fac11 / facold_term
            fac = max(1.0 / _MAX_FACTOR, min(1.0 / _MIN_FACTOR, fac / _SAFETY))
            h_new = h / fac
            facold = max(err, 1e-4)

            ydiff = y_new - y
            bspl = h * ks[0] - ydiff
            cont5 = h * sum(d * ks[j] for j, d in enumerate(_D) if d != 0.0)
            segments.append((t, h, (y.copy(), ydiff, bspl,
                                    ydiff - h * ks[6] - bspl, cont5)))
            t = t + h
            y = y_new
            k1 = ks[6]
            n_acc += 1
            if rejected:
                h_new = min(h_new, h)
            rejected = False
            h = h_new
        else:
            h = h / min(1.0 / _MIN_FACTOR, fac11 / _SAFETY)
            rejected = True
            n_rej += 1

    stats = {"accepted": n_acc, "rejected": n_rej, "rhs_evaluations": n_rhs}
    return segments, t, y, stats


def _interp(segments, seg_lefts, tau):
    idx = int(np.searchsorted(seg_lefts, tau, side="right")) - 1
    idx = min(max(idx, 0), len(segments) - 1)
    t_left, h, (c1, c2, c3, c4, c5) = segments[idx]
    th = (tau - t_left) / h
    return c1 + th * (c2 + (1.0 - th) * (c3 + th * (c4 + (1.0 - th) * c5)))


def integrate(flow: FlowRHS, x0, v0=None, t_end: float = 10.0,
              control=None, n_dense: int = 500) -> Trajectory:
    """Integrate a flow over [0, t_end] and return a densely sampled Trajectory.

    Adaptive control (the default) records every accepted step plus at least
    ``n_dense`` evenly spaced interpolated samples; fixed-step control records
    the step points.  Second-order flows need ``v0``.
    """
    t_end = float(t_end)
    if not (t_end > 0.0):
        raise ValueError("t_end must be positive, got %r" % t_end)
    if control is None:
        control = Adaptive()
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    dim = x0.size
    if flow.order == 2:
        if v0 is None:
            raise ValueError("second-order flow needs initial velocity v0")
        v0 = np.atleast_1d(np.asarray(v0, dtype=float))
        y0 = np.concatenate([x0, v0])

        def fun(t, y):
            return np.concatenate([y[dim:],
                                   np.asarray(flow.rhs(t, y[:dim], y[dim:]), dtype=float)])
    elif flow.order == 1:
        if v0 is not None:
            raise ValueError("first-order flow takes no v0")
        y0 = x0.copy()

        def fun(t, y):
            return np.asarray(flow.rhs(t, y), dtype=float)
    else:
        raise ValueError("unsupported flow order %r" % flow.order)

    if isinstance(control, FixedStep):
        h = float(control.h)
        if not (h > 0.0):
            raise ValueError("fixed step must be positive")
        n = max(1, int(round(t_end / h)))
        hh = t_end / n
        ts = [0.0]
        ys = [y0]
        y = y0
        for i in range(n):
            t = i * hh
            k1 = np.asarray(fun(t, y), dtype=float)
            k2 = np.asarray(fun(t + hh / 2, y + hh / 2 * k1), dtype=float)
            k3 = np.asarray(fun(t + hh / 2, y + hh / 2 * k2), dtype=float)
            k4 = np.asarray(fun(t + hh, y + hh * k3), dtype=float)
            y = y + (hh / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(y)):
                raise IntegrationError("non-finite state during integration",
                                       {"t": t + hh, "step": i})
            ts.append((i + 1) * hh)
            ys.append(y)
        ts = np.array(ts)
        ts[-1] = t_end
        ys = np.array(ys)
        meta = {"solver": "rk4", "h": hh, "accepted": n, "rejected": 0,
                "rhs_evaluations": 4 * n}
    else:
        rtol, atol = float(control.rel_tol), float(control.abs_tol)
        if not (rtol > 0.0 and atol > 0.0):
            raise ValueError("tolerances must be positive")
        segments, t_fin, y_fin, stats = _dopri5(fun, 0.0, y0, t_end, rtol, atol)
        step_ts = np.array([s[0] for s in segments] + [t_fin])
        dense_ts = np.linspace(0.0, t_end, max(int(n_dense), 2))
        ts = np.concatenate([step_ts, dense_ts])
        ts.sort(kind="stable")
        keep = np.ones(ts.size, dtype=bool)
        keep[1:] = np.diff(ts) > 1e-12 * max(t_end, 1.0)
        ts = ts[keep]
        seg_lefts = step_ts[:-1]
        ys = np.empty((ts.size, y0.size))
        ys[0] = y0
        for i in range(1, ts.size):
            ys[i] = y_fin if ts[i] >= t_fin else _interp(segments, seg_lefts, ts[i])
        meta = {"solver": "dopri5(4)-pi", "rel_tol": rtol, "abs_tol": atol, **stats}

    if flow.order == 2:
        x = ys[:, :dim]
        v = ys[:, dim:]
    else:
        x = ys
        v = np.array([np.asarray(flow.rhs(t, xi), dtype=float)
                      for t, xi in zip(ts, x)])
    return Trajectory(t=ts, x=x, v=v, order=flow.order, meta=meta)


def record_metrics(traj: Trajectory, problem) -> MetricSeries:
    """Compute h, u, gap and gradnorm along a trajectory against problem ground truth."""
    x_star = getattr(problem, "x_star", None)
    if x_star is None:
        raise ValueError("problem has no ground-truth solution x_star")
    x_star = np.asarray(x_star, dtype=float)
    err = traj.x - x_star[None, :]
    h = np.einsum("ij,ij->i", err, err)
    u = np.einsum("ij,ij->i", traj.v, traj.v)

    f = getattr(problem, "f", None)
    g = getattr(problem, "g", None)
    gap = None
    if f is not None or g is not None:
        def total(x):
            s = 0.0
            if f is not None:
                s += float(f.value(x))
            if g is not None:
                s += float(g.value(x))
            return s

        base = total(x_star)
        gap = np.array([total(xi) for xi in traj.x]) - base
        if np.min(gap) < -1e-10:
            raise ValueError(
                "value gap fell below the -1e-10 floor (min %g); x_star is suspect"
                % float(np.min(gap)))
    gradnorm = None
    if g is not None and g.gradient is not None:
        gradnorm = np.array([float(np.linalg.norm(g.gradient(xi))) for xi in traj.x])
    return MetricSeries(t=traj.t, h=h, u=u, gap=gap, gradnorm=gradnorm, x_star=x_star)


def to_csv(traj: Trajectory, metrics: Optional[MetricSeries], path) -> None:
    """Write `t,x_0..,v_0..,h,u,gap,gradnorm` rows with 17 significant digits."""
    dim = traj.x.shape[1]
    cols = ["t"] + ["x_%d" % i for i in range(dim)] + ["v_%d" % i for i in range(dim)]
    cols += ["h", "u", "gap", "gradnorm"]
    n = traj.t.size

    def fmt(v):
        return "%.17g" % v

    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for i in range(n):
            row = [fmt(traj.t[i])]
            row += [fmt(v) for v in traj.x[i]]
            row += [fmt(v) for v in traj.v[i]]
            if metrics is not None:
                row.append(fmt(metrics.h[i]))
                row.append(fmt(metrics.u[i]))
                row.append(fmt(metrics.gap[i]) if metrics.gap is not None else "nan")
                row.append(fmt(metrics.gradnorm[i]) if metrics.gradnorm is not None
                           else "nan")
            else:
                row += ["nan", "nan", "nan", "nan"]
            fh.write(",".join(row) + "\n")
