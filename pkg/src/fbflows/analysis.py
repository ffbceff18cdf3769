"""Empirical decay analysis: rate fits, theorem envelopes, Lyapunov monotonicity.

Envelope checks are pointwise at the trajectory samples; with the integrator's
dense output (hundreds of points) inter-sample violations are implausible at
the smoothness of these flows.  Empirical rates can legitimately exceed the
certified ones (the guarantees are one-sided), so only r_hat >= r - 0.05 is
asserted.
"""

from __future__ import annotations

import dataclasses
import json
import math
from typing import Callable, Optional

import numpy as np

from .certificates import LemmaCoefficients, RateCertificate
from .integrate import MetricSeries, Trajectory

UNDERFLOW_FLOOR = 1e-300


class RateFitError(ValueError):
    """Not enough positive tail samples to fit a decay rate."""


def fit_rate(t, y, tail_fraction: float = 0.25) -> float:
    """Least-squares decay exponent of y over the trailing window.

    Fits -log(y) = r*t + c on the last ``tail_fraction`` of the samples and
    returns the slope r.  Needs at least 10 samples above the underflow floor
    in the window.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise ValueError("t and y must be 1-D arrays of equal length")
    if not (0.0 < tail_fraction <= 1.0):
        raise ValueError("tail_fraction must lie in (0, 1], got %r" % tail_fraction)
    n = t.size
    k = max(int(math.ceil(tail_fraction * n)), 2)
    t_tail, y_tail = t[n - k:], y[n - k:]
    mask = y_tail > UNDERFLOW_FLOOR
    if int(mask.sum()) < 10:
        raise RateFitError(
            "only %d positive samples in the tail window (need 10); "
            "the metric underflowed, shorten t_end" % int(mask.sum()))
    slope = np.polyfit(t_tail[mask], -np.log(y_tail[mask]), 1)[0]
    return float(slope)


def build_envelope(cert: RateCertificate, h0: Optional[float] = None,
                   gap0: Optional[float] = None,
                   m: Optional[float] = None) -> Callable:
    """Closed-form envelope of the certificate's guarantee, anchored at t=0.

    fb1:   h0 * exp(-C*t)                      (needs h0 = ||x0 - x*||^2)
    grad1: gap0 * exp(-alpha*t)                (needs gap0)
    fb2:   h0 * exp(-(gl-1)*t) + m/(gl-2) * exp(-t)    (needs h0 and m = 2*M_raw)
    grad2: gap0 * exp(-(gl-1)*t) + m/(gl-2) * exp(-t)  (needs gap0 and m = M_raw)

    where gl is the certified gamma_lower.  The returned callable accepts
    scalars or arrays.
    """
    system = cert.system
    if system == "fb1":
        if h0 is None:
            raise ValueError("fb1 envelope needs h0")
        c_rate = cert.derived["C"]
        return lambda t: h0 * np.exp(-c_rate * np.asarray(t, dtype=float))
    if system == "grad1":
        if gap0 is None:
            raise ValueError("grad1 envelope needs gap0")
        alpha = cert.decay_exponent
        return lambda t: gap0 * np.exp(-alpha * np.asarray(t, dtype=float))
    if system in ("fb2", "grad2"):
        anchor = h0 if system == "fb2" else gap0
        if anchor is None or m is None:
            raise ValueError("%s envelope needs %s and m"
                             % (system, "h0" if system == "fb2" else "gap0"))
        gl = cert.derived["gamma_lower"]
        if not (gl > 2.0):
            raise ValueError("envelope formula needs gamma_lower > 2, got %r" % gl)

        def env(t, a=float(anchor), m=float(m), gl=gl):
            t = np.asarray(t, dtype=float)
            return a * np.exp(-(gl - 1.0) * t) + m / (gl - 2.0) * np.exp(-t)

        return env
    raise ValueError("unknown certificate system %r" % system)


@dataclasses.dataclass(frozen=True)
class RateReport:
    """Outcome of an envelope check plus the fitted-vs-certified rate comparison."""

    which: str
    n_samples: int
    violating_samples: int
    max_ratio: float
    worst_excess: float
    fitted_exponent: Optional[float]
    theoretical_exponent: Optional[float]
    rate_ok: bool
    passed: bool
    tol_abs: float
    tol_rel: float

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.as_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def verify_envelope(metrics: MetricSeries, which: str, envelope: Callable,
                    tol_abs: float = 1e-8, tol_rel: float = 1e-6,
                    rate: Optional[float] = None,
                    tail_fraction: float = 0.25) -> RateReport:
    """Check metric(t) <= envelope(t)*(1+tol_rel) + tol_abs at every sample.

    ``which`` selects the metric ('h' or 'gap').  When ``rate`` (the certified
    decay exponent) is given, the fitted tail rate must satisfy
    r_hat >= rate - 0.05; an underflowed tail skips the comparison.  Failures
    are report contents, never exceptions.
    """
    if which == "h":
        values = metrics.h
    elif which == "gap":
        if metrics.gap is None:
            raise ValueError("metrics carry no value gap")
        values = metrics.gap
    else:
        raise ValueError("which must be 'h' or 'gap', got %r" % which)
    env = np.asarray(envelope(metrics.t), dtype=float)
    allowed = env * (1.0 + tol_rel) + tol_abs
    excess = values - allowed
    violating = int(np.sum(excess > 0.0))
    pos = env > UNDERFLOW_FLOOR
    max_ratio = float(np.max(values[pos] / env[pos])) if np.any(pos) else 0.0
    fitted = None
    try:
        fitted = fit_rate(metrics.t, values, tail_fraction)
    except RateFitError:
        pass
    rate_ok = True
    if rate is not None and fitted is not None:
        rate_ok = fitted >= rate - 0.05
    return RateReport(
        which=which,
        n_samples=int(values.size),
        violating_samples=violating,
        max_ratio=max_ratio,
        worst_excess=float(np.max(excess)),
        fitted_exponent=fitted,
        theoretical_exponent=rate,
        rate_ok=rate_ok,
        passed=(violating == 0 and rate_ok),
        tol_abs=tol_abs,
        tol_rel=tol_rel,
    )


@dataclasses.dataclass(frozen=True)
class ChainReport:
    """Per-inequality violation counts for the value/distance sandwich."""

    n_samples: int
    results: tuple  # (name, violating count, worst excess)
    passed: bool

    def as_dict(self) -> dict:
        return {"n_samples": self.n_samples, "passed": self.passed,
                "results": [list(r) for r in self.results]}


def verify_value_chain(metrics: MetricSeries, rho: float, beta: float,
                       slack_scale: float = 1e-8) -> ChainReport:
    """Check the strong-convexity / descent-lemma sandwich at every sample:

    (rho/2)*h <= gap,  gap <= h/(2*beta),  rho*sqrt(h) <= gradnorm,

    each with additive slack slack_scale*(1 + |lhs| + |rhs|).
    """
    if metrics.gap is None or metrics.gradnorm is None:
        raise ValueError("chain check needs both gap and gradnorm")
    h, gap, gn = metrics.h, metrics.gap, metrics.gradnorm
    pairs = [
        ("(rho/2)*h <= gap", 0.5 * rho * h, gap),
        ("gap <= h/(2*beta)", gap, h / (2.0 * beta)),
        ("rho*sqrt(h) <= gradnorm", rho * np.sqrt(h), gn),
    ]
    results = []
    for name, lhs, rhs in pairs:
        slack = slack_scale * (1.0 + np.abs(lhs) + np.abs(rhs))
        excess = lhs - rhs - slack
        results.append((name, int(np.sum(excess > 0.0)), float(np.max(excess))))
    return ChainReport(
        n_samples=int(h.size),
        results=tuple(results),
        passed=all(r[1] == 0 for r in results),
    )


@dataclasses.dataclass(frozen=True)
class LyapunovReport:
    """Drift statistics of L(t) = e^t*(h' + (gamma(t)-1)*h + b2(t)*u) along samples."""

    n_samples: int
    initial: float
    final: float
    max_drift_rate: float
    drift_tolerance: float
    passed: bool

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def verify_lyapunov(traj: Trajectory, coeffs: LemmaCoefficients,
                    metrics: MetricSeries, drift_scale: float = 1e-6,
                    h_series=None, hdot_series=None) -> LyapunovReport:
    """Check that the proof-level Lyapunov quantity is nonincreasing.

    Uses the half-scaled distance convention h = ||x - x*||^2 / 2 with the
    exact derivative identity h' = <x - x*, v>; pass ``h_series`` and
    ``hdot_series`` to substitute another admissible h (e.g. a value gap).
    Nonincrease is asserted up to a drift of drift_scale*(1 + |L(0)|) per unit
    time between consecutive samples.
    """
    if traj.order != 2:
        raise ValueError("Lyapunov check applies to second-order trajectories")
    t = traj.t
    if h_series is None:
        h_series = 0.5 * metrics.h
        err = traj.x - metrics.x_star[None, :]
        hdot_series = np.einsum("ij,ij->i", err, traj.v)
    elif hdot_series is None:
        raise ValueError("custom h_series needs hdot_series")
    gam = np.array([coeffs.gamma(ti) for ti in t])
    b2 = np.array([coeffs.b2(ti) for ti in t])
    lyap = np.exp(t) * (hdot_series + (gam - 1.0) * h_series + b2 * metrics.u)
    tol = drift_scale * (1.0 + abs(float(lyap[0])))
    if t.size < 2:
        max_rate = 0.0
    else:
        max_rate = float(np.max(np.diff(lyap) / np.diff(t)))
    return LyapunovReport(
        n_samples=int(t.size),
        initial=float(lyap[0]),
        final=float(lyap[-1]),
        max_drift_rate=max_rate,
        drift_tolerance=tol,
        passed=max_rate <= tol,
    )


def write_envelope_csv(path, t, envelope: Callable) -> None:
    """Tabulate an envelope at the given times (same float format as trajectories)."""
    env = np.asarray(envelope(np.asarray(t, dtype=float)), dtype=float)
    with open(path, "w") as fh:
        fh.write("t,envelope\n")
        for ti, ei in zip(np.asarray(t, dtype=float), env):
            fh.write("%.17g,%.17g\n" % (ti, ei))


def emit_plot_script(path, metrics_csv: str, dim: int, which: str = "h",
                     envelope_csv: Optional[str] = None) -> None:
    """Write a gnuplot script plotting the chosen metric (log scale) vs time."""
    col = {"h": 2 + 2 * dim, "u": 3 + 2 * dim, "gap": 4 + 2 * dim,
           "gradnorm": 5 + 2 * dim}[which]
    lines = [
        "# gnuplot script: decay metric vs certified envelope",
        "set datafile separator comma",
        "set logscale y",
        "set xlabel 't'",
        "set ylabel '%s(t)'" % which,
        "set grid",
    ]
    plot = "plot '%s' skip 1 using 1:%d with lines title '%s'" % (metrics_csv, col, which)
    if envelope_csv is not None:
        plot += ", '%s' skip 1 using 1:2 with lines dashtype 2 title 'envelope'" % envelope_csv
    lines.append(plot)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
