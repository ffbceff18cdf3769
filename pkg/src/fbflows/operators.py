"""Monotone-map and function oracles, proximal catalog, resolvent, sampling audits.

Maps act on finite-dimensional real vectors (1-D numpy arrays).  A set-valued
map enters only through its resolvent, so every oracle here is single-valued.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable, Optional

import numpy as np

Array = np.ndarray


def as_vector(x) -> Array:
    """Coerce to a finite 1-D float64 array (copies; rejects NaN/inf and empties)."""
    v = np.asarray(x, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("expected a nonempty 1-D vector, got shape %r" % (v.shape,))
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return v.copy()


@dataclasses.dataclass(frozen=True)
class MonotoneMap:
    """A single-valued monotone map given by pointwise evaluation.

    ``beta`` is the cocoercivity-style scale: the map is claimed to be
    (1/beta)-Lipschitz.  Claims are advisory; ``audit_map`` checks them.
    """

    eval: Callable[[Array], Array]
    beta: float
    description: str = ""

    def __call__(self, x: Array) -> Array:
        return self.eval(x)


@dataclasses.dataclass(frozen=True)
class ResolventOracle:
    """A maximally monotone operator accessed only through its resolvent.

    ``resolve(eta, x)`` returns the unique solution p of x in p + eta*A(p).
    """

    resolve: Callable[[float, Array], Array]
    description: str = ""


@dataclasses.dataclass(frozen=True)
class FunctionOracle:
    """A convex function with whatever first-order access it supports.

    ``prox(eta, x)`` minimizes f(p) + ||p - x||^2 / (2*eta).  ``gradient`` is
    present only for smooth entries.  ``strong_convexity`` is a claimed lower
    curvature bound (0 when unknown).
    """

    value: Callable[[Array], float]
    gradient: Optional[Callable[[Array], Array]] = None
    prox: Optional[Callable[[float, Array], Array]] = None
    strong_convexity: float = 0.0
    description: str = ""


def _check_eta(eta: float) -> float:
    eta = float(eta)
    if not (eta > 0.0) or not math.isfinite(eta):
        raise ValueError("step scale eta must be positive and finite, got %r" % eta)
    return eta


# ---------------------------------------------------------------------------
# proximal catalog


def zero_function() -> FunctionOracle:
    """f == 0.  Its prox is the identity for every eta."""
    return FunctionOracle(
        value=lambda x: 0.0,
        gradient=lambda x: np.zeros_like(as_vector(x)),
        prox=lambda eta, x: as_vector(x),
        description="zero",
    )


def l1_norm(w: float) -> FunctionOracle:
    """f(x) = w * ||x||_1 with weight w > 0.  Prox is soft thresholding."""
    w = float(w)
    if not (w > 0.0):
        raise ValueError("l1 weight must be positive, got %r" % w)

    def _prox(eta, x):
        eta = _check_eta(eta)
        x = as_vector(x)
        return np.sign(x) * np.maximum(np.abs(x) - eta * w, 0.0)

    return FunctionOracle(
        value=lambda x: w * float(np.sum(np.abs(as_vector(x)))),
        prox=_prox,
        description="l1_norm(w=%g)" % w,
    )


def scaled_sqnorm(c: float) -> FunctionOracle:
    """f(x) = (c/2) * ||x||^2 with c > 0.  Prox solves p + eta*c*p = x."""
    c = float(c)
    if not (c > 0.0):
        raise ValueError("square-norm scale must be positive, got %r" % c)
    return FunctionOracle(
        value=lambda x: 0.5 * c * float(np.dot(as_vector(x), as_vector(x))),
        gradient=lambda x: c * as_vector(x),
        prox=lambda eta, x: as_vector(x) / (1.0 + _check_eta(eta) * c),
        strong_convexity=c,
        description="scaled_sqnorm(c=%g)" % c,
    )


def box_indicator(lo: float, hi: float) -> FunctionOracle:
    """Indicator of the box [lo, hi]^d.  Prox is the componentwise projection."""
    lo, hi = float(lo), float(hi)
    if not (lo <= hi):
        raise ValueError("box needs lo <= hi, got [%r, %r]" % (lo, hi))

    def _value(x):
        x = as_vector(x)
        inside = np.all(x >= lo - 1e-12) and np.all(x <= hi + 1e-12)
        return 0.0 if inside else math.inf

    return FunctionOracle(
        value=_value,
        prox=lambda eta, x: (_check_eta(eta), np.clip(as_vector(x), lo, hi))[1],
        description="box_indicator(%g, %g)" % (lo, hi),
    )


def translated_linear(rho: float, c) -> FunctionOracle:
    """f(x) = (rho/2)*||x||^2 - <c, x> with rho > 0.

    Gradient rho*x - c; prox solves the shifted linear system in closed form.
    """
    rho = float(rho)
    if not (rho > 0.0):
        raise ValueError("curvature rho must be positive, got %r" % rho)
    c = as_vector(c)

    def _value(x):
        x = as_vector(x)
        return 0.5 * rho * float(np.dot(x, x)) - float(np.dot(c, x))

    return FunctionOracle(
        value=_value,
        gradient=lambda x: rho * as_vector(x) - c,
        prox=lambda eta, x: (as_vector(x) + _check_eta(eta) * c) / (1.0 + eta * rho),
        strong_convexity=rho,
        description="translated_linear(rho=%g)" % rho,
    )


_PROX_BUILDERS = {
    "zero": zero_function,
    "l1_norm": l1_norm,
    "scaled_sqnorm": scaled_sqnorm,
    "box_indicator": box_indicator,
    "translated_linear": translated_linear,
}


def build_prox(kind: str, **params) -> FunctionOracle:
    """Construct a catalog function by name.

    Known kinds: zero, l1_norm(w), scaled_sqnorm(c), box_indicator(lo, hi),
    translated_linear(rho, c).  Unknown names and out-of-range parameters are
    rejected.
    """
    try:
        builder = _PROX_BUILDERS[kind]
    except KeyError:
        raise ValueError(
            "unknown prox kind %r; known: %s" % (kind, sorted(_PROX_BUILDERS))
        ) from None
    return builder(**params)


# ---------------------------------------------------------------------------
# resolvents


def resolvent(a: ResolventOracle, eta: float, x: Array) -> Array:
    """Evaluate J_{eta A}(x) = (I + eta*A)^{-1} x.  Requires eta > 0."""
    eta = _check_eta(eta)
    return a.resolve(eta, as_vector(x))


def prox_resolvent(f: FunctionOracle) -> ResolventOracle:
    """Resolvent of the subdifferential of f, i.e. its prox map."""
    if f.prox is None:
        raise ValueError("function oracle %r has no prox" % (f.description,))
    return ResolventOracle(resolve=f.prox, description="prox of " + f.description)


def zero_operator() -> ResolventOracle:
    """A == 0; the resolvent is the identity for every eta."""
    return ResolventOracle(
        resolve=lambda eta, x: (_check_eta(eta), as_vector(x))[1],
        description="zero operator",
    )


def gradient_map(g: FunctionOracle, beta: float) -> MonotoneMap:
    """Wrap the gradient of a smooth oracle as a (1/beta)-Lipschitz map."""
    if g.gradient is None:
        raise ValueError("function oracle %r has no gradient" % (g.description,))
    beta = float(beta)
    if not (beta > 0.0):
        raise ValueError("beta must be positive, got %r" % beta)
    return MonotoneMap(eval=g.gradient, beta=beta, description="grad " + g.description)


# ---------------------------------------------------------------------------
# independent brute-force prox (1-D), used as an oracle in tests


def brute_force_prox(
    value: Callable,
    eta: float,
    x: float,
    halfwidth: float,
    n_grid: int = 10_000,
    n_refine: int = 90,
) -> float:
    """Minimize f(p) + (p - x)^2 / (2*eta) over a 1-D window by direct search.

    ``value`` must accept scalars or numpy arrays elementwise.  The search
    scans ``n_grid`` points on [x - halfwidth, x + halfwidth] and refines the
    best bracket by golden-section.  The window must contain the minimizer;
    the objective is strictly convex, so the bracket search is reliable.
    """
    eta = _check_eta(eta)
    if not (halfwidth > 0.0):
        raise ValueError("halfwidth must be positive")
    grid = np.linspace(x - halfwidth, x + halfwidth, n_grid)
    with np.errstate(invalid="ignore"):
        obj = np.asarray(value(grid), dtype=float) + (grid - x) ** 2 / (2.0 * eta)
    k = int(np.nanargmin(obj))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, n_grid - 1)]

    def phi(p):
        return float(value(p)) + (p - x) ** 2 / (2.0 * eta)

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c1 = b - invphi * (b - a)
    c2 = a + invphi * (b - a)
    f1, f2 = phi(c1), phi(c2)
    for _ in range(n_refine):
        if b - a < 1e-13 * (1.0 + abs(x)):
            break
        if f1 <= f2:
            b, c2, f2 = c2, c1, f1
            c1 = b - invphi * (b - a)
            f1 = phi(c1)
        else:
            a, c1, f1 = c1, c2, f2
            c2 = a + invphi * (b - a)
            f2 = phi(c2)
    return 0.5 * (a + b)


# ---------------------------------------------------------------------------
# sampling audits


@dataclasses.dataclass(frozen=True)
class MapAuditReport:
    """Sampled evidence for or against monotonicity / Lipschitz / cocoercivity claims."""

    n_pairs: int
    rho_claim: Optional[float]
    beta_claim: Optional[float]
    min_monotone_quotient: float
    max_lipschitz_ratio: float
    monotone_ok: bool
    lipschitz_ok: bool
    cocoercivity_violations: int
    cocoercivity_violation_fraction: float

    @property
    def passed(self) -> bool:
        return self.monotone_ok and self.lipschitz_ok


def sample_ball(rng: np.random.Generator, dim: int, radius: float = 10.0) -> Array:
    """Uniform sample from the closed ball of the given radius."""
    while True:
        u = rng.standard_normal(dim)
        n = float(np.linalg.norm(u))
        if n > 1e-12:
            break
    r = radius * rng.uniform() ** (1.0 / dim)
    return (r / n) * u


def audit_map(
    map_eval,
    dim: int,
    rho_claim: Optional[float] = None,
    beta_claim: Optional[float] = None,
    n_pairs: int = 1000,
    seed: int = 0,
    radius: float = 10.0,
    slack: float = 1e-9,
) -> MapAuditReport:
    """Probe a map on random pairs and test the claimed constants.

    Pairs are drawn uniformly from the ball of the given radius.  Checks, each
    with additive slack:

    * monotone quotient <dF, dx> / ||dx||^2 >= rho_claim,
    * Lipschitz ratio ||dF|| / ||dx|| <= 1 / beta_claim,
    * cocoercivity margin <dF, dx> - beta_claim * ||dF||^2, counted as a
      violation when below -1e-6 (reported, never enforced).

    ``map_eval`` is a callable or a MonotoneMap.  A claim left as None is
    skipped.  Sampling can only refute a claim, not certify it.
    """
    if isinstance(map_eval, MonotoneMap):
        map_eval = map_eval.eval
    if n_pairs < 1:
        raise ValueError("need at least one sample pair")
    rng = np.random.default_rng(seed)
    min_quot = math.inf
    max_ratio = 0.0
    coco_bad = 0
    for _ in range(n_pairs):
        x = sample_ball(rng, dim, radius)
        while True:
            y = sample_ball(rng, dim, radius)
            dx = x - y
            nx2 = float(np.dot(dx, dx))
            if nx2 > 1e-20:
                break
        df = np.asarray(map_eval(x), dtype=float) - np.asarray(map_eval(y), dtype=float)
        inner = float(np.dot(df, dx))
        min_quot = min(min_quot, inner / nx2)
        max_ratio = max(max_ratio, math.sqrt(float(np.dot(df, df)) / nx2))
        if beta_claim is not None:
            if inner - beta_claim * float(np.dot(df, df)) < -1e-6:
                coco_bad += 1
    monotone_ok = True if rho_claim is None else (min_quot >= rho_claim - slack)
    lipschitz_ok = True if beta_claim is None else (max_ratio <= 1.0 / beta_claim + slack)
    return MapAuditReport(
        n_pairs=n_pairs,
        rho_claim=rho_claim,
        beta_claim=beta_claim,
        min_monotone_quotient=min_quot,
        max_lipschitz_ratio=max_ratio,
        monotone_ok=monotone_ok,
        lipschitz_ok=lipschitz_ok,
        cocoercivity_violations=coco_bad,
        cocoercivity_violation_fraction=coco_bad / n_pairs,
    )


def check_gradient(f: FunctionOracle, x: Array, h: float = 1e-5) -> float:
    """Max relative error of the gradient oracle against central differences."""
    if f.gradient is None:
        raise ValueError("oracle has no gradient")
    x = as_vector(x)
    g = np.asarray(f.gradient(x), dtype=float)
    worst = 0.0
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        fd = (f.value(x + e) - f.value(x - e)) / (2.0 * h)
        worst = max(worst, abs(fd - g[i]) / (1.0 + abs(g[i])))
    return worst
