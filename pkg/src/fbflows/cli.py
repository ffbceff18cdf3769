"""Config-driven experiment runner: certify, simulate, verify, sweep, list.

Configs are JSON documents (schema documented in the README).  Artifacts are
CSV tables, JSON reports and a gnuplot script per run.  Exit codes: 0 all
checks pass, 1 a certificate or verification failed, 2 unknown problem,
3 system kind incompatible with the instance, 4 malformed config.
"""

from __future__ import annotations

import argparse
import dataclasses
import itertools
import json
import math
import os
import sys
from typing import Optional

import numpy as np

from . import __version__, analysis, certificates, flows, integrate, problems
from .certificates import CertificateError
from .flows import Schedule, ScheduleError

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_UNKNOWN_PROBLEM = 2
EXIT_INCOMPATIBLE = 3
EXIT_BAD_CONFIG = 4


class ConfigError(ValueError):
    """The configuration document is malformed."""


class IncompatibleSystemError(ValueError):
    """The requested system kind cannot run on the chosen instance."""


_SYSTEMS = ("fb1", "fb2", "grad1", "grad2")
_PARAM_KEYS = {
    "fb1": {"alpha", "eta", "lambda"},
    "grad1": {"alpha", "lambda"},
    "fb2": {"alpha", "delta", "lambda", "gamma"},
    "grad2": {"alpha_bar", "alpha", "lambda", "gamma"},
}


@dataclasses.dataclass
class ExperimentConfig:
    """Validated experiment description (see README for the JSON schema)."""

    problem: object           # registry name or inline descriptor dict
    system: str
    params: dict
    integrator: dict
    initial: dict
    sweep: dict
    seed: int
    output_dir: Optional[str]
    raw: dict

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config root must be a JSON object")
        problem = doc.get("problem")
        if not isinstance(problem, (str, dict)) or not problem:
            raise ConfigError("config needs a 'problem' (registry name or descriptor)")
        system = doc.get("system")
        if system not in _SYSTEMS:
            raise ConfigError("config needs 'system' in %s, got %r"
                              % ("/".join(_SYSTEMS), system))
        params = doc.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError("'params' must be an object")
        for banned in ("rho", "beta"):
            if banned in params:
                raise ConfigError(
                    "'%s' cannot be overridden; it is read from the instance" % banned)
        unknown = set(params) - _PARAM_KEYS[system]
        if unknown:
            raise ConfigError("parameters %s do not apply to system '%s'"
                              % (sorted(unknown), system))
        integrator = doc.get("integrator", {})
        initial = doc.get("initial", {})
        sweep = doc.get("sweep", {})
        for name, blk in [("integrator", integrator), ("initial", initial),
                          ("sweep", sweep)]:
            if not isinstance(blk, dict):
                raise ConfigError("'%s' must be an object" % name)
        seed = doc.get("seed", 0)
        if not isinstance(seed, int) or seed < 0:
            raise ConfigError("'seed' must be a nonnegative integer")
        return cls(problem=problem, system=system, params=params,
                   integrator=integrator, initial=initial, sweep=sweep,
                   seed=seed, output_dir=doc.get("output_dir"), raw=doc)


def _profile(spec, name: str):
    """Resolve a scalar-or-profile parameter to (fn, lo, hi, trend).

    trend: -1 nonincreasing, 0 constant, +1 nondecreasing.
    """
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        v = float(spec)
        if not (v > 0.0) or not math.isfinite(v):
            raise ConfigError("'%s' must be positive and finite, got %r" % (name, spec))
        return (lambda t, v=v: v), v, v, 0
    if isinstance(spec, dict):
        kind = spec.get("profile")
        if kind == "constant":
            return _profile(spec.get("value"), name)
        if kind == "exp_ramp":
            try:
                start, end, rate = (float(spec["start"]), float(spec["end"]),
                                    float(spec["rate"]))
            except (KeyError, TypeError, ValueError):
                raise ConfigError("'%s' exp_ramp needs numeric start/end/rate" % name)
            if rate <= 0.0 or start <= 0.0 or end <= 0.0:
                raise ConfigError("'%s' exp_ramp needs positive start/end/rate" % name)

            def fn(t, a=start, b=end, r=rate):
                return b + (a - b) * math.exp(-r * t)

            trend = 0 if start == end else (1 if end > start else -1)
            return fn, min(start, end), max(start, end), trend
        raise ConfigError("unknown profile %r for '%s'" % (kind, name))
    raise ConfigError("'%s' must be a number or a profile object, got %r" % (name, spec))


def _require(params: dict, key: str):
    if key not in params:
        raise ConfigError("system parameter '%s' is required" % key)
    return params[key]


def _build_schedule(cfg: ExperimentConfig) -> Schedule:
    params = cfg.params
    lam_fn, lam_lo, lam_hi, lam_trend = _profile(_require(params, "lambda"), "lambda")
    gamma_fn = alpha_fn = None
    gamma_noninc = over_noninc = False
    if cfg.system in ("fb2", "grad2"):
        gamma_fn, _, _, g_trend = _profile(_require(params, "gamma"), "gamma")
        gamma_noninc = g_trend <= 0
        over_noninc = g_trend <= 0 and lam_trend >= 0
    if cfg.system == "grad2" and "alpha" in params:
        alpha_fn, _, _, _ = _profile(params["alpha"], "alpha")
    return Schedule(
        lam=lam_fn,
        lambda_lower=lam_lo,
        lambda_upper=lam_hi,
        gamma=gamma_fn,
        alpha=alpha_fn,
        gamma_nonincreasing=gamma_noninc,
        gamma_over_lambda_nonincreasing=over_noninc,
    )


def _scalar(params: dict, key: str) -> float:
    v = _require(params, key)
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ConfigError("'%s' must be a number, got %r" % (key, v))
    return float(v)


def _load_problem(cfg: ExperimentConfig) -> problems.ProblemInstance:
    if isinstance(cfg.problem, str):
        return problems.get_problem(cfg.problem)
    try:
        return problems.from_descriptor(cfg.problem)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError("bad inline problem descriptor: %s" % exc)


def _check_compat(cfg: ExperimentConfig, inst: problems.ProblemInstance) -> None:
    if cfg.system in ("grad1", "grad2"):
        if inst.g is None or inst.g.gradient is None:
            raise IncompatibleSystemError(
                "system '%s' needs a smooth objective; instance '%s' has none"
                % (cfg.system, inst.name))
        if inst.f is not None and not _is_zero_f(inst):
            raise IncompatibleSystemError(
                "system '%s' minimizes g alone, but instance '%s' has a nonsmooth "
                "part; its ground truth solves f+g" % (cfg.system, inst.name))


def _is_zero_f(inst) -> bool:
    return inst.f is not None and inst.f.description == "zero"


def _t_grid_end(cfg: ExperimentConfig) -> float:
    t_end = cfg.integrator.get("t_end")
    return float(t_end) if t_end else 50.0


def _certify(cfg: ExperimentConfig, inst, sched: Schedule):
    p = cfg.params
    if cfg.system == "fb1":
        return certificates.certify_fb1(inst.rho, inst.beta, sched.lambda_lower,
                                        sched.lambda_upper, _scalar(p, "alpha"),
                                        _scalar(p, "eta"))
    if cfg.system == "grad1":
        return certificates.certify_grad1(inst.rho, inst.beta, sched.lambda_lower,
                                          _scalar(p, "alpha"))
    if cfg.system == "fb2":
        return certificates.certify_fb2(inst.rho, inst.beta, _scalar(p, "alpha"),
                                        _scalar(p, "delta"), sched,
                                        t_grid_end=_t_grid_end(cfg))
    alpha_bar = p.get("alpha_bar")
    alpha_fn = None
    if "alpha" in p:
        if isinstance(p["alpha"], (int, float)) and not isinstance(p["alpha"], bool):
            alpha_fn = float(p["alpha"])
        else:
            alpha_fn, _, _, _ = _profile(p["alpha"], "alpha")
    elif alpha_bar is not None:
        alpha_fn = float(alpha_bar)
    else:
        raise ConfigError("grad2 needs 'alpha' (profile) or 'alpha_bar'")
    return certificates.certify_grad2(inst.rho, inst.beta, alpha_fn, sched,
                                      alpha_bar=alpha_bar, t_grid_end=_t_grid_end(cfg))


def _flow_eta(cfg: ExperimentConfig, inst) -> Optional[float]:
    if cfg.system == "fb1":
        return _scalar(cfg.params, "eta")
    if cfg.system == "fb2":
        # eta is derived from (alpha, delta), never configured
        _, inv_eta, _, _ = certificates._fb2_constants(
            inst.rho, inst.beta, _scalar(cfg.params, "alpha"),
            _scalar(cfg.params, "delta"))
        if inv_eta <= 0.0:
            raise CertificateError(["1/eta > 0 violated"])
        return 1.0 / inv_eta
    return None


def _build_flow(cfg: ExperimentConfig, inst, sched: Schedule) -> flows.FlowRHS:
    if cfg.system == "fb1":
        return flows.fb1_rhs(inst.a, inst.b, _flow_eta(cfg, inst), sched)
    if cfg.system == "fb2":
        return flows.fb2_rhs(inst.a, inst.b, _flow_eta(cfg, inst), sched)
    if cfg.system == "grad1":
        return flows.grad1_rhs(inst.g, sched)
    return flows.grad2_rhs(inst.g, sched)


def _default_t_end(cert) -> float:
    # long enough for the envelope to fall below 1e-10 of its initial value
    return math.ceil(math.log(1e10) / cert.decay_exponent)


def _initial_state(cfg: ExperimentConfig, inst, order: int):
    init = cfg.initial
    if "x0" not in init:
        raise ConfigError("'initial' block needs x0")
    x0 = np.asarray(init["x0"], dtype=float)
    if x0.shape != (inst.dim,):
        raise ConfigError("x0 must have dimension %d" % inst.dim)
    v0 = None
    if order == 2:
        v0 = np.asarray(init.get("v0", np.zeros(inst.dim)), dtype=float)
        if v0.shape != (inst.dim,):
            raise ConfigError("v0 must have dimension %d" % inst.dim)
    elif "v0" in init:
        raise ConfigError("v0 given but system '%s' is first order" % cfg.system)
    return x0, v0


def _control(cfg: ExperimentConfig):
    blk = cfg.integrator
    if blk.get("fixed_step"):
        return integrate.FixedStep(float(blk["fixed_step"]))
    return integrate.Adaptive(rel_tol=float(blk.get("rel_tol", 1e-9)),
                              abs_tol=float(blk.get("abs_tol", 1e-12)))


def _simulate(cfg: ExperimentConfig, inst, sched, t_end: float):
    flow = _build_flow(cfg, inst, sched)
    x0, v0 = _initial_state(cfg, inst, flow.order)
    traj = integrate.integrate(flow, x0, v0=v0, t_end=t_end, control=_control(cfg),
                               n_dense=int(cfg.integrator.get("n_dense", 500)))
    metrics = integrate.record_metrics(traj, inst)
    return traj, metrics, x0, v0


def _say(quiet: bool, msg: str) -> None:
    if not quiet:
        print(msg)


def _write_run_artifacts(out_dir, traj, metrics, envelope=None, which=None):
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "trajectory.csv")
    integrate.to_csv(traj, metrics, csv_path)
    env_csv = None
    if envelope is not None:
        env_csv = os.path.join(out_dir, "envelope.csv")
        analysis.write_envelope_csv(env_csv, metrics.t, envelope)
    if which is None:
        which = "gap" if metrics.gap is not None else "h"
    analysis.emit_plot_script(
        os.path.join(out_dir, "plot_metrics.gp"), "trajectory.csv",
        dim=traj.x.shape[1], which=which,
        envelope_csv="envelope.csv" if env_csv else None)
    return csv_path


def _verify_reports(cfg, inst, cert, sched, traj, metrics, x0, v0):
    """Envelope + (system-specific) chain / Lyapunov reports."""
    reports = {}
    if cfg.system == "fb1":
        env = analysis.build_envelope(cert, h0=float(metrics.h[0]))
        reports["envelope"] = analysis.verify_envelope(
            metrics, "h", env, rate=cert.decay_exponent)
    elif cfg.system == "grad1":
        env = analysis.build_envelope(cert, gap0=float(metrics.gap[0]))
        reports["envelope"] = analysis.verify_envelope(
            metrics, "gap", env, rate=cert.decay_exponent)
        reports["chain"] = analysis.verify_value_chain(metrics, inst.rho, inst.beta)
    elif cfg.system == "fb2":
        coeffs = certificates.fb2_lemma_coefficients(
            inst.rho, inst.beta, _scalar(cfg.params, "alpha"),
            _scalar(cfg.params, "delta"), sched)
        m_raw, _ = certificates.fb2_initial_M(coeffs, x0, v0, inst.x_star)
        env = analysis.build_envelope(cert, h0=float(metrics.h[0]), m=2.0 * m_raw)
        reports["envelope"] = analysis.verify_envelope(
            metrics, "h", env, rate=cert.decay_exponent)
        reports["lyapunov"] = analysis.verify_lyapunov(traj, coeffs, metrics)
        reports["m_raw"] = m_raw
    else:
        alpha_bar = cert.inputs["alpha_bar"]
        grad_sched = sched if sched.alpha is not None else dataclasses.replace(
            sched, alpha=lambda t: alpha_bar)
        coeffs = certificates.grad2_lemma_coefficients(
            inst.rho, inst.beta, alpha_bar, grad_sched)
        m_raw, _ = certificates.grad2_initial_M(coeffs, inst.g, x0, v0, inst.x_star)
        env = analysis.build_envelope(cert, gap0=float(metrics.gap[0]), m=m_raw)
        reports["envelope"] = analysis.verify_envelope(
            metrics, "gap", env, rate=cert.decay_exponent)
        reports["chain"] = analysis.verify_value_chain(metrics, inst.rho, inst.beta)
        reports["m_raw"] = m_raw
    return reports, env


def _sweep_values(name: str, spec) -> list:
    if isinstance(spec, dict) and "values" in spec:
        vals = [float(v) for v in spec["values"]]
        if not vals:
            raise ConfigError("sweep '%s' has an empty values list" % name)
        return vals
    try:
        lo, hi, num = float(spec["min"]), float(spec["max"]), int(spec["num"])
    except (KeyError, TypeError, ValueError):
        raise ConfigError("sweep '%s' needs min/max/num or values" % name)
    if num < 1 or not (0.0 < lo <= hi):
        raise ConfigError("sweep '%s' needs 0 < min <= max and num >= 1" % name)
    if spec.get("log"):
        return list(np.geomspace(lo, hi, num))
    return list(np.linspace(lo, hi, num))


def execute(config, command: str, out_dir: Optional[str] = None,
            seed: Optional[int] = None, quiet: bool = False) -> int:
    """Run one command against a parsed or raw config dict; returns the exit code."""
    if command == "list":
        for name in problems.list_problems():
            inst = problems.get_problem(name)
            print("%-16s dim=%-3d rho=%-8g beta=%-8g %s"
                  % (name, inst.dim, inst.rho, inst.beta, inst.description))
        return EXIT_OK

    try:
        cfg = config if isinstance(config, ExperimentConfig) \
            else ExperimentConfig.from_dict(config)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return EXIT_BAD_CONFIG
    if seed is not None:
        cfg.seed = seed
    out_dir = out_dir or cfg.output_dir or "out"

    try:
        inst = _load_problem(cfg)
        _check_compat(cfg, inst)
        sched = _build_schedule(cfg)
        if command == "certify":
            return _cmd_certify(cfg, inst, sched, out_dir, quiet)
        if command == "simulate":
            return _cmd_simulate(cfg, inst, sched, out_dir, quiet)
        if command == "verify":
            return _cmd_verify(cfg, inst, sched, out_dir, quiet)
        if command == "sweep":
            return _cmd_sweep(cfg, inst, out_dir, quiet)
        print("unknown command %r" % command, file=sys.stderr)
        return EXIT_BAD_CONFIG
    except KeyError as exc:
        print("unknown problem: %s" % exc, file=sys.stderr)
        return EXIT_UNKNOWN_PROBLEM
    except IncompatibleSystemError as exc:
        print("incompatible system: %s" % exc, file=sys.stderr)
        return EXIT_INCOMPATIBLE
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return EXIT_BAD_CONFIG
    except CertificateError as exc:
        print("certificate failed:", file=sys.stderr)
        for failure in exc.failures:
            print("  - %s" % failure, file=sys.stderr)
        return EXIT_FAILED
    except (ScheduleError, integrate.IntegrationError, ValueError) as exc:
        print("run failed: %s" % exc, file=sys.stderr)
        return EXIT_FAILED


def _cmd_certify(cfg, inst, sched, out_dir, quiet) -> int:
    cert = _certify(cfg, inst, sched)
    os.makedirs(out_dir, exist_ok=True)
    cert.to_json(os.path.join(out_dir, "certificate.json"))
    _say(quiet, "certified %s on %s: decay exponent %.6g%s"
         % (cfg.system, inst.name, cert.decay_exponent,
            "" if cert.transient_exponent is None
            else ", transient %.6g" % cert.transient_exponent))
    _say(quiet, "wrote %s" % os.path.join(out_dir, "certificate.json"))
    return EXIT_OK


def _cmd_simulate(cfg, inst, sched, out_dir, quiet) -> int:
    t_end = cfg.integrator.get("t_end")
    if t_end is None:
        t_end = _default_t_end(_certify(cfg, inst, sched))
    traj, metrics, _, _ = _simulate(cfg, inst, sched, float(t_end))
    csv_path = _write_run_artifacts(out_dir, traj, metrics)
    _say(quiet, "simulated %s on %s for t_end=%g (%d samples, %d accepted steps)"
         % (cfg.system, inst.name, float(t_end), traj.t.size,
            traj.meta["accepted"]))
    _say(quiet, "wrote %s" % csv_path)
    return EXIT_OK


def _cmd_verify(cfg, inst, sched, out_dir, quiet) -> int:
    cert = _certify(cfg, inst, sched)
    t_end = cfg.integrator.get("t_end")
    if t_end is None:
        t_end = _default_t_end(cert)
    traj, metrics, x0, v0 = _simulate(cfg, inst, sched, float(t_end))
    reports, env = _verify_reports(cfg, inst, cert, sched, traj, metrics, x0, v0)
    audit = problems.audit_instance(inst, n_pairs=1000, seed=cfg.seed)

    passed = audit.passed and all(
        rep.passed for rep in reports.values() if hasattr(rep, "passed"))
    doc = {
        "version": __version__,
        "command": "verify",
        "problem": inst.name,
        "system": cfg.system,
        "t_end": float(t_end),
        "certificate": cert.as_dict(),
        "audit": {
            "passed": audit.passed,
            "failures": list(audit.failures),
            "residual_at_x_star": audit.residual_at_x_star,
            "cocoercivity_violation_fraction":
                audit.b_audit.cocoercivity_violation_fraction,
        },
        "passed": passed,
    }
    for key, rep in reports.items():
        doc[key] = rep.as_dict() if hasattr(rep, "as_dict") else rep
    os.makedirs(out_dir, exist_ok=True)
    cert.to_json(os.path.join(out_dir, "certificate.json"))
    _write_run_artifacts(out_dir, traj, metrics, envelope=env,
                         which=reports["envelope"].which)
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")

    rep = reports["envelope"]
    _say(quiet, "verify %s on %s: envelope %s (%d/%d violations, max ratio %.3g), "
         "fitted rate %s vs certified %.3g"
         % (cfg.system, inst.name, "PASS" if rep.passed else "FAIL",
            rep.violating_samples, rep.n_samples, rep.max_ratio,
            "n/a" if rep.fitted_exponent is None else "%.4g" % rep.fitted_exponent,
            cert.decay_exponent))
    for extra in ("chain", "lyapunov"):
        if extra in reports:
            _say(quiet, "  %s: %s" % (extra,
                 "PASS" if reports[extra].passed else "FAIL"))
    _say(quiet, "  audit: %s" % ("PASS" if audit.passed else "FAIL"))
    _say(quiet, "wrote %s" % os.path.join(out_dir, "report.json"))
    return EXIT_OK if passed else EXIT_FAILED


def _cmd_sweep(cfg, inst, out_dir, quiet) -> int:
    if not cfg.sweep:
        raise ConfigError("sweep command needs a 'sweep' block")
    names = sorted(cfg.sweep)
    for name in names:
        if name not in _PARAM_KEYS[cfg.system]:
            raise ConfigError("sweep parameter '%s' does not apply to '%s'"
                              % (name, cfg.system))
    grids = [_sweep_values(name, cfg.sweep[name]) for name in names]
    rows = []
    best = None
    for combo in itertools.product(*grids):
        params = dict(cfg.params)
        params.update(dict(zip(names, combo)))
        cell_cfg = dataclasses.replace(cfg, params=params)
        try:
            sched = _build_schedule(cell_cfg)
            cert = _certify(cell_cfg, inst, sched)
            rate = cert.decay_exponent
            gamma_lower = cert.derived.get("gamma_lower", math.nan)
            rows.append(list(combo) + [1, rate, gamma_lower, ""])
            if best is None or rate > best[0]:
                best = (rate, {k: float(v) for k, v in zip(names, combo)})
        except (CertificateError, ConfigError, ScheduleError, ValueError) as exc:
            first = exc.failures[0] if isinstance(exc, CertificateError) else str(exc)
            rows.append(list(combo) + [0, math.nan, math.nan, first])

    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "sweep.csv")
    with open(path, "w") as fh:
        fh.write(",".join(names + ["feasible", "decay_exponent", "gamma_lower",
                                   "failure"]) + "\n")
        for row in rows:
            cells = ["%.17g" % v if isinstance(v, float) else str(v) for v in row[:-1]]
            fh.write(",".join(cells + ['"%s"' % row[-1]]) + "\n")
    n_feasible = sum(r[len(names)] for r in rows)
    _say(quiet, "sweep over %s: %d/%d cells feasible"
         % ("+".join(names), n_feasible, len(rows)))
    if best is not None:
        _say(quiet, "best decay exponent %.6g at %s" % (best[0], best[1]))
    _say(quiet, "wrote %s" % path)
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fbflows",
        description="Certify and verify exponential decay of forward-backward "
                    "and gradient flows.")
    parser.add_argument("command", choices=["certify", "simulate", "verify",
                                            "sweep", "list"])
    parser.add_argument("--config", help="path to a JSON experiment config")
    parser.add_argument("--out", help="output directory (default: config, then ./out)")
    parser.add_argument("--seed", type=int, default=None, help="override the audit seed")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    args = parser.parse_args(argv)

    if args.command == "list":
        return execute({}, "list", quiet=args.quiet)
    if not args.config:
        print("config error: --config is required for '%s'" % args.command,
              file=sys.stderr)
        return EXIT_BAD_CONFIG
    try:
        with open(args.config) as fh:
            doc = json.load(fh)
    except OSError as exc:
        print("config error: cannot read %s: %s" % (args.config, exc), file=sys.stderr)
        return EXIT_BAD_CONFIG
    except json.JSONDecodeError as exc:
        print("config error: %s is not valid JSON: %s" % (args.config, exc),
              file=sys.stderr)
        return EXIT_BAD_CONFIG
    return execute(doc, args.command, out_dir=args.out, seed=args.seed,
                   quiet=args.quiet)


if __name__ == "__main__":
    sys.exit(main())
