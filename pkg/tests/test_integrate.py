"""Integrator behaviour: closed-form accuracy, order of convergence, aborts, CSV."""

import math
from types import SimpleNamespace

import numpy as np
import pytest
from numpy.testing import assert_allclose

from fbflows import problems
from fbflows.flows import FlowRHS, Schedule, fb1_rhs
from fbflows.integrate import (
    Adaptive,
    FixedStep,
    IntegrationError,
    integrate,
    record_metrics,
    to_csv,
)

DECAY = FlowRHS(order=1, rhs=lambda t, x: -x, description="dx/dt = -x")
ZERO = FlowRHS(order=1, rhs=lambda t, x: np.zeros_like(x), description="dx/dt = 0")
DAMPED = FlowRHS(order=2, rhs=lambda t, x, v: -3.0 * v - 2.0 * x,
                 description="x'' + 3x' + 2x = 0")


def test_adaptive_exponential_decay():
    traj = integrate(DECAY, np.array([1.0]), t_end=1.0,
                     control=Adaptive(rel_tol=1e-9, abs_tol=1e-12))
    assert traj.t[0] == 0.0 and traj.x[0, 0] == 1.0
    assert traj.t.size >= 500
    assert np.all(np.diff(traj.t) > 0.0)
    assert abs(traj.t[-1] - 1.0) <= 1e-12
    assert abs(traj.x[-1, 0] - math.exp(-1.0)) <= 1e-8
    # dense samples track the analytic solution, not just the endpoint
    assert_allclose(traj.x[:, 0], np.exp(-traj.t), rtol=1e-7, atol=1e-12)
    # first-order velocity is the rhs itself
    assert_allclose(traj.v, -traj.x, rtol=0, atol=0)
    meta = traj.meta
    assert meta["solver"] == "dopri5(4)-pi"
    assert meta["rhs_evaluations"] == 2 + 6 * (meta["accepted"] + meta["rejected"])


def test_adaptive_zero_rhs_is_exact():
    traj = integrate(ZERO, np.array([3.0, -1.0]), t_end=5.0)
    assert np.all(traj.x[:, 0] == 3.0)
    assert np.all(traj.x[:, 1] == -1.0)
    assert np.all(traj.v == 0.0)


def test_adaptive_second_order_closed_form():
    # roots -1 and -2; x0=1, v0=-1 selects x(t) = exp(-t)
    traj = integrate(DAMPED, np.array([1.0]), v0=np.array([-1.0]), t_end=2.0,
                     control=Adaptive(rel_tol=1e-9, abs_tol=1e-12))
    assert abs(traj.x[-1, 0] - math.exp(-2.0)) <= 1e-8
    assert_allclose(traj.x[:, 0], np.exp(-traj.t), rtol=1e-6, atol=1e-10)
    assert_allclose(traj.v[:, 0], -np.exp(-traj.t), rtol=1e-6, atol=1e-10)


def test_rk4_fourth_order_convergence():
    def endpoint_error(h):
        traj = integrate(DECAY, np.array([1.0]), t_end=1.0, control=FixedStep(h))
        return abs(traj.x[-1, 0] - math.exp(-1.0))

    ratio = endpoint_error(1e-2) / endpoint_error(5e-3)
    assert 12.8 <= ratio <= 19.2  # 2^4 within 20 percent


def test_fixed_step_rounds_to_cover_interval():
    traj = integrate(ZERO, np.array([1.0]), t_end=1.0, control=FixedStep(0.3))
    assert traj.t[-1] == 1.0
    assert traj.meta["accepted"] == 3
    assert_allclose(traj.meta["h"], 1.0 / 3.0, rtol=1e-15)
    assert traj.meta["rhs_evaluations"] == 12
    assert traj.meta["rejected"] == 0


def test_step_size_underflow_aborts_with_diagnostics():
    # x(t) = -log(1-t): the derivative blows up at t=1, steps shrink to nothing
    def singular(t, x):
        return np.array([1.0 / (1.0 - t)]) if t < 1.0 else np.array([1e30])

    flow = FlowRHS(order=1, rhs=singular, description="derivative pole at t=1")
    with pytest.raises(IntegrationError, match="step size underflow") as exc:
        integrate(flow, np.array([0.0]), t_end=2.0,
                  control=Adaptive(rel_tol=1e-10, abs_tol=1e-13))
    diag = exc.value.diagnostics
    assert {"t", "h", "accepted", "rejected"} <= set(diag)
    assert 0.9 < diag["t"] <= 1.0


def test_non_finite_state_aborts():
    flow = FlowRHS(order=1,
                   rhs=lambda t, x: np.array([1.0]) if t < 0.1 else np.array([np.nan]))
    with pytest.raises(IntegrationError, match="non-finite state"):
        integrate(flow, np.array([0.0]), t_end=1.0)


def test_non_finite_initial_rhs_aborts():
    flow = FlowRHS(order=1, rhs=lambda t, x: np.array([np.nan]))
    with pytest.raises(IntegrationError, match="non-finite rhs at the initial point"):
        integrate(flow, np.array([0.0]), t_end=1.0)


def test_integrate_argument_validation():
    with pytest.raises(ValueError):
        integrate(DECAY, np.array([1.0]), t_end=0.0)
    with pytest.raises(ValueError):
        integrate(DAMPED, np.array([1.0]), t_end=1.0)  # v0 missing
    with pytest.raises(ValueError):
        integrate(DECAY, np.array([1.0]), v0=np.array([0.0]), t_end=1.0)
    with pytest.raises(ValueError):
        integrate(DECAY, np.array([1.0]), t_end=1.0, control=FixedStep(0.0))
    with pytest.raises(ValueError):
        integrate(DECAY, np.array([1.0]), t_end=1.0,
                  control=Adaptive(rel_tol=0.0, abs_tol=1e-12))
    with pytest.raises(ValueError):
        integrate(FlowRHS(order=3, rhs=lambda t, x: x), np.array([1.0]), t_end=1.0)


def test_record_metrics_at_rest():
    traj = integrate(ZERO, np.zeros(1), t_end=2.0)
    m = record_metrics(traj, SimpleNamespace(x_star=np.zeros(1), f=None, g=None))
    assert np.all(m.h == 0.0)
    assert np.all(m.u == 0.0)
    assert m.gap is None and m.gradnorm is None


def test_record_metrics_quadratic_decay():
    inst = problems.make_quadratic(np.array([[1.0]]), np.array([0.0]))
    traj = integrate(DECAY, np.array([1.0]), t_end=3.0,
                     control=Adaptive(rel_tol=1e-10, abs_tol=1e-13))
    m = record_metrics(traj, inst)
    decay = np.exp(-2.0 * m.t)
    assert_allclose(m.h, decay, rtol=1e-7, atol=1e-12)
    assert_allclose(m.u, decay, rtol=1e-7, atol=1e-12)
    assert_allclose(m.gap, 0.5 * decay, rtol=1e-7, atol=1e-12)
    assert_allclose(m.gradnorm, np.exp(-m.t), rtol=1e-7, atol=1e-12)


def test_record_metrics_velocity_norm():
    drift = FlowRHS(order=2, rhs=lambda t, x, v: np.zeros_like(v))
    traj = integrate(drift, np.zeros(2), v0=np.array([3.0, 4.0]), t_end=2.0)
    m = record_metrics(traj, SimpleNamespace(x_star=np.zeros(2), f=None, g=None))
    assert_allclose(m.u, 25.0, rtol=1e-9)
    assert_allclose(m.h, 25.0 * m.t ** 2, rtol=1e-7, atol=1e-12)


def test_record_metrics_requires_ground_truth():
    traj = integrate(ZERO, np.zeros(1), t_end=1.0)
    with pytest.raises(ValueError, match="x_star"):
        record_metrics(traj, SimpleNamespace(f=None, g=None))


def test_record_metrics_rejects_bogus_solution():
    inst = problems.make_quadratic(np.array([[1.0]]), np.array([0.0]))
    traj = integrate(ZERO, np.zeros(1), t_end=1.0)
    fake = SimpleNamespace(x_star=np.array([1.0]), f=None, g=inst.g)
    with pytest.raises(ValueError, match="x_star is suspect"):
        record_metrics(traj, fake)


def test_fb1_trajectory_contracts_without_rebound():
    inst = problems.get_problem("skew-rotation")
    flow = fb1_rhs(inst.a, inst.b, eta=1.0, sched=Schedule.constant(1.0))
    traj = integrate(flow, np.array([5.0, -3.0]), t_end=20.0,
                     control=Adaptive(rel_tol=1e-10, abs_tol=1e-13))
    m = record_metrics(traj, inst)
    assert np.all(np.diff(m.h) <= 1e-9)
    assert m.h[-1] <= 1e-7 * m.h[0]


def test_csv_round_trip_and_determinism(tmp_path):
    inst = problems.make_quadratic(np.array([[1.0]]), np.array([0.0]))

    def run(path):
        traj = integrate(DECAY, np.array([1.0]), t_end=2.0)
        to_csv(traj, record_metrics(traj, inst), path)
        return traj

    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    traj = run(p1)
    run(p2)
    assert p1.read_bytes() == p2.read_bytes()

    header = p1.read_text().splitlines()[0]
    assert header == "t,x_0,v_0,h,u,gap,gradnorm"
    data = np.genfromtxt(p1, delimiter=",", names=True)
    # %.17g round-trips doubles exactly
    assert np.array_equal(data["t"], traj.t)
    assert np.array_equal(data["x_0"], traj.x[:, 0])


def test_csv_missing_metrics_are_nan(tmp_path):
    traj = integrate(ZERO, np.zeros(2), t_end=1.0)
    path = tmp_path / "plain.csv"
    to_csv(traj, None, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,x_0,x_1,v_0,v_1,h,u,gap,gradnorm"
    assert lines[1].endswith("nan,nan,nan,nan")
