"""Fixed-step RK4 integration of the closed-loop system with invariance
diagnostics.

The control is re-solved at every RK4 stage; freezing it per step costs
an order of accuracy in the phi-drift certificate.  No adaptivity: the
diagnostics want uniform, reproducible sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .constraint import AffineConstraint, check_compatible
from .control import TransversalityError, _closed_loop_with_tau, solve_control
from .geometry import MechanicalModel, State


class IntegrationError(RuntimeError):
    def __init__(self, message: str, last_good_index: int | None = None):
        super().__init__(message)
        self.last_good_index = last_good_index


@dataclass(frozen=True)
class Trajectory:
    times: tuple
    states: tuple  # of State
    controls: tuple  # of m-tuples (tau* at each sample)
    phis: tuple  # of m-tuples
    drift_report: tuple  # per constraint row: max_t |phi_b(t) - phi_b(0)|


def _stage(model, con, q, qd):
    a, _tau = _closed_loop_with_tau(model, con, State(q=tuple(q), qdot=tuple(qd)))
    return list(qd), a


def rk4_step(model: MechanicalModel, con: AffineConstraint, state: State, h: float) -> State:
    """One classical Runge-Kutta step of (qdot, closed-loop acceleration)."""
    if h <= 0.0:
        raise ValueError("step size must be positive")
    check_compatible(model, con)
    model._check_state(state)
    n = model.n
    q0, v0 = list(state.q), list(state.qdot)

    k1q, k1v = _stage(model, con, q0, v0)
    k2q, k2v = _stage(
        model, con,
        [q0[i] + 0.5 * h * k1q[i] for i in range(n)],
        [v0[i] + 0.5 * h * k1v[i] for i in range(n)],
    )
    k3q, k3v = _stage(
        model, con,
        [q0[i] + 0.5 * h * k2q[i] for i in range(n)],
        [v0[i] + 0.5 * h * k2v[i] for i in range(n)],
    )
    k4q, k4v = _stage(
        model, con,
        [q0[i] + h * k3q[i] for i in range(n)],
        [v0[i] + h * k3v[i] for i in range(n)],
    )
    q1 = [q0[i] + h / 6.0 * (k1q[i] + 2.0 * k2q[i] + 2.0 * k3q[i] + k4q[i]) for i in range(n)]
    v1 = [v0[i] + h / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]) for i in range(n)]
    return State(q=tuple(q1), qdot=tuple(v1))


def integrate(
    model: MechanicalModel,
    con: AffineConstraint,
    state0: State,
    t_end: float,
    h: float,
    sample_every: int = 1,
) -> Trajectory:
    """Fixed-step RK4 run, sampling every sample_every steps plus the end."""
    if t_end <= 0.0:
        raise ValueError("t_end must be positive")
    if h <= 0.0:
        raise ValueError("step size must be positive")
    if sample_every < 1:
        raise ValueError("sample_every must be at least 1")
    check_compatible(model, con)
    model._check_state(state0)

    n_steps = max(1, int(round(t_end / h)))
    times = [0.0]
    states = [state0]
    controls = [tuple(solve_control(model, con, state0).tau)]
    phis = [tuple(con.phi(state0))]

    state = state0
    for step in range(1, n_steps + 1):
        try:
            state = rk4_step(model, con, state, h)
        except TransversalityError as err:
            raise IntegrationError(
                f"aborted at step {step}: {err}", last_good_index=len(times) - 1
            ) from err
        if not all(math.isfinite(v) for v in state.q + state.qdot):
            raise IntegrationError(
                f"non-finite state at step {step}", last_good_index=len(times) - 1
            )
        if step % sample_every == 0 or step == n_steps:
            times.append(step * h)
            states.append(state)
            controls.append(tuple(solve_control(model, con, state).tau))
            phis.append(tuple(con.phi(state)))

    phi0 = phis[0]
    drift = tuple(
        max(abs(p[b] - phi0[b]) for p in phis) for b in range(con.m)
    )
    return Trajectory(
        times=tuple(times),
        states=tuple(states),
        controls=tuple(controls),
        phis=tuple(phis),
        drift_report=drift,
    )
