"""Feedback synthesis: solve P(q) tau = b(v_q) for the unique control that
keeps the affine constraint set invariant, and the closed-loop field.

P has entries mu^b(Y^a) and depends on q only; b collects the derivative
of phi along the drift.  The law is defined wherever P is invertible, on
or off the constraint set; off the set it conserves phi at its initial
value instead of nulling it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import linalg
from .constraint import AffineConstraint, check_compatible
from .geometry import MechanicalModel, State


class TransversalityError(RuntimeError):
    """P(q) singular or too ill-conditioned; no admissible control."""

    def __init__(self, message: str, q=None, state=None, cond=None):
        super().__init__(message)
        self.q = q
        self.state = state
        self.cond = cond


@dataclass(frozen=True)
class ControlSolve:
    P: tuple  # rows of the m x m system matrix
    b: tuple
    tau: tuple
    cond_estimate: float


PIVOT_RTOL = 1e-12


def p_scale(S, Y) -> float:
    """Natural magnitude of P entries before cancellation: the largest
    constraint-row norm times the largest input-field norm."""
    ns = max(math.sqrt(linalg.dot(row, row)) for row in S)
    ny = max(math.sqrt(linalg.dot(row, row)) for row in Y)
    return ns * ny


def _p_rows(model: MechanicalModel, con: AffineConstraint, q):
    S = con.mu_at(q)
    Y = model.input_fields_at(q)
    m = con.m
    P = [[linalg.dot(S[b], Y[a]) for a in range(m)] for b in range(m)]
    return P, S, Y, p_scale(S, Y)


def _factor_p(P, q, scale, state=None):
    try:
        lu, piv = linalg.lu_factor(P)
        cond = linalg.cond1_from_lu(P, lu, piv)
        min_pivot = min(abs(lu[i][i]) for i in range(len(lu)))
    except linalg.SingularMatrixError:
        raise TransversalityError(
            f"singular P matrix at q={tuple(q)}", q=tuple(q), state=state,
            cond=float("inf"),
        ) from None
    if min_pivot <= PIVOT_RTOL * scale:
        raise TransversalityError(
            f"numerically singular P matrix at q={tuple(q)} "
            f"(pivot {min_pivot:.3e} vs scale {scale:.3e})",
            q=tuple(q), state=state, cond=float("inf"),
        )
    if cond > linalg.CONDITION_CAP:
        raise TransversalityError(
            f"P condition estimate {cond:.3e} exceeds {linalg.CONDITION_CAP:.0e} "
            f"at q={tuple(q)}", q=tuple(q), state=state, cond=cond,
        )
    return lu, piv, cond


def p_matrix(model: MechanicalModel, con: AffineConstraint, q) -> list[list[float]]:
    """System matrix with entries mu^b(q)(Y^a); velocity-independent."""
    check_compatible(model, con)
    P, _, _, scale = _p_rows(model, con, q)
    _factor_p(P, q, scale)
    return P


def b_vector(model: MechanicalModel, con: AffineConstraint, state: State) -> list[float]:
    """Right-hand side: minus the derivative of phi along the drift field."""
    check_compatible(model, con)
    model._check_state(state)
    q, qd = state.q, state.qdot
    L = model._factor(q)
    a = model._drift(q, qd, L)
    return _b_from_drift(con, q, qd, a)


def _b_from_drift(con: AffineConstraint, q, qd, drift) -> list[float]:
    n, m = con.n, con.m
    S = con.mu_at(q)
    dmu = con._dmu_fn(*q)  # index (b*n + i)*n + j
    dz = con._dZ_fn(*q)  # index b*n + j
    b = [0.0] * m
    for bb in range(m):
        acc = 0.0
        for i in range(n):
            qi = qd[i]
            if qi != 0.0:
                base = (bb * n + i) * n
                for j in range(n):
                    acc += dmu[base + j] * qi * qd[j]
        for j in range(n):
            acc += dz[bb * n + j] * qd[j]
        acc += linalg.dot(S[bb], drift)
        b[bb] = -acc
    return b


def solve_control(
    model: MechanicalModel, con: AffineConstraint, state: State
) -> ControlSolve:
    """Assemble and solve P tau = b at one state."""
    check_compatible(model, con)
    model._check_state(state)
    q, qd = state.q, state.qdot
    L = model._factor(q)
    drift = model._drift(q, qd, L)
    P, S, Y, scale = _p_rows(model, con, q)
    lu, piv, cond = _factor_p(P, q, scale, state)
    b = _b_from_drift(con, q, qd, drift)
    tau = linalg.lu_solve(lu, piv, b)
    return ControlSolve(
        P=tuple(tuple(row) for row in P),
        b=tuple(b),
        tau=tuple(tau),
        cond_estimate=cond,
    )


def tau_star(model: MechanicalModel, con: AffineConstraint, state: State) -> list[float]:
    """The unique control keeping phi constant along the closed loop."""
    return list(solve_control(model, con, state).tau)


def closed_loop_acceleration(
    model: MechanicalModel, con: AffineConstraint, state: State
) -> list[float]:
    """Drift acceleration plus tau*_a Y^a: the controlled second-order field."""
    check_compatible(model, con)
    model._check_state(state)
    q, qd = state.q, state.qdot
    L = model._factor(q)
    drift = model._drift(q, qd, L)
    P, S, Y, scale = _p_rows(model, con, q)
    lu, piv, cond = _factor_p(P, q, scale, state)
    b = _b_from_drift(con, q, qd, drift)
    tau = linalg.lu_solve(lu, piv, b)
    n = model.n
    a = list(drift)
    for idx in range(model.m):
        t = tau[idx]
        if t != 0.0:
            ya = Y[idx]
            for k in range(n):
                a[k] += t * ya[k]
    return a


def _closed_loop_with_tau(model, con, state):
    """Acceleration and tau together; used by the integrator."""
    q, qd = state.q, state.qdot
    L = model._factor(q)
    drift = model._drift(q, qd, L)
    P, S, Y, scale = _p_rows(model, con, q)
    lu, piv, cond = _factor_p(P, q, scale, state)
    b = _b_from_drift(con, q, qd, drift)
    tau = linalg.lu_solve(lu, piv, b)
    a = list(drift)
    for idx in range(model.m):
        t = tau[idx]
        if t != 0.0:
            ya = Y[idx]
            for k in range(model.n):
                a[k] += t * ya[k]
    return a, tau
