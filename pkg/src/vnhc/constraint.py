"""Affine velocity constraints: phi(q, qdot) = S(q) qdot + Z(q).

The constraint is declared through its one-form rows mu^b (the rows of S)
and the affine part Z; both depend on q only.  Hypothesis checks return
report objects rather than raising, so callers can batch them over grids.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import expr as ex
from . import linalg
from .geometry import MechanicalModel, ModelError, State

RANK_RTOL = 1e-9


class RankDefectError(RuntimeError):
    """S(q) lost row rank at a queried point."""


@dataclass(frozen=True)
class RankReport:
    ok: bool
    rank: int
    expected_rank: int
    singular_values: tuple
    q: tuple


@dataclass(frozen=True)
class TransversalityReport:
    ok: bool
    p: tuple  # row-major m x m entries of P(q)
    det: float
    cond_estimate: float
    q: tuple


class AffineConstraint:
    """m constraint one-forms and the affine term, with compiled kernels."""

    def __init__(self, model_coordinates: Sequence[str], mu, Z, parameters=None):
        self.coordinates = tuple(model_coordinates)
        self.n = len(self.coordinates)
        self.parameters = dict(parameters or {})
        self.mu = ex.grid(mu)
        self.Z = [ex.as_expr(z) for z in Z]
        self.m = len(self.mu)
        if self.m == 0:
            raise ModelError("constraint needs at least one row")
        if any(len(r) != self.n for r in self.mu):
            raise ModelError("mu rows must have n components")
        if len(self.Z) != self.m:
            raise ModelError("Z must have one entry per constraint row")

        velocities = {c + "d" for c in self.coordinates}
        allowed = set(self.coordinates) | set(self.parameters)
        for b, row in enumerate(self.mu):
            for i, e in enumerate(row):
                extra = ex.free_symbols(e) - allowed
                if extra:
                    raise ModelError(
                        f"mu[{b}][{i}] must be velocity-free and fully bound; "
                        f"offending symbols {sorted(extra & velocities) or sorted(extra)}"
                    )
        for b, e in enumerate(self.Z):
            extra = ex.free_symbols(e) - allowed
            if extra:
                raise ModelError(
                    f"Z[{b}] must be velocity-free and fully bound; "
                    f"offending symbols {sorted(extra)}"
                )

        coords = self.coordinates
        flat_mu = [e for row in self.mu for e in row]
        self._mu_fn = ex.compile_exprs(flat_mu, coords, self.parameters)
        dmu = [
            ex.diff(self.mu[b][i], coords[j])
            for b in range(self.m)
            for i in range(self.n)
            for j in range(self.n)
        ]
        self._dmu_fn = ex.compile_exprs(dmu, coords, self.parameters)
        self._Z_fn = ex.compile_exprs(self.Z, coords, self.parameters)
        dz = [
            ex.diff(self.Z[b], coords[j])
            for b in range(self.m)
            for j in range(self.n)
        ]
        self._dZ_fn = ex.compile_exprs(dz, coords, self.parameters)

    # -- evaluation ---------------------------------------------------------

    def mu_at(self, q: Sequence[float]) -> list[list[float]]:
        flat = self._mu_fn(*q)
        return [list(flat[b * self.n:(b + 1) * self.n]) for b in range(self.m)]

    def z_at(self, q: Sequence[float]) -> list[float]:
        return list(self._Z_fn(*q))

    def phi(self, state: State) -> list[float]:
        """Constraint values S(q) qdot + Z(q); zero exactly on the affine set."""
        if len(state.q) != self.n:
            raise ValueError("state dimension does not match constraint")
        S = self.mu_at(state.q)
        Z = self.z_at(state.q)
        return [linalg.dot(S[b], list(state.qdot)) + Z[b] for b in range(self.m)]

    # -- hypothesis checks --------------------------------------------------

    def rank_check(self, q: Sequence[float]) -> RankReport:
        """Row rank of S(q) by singular values, relative tolerance 1e-9."""
        S = np.array(self.mu_at(q), dtype=float)
        sv = np.linalg.svd(S, compute_uv=False)
        smax = sv[0] if len(sv) else 0.0
        rank = int(np.sum(sv > RANK_RTOL * smax)) if smax > 0.0 else 0
        return RankReport(
            ok=(rank == self.m),
            rank=rank,
            expected_rank=self.m,
            singular_values=tuple(sv.tolist()),
            q=tuple(float(v) for v in q),
        )


def check_compatible(model: MechanicalModel, con: AffineConstraint):
    if con.n != model.n:
        raise ModelError("constraint and model chart dimensions differ")
    if con.m != model.m:
        raise ModelError(
            f"number of constraint rows ({con.m}) must equal number of "
            f"control inputs ({model.m})"
        )


def transversality_check(
    con: AffineConstraint, model: MechanicalModel, q: Sequence[float]
) -> TransversalityReport:
    """Invertibility of P(q) with entries mu^b(Y^a); certifies A and the
    input distribution are transversal (given the rank hypothesis)."""
    from .control import PIVOT_RTOL, p_scale

    check_compatible(model, con)
    S = con.mu_at(q)
    Y = model.input_fields_at(q)
    m = con.m
    P = [[linalg.dot(S[b], Y[a]) for a in range(m)] for b in range(m)]
    det = float(np.linalg.det(np.array(P)))
    scale = p_scale(S, Y)
    try:
        lu, piv = linalg.lu_factor(P)
        cond = linalg.cond1_from_lu(P, lu, piv)
        min_pivot = min(abs(lu[i][i]) for i in range(m))
        if min_pivot <= PIVOT_RTOL * scale:
            cond = float("inf")
    except linalg.SingularMatrixError:
        cond = float("inf")
    ok = cond <= linalg.CONDITION_CAP
    return TransversalityReport(
        ok=ok,
        p=tuple(v for row in P for v in row),
        det=det,
        cond_estimate=cond,
        q=tuple(float(v) for v in q),
    )


def project_onto_A(
    con: AffineConstraint, model: MechanicalModel, state: State
) -> State:
    """Metric-orthogonal (kinetic-energy-minimal) projection of the velocity
    onto the affine constraint set at the same base point."""
    check_compatible(model, con)
    report = con.rank_check(state.q)
    if not report.ok:
        raise RankDefectError(
            f"constraint rank defect at q={report.q}: rank {report.rank} < {report.expected_rank}"
        )
    phi = con.phi(state)
    S = con.mu_at(state.q)
    L = model._factor(state.q)
    # qdot' = qdot - G^-1 S^T (S G^-1 S^T)^-1 phi
    GiST = [linalg.cho_solve(L, list(row)) for row in S]  # rows: G^-1 mu^b
    m = con.m
    A = [[linalg.dot(S[b], GiST[a]) for a in range(m)] for b in range(m)]
    lam = linalg.solve(A, phi)
    qd = list(state.qdot)
    for b in range(m):
        for i in range(con.n):
            qd[i] -= GiST[b][i] * lam[b]
    return State(q=state.q, qdot=tuple(qd))
