"""Riemannian data of a mechanical control system on a chart.

Everything is coordinate-based on an open subset of n-space.  The model
holds the kinetic-energy metric, potential, external force covector and
the control coframe rows; symbolic derivatives of all of these are taken
once at construction and compiled to fast kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import expr as ex
from . import linalg


class ModelError(ValueError):
    """Invalid model data detected at construction/load time."""


class SPDError(RuntimeError):
    """Metric failed the symmetric positive-definite check at a point."""

    def __init__(self, message: str, eigenvalues=None):
        super().__init__(message)
        self.eigenvalues = eigenvalues


@dataclass(frozen=True)
class State:
    q: tuple
    qdot: tuple

    def __post_init__(self):
        q = tuple(float(v) for v in self.q)
        qd = tuple(float(v) for v in self.qdot)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "qdot", qd)
        if len(q) != len(qd):
            raise ValueError("q and qdot dimensions differ")
        if not all(math.isfinite(v) for v in q + qd):
            raise ValueError("non-finite state entry")


def velocity_name(coordinate: str) -> str:
    return coordinate + "d"


class MechanicalModel:
    """Metric, potential, external force and control coframe on one chart.

    Immutable after construction; all evaluation methods are pure.
    """

    def __init__(
        self,
        coordinates: Sequence[str],
        metric,
        potential=0.0,
        external_force: Sequence | None = None,
        input_coframe: Sequence | None = None,
        parameters: Mapping[str, float] | None = None,
    ):
        self.coordinates = tuple(coordinates)
        self.n = len(self.coordinates)
        if self.n == 0:
            raise ModelError("empty coordinate list")
        self.velocities = tuple(velocity_name(c) for c in self.coordinates)
        if set(self.coordinates) & set(self.velocities):
            raise ModelError("coordinate name collides with a velocity name")
        self.parameters = dict(parameters or {})
        bad = set(self.parameters) & (set(self.coordinates) | set(self.velocities))
        if bad:
            raise ModelError(f"parameter names shadow coordinates: {sorted(bad)}")

        self.metric = ex.grid(metric)
        if len(self.metric) != self.n or any(len(r) != self.n for r in self.metric):
            raise ModelError("metric grid is not n x n")
        for i in range(self.n):
            for j in range(i):
                if self.metric[i][j] != self.metric[j][i]:
                    raise ModelError(
                        f"metric entries ({i},{j}) and ({j},{i}) differ as expressions"
                    )
        self.potential = ex.as_expr(potential)
        if external_force is None:
            external_force = [0.0] * self.n
        self.external_force = [ex.as_expr(f) for f in external_force]
        if len(self.external_force) != self.n:
            raise ModelError("external force must have n components")
        self.input_coframe = ex.grid(input_coframe or [])
        self.m = len(self.input_coframe)
        if any(len(r) != self.n for r in self.input_coframe):
            raise ModelError("input coframe rows must have n components")
        if self.m >= self.n:
            raise ModelError(f"need fewer inputs than coordinates (m={self.m}, n={self.n})")

        self._check_symbols()
        self._compile()

    def _check_symbols(self):
        allowed_q = set(self.coordinates) | set(self.parameters)
        allowed_qv = allowed_q | set(self.velocities)

        def check(e, where, allowed):
            extra = ex.free_symbols(e) - allowed
            if extra:
                raise ModelError(f"{where} uses unknown symbols {sorted(extra)}")

        for i, row in enumerate(self.metric):
            for j, g in enumerate(row):
                check(g, f"metric[{i}][{j}]", allowed_q)
        check(self.potential, "potential", allowed_q)
        for i, f in enumerate(self.external_force):
            check(f, f"external_force[{i}]", allowed_qv)
        for a, row in enumerate(self.input_coframe):
            for i, f in enumerate(row):
                check(f, f"input_coframe[{a}][{i}]", allowed_q)

    def _compile(self):
        coords, vels, params = self.coordinates, self.velocities, self.parameters
        flat_g = [g for row in self.metric for g in row]
        self._metric_fn = ex.compile_exprs(flat_g, coords, params)
        dg = [
            ex.diff(self.metric[i][j], coords[k])
            for i in range(self.n)
            for j in range(self.n)
            for k in range(self.n)
        ]
        self._dmetric_fn = ex.compile_exprs(dg, coords, params)
        dv = [ex.diff(self.potential, c) for c in coords]
        self._dV_fn = ex.compile_exprs(dv, coords, params)
        self._force_fn = ex.compile_exprs(self.external_force, coords + vels, params)
        flat_f = [f for row in self.input_coframe for f in row]
        if flat_f:
            self._coframe_fn = ex.compile_exprs(flat_f, coords, params)
        else:
            self._coframe_fn = lambda *q: ()

    # -- evaluation ---------------------------------------------------------

    def metric_at(self, q: Sequence[float]) -> list[list[float]]:
        """Metric matrix at q; raises SPDError if not positive definite."""
        g = self._metric_rows(q)
        self._factor(q, g)  # SPD + conditioning gate
        return g

    def _metric_rows(self, q) -> list[list[float]]:
        flat = self._metric_fn(*q)
        n = self.n
        return [list(flat[i * n:(i + 1) * n]) for i in range(n)]

    def _factor(self, q, g=None) -> list[list[float]]:
        """Cholesky factor of the metric; rejects non-SPD or cond > 1e12."""
        if g is None:
            g = self._metric_rows(q)
        try:
            L = linalg.cholesky(g)
        except linalg.SingularMatrixError:
            eigs = np.linalg.eigvalsh(np.array(g))
            raise SPDError(
                f"metric not positive definite at q={tuple(q)}; "
                f"eigenvalues {eigs.tolist()}",
                eigenvalues=eigs.tolist(),
            ) from None
        diag = [L[i][i] for i in range(self.n)]
        cond_est = (max(diag) / min(diag)) ** 2
        if cond_est > linalg.CONDITION_CAP:
            eigs = np.linalg.eigvalsh(np.array(g))
            raise SPDError(
                f"metric condition estimate {cond_est:.3e} exceeds "
                f"{linalg.CONDITION_CAP:.0e} at q={tuple(q)}",
                eigenvalues=eigs.tolist(),
            )
        return L

    def christoffel_at(self, q: Sequence[float]) -> list[list[list[float]]]:
        """Levi-Civita symbols G^k_ij from the standard closed form."""
        n = self.n
        L = self._factor(q)
        dg = self._dmetric_fn(*q)  # index (i*n + j)*n + k  ->  d g_ij / d q_k

        def d(i, j, k):
            return dg[(i * n + j) * n + k]

        gamma = [[[0.0] * n for _ in range(n)] for _ in range(n)]
        for i in range(n):
            for j in range(i + 1):
                w = [
                    0.5 * (d(j, l, i) + d(i, l, j) - d(i, j, l))
                    for l in range(n)
                ]
                col = linalg.cho_solve(L, w)
                for k in range(n):
                    gamma[k][i][j] = col[k]
                    gamma[k][j][i] = col[k]
        return gamma

    def sharp(self, q: Sequence[float], covector: Sequence[float]) -> list[float]:
        L = self._factor(q)
        return linalg.cho_solve(L, list(covector))

    def flat(self, q: Sequence[float], vector: Sequence[float]) -> list[float]:
        g = self.metric_at(q)
        return linalg.matvec(g, list(vector))

    def grad_potential(self, q: Sequence[float]) -> list[float]:
        L = self._factor(q)
        return linalg.cho_solve(L, list(self._dV_fn(*q)))

    def coframe_at(self, q: Sequence[float]) -> list[list[float]]:
        flat = self._coframe_fn(*q)
        return [list(flat[a * self.n:(a + 1) * self.n]) for a in range(self.m)]

    def input_fields_at(self, q: Sequence[float]) -> list[list[float]]:
        """Control force vector fields: sharp of each coframe row."""
        L = self._factor(q)
        return [linalg.cho_solve(L, row) for row in self.coframe_at(q)]

    def drift_acceleration(self, state: State) -> list[float]:
        """Acceleration of the unactuated forced system (the drift field)."""
        self._check_state(state)
        L = self._factor(state.q)
        return self._drift(state.q, state.qdot, L)

    def _drift(self, q, qd, L) -> list[float]:
        n = self.n
        dg = self._dmetric_fn(*q)

        def d(i, j, k):
            return dg[(i * n + j) * n + k]

        # w_l = qd^i qd^j (d_i g_jl - 1/2 d_l g_ij); geodesic term = G^{-1} w
        w = [0.0] * n
        for i in range(n):
            qi = qd[i]
            if qi == 0.0:
                continue
            for j in range(n):
                c = qi * qd[j]
                if c == 0.0:
                    continue
                for l in range(n):
                    w[l] += c * (d(j, l, i) - 0.5 * d(i, j, l))
        dv = self._dV_fn(*q)
        f0 = self._force_fn(*q, *qd)
        rhs = [f0[k] - dv[k] - w[k] for k in range(n)]
        return linalg.cho_solve(L, rhs)

    def _check_state(self, state: State):
        if len(state.q) != self.n:
            raise ValueError(
                f"state dimension {len(state.q)} does not match model n={self.n}"
            )
