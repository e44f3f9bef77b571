"""Safety filters mapping a nominal velocity command to a safe reference.

Three variants share the same pairwise constraint data:

* ``CONVENTIONAL`` projects ``v_c`` onto ``{v : A v + a_o <= 0}`` and can be
  infeasible.
* ``RELAXED`` adds a relaxation variable ``delta_i in [0, delta]`` that
  scales the offsets, so zero is always feasible.
* ``RESHAPED`` replaces the state-dependent normals by a constant positive
  basis and aggregates the offsets through :func:`phi`.  The solution is
  then Lipschitz in the agent positions.

Both relaxed variants brake permanently once ``delta_i`` collapses.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .barrier import BarrierSpec, alpha_v
from .pbasis import PositiveBasis, compute_c_M
from .qp import FEAS_TOL, QpProblem, QpSolution, solve
from .world import WorldState


class Variant(str, Enum):
    CONVENTIONAL = "conventional"
    RELAXED = "relaxed"
    RESHAPED = "reshaped"


class OffsetForm(str, Enum):
    # alpha_V(V - mu0)
    BARRIER = "barrier"
    # 1/|p| - 1/D_s, independent of the alpha_V slope
    RECIPROCAL = "reciprocal"


# latch when the relaxation drops below this fraction of delta
LATCH_FRACTION = 0.25


@dataclass(frozen=True)
class FilterConfig:
    barrier: BarrierSpec
    delta: float = 100.0
    variant: Variant = Variant.RESHAPED
    basis: PositiveBasis | None = None
    c_K: float = 1.0
    c_P: float = 1.0
    offset_form: OffsetForm = OffsetForm.BARRIER
    check_invariants: bool = True

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "offset_form", OffsetForm(self.offset_form))
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not self.c_K > 0 or not self.c_P > 0:
            raise ValueError("c_K and c_P must be positive")
        if self.variant is Variant.RESHAPED:
            if self.basis is None:
                raise ValueError("the reshaped variant needs a positive basis")
            if self.c_K < 1.0 / self.basis.c_A:
                warnings.warn(
                    f"c_K={self.c_K} is below 1/c_A={1.0 / self.basis.c_A:.4g}",
                    stacklevel=3,
                )

    @cached_property
    def c_M(self) -> float:
        return compute_c_M(self.basis)


@dataclass
class FilterState:
    braked: bool = False
    braking_time: float | None = None

    def latch(self, t: float | None) -> None:
        if not self.braked:
            self.braked = True
            self.braking_time = t


@dataclass(frozen=True)
class ConstraintData:
    A_s: np.ndarray
    a_o: np.ndarray
    a_s: np.ndarray
    a_r: np.ndarray | None = None
    phi: np.ndarray | None = field(default=None, repr=False)


class FilterOutput(NamedTuple):
    v_star: np.ndarray
    delta_i: float
    feasible: bool
    braked: bool
    qp: QpSolution | None
    constraints: ConstraintData | None


def offsets(rel: np.ndarray, cfg: FilterConfig) -> np.ndarray:
    """Conventional offsets ``a_o`` for the given relative positions."""
    dist = np.linalg.norm(rel, axis=1)
    inv = 1.0 / dist - 1.0 / cfg.barrier.D_s
    if cfg.offset_form is OffsetForm.RECIPROCAL:
        return inv
    # V - mu0 = 1/|p| - 1/D_s for the reciprocal mu family
    return np.asarray(alpha_v(inv, cfg.barrier), dtype=float).reshape(-1)


def phi(A_s: np.ndarray, a_s: np.ndarray, cfg: FilterConfig) -> np.ndarray:
    """Per basis row and neighbour, the candidate reshaped offset."""
    A_r = cfg.basis.rows
    X = A_r @ np.atleast_2d(A_s).T
    Xa = X * np.asarray(a_s, dtype=float)[None, :]
    sat = np.clip(cfg.c_K * (cfg.basis.c_A - X), 0.0, 1.0)
    return Xa - sat * (Xa + cfg.c_P / cfg.delta)


def reshape_offsets(phi_matrix: np.ndarray) -> np.ndarray:
    phi_matrix = np.atleast_2d(phi_matrix)
    if phi_matrix.size == 0:
        raise ValueError("phi matrix is empty")
    return phi_matrix.max(axis=1)


def build_constraints(agent: int, world: WorldState, cfg: FilterConfig) -> ConstraintData:
    rel = world.relative(agent)
    A_s = -rel / np.linalg.norm(rel, axis=1)[:, None]
    a_o = offsets(rel, cfg)
    a_s = a_o / cfg.delta
    if cfg.variant is Variant.RESHAPED:
        ph = phi(A_s, a_s, cfg)
        return ConstraintData(A_s, a_o, a_s, reshape_offsets(ph), ph)
    return ConstraintData(A_s, a_o, a_s)


def _problem(v_c: np.ndarray, data: ConstraintData, cfg: FilterConfig) -> QpProblem:
    if cfg.variant is Variant.CONVENTIONAL:
        return QpProblem(v_c, data.A_s, -data.a_o)
    if cfg.variant is Variant.RELAXED:
        G = np.column_stack([data.A_s, data.a_s])
    else:
        G = np.column_stack([cfg.basis.rows, data.a_r])
    return QpProblem(np.append(v_c, cfg.delta), G, np.zeros(G.shape[0]), 0.0, cfg.delta)


def filter_velocity(
    agent: int,
    v_c,
    world: WorldState,
    cfg: FilterConfig,
    state: FilterState | None = None,
    t: float | None = None,
) -> FilterOutput:
    """Safe velocity reference for one agent.

    ``delta_i`` is the raw relaxation value returned by the QP (``nan`` for
    the conventional variant).  When it drops below ``delta / 4`` the state
    latches and every later call returns zero.
    """
    v_c = np.asarray(v_c, dtype=float).ravel()
    state = FilterState() if state is None else state
    n = v_c.size
    if cfg.variant is not Variant.CONVENTIONAL and state.braked:
        return FilterOutput(np.zeros(n), 0.0, True, True, None, None)

    data = build_constraints(agent, world, cfg)
    sol = solve(_problem(v_c, data, cfg))

    if cfg.variant is Variant.CONVENTIONAL:
        if not sol.optimal:
            return FilterOutput(np.full(n, np.nan), np.nan, False, False, sol, data)
        return FilterOutput(sol.u.copy(), np.nan, True, False, sol, data)

    v_star, delta_i = sol.u[:-1].copy(), float(sol.u[-1])
    if cfg.check_invariants:
        _check(v_c, v_star, delta_i, data, cfg)
    braked = delta_i < LATCH_FRACTION * cfg.delta
    if braked:
        state.latch(t)
        v_star = np.zeros(n)
    return FilterOutput(v_star, delta_i, True, braked, sol, data)


def velocity_bound(v_c, delta_i: float, data: ConstraintData, cfg: FilterConfig) -> float:
    """Upper bound on ``|v*|`` for the reshaped variant.

    With ``delta_i`` fixed, ``v*`` is the projection of ``v_c`` onto the
    affine set of at most ``n`` independent active rows, so the offset
    correction is bounded through ``c_M``.
    """
    n = np.size(v_c)
    return float(np.linalg.norm(v_c) + cfg.c_M * np.sqrt(n) * delta_i * np.abs(data.a_r).max())


def _check(v_c, v_star, delta_i, data, cfg):
    # only the reshaped set is bounded; the relaxed one still allows sliding at delta_i = 0
    if cfg.variant is not Variant.RESHAPED:
        return
    scale = max(1.0, float(np.linalg.norm(v_c)))
    if delta_i <= FEAS_TOL and np.linalg.norm(v_star) > 1e-6 * scale:
        raise AssertionError(f"delta_i = 0 but |v*| = {np.linalg.norm(v_star)}")
    bound = velocity_bound(v_c, delta_i, data, cfg)
    if np.linalg.norm(v_star) > bound + 1e-9 * scale:
        raise AssertionError(f"|v*| = {np.linalg.norm(v_star)} exceeds bound {bound}")
