"""Small dense QPs with identity Hessian.

Every filter in this package solves

    minimize    0.5 * u.u - target.u
    subject to  G u <= h,   box_low <= u[-1] <= box_high

i.e. the Euclidean projection of ``target`` onto a polyhedron.  The solver
is a dual active-set method (Goldfarb-Idnani) specialised to ``H = I``.  It
starts from the unconstrained minimiser, adds violated constraints one at a
time and keeps the multipliers nonnegative, so infeasibility shows up
naturally as a violated constraint that no multiplier update can fix.

Box bounds are folded into extra rows appended after ``G``: the lower bound
becomes row ``m`` and the upper bound row ``m + 1`` (when present), and
active-set indices refer to this folded matrix.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.linalg import solve_triangular

from .errors import RankDeficiencyError

FEAS_TOL = 1e-9
RANK_TOL = 1e-10
ORACLE_TOL = 1e-8

# violation needed before the dual method adds a constraint
_ADD_TOL = 1e-12
# relative size of the out-of-span component below which a row counts as
# linearly dependent on the active set
_DEP_TOL = 1e-8


class QpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class QpProblem:
    target: np.ndarray
    G: np.ndarray
    h: np.ndarray | None = None
    box_low: float | None = None
    box_high: float | None = None

    def __post_init__(self):
        target = np.asarray(self.target, dtype=float).ravel()
        G = np.asarray(self.G, dtype=float).reshape(-1, target.size)
        h = np.zeros(G.shape[0]) if self.h is None else np.asarray(self.h, dtype=float).ravel()
        if h.shape[0] != G.shape[0]:
            raise ValueError("G and h have inconsistent row counts")
        if not (np.all(np.isfinite(G)) and np.all(np.isfinite(h)) and np.all(np.isfinite(target))):
            raise ValueError("QP data must be finite")
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "h", h)

    @property
    def dim(self) -> int:
        return self.target.size

    def folded(self) -> tuple[np.ndarray, np.ndarray]:
        """Constraint rows with the box on the last coordinate appended."""
        rows, rhs = [self.G], [self.h]
        e = np.zeros((1, self.dim))
        e[0, -1] = 1.0
        if self.box_low is not None:
            rows.append(-e)
            rhs.append([-float(self.box_low)])
        if self.box_high is not None:
            rows.append(e)
            rhs.append([float(self.box_high)])
        return np.vstack(rows), np.concatenate([np.asarray(r, dtype=float) for r in rhs])

    def objective(self, u) -> float:
        u = np.asarray(u, dtype=float)
        return 0.5 * float(u @ u) - float(self.target @ u)


@dataclass(frozen=True)
class QpSolution:
    u: np.ndarray | None
    status: QpStatus
    active_set: tuple[int, ...] = ()
    multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is QpStatus.OPTIMAL


def kkt_residuals(prob: QpProblem, sol: QpSolution) -> dict[str, float]:
    """Primal, dual, stationarity and complementarity residuals.

    Complementarity is scaled by ``max(1, max|lambda|)``: with large
    multipliers the slack of an active row is only known to roundoff.
    """
    Gf, hf = prob.folded()
    u = sol.u
    lam = np.zeros(Gf.shape[0])
    lam[list(sol.active_set)] = sol.multipliers
    slack = Gf @ u - hf
    return {
        "primal": float(max(0.0, slack.max())) if slack.size else 0.0,
        "dual": float(max(0.0, -lam.min())) if lam.size else 0.0,
        "stationarity": float(np.abs(u - prob.target + Gf.T @ lam).max()),
        "complementarity": float(np.abs(lam * slack).max() / max(1.0, np.abs(lam).max())) if lam.size else 0.0,
    }


class ActiveSetSolver:
    """Dual active-set solver for projection onto a polyhedron.

    Ties in the choice of the entering constraint and of the blocking
    multiplier are broken by the lowest row index.
    """

    def __init__(self, max_iter: int | None = None):
        self.max_iter = max_iter

    def solve(self, prob: QpProblem) -> QpSolution:
        Gf, hf = prob.folded()
        m, d = Gf.shape
        max_iter = self.max_iter or 20 * (m + d) + 50
        x = prob.target.copy()
        active: list[int] = []
        lam: list[float] = []
        norms = np.linalg.norm(Gf, axis=1)
        target_norm = float(np.linalg.norm(prob.target))

        it = 0
        while True:
            viol = Gf @ x - hf
            if active:
                viol[active] = -np.inf
            scale = _ADD_TOL * np.maximum(1.0, np.abs(hf) + norms * target_norm)
            cand = np.flatnonzero(viol > scale)
            if cand.size == 0:
                x, lam = _polish(prob.target, Gf, hf, active, x, lam)
                return QpSolution(x, QpStatus.OPTIMAL, tuple(active), np.array(lam), it)
            # most violated first; argmax returns the lowest index on ties
            p = int(cand[np.argmax(viol[cand])])
            lam_p = 0.0

            while True:
                it += 1
                if it > max_iter:
                    raise RuntimeError("active-set iteration limit reached")
                g = Gf[p]
                if active:
                    Qn, Rn = np.linalg.qr(Gf[active].T)
                    qg = Qn.T @ g
                    r = np.linalg.solve(Rn, qg)
                    z = g - Qn @ qg if len(active) < d else np.zeros(d)
                else:
                    r = np.zeros(0)
                    z = g
                z_sq = float(z @ z)
                full_step = np.sqrt(z_sq) > _DEP_TOL * norms[p]

                t1, k = np.inf, -1
                for j, (lj, rj) in enumerate(zip(lam, r)):
                    if rj > 1e-14:
                        ratio = lj / rj
                        if ratio < t1:
                            t1, k = ratio, j

                s = float(g @ x - hf[p])
                t2 = max(s, 0.0) / z_sq if full_step else np.inf

                if not full_step and k < 0:
                    return QpSolution(None, QpStatus.INFEASIBLE, tuple(active), np.array(lam), it)

                t = min(t1, t2)
                if full_step:
                    x = x - t * z
                lam = [lj - t * rj for lj, rj in zip(lam, r)]
                lam_p += t
                if t2 <= t1:
                    active.append(p)
                    lam.append(lam_p)
                    x = _project_active(prob.target, Gf, hf, active, x)
                    break
                del active[k]
                del lam[k]


def _project_active(target, Gf, hf, active, x):
    # after a full step x is the projection onto the active affine set;
    # recomputing it directly stops roundoff from growing with the multipliers
    try:
        return _affine_projection(target, Gf[active], hf[active])[0]
    except np.linalg.LinAlgError:
        return x


def _affine_projection(target, N, hN):
    """Projection of ``target`` onto ``{u : N u = hN}`` and its multipliers.

    Works on the QR factors of ``N'`` so the conditioning is that of ``N``
    rather than of the Gram matrix.
    """
    Q, R = np.linalg.qr(N.T)
    if np.abs(np.diag(R)).min() <= RANK_TOL * max(1.0, np.abs(R).max()):
        raise np.linalg.LinAlgError("active rows are dependent")
    if N.shape[0] == N.shape[1]:
        # a vertex: solve for it directly instead of correcting the target
        u = np.linalg.solve(N, hN)
        return u, solve_triangular(R, Q.T @ (target - u))
    w = solve_triangular(R, N @ target - hN, trans="T")
    lam = solve_triangular(R, w)
    return target - Q @ w, lam


def _polish(target, Gf, hf, active, x, lam):
    # re-solve the equality-constrained problem on the final active set to
    # remove drift accumulated over the incremental updates
    if not active:
        return x, lam
    try:
        x_new, lam_new = _affine_projection(target, Gf[active], hf[active])
    except np.linalg.LinAlgError:
        return x, lam
    if lam_new.min() >= -FEAS_TOL * max(1.0, np.abs(lam_new).max()) and \
            np.max(Gf @ x_new - hf) <= np.max(Gf @ x - hf) + 1e-15:
        return x_new, list(np.maximum(lam_new, 0.0))
    return x, lam


def solve(prob: QpProblem) -> QpSolution:
    return ActiveSetSolver().solve(prob)


def brute_force_oracle(prob: QpProblem) -> QpSolution:
    """Enumerate active sets of size <= dim and keep the best KKT point.

    A nonempty polyhedron always has a KKT point whose active rows are
    linearly independent, so finding no candidate proves infeasibility.
    """
    Gf, hf = prob.folded()
    m, d = Gf.shape
    if prob.G.shape[0] > 16:
        raise ValueError("brute_force_oracle is limited to 16 constraint rows")
    best = None
    for size in range(0, min(d, m) + 1):
        for S in itertools.combinations(range(m), size):
            S = list(S)
            if size:
                GS = Gf[S]
                if np.linalg.svd(GS, compute_uv=False)[-1] < RANK_TOL * max(1.0, np.abs(GS).max()):
                    continue
                # least-norm point on the face, then project target onto it
                x0 = np.linalg.lstsq(GS, hf[S], rcond=None)[0]
                pinv = np.linalg.pinv(GS)
                u = x0 + (prob.target - x0) - pinv @ (GS @ (prob.target - x0))
                lam = np.linalg.lstsq(GS.T, prob.target - u, rcond=None)[0]
                if np.any(lam < -FEAS_TOL * max(1.0, np.abs(lam).max())):
                    continue
            else:
                lam = np.zeros(0)
                u = prob.target.copy()
            # roundoff in u grows with the multipliers
            tol = FEAS_TOL * max(1.0, float(np.abs(lam).max(initial=0.0)))
            if np.any(Gf @ u - hf > tol):
                continue
            f = prob.objective(u)
            if best is None or f < best[0] - 1e-15:
                best = (f, u, tuple(S), lam)
    if best is None:
        return QpSolution(None, QpStatus.INFEASIBLE)
    return QpSolution(best[1], QpStatus.OPTIMAL, best[2], np.maximum(best[3], 0.0))


def closed_form_active(v_c, delta: float, A_active, a_active) -> tuple[np.ndarray, float]:
    """Projection of ``[v_c; delta]`` onto ``{u : M u = 0}``, ``M = [A, a]``.

    This is the solution of the relaxed/reshaped QP once its non-redundant
    active set is known.
    """
    v_c = np.asarray(v_c, dtype=float).ravel()
    A = np.asarray(A_active, dtype=float).reshape(-1, v_c.size)
    a = np.asarray(a_active, dtype=float).ravel()
    w = np.append(v_c, float(delta))
    if A.shape[0] == 0:
        return v_c.copy(), float(delta)
    M = np.column_stack([A, a])
    gram = M @ M.T
    if np.linalg.eigvalsh(gram)[0] < RANK_TOL:
        raise RankDeficiencyError("active constraint matrix is not full row rank")
    u = w - M.T @ np.linalg.solve(gram, M @ w)
    return u[:-1], float(u[-1])


def delta_sherman_morrison(v_c, delta: float, A_active, a_active) -> float:
    """Relaxation value of :func:`closed_form_active` via the rank-one update.

    ``(delta - a' (A A')^{-1} A v_c) / (1 + a' (A A')^{-1} a)``; needs
    ``A`` itself to have full row rank.
    """
    v_c = np.asarray(v_c, dtype=float).ravel()
    A = np.asarray(A_active, dtype=float).reshape(-1, v_c.size)
    a = np.asarray(a_active, dtype=float).ravel()
    if A.shape[0] == 0:
        return float(delta)
    gram = A @ A.T
    if np.linalg.eigvalsh(gram)[0] < RANK_TOL:
        raise RankDeficiencyError("A_active is not full row rank")
    ga = np.linalg.solve(gram, a)
    return float((delta - ga @ (A @ v_c)) / (1.0 + ga @ a))
