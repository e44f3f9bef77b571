"""Constant direction sets used to reshape the feasible set.

A usable basis is a set of ``n_p > n`` unit rows in R^n such that any ``n``
rows are linearly independent and, for every unit direction ``u``, the rows
within the angular window ``row . u >= c_A`` number at least ``n`` and
contain ``u`` in their conic hull.  The second condition is what lets any
relaxed constraint normal be written as a positive combination of ``n``
nearby rows.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import nnls

from .errors import ConfigError, ConstructionError

_CONE_TOL = 1e-9
_WINDOW_TOL = 1e-12


@dataclass(frozen=True)
class PositiveBasis:
    rows: np.ndarray
    c_A: float
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        rows = np.atleast_2d(np.asarray(self.rows, dtype=float))
        if rows.shape[0] <= rows.shape[1]:
            raise ValueError("a positive basis needs more rows than dimensions")
        if not 0.0 < self.c_A < 1.0:
            raise ValueError(f"c_A must lie in (0, 1), got {self.c_A}")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "c_A", float(self.c_A))

    @property
    def n(self) -> int:
        return self.rows.shape[1]

    @property
    def n_p(self) -> int:
        return self.rows.shape[0]

    def with_c_A(self, c_A: float) -> "PositiveBasis":
        return PositiveBasis(self.rows, c_A, {**self.provenance, "c_A_override": c_A})

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "n_p": self.n_p,
            "rows": self.rows.tolist(),
            "c_A": self.c_A,
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PositiveBasis":
        try:
            rows = np.asarray(data["rows"], dtype=float)
            c_A = float(data["c_A"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed basis: {exc}") from exc
        if "n" in data and rows.shape[1] != int(data["n"]):
            raise ConfigError("basis dimension header does not match rows")
        return cls(rows, c_A, dict(data.get("provenance", {})))


def save_basis(basis: PositiveBasis, path) -> None:
    Path(path).write_text(json.dumps(basis.to_dict(), indent=2))


def load_basis(path) -> PositiveBasis:
    data = json.loads(Path(path).read_text())
    if data.get("kind") == "polygon":
        return polygon_basis(int(data["n_p"]))
    return PositiveBasis.from_dict(data)


def polygon_basis(n_p: int) -> PositiveBasis:
    """Outward normals of a regular polygon with an odd number of sides."""
    if int(n_p) != n_p or n_p < 5 or n_p % 2 == 0:
        raise ValueError(f"n_p must be an odd integer >= 5, got {n_p}")
    j = np.arange(1, n_p + 1)
    ang = 2.0 * np.pi * j / n_p
    rows = np.column_stack([np.cos(ang), np.sin(ang)])
    return PositiveBasis(rows, float(np.cos(2.0 * np.pi / n_p)), {"kind": "polygon", "n_p": int(n_p)})


def sample_directions(n: int, n_samples: int) -> np.ndarray:
    """Uniform angles on the circle (n=2) or a Fibonacci sphere (n=3)."""
    if n == 2:
        t = 2.0 * np.pi * np.arange(n_samples) / n_samples
        return np.column_stack([np.cos(t), np.sin(t)])
    if n == 3:
        k = np.arange(n_samples) + 0.5
        z = 1.0 - 2.0 * k / n_samples
        r = np.sqrt(1.0 - z * z)
        phi = np.pi * (3.0 - np.sqrt(5.0)) * k
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    raise ValueError("direction sampling is implemented for n = 2 and n = 3")


def in_cone(rows: np.ndarray, u: np.ndarray) -> bool:
    """Whether ``u`` is a nonnegative combination of ``rows``."""
    if rows.shape[0] == 0:
        return bool(np.linalg.norm(u) <= _CONE_TOL)
    _, res = nnls(rows.T, u)
    return bool(res <= _CONE_TOL * max(1.0, float(np.linalg.norm(u))))


def spans_positively(rows: np.ndarray) -> bool:
    """``{d : rows @ d <= 0} == {0}``; checked by conic membership of +-e_i."""
    n = rows.shape[1]
    eye = np.eye(n)
    return all(in_cone(rows, s * eye[i]) for i in range(n) for s in (1.0, -1.0))


def min_subset_singular_value(rows: np.ndarray, size: int | None = None) -> float:
    size = rows.shape[1] if size is None else size
    worst = np.inf
    for S in itertools.combinations(range(rows.shape[0]), size):
        worst = min(worst, float(np.linalg.svd(rows[list(S)], compute_uv=False)[-1]))
    return worst


def window(basis: PositiveBasis, u: np.ndarray, c_A: float | None = None) -> np.ndarray:
    """Indices ``j`` with ``row_j . u >= c_A``."""
    c = basis.c_A if c_A is None else c_A
    return np.flatnonzero(basis.rows @ u >= c - _WINDOW_TOL)


@dataclass
class ValidationReport:
    passed: bool
    n_samples: int
    min_card: int
    min_card_direction: list
    unit_norm_ok: bool
    independence_ok: bool
    min_subset_sigma: float
    positive_span_ok: bool
    analytic_ok: bool | None = None
    violations: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def validate_basis(basis: PositiveBasis, n_samples: int = 10_000, max_listed: int = 50) -> ValidationReport:
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")
    rows, n = basis.rows, basis.n
    violations: list[dict] = []

    norms = np.linalg.norm(rows, axis=1)
    unit_ok = bool(np.all(np.abs(norms - 1.0) <= 1e-12))
    if not unit_ok:
        violations.append({"condition": "unit_norm", "rows": np.flatnonzero(np.abs(norms - 1.0) > 1e-12).tolist()})

    sigma = min_subset_singular_value(rows)
    indep_ok = sigma > 1e-9
    if not indep_ok:
        violations.append({"condition": "independence", "min_sigma": sigma})

    span_ok = spans_positively(rows)
    if not span_ok:
        violations.append({"condition": "positive_span"})

    dirs = sample_directions(n, n_samples)
    dots = dirs @ rows.T
    in_window = dots >= basis.c_A - _WINDOW_TOL
    cards = in_window.sum(axis=1)
    min_idx = int(np.argmin(cards))
    n_listed = 0
    for k, u in enumerate(dirs):
        if cards[k] < n:
            if n_listed < max_listed:
                violations.append({"condition": "card", "direction": u.tolist(), "card": int(cards[k])})
            n_listed += 1
            continue
        if not in_cone(rows[in_window[k]], u):
            if n_listed < max_listed:
                violations.append({"condition": "cone", "direction": u.tolist()})
            n_listed += 1

    analytic = _polygon_analytic(basis) if n == 2 else None
    if analytic is False:
        violations.append({"condition": "analytic_angle_gap"})
    passed = unit_ok and indep_ok and span_ok and n_listed == 0 and analytic is not False
    return ValidationReport(
        passed=passed,
        n_samples=n_samples,
        min_card=int(cards[min_idx]),
        min_card_direction=dirs[min_idx].tolist(),
        unit_norm_ok=unit_ok,
        independence_ok=indep_ok,
        min_subset_sigma=sigma,
        positive_span_ok=span_ok,
        analytic_ok=analytic,
        violations=violations,
    )


def _polygon_analytic(basis: PositiveBasis) -> bool:
    # in the plane every u sits between two angularly adjacent rows; both are
    # inside the window iff the largest gap is at most arccos(c_A)
    ang = np.sort(np.mod(np.arctan2(basis.rows[:, 1], basis.rows[:, 0]), 2.0 * np.pi))
    gaps = np.diff(np.append(ang, ang[0] + 2.0 * np.pi))
    g = float(gaps.max())
    return bool(g < np.pi and g <= np.arccos(basis.c_A) + 1e-12)


def compute_c_M(basis: PositiveBasis) -> float:
    """Worst ``lambda_max((R_S R_S')^{-1})**0.5`` over row subsets of size <= n."""
    if basis.n_p > 15:
        raise ValueError("compute_c_M enumerates subsets and is limited to n_p <= 15")
    worst = 0.0
    for size in range(1, basis.n + 1):
        for S in itertools.combinations(range(basis.n_p), size):
            R = basis.rows[list(S)]
            lam_min = float(np.linalg.eigvalsh(R @ R.T)[0])
            worst = max(worst, np.inf if lam_min <= 0 else lam_min ** -0.5)
    return worst


def critical_c_A(rows: np.ndarray, dirs: np.ndarray) -> float:
    """Largest window threshold for which every sampled direction passes."""
    n = rows.shape[1]
    worst = np.inf
    for u in dirs:
        d = rows @ u
        order = np.argsort(-d, kind="stable")
        c_u = -np.inf
        for k in range(n, rows.shape[0] + 1):
            if in_cone(rows[order[:k]], u):
                c_u = d[order[k - 1]]
                break
        worst = min(worst, c_u)
    return float(worst)


def random_basis_3d(n_p: int, seed: int, *, min_sigma: float = 1e-3, n_sweep: int = 10_000,
                    safety: float = 0.05, restarts: int = 20, max_rounds: int = 2000) -> PositiveBasis:
    """Randomised 3-D basis, built by perturbed greedy sphere covering.

    Each attempt starts from the four (randomly rotated) tetrahedron
    directions, which already span positively, then repeatedly adds a small
    random perturbation of the direction farthest from the current rows.  A
    candidate is rejected if it makes any 3-subset nearly dependent.  The
    attempt with the largest critical window threshold on a coarse sweep is
    kept; ``c_A`` is its threshold on a dense sweep, refined by local
    sampling around the worst directions and shrunk by ``safety``.

    Small ``n_p`` rarely admits a positive threshold: with seven rows the
    best configurations found by direct search sit slightly below zero.
    """
    if n_p < 7:
        raise ValueError("random_basis_3d needs n_p >= 7")
    if n_p > 15:
        raise ValueError("n_p > 15 is not supported")
    rng = np.random.default_rng(seed)
    coarse = sample_directions(3, 2000)
    best_rows, best_c = None, -np.inf
    for _ in range(restarts):
        rows = _greedy_cover(n_p, rng, min_sigma, max_rounds)
        c = critical_c_A(rows, coarse)
        if c > best_c:
            best_rows, best_c = rows, c

    if best_c <= 0.0:
        # a sampled threshold only overestimates the continuum one
        raise ConstructionError(
            f"best critical window threshold {best_c:.4g} after {restarts} attempts is not positive"
        )
    c_crit = _refined_critical(best_rows, sample_directions(3, n_sweep), rng)
    c_A = (1.0 - safety) * c_crit
    if not 0.0 < c_A < 1.0:
        raise ConstructionError(
            f"best critical window threshold {c_crit:.4g} after {restarts} attempts is not positive"
        )
    return PositiveBasis(best_rows, c_A, {"kind": "random_3d", "n_p": int(n_p), "seed": int(seed),
                                          "critical_c_A": c_crit, "safety": safety})


def _refined_critical(rows, dirs, rng, n_worst=40, n_local=400, rounds=3):
    # the threshold has narrow dips between sweep points; zoom in on the worst ones
    per_dir = np.array([critical_c_A(rows, u[None]) for u in dirs])
    best = float(per_dir.min())
    radius = 1.5 * np.sqrt(4.0 * np.pi / len(dirs))
    centres = dirs[np.argsort(per_dir, kind="stable")[:n_worst]]
    for _ in range(rounds):
        found = []
        for c in centres:
            pts = c + radius * rng.normal(size=(n_local, 3))
            pts /= np.linalg.norm(pts, axis=1)[:, None]
            vals = np.array([critical_c_A(rows, u[None]) for u in pts])
            k = int(np.argmin(vals))
            found.append((vals[k], pts[k]))
        found.sort(key=lambda item: item[0])
        best = min(best, float(found[0][0]))
        centres = np.array([pt for _, pt in found[: max(4, n_worst // 4)]])
        radius *= 0.3
    return best


def _greedy_cover(n_p, rng, min_sigma, max_rounds):
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    tet = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float) / np.sqrt(3.0)
    rows = tet @ q.T
    pool = sample_directions(3, 2000)
    rounds = 0
    while rows.shape[0] < n_p:
        target = pool[np.argmin((pool @ rows.T).max(axis=1))]
        for _ in range(50):
            rounds += 1
            if rounds > max_rounds:
                raise ConstructionError("could not place a well-conditioned direction")
            cand = target + 0.05 * rng.normal(size=3)
            cand /= np.linalg.norm(cand)
            if all(
                np.linalg.svd(np.vstack([rows[list(pair)], cand]), compute_uv=False)[-1] >= min_sigma
                for pair in itertools.combinations(range(rows.shape[0]), 2)
            ):
                rows = np.vstack([rows, cand])
                break
        else:
            pool = pool[np.linalg.norm(pool - target, axis=1) > 1e-12]
    return rows
