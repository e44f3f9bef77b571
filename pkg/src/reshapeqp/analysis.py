"""Sampled small-gain checks and Lipschitz diagnostics.

Gains are user-supplied monotone scalar maps.  The checks evaluate a
composition on a uniform grid of an interval and report the worst margin,
so a failing grid point is never hidden by refinement.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .barrier import BarrierSpec, alpha_v, mu
from .errors import ConfigError, DomainError
from .sim import SweepGrid

MIN_SAMPLES = 1000
_SLACK = 1e-12


class GainFn:
    """Nondecreasing map on ``domain``; subclasses implement ``_eval``."""

    domain: tuple = (0.0, np.inf)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        lo, hi = self.domain
        if np.any(s < lo - 1e-12) or np.any(s > hi + 1e-12):
            raise DomainError(f"argument outside gain domain [{lo}, {hi}]")
        return self._eval(s)

    def _eval(self, s):  # pragma: no cover - abstract
        raise NotImplementedError

    def then(self, outer: "GainFn") -> "GainFn":
        """``outer o self``."""
        return Composed(outer, self)

    def __add__(self, other: "GainFn") -> "GainFn":
        return Sum(self, other)


@dataclass(frozen=True)
class Identity(GainFn):
    domain: tuple = (-np.inf, np.inf)

    def _eval(self, s):
        return s


@dataclass(frozen=True)
class LinearSlope(GainFn):
    k: float
    domain: tuple = (0.0, np.inf)

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("slope must be nonnegative")

    def _eval(self, s):
        return self.k * s


@dataclass(frozen=True)
class AffineOffset(GainFn):
    k: float
    d: float
    domain: tuple = (0.0, np.inf)

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("slope must be nonnegative")

    def _eval(self, s):
        return self.k * s + self.d


@dataclass(frozen=True)
class Tabulated(GainFn):
    """Piecewise-linear interpolation of monotone samples."""

    s: np.ndarray
    values: np.ndarray
    domain: tuple = field(default=None)

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if s.ndim != 1 or s.shape != v.shape or s.size < 2:
            raise ValueError("need at least two (s, value) pairs of equal length")
        if np.any(np.diff(s) <= 0):
            raise ValueError("s must be strictly increasing")
        if np.any(np.diff(v) < 0):
            raise ValueError("tabulated gain must be nondecreasing")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "domain", (float(s[0]), float(s[-1])))

    def _eval(self, s):
        return np.interp(s, self.s, self.values)


@dataclass(frozen=True)
class Composed(GainFn):
    outer: GainFn
    inner: GainFn

    @property
    def domain(self):
        return self.inner.domain

    def _eval(self, s):
        return self.outer(self.inner(s))


@dataclass(frozen=True)
class Sum(GainFn):
    left: GainFn
    right: GainFn

    @property
    def domain(self):
        return (max(self.left.domain[0], self.right.domain[0]), min(self.left.domain[1], self.right.domain[1]))

    def _eval(self, s):
        return self.left(s) + self.right(s)


def compose(*gains: GainFn) -> GainFn:
    """``compose(f, g, h)(s) == f(g(h(s)))``."""
    if not gains:
        raise ValueError("nothing to compose")
    out = gains[-1]
    for g in reversed(gains[:-1]):
        out = Composed(g, out)
    return out


def load_tabulated_csv(path) -> Tabulated:
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.reader(fh):
            if not rec or rec[0].lstrip().startswith("#"):
                continue
            try:
                rows.append((float(rec[0]), float(rec[1])))
            except ValueError:
                if rows:
                    raise ConfigError(f"bad row in {path}: {rec}") from None
                continue  # header
    if not rows:
        raise ConfigError(f"no samples in {path}")
    arr = np.array(rows)
    try:
        return Tabulated(arr[:, 0], arr[:, 1])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


@dataclass
class GainReport:
    passed: bool
    worst_margin: float
    worst_at: float
    worst_relative_margin: float
    worst_relative_at: float
    samples: int
    interval: tuple
    strict: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _grid(interval, samples):
    lo, hi = map(float, interval)
    if samples < MIN_SAMPLES:
        raise ValueError(f"samples must be at least {MIN_SAMPLES}")
    if not np.isfinite(lo) or not np.isfinite(hi):
        raise ValueError("interval endpoints must be finite")
    if hi < lo:
        raise ValueError(f"empty interval [{lo}, {hi}]")
    return np.linspace(lo, hi, samples)


def _report(s, image, strict, interval) -> GainReport:
    margin = image - s
    k = int(np.argmax(margin))
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(s > 0, margin / np.where(s > 0, s, 1.0), np.where(margin > 0, np.inf, -np.inf))
    kr = int(np.argmax(rel))
    passed = bool(np.all(margin < 0) if strict else np.all(margin <= _SLACK))
    return GainReport(passed, float(margin[k]), float(s[k]), float(rel[kr]), float(s[kr]), int(s.size),
                      tuple(map(float, interval)), strict)


def small_gain_check(g_vV: GainFn, g_Vv: GainFn, eps1: GainFn, eps2: GainFn, interval,
                     samples: int = MIN_SAMPLES) -> GainReport:
    """``(id + eps1) o g_vV o (id + eps2) o g_Vv (s) <= s`` on the interval."""
    s = _grid(interval, samples)
    chain = compose(Identity() + eps1, g_vV, Identity() + eps2, g_Vv)
    return _report(s, chain(s), False, interval)


def self_gain_check(g_vv: GainFn, interval, samples: int = MIN_SAMPLES) -> GainReport:
    """Strict contraction ``g_vv(s) < s`` on the interval."""
    s = _grid(interval, samples)
    return _report(s, g_vv(s), True, interval)


def small_gain_interval(barrier: BarrierSpec) -> tuple[float, float]:
    """``[mu(0), mu(D - D_s)]``: barrier values between the margin and the boundary."""
    return barrier.mu0, barrier.mu_at_D


def self_gain_interval(barrier: BarrierSpec, d_V: float) -> tuple[float, float]:
    hi = float(alpha_v(mu(barrier.D - barrier.D_s, barrier) - barrier.mu0, barrier))
    if d_V > hi:
        raise ValueError(f"lower endpoint {d_V} exceeds upper endpoint {hi}")
    return float(d_V), hi


@dataclass
class LipschitzReport:
    label: str
    max_ratio: float
    location: list
    max_ratio_with_braking: float
    location_with_braking: list
    n_pairs: int
    n_braked_cells: int
    histogram_counts: list
    histogram_edges: list

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def lipschitz_report(sweep: SweepGrid, bins: int = 20) -> LipschitzReport:
    r, _, _ = sweep.ratios(skip_braked=True)
    m, loc = sweep.max_ratio(skip_braked=True)
    m_all, loc_all = sweep.max_ratio(skip_braked=False)
    if r.size:
        counts, edges = np.histogram(r, bins=bins)
    else:
        counts, edges = np.zeros(0, dtype=int), np.zeros(0)
    return LipschitzReport(
        label=sweep.label,
        max_ratio=m,
        location=loc.tolist(),
        max_ratio_with_braking=m_all,
        location_with_braking=loc_all.tolist(),
        n_pairs=int(r.size),
        n_braked_cells=int(sweep.braked.sum()),
        histogram_counts=counts.tolist(),
        histogram_edges=edges.tolist(),
    )


def compare_lipschitz(rough: LipschitzReport, smooth: LipschitzReport) -> dict:
    """Side-by-side summary; ``factor`` is ``rough.max_ratio / smooth.max_ratio``."""
    factor = rough.max_ratio / smooth.max_ratio if smooth.max_ratio > 0 else np.inf
    return {
        "rough": rough.to_dict(),
        "smooth": smooth.to_dict(),
        "factor": float(factor),
        "rough_location_radius": float(np.hypot(*rough.location)),
    }


def write_report(report, path) -> None:
    from .fileio import write_json

    payload = report.to_dict() if hasattr(report, "to_dict") else dict(report)
    write_json(payload, Path(path))
