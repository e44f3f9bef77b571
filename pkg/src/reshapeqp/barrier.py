"""Pairwise barrier functions.

The barrier of a pair at relative position ``p`` is ``V(p) = mu(|p| - D_s)``
where ``mu`` is strictly decreasing, strictly convex and vanishes (with its
derivative) at infinity.  Larger values mean the pair is closer.  Only the
reciprocal family ``mu(s) = 1 / (s + D_s)`` is implemented, in which case
``V(p) = 1 / |p|``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError, SingularityError


class MuFamily(str, Enum):
    RECIPROCAL = "reciprocal"


@dataclass(frozen=True)
class BarrierSpec:
    """Safety distances plus the shaping functions ``mu`` and ``alpha_V``.

    Attributes:
        D: safety distance that must never be violated.
        D_s: safety margin used inside ``mu``.  May be larger or smaller
            than ``D``.
        alpha_v_slope: slope ``k`` of the linear class-K^e function
            ``alpha_V(s) = k * s``.
        mu_family: shape of ``mu``.
    """

    D: float
    D_s: float
    alpha_v_slope: float = 1.0
    mu_family: MuFamily = MuFamily.RECIPROCAL

    def __post_init__(self):
        if not self.D > 0:
            raise ValueError(f"D must be positive, got {self.D}")
        if not self.D_s > 0:
            raise ValueError(f"D_s must be positive, got {self.D_s}")
        if not self.alpha_v_slope > 0:
            raise ValueError(f"alpha_v_slope must be positive, got {self.alpha_v_slope}")
        object.__setattr__(self, "mu_family", MuFamily(self.mu_family))

    @property
    def mu0(self) -> float:
        """``mu(0)``, the barrier value at distance ``D_s``."""
        return mu(0.0, self)

    @property
    def mu_at_D(self) -> float:
        """``mu(D - D_s)``, the barrier value on the safety boundary."""
        return mu(self.D - self.D_s, self)


def mu(s, spec: BarrierSpec):
    s = np.asarray(s, dtype=float)
    if np.any(s <= -spec.D_s):
        raise DomainError(f"mu is defined for s > -D_s = {-spec.D_s}")
    out = 1.0 / (s + spec.D_s)
    return float(out) if out.ndim == 0 else out


def mu_inverse(v, spec: BarrierSpec):
    v = np.asarray(v, dtype=float)
    if np.any(v <= 0):
        raise DomainError("mu_inverse is defined for positive values only")
    out = 1.0 / v - spec.D_s
    return float(out) if out.ndim == 0 else out


def mu_derivative(s, spec: BarrierSpec):
    """Closed-form ``d mu / d s``."""
    s = np.asarray(s, dtype=float)
    if np.any(s <= -spec.D_s):
        raise DomainError(f"mu is defined for s > -D_s = {-spec.D_s}")
    out = -1.0 / (s + spec.D_s) ** 2
    return float(out) if out.ndim == 0 else out


def alpha_mu(v, spec: BarrierSpec):
    """Slope magnitude of ``mu`` expressed as a function of its value.

    ``alpha_mu(v) = -mu'(mu^{-1}(v))`` for ``v > 0`` and ``0`` at ``v = 0``.
    For the reciprocal family this is exactly ``v**2``.
    """
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise DomainError("alpha_mu is defined for v >= 0")
    pos = v > 0
    safe = np.where(pos, v, 1.0)
    out = np.where(pos, -np.asarray(mu_derivative(mu_inverse(safe, spec), spec)), 0.0)
    return float(out) if out.ndim == 0 else out


def alpha_v(s, spec: BarrierSpec):
    out = spec.alpha_v_slope * np.asarray(s, dtype=float)
    return float(out) if out.ndim == 0 else out


def barrier_value(p_rel, spec: BarrierSpec) -> float:
    p_rel = np.asarray(p_rel, dtype=float)
    dist = float(np.linalg.norm(p_rel))
    if dist == 0.0:
        raise SingularityError("relative position is zero")
    return mu(dist - spec.D_s, spec)


def is_safe(p_rel, spec: BarrierSpec) -> bool:
    return float(np.linalg.norm(p_rel)) >= spec.D
