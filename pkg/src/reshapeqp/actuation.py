"""Linear velocity-tracking dynamics ``z' = A z + B v_ref``, ``v = C z``.

Includes the identified quadrotor model, an RK4 step, the change of
coordinates ``zeta = A z + B v_ref`` in which the tracking error is
``C A^{-1} zeta``, and an input-to-output gain from the reference
derivative to the tracking error.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import expm

from .errors import ConfigError

DC_GAIN_TOL = 0.05


@dataclass(frozen=True)
class LinearActuation:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    name: str = ""

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        m = A.shape[0]
        if A.shape != (m, m) or B.shape[0] != m or C.shape[1] != m:
            raise ValueError(f"inconsistent shapes A{A.shape} B{B.shape} C{C.shape}")
        if C.shape[0] != B.shape[1]:
            raise ValueError("C must have as many outputs as B has inputs")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.B.shape[1]

    def max_real_eig(self) -> float:
        return float(np.linalg.eigvals(self.A).real.max())

    def is_hurwitz(self) -> bool:
        return self.max_real_eig() < 0.0

    def dc_gain(self) -> np.ndarray:
        """``C A^{-1} B``; unit tracking needs this to equal ``-I``."""
        return self.C @ np.linalg.solve(self.A, self.B)

    def dc_residual(self) -> float:
        return float(np.linalg.norm(self.dc_gain() + np.eye(self.n), 2))

    def check_dc_gain(self, tol: float = DC_GAIN_TOL) -> bool:
        ok = self.dc_residual() <= tol
        if not ok:
            warnings.warn(f"|C A^-1 B + I| = {self.dc_residual():.3g} exceeds {tol}", stacklevel=2)
        return ok

    def C_zeta(self) -> np.ndarray:
        return self.C @ np.linalg.inv(self.A)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "m": self.m,
            "n": self.n,
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "C": self.C.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LinearActuation":
        try:
            model = cls(data["A"], data["B"], data["C"], data.get("name", ""))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed actuation model: {exc}") from exc
        if "m" in data and int(data["m"]) != model.m or "n" in data and int(data["n"]) != model.n:
            raise ConfigError("dimension header does not match the matrices")
        return model


def save_model(model: LinearActuation, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=2))


def load_model(path) -> LinearActuation:
    return LinearActuation.from_dict(json.loads(Path(path).read_text()))


_QUAD_A = [(1.58, 2.92), (2.68, 7.18), (2.56, 6.86), (2.14, 3.71)]


def quadrotor_model() -> LinearActuation:
    """Identified planar velocity loop of a small quadrotor (8 states)."""
    A = np.zeros((8, 8))
    for k, (a, b) in enumerate(_QUAD_A):
        A[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = [[-a, b], [-b, -a]]
    B = np.zeros((8, 2))
    B[0:2, 0] = [1.65, 0.65]
    B[2:4, 0] = [1.5, 0.92]
    B[4:6, 1] = [1.58, 0.84]
    B[6:8, 1] = [1.51, -2.29]
    C = np.zeros((2, 8))
    C[0, 0:2] = [0.78, -1.98]
    C[0, 4:6] = [2.13, 2.41]
    C[1, 2:4] = [-2.2, -2.82]
    C[1, 6:8] = [-1.51, -0.99]
    return LinearActuation(A, B, C, "quadrotor")


def first_order_model(n: int = 2, rate: float = 1.0) -> LinearActuation:
    """``z' = -rate (z - v_ref)``, ``v = z``; satisfies the unit DC gain exactly."""
    eye = np.eye(n)
    return LinearActuation(-rate * eye, rate * eye, eye, f"first_order_{rate:g}")


def step(model: LinearActuation, z, v_ref, dt: float):
    """One RK4 step with ``v_ref`` held constant; returns ``(z_next, C z_next)``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    z = np.asarray(z, dtype=float)
    u = model.B @ np.asarray(v_ref, dtype=float)
    A = model.A
    k1 = A @ z + u
    k2 = A @ (z + 0.5 * dt * k1) + u
    k3 = A @ (z + 0.5 * dt * k2) + u
    k4 = A @ (z + dt * k3) + u
    z_next = z + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return z_next, model.C @ z_next


def exact_step(model: LinearActuation, z, v_ref, dt: float):
    """Zero-order-hold discretisation via the matrix exponential."""
    m = model.m
    aug = np.zeros((m + 1, m + 1))
    aug[:m, :m] = model.A * dt
    aug[:m, m] = model.B @ np.asarray(v_ref, dtype=float) * dt
    E = expm(aug)
    z_next = E[:m, :m] @ np.asarray(z, dtype=float) + E[:m, m]
    return z_next, model.C @ z_next


def zeta(model: LinearActuation, z, v_ref) -> np.ndarray:
    return model.A @ np.asarray(z, dtype=float) + model.B @ np.asarray(v_ref, dtype=float)


def tracking_error_from_zeta(model: LinearActuation, zeta_value) -> np.ndarray:
    return model.C_zeta() @ np.asarray(zeta_value, dtype=float)


@dataclass(frozen=True)
class IosGain:
    """Tracking-error bound of the linear loop.

    ``|v_err(t)| <= c_v exp(-lam t) |zeta(0)| + slope * sup|v_ref'| + dc_residual * |v_ref(t)|``

    The last term vanishes when ``C A^{-1} B = -I`` holds exactly.
    ``state_gain`` bounds the state: ``|z(t)| <= |z(0)| + state_gain * sup|v_ref|``.
    """

    slope: float
    c_v: float
    lam: float
    xi: float
    state_gain: float
    dc_residual: float = 0.0

    def bound(self, zeta0_norm: float, t, sup_rate: float, ref_norm: float = 0.0):
        decay = self.c_v * np.exp(-self.lam * np.asarray(t)) * zeta0_norm
        return decay + self.slope * sup_rate + self.dc_residual * ref_norm

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def ios_gain(model: LinearActuation, xi_fraction: float = 0.5) -> IosGain:
    """Gain from the reference derivative to the tracking error.

    With ``W = zeta' zeta`` and ``Q = -(A + A')`` positive definite,
    ``W' <= -xi W`` whenever ``|zeta| >= 2|B| |v_ref'| / lam_min(Q - xi I)``,
    which gives the decay rate ``xi / 2`` and the linear gain below.
    """
    if not 0.0 < xi_fraction < 1.0:
        raise ValueError("xi_fraction must lie in (0, 1)")
    if not model.is_hurwitz():
        raise ValueError("A is not Hurwitz")
    Q = -(model.A + model.A.T)
    lam_q = float(np.linalg.eigvalsh(Q)[0])
    if lam_q <= 0:
        raise ValueError("-(A + A') is not positive definite; P = I does not certify stability")
    xi = xi_fraction * lam_q
    lam_q_xi = float(np.linalg.eigvalsh(Q - xi * np.eye(model.m))[0])
    if lam_q_xi <= 0:
        raise ValueError("Q - xi I is not positive definite")
    s_cz = float(np.linalg.norm(model.C_zeta(), 2))
    s_b = float(np.linalg.norm(model.B, 2))
    return IosGain(
        slope=2.0 * s_cz * s_b / lam_q_xi,
        c_v=max(1.0, s_cz),
        lam=xi / 2.0,
        xi=xi,
        state_gain=2.0 * s_b / lam_q_xi,
        dc_residual=model.dc_residual(),
    )


@dataclass
class Assumption1Report:
    trials: int
    max_tracking_margin: float
    max_state_margin: float
    violations: int

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {**self.__dict__, "passed": self.passed}


def random_sinusoid(rng, n: int, n_terms: int = 3, max_freq: float = 3.0, max_amp: float = 1.0):
    """Random smooth bounded signal and its analytic derivative."""
    amp = rng.uniform(0.0, max_amp, size=(n_terms, n)) / n_terms
    freq = rng.uniform(0.1, max_freq, size=(n_terms, n))
    phase = rng.uniform(0.0, 2.0 * np.pi, size=(n_terms, n))

    def sig(t):
        return (amp * np.sin(freq * t + phase)).sum(axis=0)

    def dsig(t):
        return (amp * freq * np.cos(freq * t + phase)).sum(axis=0)

    return sig, dsig


def verify_assumption1(model: LinearActuation, gain: IosGain, trials: int = 50, seed: int = 0,
                       horizon: float = 10.0, dt: float = 1e-3) -> Assumption1Report:
    """Simulate random smooth references and check the tracking and state bounds.

    Margins are ``measured - bound``; a nonpositive worst margin means the
    bounds held on every sample.
    """
    if trials < 10:
        raise ValueError("trials must be at least 10")
    rng = np.random.default_rng(seed)
    n_steps = int(round(horizon / dt))
    t = np.arange(n_steps + 1) * dt
    worst_track, worst_state, violations = -np.inf, -np.inf, 0
    for _ in range(trials):
        sig, dsig = random_sinusoid(rng, model.n)
        z0 = rng.normal(size=model.m) * rng.uniform(0.0, 1.0)
        refs = np.array([sig(tk) for tk in t])
        rates = np.linalg.norm([dsig(tk) for tk in t], axis=1)
        Z = np.empty((t.size, model.m))
        Z[0] = z0
        for k in range(n_steps):
            Z[k + 1] = _rk4_varying(model, Z[k], sig, t[k], dt)
        err = np.linalg.norm(Z @ model.C.T - refs, axis=1)
        ref_norm = np.linalg.norm(refs, axis=1)
        zeta0 = float(np.linalg.norm(zeta(model, z0, refs[0])))
        track = err - gain.bound(zeta0, t, np.maximum.accumulate(rates), ref_norm)
        state = np.linalg.norm(Z, axis=1) - (np.linalg.norm(z0) + gain.state_gain * np.maximum.accumulate(ref_norm))
        worst_track = max(worst_track, float(track.max()))
        worst_state = max(worst_state, float(state.max()))
        violations += int(track.max() > 1e-9 or state.max() > 1e-9)
    return Assumption1Report(trials, worst_track, worst_state, violations)


def _rk4_varying(model: LinearActuation, z, sig, t, dt):
    A, B = model.A, model.B
    k1 = A @ z + B @ sig(t)
    k2 = A @ (z + 0.5 * dt * k1) + B @ sig(t + 0.5 * dt)
    k3 = A @ (z + 0.5 * dt * k2) + B @ sig(t + 0.5 * dt)
    k4 = A @ (z + dt * k3) + B @ sig(t + dt)
    return z + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
