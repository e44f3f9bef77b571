"""Fixed-step closed-loop simulation and static filter sweeps.

Each step evaluates the nominal command, runs the safety filter for every
agent on the same frozen snapshot, advances the actuation dynamics with
RK4 (or copies the reference for ideal actuation) and Euler-integrates the
positions with the actuated velocity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import actuation as act
from .errors import ConfigError
from .filters import LATCH_FRACTION, FilterConfig, FilterState, Variant, filter_velocity
from .world import WorldState


@dataclass(frozen=True)
class ConstantCommand:
    velocities: np.ndarray  # one row per agent

    def __post_init__(self):
        object.__setattr__(self, "velocities", np.atleast_2d(np.asarray(self.velocities, dtype=float)))

    def __call__(self, agent: int, p, t: float) -> np.ndarray:
        return self.velocities[agent].copy()


@dataclass(frozen=True)
class CosineReference:
    """``p_r(t) = offset + amplitude * cos(2 pi t / period)``."""

    offset: np.ndarray
    amplitude: np.ndarray
    period: float

    def __post_init__(self):
        object.__setattr__(self, "offset", np.asarray(self.offset, dtype=float))
        object.__setattr__(self, "amplitude", np.asarray(self.amplitude, dtype=float))
        if not self.period > 0:
            raise ValueError("period must be positive")

    def position(self, t: float) -> np.ndarray:
        return self.offset + self.amplitude * np.cos(2.0 * np.pi * t / self.period)

    def velocity(self, t: float) -> np.ndarray:
        w = 2.0 * np.pi / self.period
        return -w * self.amplitude * np.sin(w * t)


@dataclass(frozen=True)
class TrackingCommand:
    """Feedforward plus proportional feedback on the reference position."""

    gain: float
    references: tuple

    def __call__(self, agent: int, p, t: float) -> np.ndarray:
        return tracking_command(p, t, self, agent)


def tracking_command(p, t: float, gen: TrackingCommand, agent: int = 0) -> np.ndarray:
    ref = gen.references[agent]
    return -gen.gain * (np.asarray(p, dtype=float) - ref.position(t)) + ref.velocity(t)


IDEAL = "ideal"


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    positions: np.ndarray
    n_agents: int
    filter: FilterConfig
    command: object
    actuation: object = IDEAL  # IDEAL or a LinearActuation
    dt: float = 1e-3
    horizon: float = 1.0
    seed: int = 0
    min_initial_separation: float | None = None
    source: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        object.__setattr__(self, "positions", pos)
        if not self.dt > 0 or not self.horizon >= 0:
            raise ConfigError("dt must be positive and horizon nonnegative")
        if not 1 <= self.n_agents <= pos.shape[0]:
            raise ConfigError("n_agents out of range")
        sep = self.min_initial_separation
        if sep is not None:
            d0 = WorldState(pos, self.n_agents).min_distance()
            if d0 < sep:
                raise ConfigError(f"initial separation {d0:.4g} is below {sep}")

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    def with_variant(self, variant) -> "ScenarioConfig":
        from dataclasses import replace

        return replace(self, filter=replace(self.filter, variant=Variant(variant)))


@dataclass
class SimTrace:
    time: np.ndarray
    positions: np.ndarray  # (K, n_total, n)
    v_c: np.ndarray  # (K, n_a, n)
    v_star: np.ndarray
    delta: np.ndarray  # (K, n_a)
    v: np.ndarray
    v_err: np.ndarray
    V: np.ndarray  # (K, n_a, n_total), nan on the diagonal
    min_distance: np.ndarray  # (K,)
    braked: np.ndarray  # (K, n_a) bool
    braking_times: list
    events: list
    status: str
    n_agents: int

    @property
    def n_records(self) -> int:
        return self.time.size

    @property
    def valid(self) -> bool:
        return self.status == "completed"


def _pair_barrier(positions: np.ndarray, n_a: int) -> np.ndarray:
    diff = positions[:n_a, None, :] - positions[None, :, :]
    dist = np.linalg.norm(diff, axis=-1)
    with np.errstate(divide="ignore"):
        V = 1.0 / dist
    V[np.arange(n_a), np.arange(n_a)] = np.nan
    return V


def run(scenario: ScenarioConfig) -> SimTrace:
    n_a = scenario.n_agents
    pos = scenario.positions.copy()
    n = pos.shape[1]
    model = scenario.actuation
    linear = isinstance(model, act.LinearActuation)
    if linear and model.n != n:
        raise ConfigError("actuation model dimension does not match the positions")
    z = [np.zeros(model.m) for _ in range(n_a)] if linear else []
    states = [FilterState() for _ in range(n_a)]
    dt, N = scenario.dt, scenario.n_steps

    rec: dict[str, list] = {k: [] for k in ("t", "p", "vc", "vs", "d", "v", "ve", "V", "md", "br")}
    events: list[dict] = []
    status = "completed"
    for k in range(N + 1):
        t = k * dt
        world = WorldState(pos.copy(), n_a, tuple(z), None, t)
        v_c = np.array([scenario.command(i, pos[i], t) for i in range(n_a)])
        outs = [filter_velocity(i, v_c[i], world, scenario.filter, states[i], t) for i in range(n_a)]
        if not all(o.feasible for o in outs):
            bad = [i for i, o in enumerate(outs) if not o.feasible]
            events.append({"type": "infeasible", "time": t, "step": k, "agents": bad})
            status = "infeasible"
            break
        v_star = np.array([o.v_star for o in outs])
        delta = np.array([o.delta_i for o in outs])
        if linear:
            stepped = [act.step(model, z[i], v_star[i], dt) for i in range(n_a)]
            z_next = [s[0] for s in stepped]
            v = np.array([s[1] for s in stepped])
        else:
            z_next = z
            v = v_star.copy()

        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(pos))):
            events.append({"type": "divergence", "time": t, "step": k})
            status = "diverged"
            break

        rec["t"].append(t)
        rec["p"].append(pos.copy())
        rec["vc"].append(v_c)
        rec["vs"].append(v_star)
        rec["d"].append(delta)
        rec["v"].append(v)
        rec["ve"].append(v - v_star)
        rec["V"].append(_pair_barrier(pos, n_a))
        rec["md"].append(world.min_distance())
        rec["br"].append([s.braked for s in states])
        if k == N:
            break
        z = z_next
        pos[:n_a] = pos[:n_a] + dt * v

    braking = [
        {"agent": i, "time": s.braking_time} for i, s in enumerate(states) if s.braked
    ]
    for b in braking:
        events.append({"type": "braking", **b})

    def arr(key, shape_tail):
        return np.array(rec[key]) if rec[key] else np.zeros((0,) + shape_tail)

    n_tot = pos.shape[0]
    return SimTrace(
        time=arr("t", ()),
        positions=arr("p", (n_tot, n)),
        v_c=arr("vc", (n_a, n)),
        v_star=arr("vs", (n_a, n)),
        delta=arr("d", (n_a,)),
        v=arr("v", (n_a, n)),
        v_err=arr("ve", (n_a, n)),
        V=arr("V", (n_a, n_tot)),
        min_distance=arr("md", ()),
        braked=arr("br", (n_a,)).astype(bool),
        braking_times=braking,
        events=events,
        status=status,
        n_agents=n_a,
    )


@dataclass
class MetricsReport:
    min_distance: float
    min_distance_time: float
    max_v_star: float
    max_rate: float
    max_rate_time: float
    max_rate_agent: int
    braking_times: list
    max_V: float
    max_v_err: float
    status: str
    n_records: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def metrics(trace: SimTrace, dt: float | None = None) -> MetricsReport:
    if trace.n_records == 0:
        raise ValueError("trace is empty")
    if dt is None:
        dt = float(trace.time[1] - trace.time[0]) if trace.n_records > 1 else 1.0
    k_min = int(np.argmin(trace.min_distance))
    if trace.n_records > 1:
        rates = np.linalg.norm(np.diff(trace.v_star, axis=0), axis=-1) / dt  # (K-1, n_a)
        kr, ar = np.unravel_index(int(np.argmax(rates)), rates.shape)
        max_rate, rate_time = float(rates[kr, ar]), float(trace.time[kr + 1])
    else:
        max_rate, rate_time, ar = 0.0, float(trace.time[0]), 0
    return MetricsReport(
        min_distance=float(trace.min_distance[k_min]),
        min_distance_time=float(trace.time[k_min]),
        max_v_star=float(np.linalg.norm(trace.v_star, axis=-1).max()),
        max_rate=max_rate,
        max_rate_time=rate_time,
        max_rate_agent=int(ar),
        braking_times=list(trace.braking_times),
        max_V=float(np.nanmax(trace.V)) if trace.V.size else float("nan"),
        max_v_err=float(np.linalg.norm(trace.v_err, axis=-1).max()),
        status=trace.status,
        n_records=trace.n_records,
    )


# ---------------------------------------------------------------- sweeps


@dataclass(frozen=True)
class SweepConfig:
    name: str
    obstacles: np.ndarray
    v_c: np.ndarray
    filter: FilterConfig
    region: tuple  # (x_min, x_max, y_min, y_max)
    step: float
    seed: int = 0
    source: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "obstacles", np.atleast_2d(np.asarray(self.obstacles, dtype=float)))
        object.__setattr__(self, "v_c", np.asarray(self.v_c, dtype=float))
        if not self.step > 0:
            raise ConfigError("sweep step must be positive")
        if len(self.region) != 4:
            raise ConfigError("region must be [x_min, x_max, y_min, y_max]")


@dataclass
class SweepGrid:
    """Filter output on a rectangular grid; excluded points hold ``nan``."""

    xs: np.ndarray
    ys: np.ndarray
    speed: np.ndarray  # (len(xs), len(ys))
    delta: np.ndarray
    braked: np.ndarray
    step: float
    label: str = ""

    @property
    def valid(self) -> np.ndarray:
        return np.isfinite(self.speed)

    def ratios(self, skip_braked: bool = True):
        """Finite-difference ratios between 4-neighbours.

        Returns ``(ratio, x_mid, y_mid)`` flat arrays.  Pairs that touch a
        braked cell are skipped by default: braking is a deliberate switch
        to zero, outside the branch the Lipschitz property refers to.
        """
        out_r, out_x, out_y = [], [], []
        ok = self.valid & (~self.braked if skip_braked else True)
        mid_x = 0.5 * (self.xs[:-1] + self.xs[1:])
        mid_y = 0.5 * (self.ys[:-1] + self.ys[1:])
        pairs = (
            (ok[:-1, :] & ok[1:, :], np.diff(self.speed, axis=0), *np.meshgrid(mid_x, self.ys, indexing="ij")),
            (ok[:, :-1] & ok[:, 1:], np.diff(self.speed, axis=1), *np.meshgrid(self.xs, mid_y, indexing="ij")),
        )
        for both, diff, X, Y in pairs:
            out_r.append(np.abs(diff[both]) / self.step)
            out_x.append(X[both])
            out_y.append(Y[both])
        return np.concatenate(out_r), np.concatenate(out_x), np.concatenate(out_y)

    def max_ratio(self, skip_braked: bool = True) -> tuple[float, np.ndarray]:
        r, x, y = self.ratios(skip_braked)
        if r.size == 0:
            return 0.0, np.array([np.nan, np.nan])
        k = int(np.argmax(r))
        return float(r[k]), np.array([x[k], y[k]])


def grid_axis(lo: float, hi: float, step: float) -> np.ndarray:
    if hi < lo:
        return np.zeros(0)
    count = int(np.floor((hi - lo) / step + 1e-9)) + 1
    # rounding keeps grid coordinates exact multiples of the step in decimal
    return np.round(lo + step * np.arange(count), 12)


def static_sweep(cfg: SweepConfig) -> SweepGrid:
    """Evaluate the filter for a single agent at every grid position."""
    xs = grid_axis(cfg.region[0], cfg.region[1], cfg.step)
    ys = grid_axis(cfg.region[2], cfg.region[3], cfg.step)
    speed = np.full((xs.size, ys.size), np.nan)
    delta = np.full_like(speed, np.nan)
    braked = np.zeros(speed.shape, dtype=bool)
    D = cfg.filter.barrier.D
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            p = np.array([x, y])
            if cfg.obstacles.size and np.min(np.linalg.norm(cfg.obstacles - p, axis=1)) < D:
                continue
            world = WorldState(np.vstack([p, cfg.obstacles]), 1)
            out = filter_velocity(0, cfg.v_c, world, cfg.filter, FilterState())
            speed[i, j] = np.linalg.norm(out.v_star)
            delta[i, j] = out.delta_i
            braked[i, j] = out.braked
    return SweepGrid(xs, ys, speed, delta, braked, cfg.step, cfg.filter.variant.value)


def delta_gap_violations(deltas: Sequence[float], delta: float) -> int:
    """Count values outside ``{0} U [delta/2, delta]`` (with 1e-9 slack)."""
    d = np.asarray(deltas, dtype=float)
    zero = np.abs(d) <= 1e-9
    upper = (d >= 0.5 * delta - 1e-9) & (d <= delta + 1e-9)
    return int(np.sum(~(zero | upper)))


__all__ = [
    "ConstantCommand",
    "CosineReference",
    "TrackingCommand",
    "tracking_command",
    "IDEAL",
    "ScenarioConfig",
    "SimTrace",
    "run",
    "MetricsReport",
    "metrics",
    "SweepConfig",
    "SweepGrid",
    "static_sweep",
    "grid_axis",
    "delta_gap_violations",
    "WorldState",
    "LATCH_FRACTION",
]
