"""JSON configs in, CSV/JSON artifacts out.

Configs are checked against the JSON schemas under ``data/schema`` before
they are turned into library objects.  Every written artifact carries
provenance: the package version, the sha256 of the canonical config and
the seed.
"""

from __future__ import annotations

import copy
import csv
import hashlib
import json
import math
from importlib import metadata, resources
from pathlib import Path
from typing import Iterable

import jsonschema
import numpy as np
from referencing import Registry, Resource

from .actuation import LinearActuation, quadrotor_model
from .barrier import BarrierSpec
from .errors import ConfigError
from .filters import FilterConfig
from .pbasis import PositiveBasis, polygon_basis
from .sim import (
    IDEAL,
    ConstantCommand,
    CosineReference,
    ScenarioConfig,
    SimTrace,
    SweepConfig,
    SweepGrid,
    TrackingCommand,
)

PACKAGE = "artifact"
_AXES = "xyz"


def package_version() -> str:
    try:
        return metadata.version(PACKAGE)
    except metadata.PackageNotFoundError:  # pragma: no cover - source checkout without install
        return "0+unknown"


def data_path(*parts: str) -> Path:
    """Path of a file shipped in the package ``data`` directory."""
    return Path(str(resources.files("reshapeqp").joinpath("data", *parts)))


def bundled(name: str) -> Path:
    """Bundled config by file name or stem, e.g. ``bundled("sixB")``."""
    p = data_path(name if name.endswith(".json") else name + ".json")
    if not p.is_file():
        raise ConfigError(f"no bundled config named {name!r}")
    return p


def list_bundled() -> list[str]:
    return sorted(p.stem for p in data_path().glob("*.json"))


# ---------------------------------------------------------------- hashing


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(data) -> str:
    return hashlib.sha256(canonical_json(data).encode()).hexdigest()


def provenance(config: dict | None, seed: int | None, **extra) -> dict:
    out = {
        "tool": "reshapeqp",
        "version": package_version(),
        "config_sha256": config_hash(config) if config is not None else None,
        "seed": seed,
    }
    out.update(extra)
    return out


# ---------------------------------------------------------------- schemas

_REGISTRY: Registry | None = None


def _registry() -> Registry:
    global _REGISTRY
    if _REGISTRY is None:
        reg = Registry()
        for p in sorted(data_path("schema").glob("*.schema.json")):
            schema = json.loads(p.read_text())
            reg = reg.with_resource(schema["$id"], Resource.from_contents(schema))
        _REGISTRY = reg
    return _REGISTRY


def validate(data, schema: str) -> None:
    """Raise ``ConfigError`` unless ``data`` matches ``<schema>.schema.json``."""
    root = _registry().contents(f"{schema}.schema.json")
    validator = jsonschema.Draft202012Validator(root, registry=_registry())
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        where = "/".join(map(str, e.absolute_path)) or "<root>"
        raise ConfigError(f"{schema} config invalid at {where}: {e.message}")


def load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc


def apply_overrides(data: dict, overrides: Iterable[str]) -> dict:
    """Return a copy with ``a.b.c=value`` assignments applied.

    Values are parsed as JSON when possible, otherwise kept as strings.
    """
    out = copy.deepcopy(data)
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = out
        *parents, leaf = key.split(".")
        for part in parents:
            if not isinstance(node.get(part), dict):
                node[part] = {}
            node = node[part]
        node[leaf] = value
    return out


# ---------------------------------------------------------------- config -> objects


def basis_from_spec(spec, base_dir: Path | None = None) -> PositiveBasis:
    if isinstance(spec, PositiveBasis):
        return spec
    if not isinstance(spec, dict):
        raise ConfigError(f"cannot interpret basis {spec!r}")
    if spec.get("kind") == "polygon":
        try:
            return polygon_basis(spec["n_p"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if "file" in spec:
        return load_basis_file(_resolve(spec["file"], base_dir))
    validate(spec, "basis")
    try:
        return PositiveBasis.from_dict(spec)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_basis_file(path) -> PositiveBasis:
    return basis_from_spec(load_json(path), Path(path).parent)


def model_from_spec(spec, base_dir: Path | None = None):
    if spec is None or spec == IDEAL:
        return IDEAL
    if spec == "quadrotor":
        return quadrotor_model()
    if isinstance(spec, dict) and "file" in spec:
        return load_model_file(_resolve(spec["file"], base_dir))
    validate(spec, "model")
    return LinearActuation.from_dict(spec)


def load_model_file(path) -> LinearActuation:
    return model_from_spec(load_json(path), Path(path).parent)


def _resolve(name: str, base_dir: Path | None) -> Path:
    p = Path(name)
    if p.is_absolute():
        return p
    for root in (base_dir, data_path()):
        if root is not None and (root / p).is_file():
            return root / p
    raise ConfigError(f"referenced file {name!r} not found")


def _filter(data: dict, base_dir) -> FilterConfig:
    b = data["barrier"]
    f = data["filter"]
    try:
        barrier = BarrierSpec(b["D"], b["D_s"], b.get("alpha_v_slope", 1.0), b.get("mu_family", "reciprocal"))
        basis = basis_from_spec(f["basis"], base_dir) if "basis" in f else None
        return FilterConfig(
            barrier=barrier,
            delta=f.get("delta", 100.0),
            variant=f["variant"],
            basis=basis,
            c_K=f.get("c_K", 1.0),
            c_P=f.get("c_P", 1.0),
            offset_form=f.get("offset_form", "barrier"),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def _command(spec: dict):
    if spec["kind"] == "constant":
        return ConstantCommand(spec["velocities"])
    refs = tuple(CosineReference(r["offset"], r["amplitude"], r["period"]) for r in spec["references"])
    return TrackingCommand(float(spec["gain"]), refs)


def scenario_from_dict(data: dict, base_dir: Path | None = None) -> ScenarioConfig:
    validate(data, "scenario")
    agents = np.asarray(data["agents"], dtype=float)
    obstacles = np.asarray(data.get("obstacles", []), dtype=float)
    if obstacles.size and (obstacles.ndim != 2 or obstacles.shape[1] != agents.shape[1]):
        raise ConfigError(f"obstacles must have {agents.shape[1]} coordinates like the agents")
    obstacles = obstacles.reshape(-1, agents.shape[1])
    n_a = agents.shape[0]
    cmd = data["command"]
    n_cmd = len(cmd["velocities"] if cmd["kind"] == "constant" else cmd["references"])
    if n_cmd != n_a:
        raise ConfigError(f"command lists {n_cmd} agents, scenario has {n_a}")
    return ScenarioConfig(
        name=data["name"],
        positions=np.vstack([agents, obstacles]),
        n_agents=n_a,
        filter=_filter(data, base_dir),
        command=_command(cmd),
        actuation=model_from_spec(data.get("actuation", IDEAL), base_dir),
        dt=float(data["dt"]),
        horizon=float(data["horizon"]),
        seed=int(data["seed"]),
        min_initial_separation=data.get("min_initial_separation"),
        source=data,
    )


def sweep_from_dict(data: dict, base_dir: Path | None = None) -> SweepConfig:
    validate(data, "sweep")
    return SweepConfig(
        name=data["name"],
        obstacles=np.asarray(data["obstacles"], dtype=float).reshape(-1, 2),
        v_c=data["v_c"],
        filter=_filter(data, base_dir),
        region=tuple(float(v) for v in data["region"]),
        step=float(data["step"]),
        seed=int(data["seed"]),
        source=data,
    )


def load_scenario(path, overrides: Iterable[str] = ()) -> ScenarioConfig:
    data = apply_overrides(load_json(path), overrides)
    return scenario_from_dict(data, Path(path).parent)


def load_sweep(path, overrides: Iterable[str] = ()) -> SweepConfig:
    data = apply_overrides(load_json(path), overrides)
    return sweep_from_dict(data, Path(path).parent)


# ---------------------------------------------------------------- writers


def _f(x) -> str:
    return repr(float(x))


def _header_lines(kind: str, prov: dict) -> list[str]:
    lines = [f"# reshapeqp {kind}"]
    for key in ("version", "config_sha256", "seed"):
        lines.append(f"# {key}={prov.get(key)}")
    for key in sorted(set(prov) - {"version", "config_sha256", "seed", "tool"}):
        lines.append(f"# {key}={prov[key]}")
    return lines


def trace_columns(dim: int) -> list[str]:
    ax = _AXES[:dim]
    cols = ["step", "time", "agent"]
    for name in ("p", "v_c", "v_star"):
        cols += [f"{name}_{a}" for a in ax]
    cols.append("delta")
    for name in ("v", "v_err"):
        cols += [f"{name}_{a}" for a in ax]
    cols += ["max_V", "min_distance", "braked"]
    return cols


def write_trace_csv(trace: SimTrace, path, prov: dict) -> None:
    dim = trace.positions.shape[-1] if trace.positions.ndim == 3 else 2
    with open(path, "w", newline="") as fh:
        for line in _header_lines("trace", prov):
            fh.write(line + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trace_columns(dim))
        for k in range(trace.n_records):
            for i in range(trace.n_agents):
                row = [str(k), _f(trace.time[k]), str(i)]
                row += [_f(x) for x in trace.positions[k, i]]
                row += [_f(x) for x in trace.v_c[k, i]]
                row += [_f(x) for x in trace.v_star[k, i]]
                row.append(_f(trace.delta[k, i]))
                row += [_f(x) for x in trace.v[k, i]]
                row += [_f(x) for x in trace.v_err[k, i]]
                row.append(_f(np.nanmax(trace.V[k, i])) if trace.V.shape[-1] > 1 else "nan")
                row.append(_f(trace.min_distance[k]))
                row.append("1" if trace.braked[k, i] else "0")
                w.writerow(row)


GRID_COLUMNS = ["x", "y", "speed", "delta", "braked"]


def write_grid_csv(grid: SweepGrid, path, prov: dict) -> None:
    with open(path, "w", newline="") as fh:
        for line in _header_lines("grid", prov):
            fh.write(line + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(GRID_COLUMNS)
        for i, x in enumerate(grid.xs):
            for j, y in enumerate(grid.ys):
                w.writerow([_f(x), _f(y), _f(grid.speed[i, j]), _f(grid.delta[i, j]),
                            "1" if grid.braked[i, j] else "0"])


def read_csv(path) -> tuple[dict, list[str], np.ndarray]:
    """Parse a file written by this module into ``(provenance, columns, data)``."""
    prov, rows, cols = {}, [], None
    with open(path, newline="") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                key, sep, val = line[1:].strip().partition("=")
                if sep:
                    prov[key] = val
            elif cols is None:
                cols = line.split(",")
            elif line:
                rows.append([float(v) for v in line.split(",")])
    data = np.array(rows, dtype=float).reshape(-1, len(cols or []))
    return prov, cols or [], data


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):  # enums
        return obj.value
    return obj


def write_json(payload, path, prov: dict | None = None) -> None:
    """Write ``payload`` (NaN/inf become ``null``); ``prov`` goes under ``provenance``."""
    data = _jsonable(payload)
    if prov is not None:
        data = {"provenance": _jsonable(prov), **data}
    Path(path).write_text(json.dumps(data, indent=2, allow_nan=False) + "\n")
