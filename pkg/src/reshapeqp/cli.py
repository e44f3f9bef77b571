"""``reshapeqp`` command line.

Exit codes: 0 success, 1 configuration or argument error, 2 a scientific
failure (infeasible QP, failed validation or gain check), 3 divergence.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, fileio
from .actuation import ios_gain, verify_assumption1
from .barrier import BarrierSpec
from .errors import ConfigError
from .pbasis import polygon_basis, validate_basis
from .sim import metrics, run, static_sweep

log = logging.getLogger("reshapeqp")

EXIT_OK, EXIT_CONFIG, EXIT_FAIL, EXIT_DIVERGED = 0, 1, 2, 3


@dataclass
class CliConfig:
    subcommand: str
    path: Path | None
    out: Path
    seed: int | None = None
    overrides: list = field(default_factory=list)


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 by default, which would read as a scientific failure
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _read_config(cfg: CliConfig, extra_overrides=()) -> dict:
    data = fileio.apply_overrides(fileio.load_json(cfg.path), [*cfg.overrides, *extra_overrides])
    if cfg.seed is not None:
        data["seed"] = cfg.seed
    return data


def cmd_run(cfg: CliConfig, variant: str | None = None) -> int:
    extra = [f"filter.variant={variant}"] if variant else []
    data = _read_config(cfg, extra)
    scenario = fileio.scenario_from_dict(data, cfg.path.parent)
    trace = run(scenario)
    prov = fileio.provenance(data, scenario.seed, scenario=scenario.name,
                             variant=scenario.filter.variant.value)
    cfg.out.mkdir(parents=True, exist_ok=True)
    fileio.write_trace_csv(trace, cfg.out / "trace.csv", prov)
    D = scenario.filter.barrier.D
    summary = {"scenario": scenario.name, "events": trace.events}
    if trace.n_records:
        m = metrics(trace, scenario.dt)
        summary["metrics"] = m.to_dict()
        summary["min_distance"] = m.min_distance
        summary["collision"] = m.min_distance < D
    else:
        summary["metrics"] = None
        summary["min_distance"] = None
        summary["collision"] = None
    summary["status"] = trace.status
    fileio.write_json(summary, cfg.out / "summary.json", prov)
    for ev in trace.events:
        log.warning("event %s", ev) if ev["type"] != "braking" else log.info("event %s", ev)
    log.info("%s [%s]: %s, %d records", scenario.name, prov["variant"], trace.status, trace.n_records)
    return {"completed": EXIT_OK, "infeasible": EXIT_FAIL, "diverged": EXIT_DIVERGED}[trace.status]


def cmd_sweep(cfg: CliConfig, variant: str | None = None) -> int:
    extra = [f"filter.variant={variant}"] if variant else []
    data = _read_config(cfg, extra)
    sweep_cfg = fileio.sweep_from_dict(data, cfg.path.parent)
    grid = static_sweep(sweep_cfg)
    prov = fileio.provenance(data, sweep_cfg.seed, sweep=sweep_cfg.name,
                             variant=sweep_cfg.filter.variant.value)
    cfg.out.mkdir(parents=True, exist_ok=True)
    fileio.write_grid_csv(grid, cfg.out / "grid.csv", prov)
    fileio.write_json(analysis.lipschitz_report(grid).to_dict(), cfg.out / "lipschitz.json", prov)
    log.info("%s: %d x %d grid", sweep_cfg.name, grid.xs.size, grid.ys.size)
    return EXIT_OK


def cmd_validate_basis(cfg: CliConfig, polygon: int | None = None, samples: int = 10_000) -> int:
    if polygon is not None:
        try:
            basis = polygon_basis(polygon)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        data = basis.to_dict()
    else:
        if cfg.path is None:
            raise ConfigError("give a basis file or --polygon")
        data = fileio.load_json(cfg.path)
        basis = fileio.basis_from_spec(data, cfg.path.parent)
    try:
        report = validate_basis(basis, samples)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    cfg.out.mkdir(parents=True, exist_ok=True)
    fileio.write_json(report.to_dict(), cfg.out / "report.json", fileio.provenance(data, cfg.seed))
    log.info("basis n_p=%d c_A=%.6g: %s", basis.n_p, basis.c_A, "pass" if report.passed else "FAIL")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_check_model(cfg: CliConfig, trials: int = 0) -> int:
    data = fileio.load_json(cfg.path)
    model = fileio.model_from_spec(data, cfg.path.parent)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        dc_ok = model.check_dc_gain()
    report = {
        "name": model.name,
        "hurwitz": model.is_hurwitz(),
        "max_real_eig": model.max_real_eig(),
        "dc_residual": model.dc_residual(),
        "dc_gain_ok": dc_ok,
    }
    if report["hurwitz"]:
        try:
            gain = ios_gain(model)
            report["ios_gain"] = gain.to_dict()
        except ValueError as exc:
            report["ios_gain"] = None
            report["ios_gain_error"] = str(exc)
        else:
            if trials:
                seed = 0 if cfg.seed is None else cfg.seed
                try:
                    check = verify_assumption1(model, gain, trials=trials, seed=seed)
                except ValueError as exc:
                    raise ConfigError(str(exc)) from exc
                report["assumption1"] = check.to_dict()
    cfg.out.mkdir(parents=True, exist_ok=True)
    fileio.write_json(report, cfg.out / "report.json", fileio.provenance(data, cfg.seed))
    passed = report["hurwitz"] and report.get("assumption1", {"passed": True})["passed"]
    log.info("model %s: hurwitz=%s dc_residual=%.4g", model.name, report["hurwitz"], report["dc_residual"])
    return EXIT_OK if passed else EXIT_FAIL


def gain_from_spec(spec, base_dir: Path | None = None) -> analysis.GainFn:
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError(f"gain must be an object with a 'type', got {spec!r}")
    kind = spec["type"]
    try:
        if kind == "linear":
            return analysis.LinearSlope(float(spec["k"]))
        if kind == "affine":
            return analysis.AffineOffset(float(spec["k"]), float(spec["d"]))
        if kind == "tabulated":
            if "csv" in spec:
                return analysis.load_tabulated_csv(fileio._resolve(spec["csv"], base_dir))
            return analysis.Tabulated(spec["s"], spec["values"])
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad {kind} gain: {exc}") from exc
    raise ConfigError(f"unknown gain type {kind!r}")


def cmd_check_gains(cfg: CliConfig) -> int:
    """Config keys: ``small_gain`` and/or ``self_gain`` blocks, optional ``barrier``."""
    data = _read_config(cfg)
    base = cfg.path.parent
    barrier = None
    if "barrier" in data:
        b = data["barrier"]
        try:
            barrier = BarrierSpec(b["D"], b["D_s"], b.get("alpha_v_slope", 1.0))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad barrier: {exc}") from exc
    out, passed = {}, True
    try:
        if "small_gain" in data:
            sg = data["small_gain"]
            interval = sg.get("interval") or (barrier and analysis.small_gain_interval(barrier))
            if not interval:
                raise ConfigError("small_gain needs an interval or a barrier")
            rep = analysis.small_gain_check(
                *(gain_from_spec(sg[k], base) for k in ("g_vV", "g_Vv", "eps1", "eps2")),
                interval, int(sg.get("samples", analysis.MIN_SAMPLES)))
            out["small_gain"] = rep.to_dict()
            passed &= rep.passed
        if "self_gain" in data:
            sf = data["self_gain"]
            if "interval" in sf:
                interval = sf["interval"]
            elif barrier is not None and "d_V" in sf:
                interval = analysis.self_gain_interval(barrier, float(sf["d_V"]))
            else:
                raise ConfigError("self_gain needs an interval, or a barrier plus d_V")
            rep = analysis.self_gain_check(gain_from_spec(sf["g_vv"], base), interval,
                                           int(sf.get("samples", analysis.MIN_SAMPLES)))
            out["self_gain"] = rep.to_dict()
            passed &= rep.passed
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    if not out:
        raise ConfigError("nothing to check: add a small_gain or self_gain block")
    out["passed"] = bool(passed)
    cfg.out.mkdir(parents=True, exist_ok=True)
    fileio.write_json(out, cfg.out / "report.json", fileio.provenance(data, data.get("seed")))
    return EXIT_OK if passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="reshapeqp", description="QP safety filters with feasible-set reshaping.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def common(sp, path_required=True):
        if path_required:
            sp.add_argument("path", type=Path)
        sp.add_argument("--out", type=Path, default=Path("out"))
        sp.add_argument("--seed", type=int)
        sp.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="dotted-key override, e.g. filter.delta=50")

    variants = ["conventional", "relaxed", "reshaped"]
    sp = sub.add_parser("run", help="simulate a scenario; writes trace.csv and summary.json")
    common(sp)
    sp.add_argument("--variant", choices=variants)
    sp = sub.add_parser("sweep", help="static filter sweep; writes grid.csv and lipschitz.json")
    common(sp)
    sp.add_argument("--variant", choices=variants)
    sp = sub.add_parser("validate-basis", help="check a positive basis; writes report.json")
    common(sp, path_required=False)
    sp.add_argument("path", type=Path, nargs="?")
    sp.add_argument("--polygon", type=int, metavar="N_P")
    sp.add_argument("--samples", type=int, default=10_000)
    sp = sub.add_parser("check-model", help="check an actuation model; writes report.json")
    common(sp)
    sp.add_argument("--trials", type=int, default=0, help="random inputs for the empirical bound check")
    sp = sub.add_parser("check-gains", help="sampled small-gain checks; writes report.json")
    common(sp)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    cfg = CliConfig(args.subcommand, args.path, args.out, args.seed, args.overrides)
    try:
        with warnings.catch_warnings():
            if not args.verbose:
                warnings.simplefilter("ignore", UserWarning)
            if cfg.subcommand == "run":
                return cmd_run(cfg, args.variant)
            if cfg.subcommand == "sweep":
                return cmd_sweep(cfg, args.variant)
            if cfg.subcommand == "validate-basis":
                return cmd_validate_basis(cfg, args.polygon, args.samples)
            if cfg.subcommand == "check-model":
                return cmd_check_model(cfg, args.trials)
            return cmd_check_gains(cfg)
    except ConfigError as exc:
        print(f"reshapeqp: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
