"""Command-line front end.

Subcommands:

* ``evaluate``       exact output distribution of one configured scenario
* ``optimize``       best pump mean and unit count for one scenario
* ``strategy-scan``  additionally scan the accepted-count cutoff
* ``map``            heralding-mode comparison maps over a loss grid
* ``table``          optimum tables / curve families driven by [sweep]

Output is '#'-commented, comma-separated text written byte-identically for
identical runs (fixed seed, no timestamps).  Exit codes: 0 success,
2 configuration error, 3 I/O error, 4 numerical-consistency failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from typing import Callable, Iterable, Sequence, TextIO

from . import __version__
from .config import PRESETS, ConfigError, RunSpec, dump_config, flatten_config, parse_config, strategy_from_token
from .engine import SourceConfig, output_distribution
from .losses import MuxKind
from .optimize import comparison_map, optimize_strategy, optimize_units
from .simulate import simulate
from .statistics import PairDistribution

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_CONSISTENCY = 4

MC_SIGMA_LIMIT = 4.0
MC_CHECK_I_MAX = 3

_COMMANDS = ("evaluate", "optimize", "strategy-scan", "map", "table")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="muxsps",
        description="Photon-number statistics and design optimization of multiplexed heralded single-photon sources.",
    )
    parser.add_argument("--version", action="version", version=f"muxsps {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for command in _COMMANDS:
        p = sub.add_parser(command)
        group = p.add_mutually_exclusive_group()
        group.add_argument("--config", metavar="PATH", help="configuration document to run")
        group.add_argument(
            "--preset", metavar="NAME", help=f"shipped scenario, one of: {', '.join(sorted(PRESETS))}"
        )
        p.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
        p.add_argument("--workers", type=int, metavar="K", default=os.cpu_count(), help="parallel workers (default: all cores)")
        p.add_argument("--seed", type=int, metavar="U64", default=0, help="random seed for stochastic checks")
        p.add_argument(
            "--mc-check",
            type=int,
            metavar="SAMPLES",
            help="also sample the pipeline and report the worst deviation in standard errors",
        )
        p.add_argument("--dump-config", action="store_true", help="print the resolved configuration and exit")
        if command == "map":
            p.add_argument(
                "--grid-step",
                type=float,
                metavar="STEP",
                help="re-grid both sweep axes between their configured ends with this step",
            )
    return parser


def _resolve_spec(args: argparse.Namespace) -> RunSpec:
    if args.preset:
        if args.preset not in PRESETS:
            raise ConfigError("preset", f"unknown preset {args.preset!r}; available: {', '.join(sorted(PRESETS))}")
        text = PRESETS[args.preset][1]
    elif args.config:
        try:
            with open(args.config, encoding="utf-8") as handle:
                text = handle.read()
        except OSError as exc:
            raise ConfigError("config", f"cannot read {args.config}: {exc}") from exc
    else:
        raise ConfigError("config", "one of --config or --preset is required")
    return parse_config(
        text,
        command=args.command,
        out_path=args.out,
        seed=args.seed,
        mc_samples=args.mc_check,
        workers=args.workers,
    )


def _meta(spec: RunSpec) -> list[tuple[str, str]]:
    return [
        ("tool", f"muxsps {__version__}"),
        ("command", spec.command),
        ("config", flatten_config(spec)),
    ]


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(float(value))  # plain-float repr, also for numpy scalars
    return str(value)


def _write_table(
    stream: TextIO,
    header: Sequence[str],
    rows: Iterable[Sequence],
    meta: Iterable[tuple[str, str]],
) -> None:
    for key, value in meta:
        stream.write(f"# {key}: {value}\n")
    stream.write(",".join(header) + "\n")
    for row in rows:
        stream.write(",".join(_fmt(v) for v in row) + "\n")


def _emit(spec: RunSpec, header, rows, meta) -> None:
    if spec.out_path:
        with open(spec.out_path, "w", encoding="utf-8", newline="\n") as handle:
            _write_table(handle, header, rows, meta)
    else:
        _write_table(sys.stdout, header, rows, meta)


def _mc_check(cfg: SourceConfig, spec: RunSpec, meta: list[tuple[str, str]]) -> int:
    """Sample the pipeline and compare against the exact distribution."""
    exact = output_distribution(cfg)
    estimate = simulate(cfg, spec.mc_samples, spec.seed)
    worst = max(estimate.sigma(i, exact[i]) for i in range(MC_CHECK_I_MAX + 1))
    meta.append(("mc_check", f"samples={spec.mc_samples} seed={spec.seed} max_sigma={worst:.3f} (i<={MC_CHECK_I_MAX})"))
    if worst > MC_SIGMA_LIMIT:
        print(
            f"muxsps: consistency failure: sampled pipeline deviates {worst:.2f} standard errors "
            f"from the exact distribution (limit {MC_SIGMA_LIMIT})",
            file=sys.stderr,
        )
        return EXIT_CONSISTENCY
    return EXIT_OK


def _cmd_evaluate(spec: RunSpec) -> int:
    cfg = spec.source_config()
    out = output_distribution(cfg)
    meta = _meta(spec)
    meta.append(("truncation_deficit", repr(out.truncation_deficit)))
    status = EXIT_OK
    if spec.mc_samples:
        status = _mc_check(cfg, spec, meta)
    rows = [(i, p) for i, p in enumerate(out.probabilities)]
    _emit(spec, ["i", "P_i"], rows, meta)
    return status


def _cmd_optimize(spec: RunSpec) -> int:
    cfg = spec.source_config()
    result = optimize_units(cfg, spec.n_candidates)
    meta = _meta(spec)
    meta.append(("n_opt", str(result.n_opt)))
    meta.append(("p1_max", repr(result.p1_max)))
    meta.append(("lambda_opt", repr(result.lambda_opt)))
    meta.append(("p_i_at_optimum", " ".join(repr(p) for p in result.output_at_optimum.probabilities)))
    meta.append(("truncation_deficit", repr(result.output_at_optimum.truncation_deficit)))
    status = EXIT_OK
    if spec.mc_samples:
        best_cfg = replace(
            cfg, units=result.n_opt, dist=replace(cfg.dist, mean=result.lambda_opt)
        )
        status = _mc_check(best_cfg, spec, meta)
    rows = [
        (p.units, p.lambda_opt, p.p1, int(p.units == result.n_opt))
        for p in result.per_n_curve
    ]
    _emit(spec, ["N", "lambda_opt", "P_1_max", "is_opt"], rows, meta)
    return status


def _cmd_strategy_scan(spec: RunSpec) -> int:
    cfg = spec.source_config()
    scan = optimize_strategy(cfg, spec.j_max, spec.n_candidates)
    meta = _meta(spec)
    meta.append(("j_opt", str(scan.j_opt)))
    best = scan.best()
    meta.append(("p1_max", repr(best.p1_max)))
    rows = [
        (j, result.n_opt, result.lambda_opt, result.p1_max, int(j == scan.j_opt))
        for j, result in scan.results_by_j
    ]
    _emit(spec, ["J", "N_opt", "lambda_opt", "P_1_max", "is_opt"], rows, meta)
    return EXIT_OK


def _progress(label: str):
    def report(done: int, total: int) -> None:
        step = max(1, total // 50)
        if done % step == 0 or done == total:
            print(f"{label}: {done}/{total} cells", file=sys.stderr)

    return report


def _cmd_map(spec: RunSpec) -> int:
    sweep = spec.sweep
    if not sweep.vd_values or not sweep.vr_values:
        raise ConfigError("sweep.vd_values", "map needs both vd_values and vr_values")
    grid_vd, grid_vr = sweep.vd_values, sweep.vr_values
    if spec.mux.kind is not MuxKind.SYMMETRIC_SPATIAL:
        raise ConfigError("multiplexer.kind", "map sweeps router transmission; needs symmetric-spatial")
    result = comparison_map(
        grid_vd,
        grid_vr,
        j_max=spec.j_max,
        n_candidates=spec.n_candidates,
        tail_tol=spec.tail_tol,
        i_max=spec.i_max,
        resolution_cap=spec.detector.resolution_cap,
        workers=spec.workers,
        progress=_progress("map") if len(grid_vd) * len(grid_vr) >= 100 else None,
    )
    rows = []
    for iv, vd in enumerate(result.axis_vd):
        for ir, vr in enumerate(result.axis_vr):
            rows.append(
                (
                    float(vd),
                    float(vr),
                    result.p1_spd[iv, ir],
                    int(result.n_opt_spd[iv, ir]),
                    result.lambda_opt_spd[iv, ir],
                    result.p1_threshold[iv, ir],
                    int(result.n_opt_threshold[iv, ir]),
                    result.lambda_opt_threshold[iv, ir],
                    result.delta_p[iv, ir],
                    int(result.delta_m[iv, ir]),
                    int(result.j_opt[iv, ir]),
                    result.p1_jopt[iv, ir],
                    result.delta_p_jopt[iv, ir],
                )
            )
    header = [
        "V_D", "V_r",
        "P_1_max_spd", "N_opt_spd", "lambda_opt_spd",
        "P_1_max_th", "N_opt_th", "lambda_opt_th",
        "delta_P", "delta_m", "J_opt", "P_1_max_jopt", "delta_P_jopt",
    ]
    _emit(spec, header, rows, _meta(spec))
    return EXIT_OK


def _regrid(values: Sequence[float], step: float) -> tuple[float, ...]:
    lo, hi = values[0], values[-1]
    count = int(round((hi - lo) / step)) + 1
    return tuple(round(lo + k * step, 12) for k in range(count))


def _cmd_table(spec: RunSpec) -> int:
    sweep = spec.sweep
    if sweep.vr_values:
        return _table_router_grid(spec)
    if sweep.lambda_values:
        return _table_curves(spec)
    if sweep.vd_values:
        return _table_scenarios(spec)
    raise ConfigError("sweep", "table needs vd_values (+ vr_values / n_values) or lambda_values")


def _router_cell(task: tuple) -> tuple:
    spec, vd, vr = task
    cfg = replace(
        spec.source_config(),
        detector=replace(spec.detector, efficiency=vd),
        mux=replace(spec.mux, router_transmission=vr),
    )
    result = optimize_units(cfg, spec.n_candidates)
    return (vd, vr, result.n_opt, result.p1_max, result.lambda_opt)


def _table_router_grid(spec: RunSpec) -> int:
    if spec.mux.kind is not MuxKind.SYMMETRIC_SPATIAL:
        raise ConfigError("sweep.vr_values", "router-transmission sweeps need kind=symmetric-spatial")
    tasks = [(spec, vd, vr) for vd in spec.sweep.vd_values for vr in spec.sweep.vr_values]
    rows = _run_tasks(_router_cell, tasks, spec.workers, label="table")
    _emit(spec, ["V_D", "V_r", "N_opt", "P_1_max", "lambda_opt"], rows, _meta(spec))
    return EXIT_OK


def _table_curves(spec: RunSpec) -> int:
    cfg = spec.source_config()
    unit_counts = spec.sweep.n_values or (spec.units,)
    rows = []
    for units in unit_counts:
        for mean in spec.sweep.lambda_values:
            out = output_distribution(
                replace(cfg, units=units, dist=replace(cfg.dist, mean=mean))
            )
            rows.append((units, mean, out[1]))
    _emit(spec, ["N", "lambda", "P_1"], rows, _meta(spec))
    return EXIT_OK


def _scenario_cell(task: tuple) -> tuple:
    spec, vd, label, strategy, pair_kind, units = task
    cfg = replace(
        spec.source_config(),
        detector=replace(spec.detector, efficiency=vd),
        strategy=strategy,
        dist=PairDistribution(pair_kind, spec.source.mean),
    )
    if units is not None:
        cfg = replace(cfg, units=units)
        result = optimize_units(cfg, (units,) if cfg.mux.kind is not MuxKind.TIME_LOOP_LATEST else None)
    else:
        result = optimize_units(cfg, spec.n_candidates)
    return (vd, pair_kind.value, label, result.n_opt, result.p1_max, result.lambda_opt)


def _table_scenarios(spec: RunSpec) -> int:
    sweep = spec.sweep
    if sweep.strategies:
        strategies = [(token, strategy_from_token(token)) for token in sweep.strategies]
    else:
        strategies = [(spec.strategy.label, spec.strategy)]
    pair_kinds = sweep.pair_kinds or (spec.source.kind,)
    unit_counts: tuple = sweep.n_values or (None,)
    tasks = [
        (spec, vd, label, strategy, pair_kind, units)
        for vd in sweep.vd_values
        for pair_kind in pair_kinds
        for label, strategy in strategies
        for units in unit_counts
    ]
    rows = _run_tasks(_scenario_cell, tasks, spec.workers, label="table")
    _emit(spec, ["V_D", "pair_kind", "strategy", "N_opt", "P_1_max", "lambda_opt"], rows, _meta(spec))
    return EXIT_OK


def _run_tasks(fn: Callable, tasks: list, workers: int | None, label: str) -> list:
    if workers and workers > 1 and len(tasks) > 1:
        from concurrent.futures import ProcessPoolExecutor

        report = _progress(label) if len(tasks) >= 100 else None
        rows = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for row in pool.map(fn, tasks, chunksize=max(1, len(tasks) // (workers * 4))):
                rows.append(row)
                if report:
                    report(len(rows), len(tasks))
        return rows
    return [fn(task) for task in tasks]


_DISPATCH = {
    "evaluate": _cmd_evaluate,
    "optimize": _cmd_optimize,
    "strategy-scan": _cmd_strategy_scan,
    "map": _cmd_map,
    "table": _cmd_table,
}


def run(spec: RunSpec) -> int:
    """Execute one resolved run: emit its files and return the exit status."""
    try:
        if spec.command not in _DISPATCH:
            raise ConfigError("command", f"must be one of {', '.join(_DISPATCH)}, got {spec.command!r}")
        return _DISPATCH[spec.command](spec)
    except ConfigError as exc:
        print(f"muxsps: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"muxsps: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = _resolve_spec(args)
        if getattr(args, "grid_step", None) and spec.sweep.vd_values and spec.sweep.vr_values:
            # re-gridded axes must also show up in the provenance comments
            sweep = spec.sweep
            spec = replace(
                spec,
                sweep=replace(
                    sweep,
                    vd_values=_regrid(sweep.vd_values, args.grid_step),
                    vr_values=_regrid(sweep.vr_values, args.grid_step),
                ),
            )
        if args.dump_config:
            text = dump_config(spec)
            if spec.out_path:
                with open(spec.out_path, "w", encoding="utf-8", newline="\n") as handle:
                    handle.write(text)
            else:
                sys.stdout.write(text)
            return EXIT_OK
    except ConfigError as exc:
        print(f"muxsps: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"muxsps: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    return run(spec)


if __name__ == "__main__":
    sys.exit(main())
