"""Command-line entry point: ``quaddock {trial,batch,sweep,export,align,config}``.

Exit codes: 0 success, 1 validation/config error, 2 simulation fault, 3 I/O error.
"""

from __future__ import annotations

import argparse
import itertools
import logging
import sys
from pathlib import Path

import yaml

from .control import CONTROLLERS
from .core import ConfigError, SimulationFault, ValidationError, apply_overrides, dump_config, load_config
from .harness import export as ex
from .harness import plots
from .harness.align import ALIGNMENT_COLUMNS, alignment_trace
from .harness.batch import BatchReport, ordering_checks, run_batch, summarize
from .harness.scenarios import TERRAIN_PRESETS
from .harness.sim import TrialLog, run_tracking_trial, run_trial

log = logging.getLogger("quaddock")

EXIT_OK, EXIT_VALIDATION, EXIT_SIM, EXIT_IO = 0, 1, 2, 3


def _parse_set(items: list[str]) -> dict[str, str]:
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = value
    return out


def _config(args):
    cfg = load_config(args.config)
    if args.set:
        cfg = apply_overrides(cfg, _parse_set(args.set))
    return cfg.validate()


def _controllers(text: str) -> list[str]:
    names = list(CONTROLLERS) if text == "all" else [c.strip() for c in text.split(",") if c.strip()]
    for c in names:
        if c not in CONTROLLERS:
            raise ValidationError("controller", f"unknown controller {c!r}; choose from {CONTROLLERS}")
    return names


def cmd_trial(args) -> int:
    cfg = _config(args)
    trial_log = TrialLog() if args.verbose else None
    runner = run_trial if args.mode == "mission" else run_tracking_trial
    seed = cfg.sim.seed if args.seed is None else args.seed
    result = runner(cfg, args.controller, args.terrain, seed, log=trial_log)
    text = result.to_json()
    print(text)
    if args.out:
        out = Path(args.out)
        ex.write_results_jsonl([result], out / "result.jsonl")
        if trial_log is not None:
            ex.write_trial_logs(trial_log, out)
            plots.plot_trajectory(trial_log.steps, cfg.gains.d_s, out / "trajectory.png")
            plots.plot_gz([s[0] for s in trial_log.steps], [s[13] for s in trial_log.steps],
                          [s[2] for s in trial_log.steps], out / "gz.png", title="platform g_z")
    return EXIT_OK


def _progress(total: int):
    def cb(controller: str, done: int) -> None:
        if done % 50 == 0 or done == total:
            log.info("%d/%d trials (%s)", done, total, controller)
    return cb


def cmd_batch(args) -> int:
    cfg = _config(args)
    controllers = _controllers(args.controllers)
    seed_base = cfg.sim.seed if args.seed_base is None else args.seed_base
    report, results = run_batch(cfg, controllers, args.terrain, args.n, seed_base, mode=args.mode,
                                jobs=args.jobs, progress=_progress(args.n * len(controllers)))
    print(ex.summary_table(report), end="")
    if set(controllers) >= {"nftsmc_bf", "nftsmc", "smc", "pid"}:
        for c in ordering_checks(report):
            flag = "INVERTED (beyond CI)" if c.significant else "inverted (within CI)" if c.inverted else "ok"
            print(f"{c.better} >= {c.worse}: gap {c.gap:+.3f} {flag}")
    if args.out:
        out = Path(args.out)
        flat = [r for c in controllers for r in results[c]]
        ex.write_results_csv(flat, out / "results.csv")
        ex.write_results_jsonl(flat, out / "results.jsonl")
        ex.write_report_csv(report, out / "summary.csv")
        (out / "summary.txt").write_text(ex.summary_table(report))
        (out / "config.yaml").write_text(dump_config(cfg))
        plots.plot_success_rates(report, out / "success_rates.png")
    return EXIT_OK


def _grid(params: list[str]) -> tuple[list[str], list[tuple]]:
    keys, values = [], []
    for p in params:
        key, sep, vals = p.partition("=")
        if not sep or not vals:
            raise ConfigError(f"--param expects key=v1,v2,..., got {p!r}")
        keys.append(key.strip())
        values.append([yaml.safe_load(v) for v in vals.split(",")])
    return keys, list(itertools.product(*values))


def cmd_sweep(args) -> int:
    base = _config(args)
    controllers = _controllers(args.controllers)
    keys, combos = _grid(args.param)
    header = [*keys, *ex.SUMMARY_COLUMNS]
    rows = []
    for combo in combos:
        cfg = apply_overrides(base, dict(zip(keys, combo))).validate()
        seed_base = cfg.sim.seed if args.seed_base is None else args.seed_base
        report, _ = run_batch(cfg, controllers, args.terrain, args.n, seed_base, mode=args.mode, jobs=args.jobs)
        for row in report.rows:
            values = [getattr(row, f) for f in ex.ROW_FIELDS]
            rows.append([*combo, *values])
            print(", ".join(f"{k}={v}" for k, v in zip(keys, combo)), f"{row.controller}: rate {row.rate:.3f}")
    if args.out:
        ex.write_rows(Path(args.out), header, rows)
    return EXIT_OK


def cmd_export(args) -> int:
    src = Path(args.source)
    out = Path(args.out)
    if args.format == "gz-archive":
        ex.make_archive(src, out)
        print(out)
        return EXIT_OK
    results = ex.read_results_jsonl(src / "results.jsonl" if src.is_dir() else src)
    if args.format == "csv":
        ex.write_results_csv(results, out)
    else:
        groups: dict[tuple[str, str], list] = {}
        for r in results:
            groups.setdefault((r.controller, r.terrain), []).append(r)
        report = BatchReport(tuple(summarize(c, t, rs) for (c, t), rs in groups.items()))
        ex.write_report_csv(report, out)
        print(ex.summary_table(report), end="")
    print(out)
    return EXIT_OK


def cmd_align(args) -> int:
    cfg = _config(args)
    trace = alignment_trace(cfg, args.incline, args.t_on, args.t_off, args.duration, args.dt)
    print(f"time to g_z <= -0.995 after D=1: {trace.time_to_level():.3f} s "
          f"(5 tau_align = {5 * cfg.platform.tau_align:.3f} s); final pitch {trace.pitch[-1]:+.4f} rad")
    if args.out:
        out = Path(args.out)
        ex.write_rows(out / "alignment.csv", ALIGNMENT_COLUMNS, trace.rows())
        ex.write_gz_series(zip(trace.t.tolist(), trace.docking.tolist(), trace.g[:, 2].tolist()), out / "gz.csv")
        plots.plot_alignment(trace, out / "alignment.png")
    return EXIT_OK


def cmd_config(args) -> int:
    print(dump_config(_config(args)), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML config file (default: $QUADDOCK_CONFIG or built-in defaults)")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config key, e.g. --set gains.k_b=0.5 (repeatable)")
    common.add_argument("-v", "--log-level", default="WARNING", help="logging level (default WARNING)")

    p = argparse.ArgumentParser(prog="quaddock", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    terrains = sorted(TERRAIN_PRESETS)
    t = sub.add_parser("trial", parents=[common], help="run one trial and print its result record")
    t.add_argument("--controller", choices=CONTROLLERS, default="nftsmc_bf")
    t.add_argument("--terrain", choices=terrains, default="stair12")
    t.add_argument("--seed", type=int, default=None, help="default: sim.seed from the config")
    t.add_argument("--mode", choices=("mission", "tracking"), default="mission")
    t.add_argument("--verbose", action="store_true", help="keep per-step logs (written with --out)")
    t.add_argument("--out", help="output directory")
    t.set_defaults(func=cmd_trial)

    def batch_args(b):
        b.add_argument("--controllers", default="all", help="comma list or 'all'")
        b.add_argument("--terrain", choices=terrains, default="stair12")
        b.add_argument("-n", "--n", type=int, default=100, help="trials per controller")
        b.add_argument("--seed-base", type=int, default=None, help="default: sim.seed from the config")
        b.add_argument("--mode", choices=("mission", "tracking"), default="mission")
        b.add_argument("--jobs", type=int, default=1, help="worker processes")

    b = sub.add_parser("batch", parents=[common], help="paired-seed Monte Carlo batch")
    batch_args(b)
    b.add_argument("--out", help="output directory (CSV, JSONL, summary, plot)")
    b.set_defaults(func=cmd_batch)

    s = sub.add_parser("sweep", parents=[common], help="batch over a parameter grid")
    batch_args(s)
    s.add_argument("--param", action="append", required=True, metavar="KEY=V1,V2",
                   help="grid axis (repeatable)")
    s.add_argument("--out", help="output CSV")
    s.set_defaults(func=cmd_sweep)

    e = sub.add_parser("export", parents=[common], help="convert or archive a batch directory")
    e.add_argument("source", help="batch directory or results.jsonl")
    e.add_argument("--format", choices=("csv", "summary-table", "gz-archive"), default="csv")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_export)

    a = sub.add_parser("align", parents=[common], help="posture-alignment transient on an incline")
    a.add_argument("--incline", type=float, default=0.35, help="rad")
    a.add_argument("--t-on", type=float, default=2.0)
    a.add_argument("--t-off", type=float, default=6.0)
    a.add_argument("--duration", type=float, default=10.0)
    a.add_argument("--dt", type=float, default=None)
    a.add_argument("--out", help="output directory")
    a.set_defaults(func=cmd_align)

    c = sub.add_parser("config", parents=[common], help="print the effective configuration")
    c.set_defaults(func=cmd_config)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValidationError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SimulationFault as exc:
        print(f"simulation fault: {exc}", file=sys.stderr)
        return EXIT_SIM


if __name__ == "__main__":
    sys.exit(main())
