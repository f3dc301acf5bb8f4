"""Command line front end.

Subcommands:
    run        simulate one controller variant, write records.csv + metrics.txt
    compare    simulate several variants in parallel and tabulate the metrics
    validate   static checks on a config file, no simulation

Exit codes:
    0   success
    2   usage error (bad flags, unknown subcommand)
    3   invalid configuration or failed validation
    4   simulation diverged or produced non-finite state

The output directory comes from --out unless the VOLTSAG_OUT environment
variable is set, which takes precedence.  Nothing is written until the
config has been loaded and validated.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import os
import sys

from .config import default_config, load_config, validate_config
from .sim import DivergedError, ScenarioResult, run_scenario, write_records_csv
from .vehicle import ConfigError

_METRIC_KEYS = ("rmse_x", "rmse_y", "rmse_z", "rmse_pos",
                "mae_x", "mae_y", "mae_z", "mae_pos")


def _fmt(x) -> str:
    return format(float(x), ".10g")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voltsag",
        description="Coaxial octocopter tracking under battery voltage sag.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_out=True):
        p.add_argument("--config", metavar="PATH",
                       help="YAML config file (defaults apply when omitted)")
        if with_out:
            p.add_argument("--out", metavar="DIR", default="out",
                           help="output directory (default: %(default)s)")
        p.add_argument("--seed", type=int, help="override sim.seed")
        p.add_argument("--duration", type=float, help="override sim.duration [s]")
        p.add_argument("--decimate", type=int, help="override sim.decimation")

    p_run = sub.add_parser("run", help="simulate one variant")
    common(p_run)
    p_run.add_argument("--variant", choices=("baseline", "integrator", "vdo", "ndo"),
                       help="override sim.variant")

    p_cmp = sub.add_parser("compare", help="simulate several variants")
    common(p_cmp)
    p_cmp.add_argument("--variant", dest="variants", action="append",
                       choices=("baseline", "integrator", "vdo", "ndo"),
                       help="variant to include; repeat the flag (need at least two)")

    p_val = sub.add_parser("validate", help="check a config without simulating")
    common(p_val, with_out=False)

    return parser


def _load(args) -> "SimConfig":
    cfg = load_config(args.config) if args.config else default_config()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.duration is not None:
        overrides["duration"] = args.duration
    if args.decimate is not None:
        overrides["decimation"] = args.decimate
    if getattr(args, "variant", None):
        overrides["variant"] = args.variant
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


def _ensure_valid(cfg) -> None:
    failed = [r for r in validate_config(cfg) if not r.passed]
    if failed:
        for r in failed:
            print(f"invalid config: {r.name}: {r.detail}", file=sys.stderr)
        raise ConfigError(f"{len(failed)} validation rule(s) failed")


def _out_dir(args) -> str:
    return os.environ.get("VOLTSAG_OUT") or args.out


def _write_metrics(path: str, cfg, result: ScenarioResult, status: str,
                   message: str = "") -> None:
    lines = [f"status={status}"]
    if message:
        lines.append(f"message={message}")
    lines += [
        f"variant={cfg.variant}",
        f"seed={cfg.seed}",
        f"dt={_fmt(cfg.dt)}",
        f"duration={_fmt(cfg.duration)}",
        f"samples={result.metrics.n}",
    ]
    vals = (*result.metrics.rmse, result.metrics.rmse_pos,
            *result.metrics.mae, result.metrics.mae_pos)
    lines += [f"{k}={_fmt(v)}" for k, v in zip(_METRIC_KEYS, vals)]
    lines += [
        f"saturated_ticks={result.saturated_ticks}",
        f"max_ortho_defect={_fmt(result.max_ortho_defect)}",
    ]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_run(args) -> int:
    cfg = _load(args)
    _ensure_valid(cfg)
    out = _out_dir(args)

    status, message = "ok", ""
    try:
        result = run_scenario(cfg)
    except DivergedError as exc:
        result, status, message = exc.result, "diverged", str(exc)

    os.makedirs(out, exist_ok=True)
    write_records_csv(result, os.path.join(out, "records.csv"))
    _write_metrics(os.path.join(out, "metrics.txt"), cfg, result, status, message)

    if status == "diverged":
        print(f"error: {message}", file=sys.stderr)
        print(f"partial log written to {out}", file=sys.stderr)
        return 4
    print(f"{cfg.variant}: rmse_pos={_fmt(result.metrics.rmse_pos)} m "
          f"mae_pos={_fmt(result.metrics.mae_pos)} m "
          f"({result.metrics.n} samples, {result.runtime_s:.1f} s wall)")
    print(f"results written to {out}")
    return 0


def _run_captured(cfg):
    # top level so it pickles into worker processes
    try:
        return "ok", run_scenario(cfg)
    except DivergedError as exc:
        return "diverged", exc.result


def cmd_compare(args) -> int:
    variants = args.variants
    cfg = _load(args)
    _ensure_valid(cfg)
    out = _out_dir(args)

    cfgs = [dataclasses.replace(cfg, variant=v) for v in variants]
    workers = min(len(cfgs), os.cpu_count() or 1)
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        outcomes = list(pool.map(_run_captured, cfgs))

    os.makedirs(out, exist_ok=True)
    rows = []
    any_diverged = False
    for v, (status, result) in zip(variants, outcomes):
        write_records_csv(result, os.path.join(out, f"records_{v}.csv"))
        _write_metrics(os.path.join(out, f"metrics_{v}.txt"),
                       dataclasses.replace(cfg, variant=v), result, status)
        any_diverged |= status == "diverged"
        rows.append((v, status, result.metrics))

    lines = [f"{'variant':<12}{'status':<10}{'rmse_z':>10}{'mae_z':>10}{'rmse_pos':>10}"]
    for v, status, m in rows:
        lines.append(f"{v:<12}{status:<10}{m.rmse[2]:>10.4f}{m.mae[2]:>10.4f}"
                     f"{m.rmse_pos:>10.4f}")

    finished = [(v, m) for v, status, m in rows if status == "ok"]
    if len(finished) >= 2:
        # improvements recomputed from the tabulated 4-decimal figures so the
        # percentages always agree with the table a reader sees
        best_v, best_m = min(finished, key=lambda it: it[1].rmse[2])
        best_r1, best_r2 = round(best_m.rmse[2], 4), round(best_m.mae[2], 4)
        for v, m in finished:
            if v == best_v:
                continue
            r1, r2 = round(m.rmse[2], 4), round(m.mae[2], 4)
            if r1 > 0 and r2 > 0:
                lines.append(
                    f"{best_v} vs {v}: altitude rmse improvement "
                    f"{(1 - best_r1 / r1) * 100:.2f}%, mae improvement "
                    f"{(1 - best_r2 / r2) * 100:.2f}%")

    table = "\n".join(lines)
    with open(os.path.join(out, "comparison.txt"), "w") as fh:
        fh.write(table + "\n")
    print(table)
    print(f"results written to {out}")
    return 4 if any_diverged else 0


def cmd_validate(args) -> int:
    cfg = _load(args)
    results = validate_config(cfg)
    ok = True
    for r in results:
        ok &= r.passed
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
    print(f"{sum(r.passed for r in results)}/{len(results)} rules passed")
    return 0 if ok else 3


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "compare" and len(set(args.variants or [])) < 2:
        parser.error("compare needs at least two distinct --variant flags")
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "compare":
            return cmd_compare(args)
        return cmd_validate(args)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
