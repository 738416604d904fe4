"""Command-line entry point: ``python -m dzk <subcommand>``."""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .reports import CASE_IDS
from .runner import ConfigError, ReportRecord, emit_reports, parse_config, run, run_solve

log = logging.getLogger("dzk")


def _load(args) -> "ExperimentConfig":  # noqa: F821
    text = Path(args.config).read_text(encoding="utf-8") if args.config else ""
    cfg = parse_config(text)
    if args.seed is not None:
        cfg.values["run.seed"] = args.seed
        cfg.explicit["run.seed"] = str(args.seed)
    if args.out is not None:
        cfg.values["output.dir"] = args.out
        cfg.explicit["output.dir"] = args.out
    return cfg


def _with_cases(cfg, cases):
    cfg.values["estimate.cases"] = tuple(cases)
    cfg.explicit["estimate.cases"] = ",".join(cases)
    return cfg


def _print(records) -> int:
    for r in records:
        extra = f"  {r.message}" if r.message else ""
        print(f"{r.case_id:24s} {r.status}{extra}")
    return 1 if any(r.status == "fail" for r in records) else 0


def _bench(cfg, repeat: int) -> list:
    from .field import ScalarField, dealiased_product, fft3, ifft3
    from .propagators import schrodinger_group, wave_sine

    grid = cfg.grid()
    rng = np.random.default_rng(cfg.seed)
    f = ScalarField(grid, rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape))
    ops = {
        "fft3+ifft3": lambda: ifft3(fft3(f.values)),
        "schrodinger_group": lambda: schrodinger_group(f, 0.5),
        "wave_sine": lambda: wave_sine(f, 0.5),
        "dealiased_product": lambda: dealiased_product(f, f),
    }
    rows = []
    for name, op in ops.items():
        op()
        t0 = time.perf_counter()
        for _ in range(repeat):
            op()
        dt = (time.perf_counter() - t0) / repeat
        rows.append((name, grid.nx * grid.ny * grid.nz, dt, grid.nx * grid.ny * grid.nz / dt))
    return rows


def main(argv=None) -> int:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="configuration file (section.key = value lines)")
    common.add_argument("--out", help="output directory (default: $DZK_OUT or ./dzk-out)")
    common.add_argument("--seed", type=int, help="override run.seed")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="dzk", description="Degenerate Zakharov numerical laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("verify", parents=[common], help="run one estimate case")
    p.add_argument("case_id", choices=CASE_IDS)
    sub.add_parser("counterexample", parents=[common], help="maximal-function growth on dyadic data")
    sub.add_parser("kernel", parents=[common], help="kernel envelope and tail fit")
    sub.add_parser("solve", parents=[common], help="Picard solve of Gaussian data")
    sub.add_parser("suite", parents=[common], help="run every case listed in estimate.cases")
    p = sub.add_parser("bench", parents=[common], help="time transforms and propagators")
    p.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load(args)
    except (ConfigError, OSError) as exc:
        print(f"dzk: {exc}", file=sys.stderr)
        return 2

    if args.command == "verify":
        return _print(run(_with_cases(cfg, [args.case_id])))
    if args.command == "counterexample":
        return _print(run(_with_cases(cfg, ["counterexample"])))
    if args.command == "kernel":
        return _print(run(_with_cases(cfg, ["kernel-envelope"])))
    if args.command == "suite":
        return _print(run(cfg))
    if args.command == "solve":
        try:
            rec = run_solve(cfg)
        except Exception as exc:  # noqa: BLE001 - reported as a failed record
            rec = ReportRecord("solve", "fail", message=f"{type(exc).__name__}: {exc}")
        emit_reports([rec], cfg.out, cfg)
        for k, v in rec.metrics.items():
            print(f"{k}: {v}")
        return _print([rec])
    rows = _bench(cfg, args.repeat)
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    from .runner import _csv_text, _write_text

    path = _write_text(out / "bench.csv", _csv_text(("operation", "points", "seconds", "points_per_second"), rows))
    for name, n, dt, rate in rows:
        print(f"{name:20s} {dt * 1e3:9.2f} ms  {rate:.3e} points/s")
    print(f"wrote {path}")
    return 0
