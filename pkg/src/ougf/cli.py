"""Command line entry point: ``ougf run`` and ``ougf check-conditions``."""

from __future__ import annotations

import argparse
import sys

from . import harness


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ougf", description="OU type growth-fragmentation experiments")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment and write its report")
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=int, default=None, help="overrides OUGF_SEED and the config")
    r.add_argument("--out", default="-", help="output path, '-' for stdout")
    r.add_argument("--format", choices=("csv", "json"), default="csv")
    r.add_argument("--threads", type=int, default=None, help="overrides OUGF_THREADS and the config")
    c = sub.add_parser("check-conditions", help="report the law-of-large-numbers hypotheses")
    c.add_argument("--config", required=True)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        config = harness.load_config(args.config)
    except harness.ConfigError as exc:
        for v in exc.violations:
            print(f"error: {v}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.command == "check-conditions":
        text, ok = harness.condition_report(config)
        sys.stdout.write(text)
        return 0 if ok else 1
    config = harness.with_overrides(config, seed=args.seed, workers=args.threads)
    try:
        report = harness.run_experiment(config)
    except harness.ConfigError as exc:
        for v in exc.violations:
            print(f"precondition violated: {v}", file=sys.stderr)
        return 2
    harness.emit_report(report, args.format, args.out)
    failed = sum(1 for r in report.rows
                 if not harness.compare_stats(r.estimate, r.stderr, r.target).passed)
    print(f"{len(report.rows)} rows, {failed} with |z| >= 3, seed {config.seed}, "
          f"{report.metadata['wall_time']:.2f} s", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
