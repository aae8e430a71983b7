"""``lab`` command: list experiments or run one of them.

Exit status is 0 when every metric passes, 1 when any fails and 2 for
configuration problems.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..errors import ConfigError
from .experiments import EXPERIMENTS, SCHEMAS, ExperimentSpec, run_experiment

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

log = logging.getLogger("gausslab")


def read_config(path: str | Path) -> dict[str, str]:
    """Flat ``key = value`` file; blank lines and ``#`` comments are skipped."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        out[key] = value
    return out


def parse_overrides(items: list[str]) -> dict[str, str]:
    out = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"--param expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lab", description="Run the gausslab numerical experiments.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="list experiments and their parameters")
    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("experiment", help="experiment name, see 'lab list'")
    run.add_argument("--param", action="append", default=[], metavar="KEY=VALUE", help="parameter override")
    run.add_argument("--config", help="flat key = value parameter file; --param wins")
    run.add_argument("--out", default="results", help="output directory (default: results)")
    run.add_argument("--parallel", action="store_true", help="run independent parameter points in parallel")
    return parser


def _list() -> int:
    for name, exp in EXPERIMENTS.items():
        print(f"{name}: {exp.summary}")
        for key, p in SCHEMAS[name].items():
            default = ",".join(map(str, p.default)) if isinstance(p.default, tuple) else p.default
            print(f"    {key} (default {default}): {p.help}")
    return EXIT_PASS


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PASS if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.command == "list":
        return _list()
    try:
        params = read_config(args.config) if args.config else {}
        params.update(parse_overrides(args.param))
        spec = ExperimentSpec(args.experiment, params, args.out)
        spec.validate()
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    log.info("running %s", spec.name)
    result = run_experiment(spec, parallel=args.parallel)
    for row in result.rows:
        status = "PASS" if row.passed else "FAIL"
        print(f"{status} {row.experiment} {row.metric}: {row.value:.6g} {row.relation} {row.bound:.6g}")
    for path in result.files:
        log.info("wrote %s", path)
    return EXIT_PASS if result.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
