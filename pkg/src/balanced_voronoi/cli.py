"""``verify`` command: run a verification suite or manage the on-disk cache.

    verify <suite> [--N --L --M --c --a --seed --gamma-max --precision --threads
                    --out --cache-dir --config --provider --conventions]
    verify cache {warm,inspect,clear} [--cache-dir]

Exit status: 0 when every assertion of the suite holds, 1 on the first
failing instance (named on stderr), 2 on a usage error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import cache
from .suites import SUITES, ConfigError, RunConfig, run, write_outputs

log = logging.getLogger("balanced_voronoi")

# flag name -> (RunConfig field, parser of one value, takes a list)
_FIELDS = {
    "N": ("N", int, False),
    "L": ("L", int, False),
    "M": ("M", int, False),
    "c": ("c", int, True),
    "a": ("a", int, True),
    "seed": ("seeds", int, True),
    "gamma-max": ("gamma_max", float, False),
    "precision": ("precision", float, False),
    "threads": ("threads", int, False),
    "out": ("out", str, False),
    "cache-dir": ("cache_dir", str, False),
    "provider": ("provider", str, False),
    "conventions": ("conventions", str, False),
}


def read_config_file(path: str | Path) -> dict:
    """Flat ``key = value`` lines; '#' starts a comment, lists are comma-separated."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (x.strip() for x in line.split("=", 1))
        key = key.replace("_", "-")
        if key not in _FIELDS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        _, conv, many = _FIELDS[key]
        try:
            out[key] = [conv(v) for v in value.replace(",", " ").split()] if many else conv(value)
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: bad value {value!r} for {key}") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="verify", description="Numerical and exact verification suites.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SUITES:
        sp = sub.add_parser(name)
        for flag, (_, conv, many) in _FIELDS.items():
            sp.add_argument(f"--{flag}", type=conv, nargs="+" if many else None, default=None)
        sp.add_argument("--config", default=None, help="flat key=value file; flags override it")
        sp.add_argument("-v", "--verbose", action="store_true")
    cp = sub.add_parser("cache")
    cp.add_argument("action", choices=("warm", "inspect", "clear"))
    cp.add_argument("--cache-dir", default=None)
    return ap


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = read_config_file(args.config) if args.config else {}
    for flag in _FIELDS:
        v = getattr(args, flag.replace("-", "_"))
        if v is not None:
            values[flag] = v
    kw = {}
    for flag, v in values.items():
        name, _, many = _FIELDS[flag]
        kw[name] = tuple(v) if many else v
    return RunConfig(args.command, **kw)


def _cache_command(action: str, cache_dir: str | None) -> int:
    from .suites import GL2_WEIGHT, GL3_WEIGHT, _gamma_of

    if action == "inspect":
        for e in cache.inspect(cache_dir):
            print(f"{e['name']}\t{e['hash']}\t{e['bytes']}")
        return 0
    if action == "clear":
        print(f"removed {cache.clear(cache_dir)} entries")
        return 0
    for name, w in (("divisor", GL2_WEIGHT), ("sym2-delta", GL3_WEIGHT)):
        for ps in (1, -1):
            _, hit = cache.cached_dual_weight(w, _gamma_of(name, ps), cache_dir)
            print(f"dual {name} psi={ps:+d}: {'hit' if hit else 'miss'}")
    _, hit = cache.cached_tau_table(512, cache_dir)
    print(f"tau table: {'hit' if hit else 'miss'}")
    return 0


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(message)s", stream=sys.stderr)
    try:
        if args.command == "cache":
            return _cache_command(args.action, args.cache_dir)
        cfg = config_from_args(args)
    except (ConfigError, OSError) as e:
        print(f"verify: error: {e}", file=sys.stderr)
        return 2
    try:
        res = run(cfg)
    except ConfigError as e:
        print(f"verify: error: {e}", file=sys.stderr)
        return 2
    rpath, ppath = write_outputs(cfg, res)
    status = "PASS" if res.ok else "FAIL"
    print(f"{cfg.suite}: {status}  report={rpath}  plot={ppath}")
    if not res.ok:
        print(f"first failing instance: {res.failure}", file=sys.stderr)
    return 0 if res.ok else 1


if __name__ == "__main__":
    sys.exit(main())
