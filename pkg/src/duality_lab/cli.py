"""Command-line entry point ``duality-lab``.

Subcommands ``check``, ``example1``, ``erasure``, ``asymmetric`` and
``sweep``. Exit codes: 0 all relations hold, 1 a relation failed, 2 bad
usage or configuration, 3 a solver did not converge.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from contextlib import contextmanager
from typing import List, Optional

from . import wpdr
from .campaign import (
    CampaignConfig,
    ConfigError,
    dumps,
    example1_report,
    exit_code,
    load_config,
    run_campaign,
    sweep,
)
from .errors import DualityLabError, NoConvergence

log = logging.getLogger("duality_lab")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NOCONV = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _floats(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"not a comma-separated list of numbers: {text!r}")


def _global_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=None, help="campaign seed")
    p.add_argument("--tol", type=float, default=None, help="relation tolerance")
    p.add_argument("--trials", type=int, default=None, help="trials per relation")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--config", default=None, help="flat key = value campaign file")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = argparse.ArgumentParser(prog="duality-lab", description=__doc__.splitlines()[0],
                                     parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    chk = sub.add_parser("check", parents=[common], help="run a verification campaign")
    chk.add_argument("--relation", action="append", choices=wpdr.RELATION_IDS,
                     help="relation to check (repeatable)")
    chk.add_argument("--n-min", type=int)
    chk.add_argument("--n-max", type=int)
    chk.add_argument("--env-min", type=int)
    chk.add_argument("--env-max", type=int)
    chk.add_argument("--coupling", help="'random' or comma list of gammas")
    chk.add_argument("--coupler", choices=("fourier", "haar"))
    chk.add_argument("--distribution", help="check LEMMA1 on this comma-separated distribution only")

    ex = sub.add_parser("example1", parents=[common], help="reproduce the n-path example")
    ex.add_argument("n", type=int, nargs="+")

    for name, rel in (("erasure", "erasure relations"), ("asymmetric", "asymmetric-coupler relation")):
        s = sub.add_parser(name, parents=[common], help=f"campaign for the {rel}")
        s.add_argument("--n-min", type=int)
        s.add_argument("--n-max", type=int)
        s.add_argument("--env-min", type=int)
        s.add_argument("--env-max", type=int)
        s.add_argument("--coupling")

    sw = sub.add_parser("sweep", parents=[common], help="D and V along the scalar-overlap family")
    sw.add_argument("--n", type=int, default=2)
    sw.add_argument("--gammas", default=",".join(f"{g / 10:.1f}" for g in range(11)))
    sw.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    return parser


def _config_from_args(args, relations: Optional[List[str]] = None, defaults: Optional[dict] = None) -> CampaignConfig:
    cfg = CampaignConfig(**(defaults or {}))
    if args.config:
        cfg = load_config(args.config, cfg)
    if relations:
        cfg.relations = relations
    if getattr(args, "n_min", None) is not None or getattr(args, "n_max", None) is not None:
        cfg.n_range = (args.n_min if args.n_min is not None else cfg.n_range[0],
                       args.n_max if args.n_max is not None else cfg.n_range[1])
    if getattr(args, "env_min", None) is not None or getattr(args, "env_max", None) is not None:
        cfg.env_dim_range = (args.env_min if args.env_min is not None else cfg.env_dim_range[0],
                             args.env_max if args.env_max is not None else cfg.env_dim_range[1])
    if getattr(args, "coupling", None):
        cfg.coupling = "random" if args.coupling == "random" else _floats(args.coupling)
    if getattr(args, "coupler", None):
        cfg.coupler = args.coupler
    for name in ("seed", "tol", "trials", "out"):
        if getattr(args, name) is not None:
            setattr(cfg, name, getattr(args, name))
    return cfg.validate()


@contextmanager
def _sink(path: Optional[str]):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _run_records(cfg: CampaignConfig) -> int:
    records = []
    with _sink(cfg.out) as fh:
        for rec in run_campaign(cfg):
            records.append(rec)
            fh.write(dumps(rec) + "\n")
    code = exit_code(records)
    fails = sum(r.get("pass") is False for r in records)
    log.info("%d records, %d failed, exit %d", len(records), fails, code)
    return code


def cmd_check(args) -> int:
    if args.distribution is not None:
        q = _floats(args.distribution)
        tol = args.tol if args.tol is not None else 1e-12
        rec = wpdr.check_lemma1(q, tol).to_record()
        with _sink(args.out) as fh:
            fh.write(dumps(rec) + "\n")
        return EXIT_OK if rec["pass"] else EXIT_FAIL
    cfg = _config_from_args(args, args.relation)
    return _run_records(cfg)


def cmd_example1(args) -> int:
    tol = args.tol if args.tol is not None else 1e-9
    with _sink(args.out) as fh:
        for n in args.n:
            fh.write(dumps(example1_report(n, min(max(tol, 1e-12), 1e-3))) + "\n")
    return EXIT_OK


def cmd_erasure(args) -> int:
    defaults = {"relations": ["ERASURE", "ERASURE_ENTROPIC"], "n_range": (2, 3), "env_dim_range": (2, 4)}
    return _run_records(_config_from_args(args, None, defaults))


def cmd_asymmetric(args) -> int:
    defaults = {"relations": ["ASYMMETRIC"], "n_range": (2, 4), "coupler": "haar"}
    return _run_records(_config_from_args(args, None, defaults))


def cmd_sweep(args) -> int:
    gammas = _floats(args.gammas)
    if not gammas or any(not 0.0 <= g <= 1.0 for g in gammas):
        raise UsageError("gamma grid must be nonempty with values in [0, 1]")
    if len(set(gammas)) != len(gammas):
        raise UsageError("gamma grid contains duplicates")
    if args.n < 2:
        raise UsageError("n must be at least 2")
    tol = args.tol if args.tol is not None else 1e-6
    points = sweep(args.n, gammas, tol)
    for a, b in zip(points, points[1:]):
        if b.D > a.D + 1e-9:
            log.warning("D increased from %.12g to %.12g between gamma %g and %g", a.D, b.D, a.gamma, b.gamma)
    log.info("D nonincreasing in gamma: %s", all(b.D <= a.D + 1e-9 for a, b in zip(points, points[1:])))
    with _sink(args.out) as fh:
        if args.format == "csv":
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["gamma", "D", "V", "sum_sq", "slack"])
            for p in points:
                w.writerow([repr(p.gamma), repr(p.D), repr(p.V), repr(p.sum_sq), repr(p.slack)])
        else:
            for p in points:
                fh.write(json.dumps(p.__dict__) + "\n")
    return EXIT_OK


COMMANDS = {
    "check": cmd_check,
    "example1": cmd_example1,
    "erasure": cmd_erasure,
    "asymmetric": cmd_asymmetric,
    "sweep": cmd_sweep,
}


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except NoConvergence as exc:
        log.error("%s", exc)
        return EXIT_NOCONV
    except (UsageError, ConfigError, DualityLabError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
