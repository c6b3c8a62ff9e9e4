"""Command line entry point: ``cogsec run | verify | replay``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import harness
from .model import SystemConfig


def _grid(text: str | None):
    if text is None:
        return None
    return [float(v) for v in text.split(",") if v.strip()]


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    return json.loads(Path(path).read_text())


def cmd_run(args) -> int:
    base = dict(harness.EXPERIMENTS[args.experiment][3])
    base.update(_load_config(args.config))
    spec = harness.ExperimentSpec.default(
        args.experiment, trials=args.trials, seed=args.seed, out_dir=args.out, grid=_grid(args.grid),
        schemes=args.schemes.split(",") if args.schemes else None, base=base, backend=args.backend,
        workers=args.workers)
    res = harness.run_experiment(spec)
    for row in res.summary:
        flag = " (few ok trials)" if row["low_count"] else ""
        print(f"{row['scheme']:>16} {spec.sweep}={row['sweep_value']:<8g} mean={row['mean']:.4f} "
              f"se={row['stderr']:.4f} ok={row['ok']} infeasible={row['infeasible']} "
              f"failure={row['failure']}{flag}")
    print(f"wrote {res.out_dir}/trials.csv, summary.csv, manifest.json")
    return 1 if res.any_failure else 0


def cmd_verify(args) -> int:
    config = SystemConfig.from_dict(_load_config(args.config))
    checks = harness.verify_suite(config, samples=args.samples, seed=args.seed)
    for c in checks:
        print(c.line())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return 1 if failed else 0


def cmd_replay(args) -> int:
    res, same = harness.replay(args.manifest, args.out, args.workers)
    if same is None:
        print(f"replayed into {res.out_dir}; no original trials.csv next to the manifest")
    else:
        print(f"replayed into {res.out_dir}; trials.csv {'identical' if same else 'DIFFERS'}")
    return 1 if res.any_failure or same is False else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cogsec", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one experiment sweep")
    r.add_argument("--experiment", required=True, choices=sorted(harness.EXPERIMENTS))
    r.add_argument("--trials", type=int, default=100)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", default="results")
    r.add_argument("--schemes", help="comma separated, e.g. Proposed,NoJN")
    r.add_argument("--grid", help="comma separated sweep values")
    r.add_argument("--config", help="JSON file with SystemConfig overrides")
    r.add_argument("--backend", default="clarabel", choices=["clarabel", "scs"])
    r.add_argument("--workers", type=int, default=1)
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="run the oracle suite")
    v.add_argument("--config", help="JSON file with SystemConfig overrides")
    v.add_argument("--samples", type=int, default=20000)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)

    rp = sub.add_parser("replay", help="re-run a manifest and compare trials.csv")
    rp.add_argument("--manifest", required=True)
    rp.add_argument("--out")
    rp.add_argument("--workers", type=int, default=1)
    rp.set_defaults(func=cmd_replay)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
