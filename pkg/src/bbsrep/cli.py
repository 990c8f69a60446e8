"""Command-line entry point: ``bbsrep {keygen,run,bench,sizes,inspect}``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from random import Random

from . import __version__, bbs
from . import group as grp
from . import sim
from .errors import ScenarioError


def cmd_keygen(args) -> int:
    rng = Random(args.seed) if args.seed is not None else None
    gpk, gmsk = bbs.keygen(rng)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "gpk.json").write_text(
        json.dumps({"curve": grp.CURVE_ID, "gpk": gpk.to_bytes().hex()}, indent=2) + "\n"
    )
    secret = out / "gmsk.json"
    fd = os.open(secret, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
    with os.fdopen(fd, "w") as fh:
        fh.write(json.dumps({"curve": grp.CURVE_ID, "gmsk": gmsk.to_bytes().hex()}, indent=2) + "\n")
    print(f"wrote {out / 'gpk.json'} and {secret}")
    return 0


def cmd_run(args) -> int:
    script = sim.load_scenario(args.scenario)
    report = sim.run_scenario(script, seed=args.seed)
    text = sim.render_report(report)
    if args.report:
        Path(args.report).write_text(text)
    else:
        sys.stdout.write(text)
    violations = report["invariant_violations"]
    if violations:
        for v in violations:
            print(f"invariant violation: {v}", file=sys.stderr)
        return 1
    return 0


def cmd_bench(args) -> int:
    result = sim.bench(args.iterations)
    print(f"curve {result['curve']}, {args.iterations} iterations per operation")
    print(f"{'operation':<20}{'median ms':>10}{'pairings':>10}{'mul':>6}{'exp':>6}")
    for name, t in result["timings"].items():
        c = result["op_counts"][name]
        print(f"{name:<20}{t['median_ms']:>10.3f}{c['pairing']:>10}{c['mul']:>6}{c['exp']:>6}")
    print("BBS* overhead over BBS (pairings / mul / exp):")
    for part, c in result["star_overhead"].items():
        print(f"  {part:<20}{c['pairing']:>4}{c['mul']:>6}{c['exp']:>6}")
    if args.json:
        Path(args.json).write_text(json.dumps(result, indent=2) + "\n")
    return 0


def cmd_sizes(args) -> int:
    bits = sim.size_arithmetic(args.g1_bits, args.p_bits)
    print(bits)
    if args.verbose:
        base = bits - 32 - args.p_bits
        print(f"plain BBS signature: {base} bits; with interval and level: {bits} bits ({(bits + 7) // 8} bytes)")
    return 0


def cmd_inspect(args) -> int:
    report = json.loads(Path(args.report).read_text())
    if report.get("format") != sim.REPORT_FORMAT:
        print(f"{args.report}: not a simulation report", file=sys.stderr)
        return 2
    print(f"scenario {report['scenario']} (seed {report['seed']}, version {report['version']})")
    print(f"events: {len(report['events'])}")
    for group, counts in report["counters"].items():
        if isinstance(counts, dict):
            body = ", ".join(f"{k}={v}" for k, v in counts.items())
        else:
            body = str(counts)
        print(f"  {group}: {body}")
    for vid, rev in report["revocations"].items():
        print(
            f"  revoked {vid} at {rev['revoked_at']}, horizon {rev['horizon']}: "
            f"{rev['attempts_after_horizon']} later attempts, {rev['accepted_after_horizon']} accepted"
        )
    print("final scores: " + ", ".join(f"{r['vehicle']}={r['score']}" for r in report["scores"]["final"]))
    violations = report["invariant_violations"]
    print(f"invariant violations: {len(violations)}")
    for v in violations:
        print(f"  - {v}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bbsrep", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="generate group key material")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, help="deterministic seed (testing only)")
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("run", help="run a scenario file or bundled scenario")
    p.add_argument("scenario", help=f"path, or one of: {', '.join(sim.bundled_scenarios())}")
    p.add_argument("--seed", type=int, help="override the scenario's seed")
    p.add_argument("--report", help="write the JSON report here instead of stdout")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="time and count group operations")
    p.add_argument("--iterations", type=int, default=100)
    p.add_argument("--json", help="also write the results as JSON")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sizes", help="star signature length for given element widths")
    p.add_argument("--g1-bits", type=int, required=True)
    p.add_argument("--p-bits", type=int, required=True)
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_sizes)

    p = sub.add_parser("inspect", help="summarize a report written by run")
    p.add_argument("report")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ScenarioError, ValueError, KeyError) as exc:
        print(f"bbsrep {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
