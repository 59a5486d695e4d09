"""Command-line harness: single runs, seed batches, and the oracle suites.

Exit codes: 0 success, 1 verification failure, 2 timeout, 64 usage error.
"""

from __future__ import annotations

import argparse
import math
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import oracles
from .engine import CSV_HEADER, RunResult, run_once
from .errors import EpsOutOfRangeError, GridswarmError
from .geometry import spacing_bound
from .messages import Msg, MSG_TOKEN, decode, encode
from .plan import render_ascii, render_ppm
from .protocol import corner_border_coords, infer_middle_coord
from .scenario import Scenario, apply_overrides, load_scenario
from .world import TRANSFORM_NAMES, apply_transform

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_TIMEOUT = 2
EXIT_USAGE = 64


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridswarm",
        description="Simulate identical broadcast-only robots that build a "
                    "shared lattice coordinate system and run role plans.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("scenario", help="scenario file path")
        p.add_argument("--drop", type=float, help="message drop probability")
        p.add_argument("--sigma", type=float, help="distance noise std dev (mm)")
        p.add_argument("--bias-frac", type=float,
                       help="fraction of agents with a weak transmitter")
        p.add_argument("--skew", type=float, help="clock skew fraction")
        p.add_argument("--plan", type=Path, help="role plan file")
        p.add_argument("--frames-every", type=int,
                       help="write a frame every N ticks")
        p.add_argument("--frame-scale", type=int, default=6,
                       help="pixels per cell in pixmap frames")
        p.add_argument("--out", type=Path, default=Path("out"),
                       help="output directory")
        p.add_argument("--max-sim-s", type=float, help="simulated time budget")
        p.add_argument("--no-repair", action="store_true",
                       help="disable the neighbor repair phase")
        for t in ("t1", "t2", "t3", "t4"):
            p.add_argument(f"--{t}", type=int, help=f"timer override {t} (ticks)")

    run_p = sub.add_parser("run", help="run one seeded simulation")
    add_common(run_p)
    run_p.add_argument("--seed", type=int, help="random seed")

    batch_p = sub.add_parser("batch", help="run a seed range and summarize")
    add_common(batch_p)
    batch_p.add_argument("--seeds", required=True,
                         help="inclusive seed range, e.g. 1..50")
    batch_p.add_argument("--workers", type=int, default=1,
                         help="parallel worker processes")

    verify_p = sub.add_parser("verify", help="run the brute-force oracle suites")
    verify_p.add_argument("--eps", type=float, default=0.0,
                          help="also probe the spacing bound at this error fraction")
    return parser


def _load(args) -> Scenario:
    timers = {t: getattr(args, t) for t in ("t1", "t2", "t3", "t4")
              if getattr(args, t) is not None}
    scenario = load_scenario(args.scenario)
    return apply_overrides(
        scenario,
        seed=getattr(args, "seed", None),
        drop=args.drop,
        sigma=args.sigma,
        bias_frac=args.bias_frac,
        skew=args.skew,
        plan_path=args.plan,
        frames_every=args.frames_every,
        timers=timers or None,
        repair=False if args.no_repair else None,
        max_sim_s=args.max_sim_s,
    )


def _write_frames(result: RunResult, out_dir: Path, cols: int, rows: int, scale: int):
    frames_dir = out_dir / "frames"
    frames_dir.mkdir(parents=True, exist_ok=True)
    for tick, roles in result.frames:
        (frames_dir / f"frame_{tick:07d}.txt").write_text(
            render_ascii(roles, cols, rows), encoding="ascii")
        (frames_dir / f"frame_{tick:07d}.ppm").write_bytes(
            render_ppm(roles, cols, rows, scale=scale))


def cmd_run(args) -> int:
    scenario = _load(args)
    setup = scenario.setup
    result = run_once(setup, scenario.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "metrics.csv").write_text(
        CSV_HEADER + "\n" + result.csv_row() + "\n", encoding="ascii")
    if result.frames:
        _write_frames(result, args.out, setup.lattice.cols, setup.lattice.rows,
                      args.frame_scale)
    status = "PASS" if result.success else f"FAIL ({result.fail_reason})"
    print(f"seed {result.seed}: {status}  completion {result.completion_s:.1f}s "
          f"symmetry {result.symmetry or '-'}  msgs {result.msgs_sent}")
    if result.success:
        return EXIT_OK
    return EXIT_TIMEOUT if result.fail_reason == "timeout" else EXIT_FAIL


def _parse_seed_range(text: str):
    if ".." not in text:
        raise ValueError("seed range must look like A..B")
    lo, _, hi = text.partition("..")
    lo, hi = int(lo), int(hi)
    if hi < lo:
        raise ValueError("empty seed range")
    return range(lo, hi + 1)


def _batch_worker(payload):
    setup, seed = payload
    return run_once(setup, seed)


def cmd_batch(args) -> int:
    scenario = _load(args)
    try:
        seeds = _parse_seed_range(args.seeds)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    jobs = [(scenario.setup, seed) for seed in seeds]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_batch_worker, jobs))
    else:
        results = [_batch_worker(job) for job in jobs]

    args.out.mkdir(parents=True, exist_ok=True)
    lines = [CSV_HEADER] + [r.csv_row() for r in results]
    (args.out / "metrics.csv").write_text("\n".join(lines) + "\n", encoding="ascii")

    passed = [r for r in results if r.success]
    rate = len(passed) / len(results)
    median = statistics.median(r.completion_s for r in passed) if passed else float("nan")
    print(f"{len(results)} runs: success rate {rate:.3f}, "
          f"median completion {median:.1f}s")
    if rate == 1.0:
        return EXIT_OK
    if any(r.fail_reason == "timeout" for r in results):
        return EXIT_TIMEOUT
    return EXIT_FAIL


def _suite_perimeter() -> list[str]:
    failures = []
    for m in range(3, 41):
        for n in range(3, 41):
            walk = oracles.perimeter_walk(m, n)
            c1, c2, c3, total = oracles.perimeter_corner_counts(m, n)
            if len(walk) != total:
                failures.append(f"{m}x{n}: walk length {len(walk)} != {total}")
                continue
            for count, expected in enumerate(walk, start=1):
                got = corner_border_coords(count, c1, c2, c3)
                if got != expected:
                    failures.append(
                        f"{m}x{n} count {count}: {got} != walk {expected}")
                    break
    return failures


def _suite_middle_closure(samples: int = 100) -> list[str]:
    import random as _random
    rng = _random.Random(20240917)
    failures = []
    for _ in range(samples):
        m = rng.randrange(3, 41)
        n = rng.randrange(3, 26)
        known = oracles.fill_middles(m, n, infer_middle_coord)
        for x in range(1, m + 1):
            for y in range(1, n + 1):
                if known.get((x, y)) != (x, y):
                    failures.append(f"{m}x{n}: interior ({x},{y}) not recovered")
                    break
    return failures


def _suite_eq_bound(eps: float) -> list[str]:
    failures = oracles.sweep_radius_properties()
    if eps:
        try:
            spacing_bound(100.0, eps)
        except EpsOutOfRangeError as exc:
            print(f"  note: EPS_OUT_OF_RANGE at eps={eps}: {exc}")
    return failures


def _suite_codec() -> list[str]:
    import random as _random
    rng = _random.Random(7)
    failures = []
    for _ in range(500):
        token = rng.getrandbits(68)
        msg = Msg(MSG_TOKEN, a=token)
        if decode(encode(msg)) != msg:
            failures.append(f"token {token} did not round-trip")
    return failures


def _suite_dihedral() -> list[str]:
    failures = []
    for name in TRANSFORM_NAMES:
        got = apply_transform(name, (2, 3), 5, 4)
        if not (1 <= got[0] and 1 <= got[1]):
            failures.append(f"{name} mapped (2,3) out of range: {got}")
    return failures


def cmd_verify(args) -> int:
    suites = [
        ("perimeter-walk equivalence (3..40 x 3..40)", _suite_perimeter),
        ("interior fill closure (100 random lattices)", _suite_middle_closure),
        ("spacing bound sweep", lambda: _suite_eq_bound(args.eps)),
        ("wire codec round-trip", _suite_codec),
        ("dihedral transforms", _suite_dihedral),
    ]
    failed = False
    for label, fn in suites:
        failures = fn()
        status = "PASS" if not failures else "FAIL"
        print(f"[{status}] {label}")
        for f in failures[:5]:
            print(f"    {f}")
        failed = failed or bool(failures)
    return EXIT_FAIL if failed else EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "batch":
            return cmd_batch(args)
        return cmd_verify(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GridswarmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
