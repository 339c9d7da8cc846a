"""Command line entry point: ``skylink run`` and ``skylink verify``."""
import argparse
import os
import sys
import tempfile
import time

from .errors import SkylinkError
from .scenarios import load_scenario, parse_scenario, run_scenario, shipped_scenarios


def _u64(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser():
    ap = argparse.ArgumentParser(prog="skylink", description="Skies of events as Legendrian links.")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one scenario")
    run.add_argument("--config", required=True, help="scenario JSON file")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--seed", type=_u64, help="override the generator seed")
    run.add_argument("--fan", type=int, help="override the sky fan resolution")
    ver = sub.add_parser("verify", help="run the shipped reference scenarios")
    ver.add_argument("--out", help="keep outputs here (default: a temporary directory)")
    return ap


def _run(args):
    sc = load_scenario(args.config)
    t0 = time.perf_counter()
    res = run_scenario(sc, args.out, seed=args.seed, fan=args.fan)
    print(f"{sc.name}: {res.passed} passed, {res.failed} failed, {res.excluded} excluded "
          f"({time.perf_counter() - t0:.1f} s) -> {args.out}")
    return 0 if res.ok else 1


def _verify(args):
    status = 0
    with tempfile.TemporaryDirectory() as tmp:
        root = args.out or tmp
        for name, text in shipped_scenarios():
            sc = parse_scenario(text, name)
            t0 = time.perf_counter()
            res = run_scenario(sc, os.path.join(root, name[:-5]))
            mark = "PASS" if res.ok else "FAIL"
            print(f"{mark} {name}: {res.passed} passed, {res.failed} failed, "
                  f"{res.excluded} excluded ({time.perf_counter() - t0:.1f} s)")
            for note in res.notes:
                print(f"  {note}")
            status |= not res.ok
    return int(status)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _run(args) if args.command == "run" else _verify(args)
    except SkylinkError as exc:
        print(f"skylink: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
