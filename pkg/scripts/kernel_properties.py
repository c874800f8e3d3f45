"""Run the randomized kernel suites (commutation, simplifier, round-trip, diff vs FD)."""
import argparse
import inspect

from qcsym.properties import SUITES


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-n", type=int, default=1000)
    ap.add_argument("--seed-offset", type=int, default=0)
    args = ap.parse_args()
    failed = 0
    for suite in SUITES:
        res = suite(args.n, seed=inspect.signature(suite).parameters["seed"].default + args.seed_offset)
        print(res.summary())
        for f in res.failures[:5]:
            print("   ", f)
        failed += not res.passed
    raise SystemExit(1 if failed else 0)


if __name__ == "__main__":
    main()
