"""Regenerate the determining systems and diff them against the transcriptions."""
import argparse
import time

from qcsym.detsys import generate_determining_system, regression
from qcsym.dsl import to_text


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--which", nargs="+", default=["a_ne_0", "case1", "a_eq_0"])
    ap.add_argument("--show", action="store_true", help="print the generated members")
    args = ap.parse_args()
    status = 0
    for which in args.which:
        generate_determining_system.cache_clear()
        t0 = time.perf_counter()
        rows = regression(which)
        dt = time.perf_counter() - t0
        print(f"{which}: {len(rows)} members, {dt:.2f}s")
        for r in rows:
            tag = "exact" if r.exact else ("up to K power" if r.up_to_k_power else "MISMATCH")
            print(f"  [{r.index}] coeff of {r.monomial:8s} {tag}")
            if args.show:
                print(f"      {to_text(r.generated)} = 0")
            status |= not r.exact
    raise SystemExit(status)


if __name__ == "__main__":
    main()
