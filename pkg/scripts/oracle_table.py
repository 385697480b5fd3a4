"""Print every checked figure with its exact value and agreement status."""

import argparse

from attnctl.oracle import claims_table


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--claim", help="substring filter on id or expression")
    args = p.parse_args()
    rows = claims_table(args.claim)
    width = max(len(r.id) for r in rows)
    for r in rows:
        print(f"{r.id:<{width}}  {r.status:<8}  printed {r.printed:<12} oracle {r.oracle}")
        if r.note:
            print(f"{'':<{width}}  {r.note}")


if __name__ == "__main__":
    main()
