"""Set-size functions for one-look and multi-look visual search."""

import argparse

from attnctl.harness import search_experiment


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=20, help="trials per set size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--set-sizes", type=int, nargs="+", default=[1, 2, 4, 8])
    args = p.parse_args()
    for eyes in (False, True):
        print("eye movements allowed" if eyes else "single fixation")
        report = search_experiment(n=args.n, seed=args.seed, set_sizes=tuple(args.set_sizes), eye_movements=eyes)
        print(report.to_text())


if __name__ == "__main__":
    main()
