"""Mean response cycles for valid, neutral and invalid spatial cues."""

import argparse

from attnctl.harness import cueing_experiment


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=100, help="trials per condition")
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    report = cueing_experiment(n=args.n, seed=args.seed)
    print(report.to_text(), end="")
    v, n, i = (report.condition(c).mean_cycles for c in ("valid", "neutral", "invalid"))
    print(f"neutral - valid = {n - v:.2f} cycles, invalid - neutral = {i - n:.2f} cycles")


if __name__ == "__main__":
    main()
