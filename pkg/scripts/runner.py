"""Runner CP against a random jump policy on the same tracks."""

import argparse

from attnctl.runner import RunnerConfig, compare_with_random


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--episodes", type=int, default=100)
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    cmp = compare_with_random(args.episodes, args.seed, RunnerConfig(step_cap=args.steps))
    print(f"episodes     {len(cmp.seeds)}")
    print(f"cp mean      {cmp.cp_mean:.2f}")
    print(f"random mean  {cmp.random_mean:.2f}")
    print(f"ratio        {cmp.ratio:.2f}")


if __name__ == "__main__":
    main()
