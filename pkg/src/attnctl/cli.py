"""Command-line entry point.

Exit codes: 0 success, 1 usage or input error, 2 the task itself failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from .cp import ParseError, ValidationError, check_cp, execute_cp, load_cp
from .cp.trace import emit_trace
from .executive import Executive, NoCpForTask, TaskError, bind_program, load_task
from .fileio import write_atomic
from .harness import (
    ExperimentError,
    InfeasibleTrial,
    TrialConfig,
    experiment_from_dict,
    gen_trial,
    make_runtime_factory,
    run_experiment,
    run_trial,
    task_hierarchy,
)
from .oracle import claims_table

EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2
DEFAULT_SEED = 0
FORMATS = ("csv", "text")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit with 2, which means "task failed" here
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _table(rows: list[dict], cols: list[str], fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        w.writerows({c: r.get(c, "") for c in cols} for r in rows)
        return buf.getvalue()
    grid = [cols] + [[str(r.get(c, "")) for c in cols] for r in rows]
    widths = [max(len(g[i]) for g in grid) for i in range(len(cols))]
    return "".join("  ".join(v.ljust(w) for v, w in zip(g, widths)).rstrip() + "\n" for g in grid)


def _ext(fmt: str) -> str:
    return "csv" if fmt == "csv" else "txt"


def _load_task(path: str):
    try:
        return load_task(path)
    except (OSError, json.JSONDecodeError, TaskError, TypeError, ValueError) as exc:
        raise UsageError(f"{path}: {exc}") from exc


def _bound(spec, cp_path: str | None, executive: Executive):
    if cp_path is None:
        try:
            return executive.select(spec)
        except (NoCpForTask, TaskError) as exc:
            raise UsageError(str(exc)) from exc
    try:
        prog = load_cp(cp_path)
        check_cp(prog)
    except OSError as exc:
        raise UsageError(f"{cp_path}: {exc}") from exc
    except ParseError as exc:
        raise UsageError(f"{cp_path}:{exc.line}:{exc.column}: {exc.message}") from exc
    except ValidationError as exc:
        raise UsageError("\n".join(f"{cp_path}:{e.line}:{e.column}: {e.message}" for e in exc.errors)) from exc
    try:
        return bind_program(prog, spec)
    except (NoCpForTask, TaskError) as exc:
        raise UsageError(str(exc)) from exc


def _trial_config(spec, seed: int, trial: int) -> TrialConfig:
    try:
        return TrialConfig.from_task(seed, spec, trial)
    except (InfeasibleTrial, TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


# ---------------------------------------------------------------------------
# Subcommands


def cmd_run_task(args) -> int:
    spec = _load_task(args.task)
    ex = Executive()
    bound = _bound(spec, args.cp, ex)
    cfg = _trial_config(spec, args.seed, args.trial)
    try:
        result = run_trial(bound, cfg, ex)
    except InfeasibleTrial as exc:
        raise UsageError(str(exc)) from exc
    out = Path(args.out)
    report = {"task": spec.to_dict(), **result.to_dict()}
    write_atomic(out / "report.json", _dumps(report))
    write_atomic(out / f"trace.{_ext(args.format)}", emit_trace(result.trace, args.format))
    fix_rows = [dict(zip(("t_start", "t_end", "x", "y"), r)) for r in result.fixation_log]
    write_atomic(out / f"fixations.{_ext(args.format)}", _table(fix_rows, ["t_start", "t_end", "x", "y"], args.format))
    print(
        f"{result.result}: response={result.response} correct={result.correct} cycles={result.cycles}"
        + (f" reason={result.reason}" if result.reason else "")
    )
    return EXIT_OK if result.result == "success" else EXIT_FAILED


def cmd_run_suite(args) -> int:
    try:
        with open(args.experiment, encoding="utf-8") as f:
            d = json.load(f)
        if args.seed is not None:
            d["seed"] = args.seed
        if args.n is not None:
            d["n"] = args.n
        name, conditions, n = experiment_from_dict(d)
        report = run_experiment(conditions, n, name=name)
    except (OSError, json.JSONDecodeError, ExperimentError, TaskError, InfeasibleTrial, TypeError, ValueError) as exc:
        raise UsageError(f"{args.experiment}: {exc}") from exc
    out = Path(args.out)
    write_atomic(out / "report.json", report.to_json())
    summary = report.to_csv() if args.format == "csv" else report.to_text()
    write_atomic(out / f"report.{_ext(args.format)}", summary)
    sys.stdout.write(report.to_text())
    return EXIT_OK


CLAIM_COLUMNS = ["id", "expr", "printed", "oracle", "status", "note"]


def cmd_oracle(args) -> int:
    rows = claims_table(args.claim)
    if not rows:
        raise UsageError(f"no claim matches {args.claim!r}")
    text = _table([r.to_dict() for r in rows], CLAIM_COLUMNS, args.format)
    if args.out:
        write_atomic(Path(args.out) / f"claims.{_ext(args.format)}", text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_trace(args) -> int:
    """Run the CP once on the task's stimulus with no monitor and no repair."""
    spec = _load_task(args.task)
    bound = _bound(spec, args.cp, Executive())
    cfg = _trial_config(spec, args.seed, args.trial)
    try:
        stim, _ = gen_trial(cfg)
    except InfeasibleTrial as exc:
        raise UsageError(str(exc)) from exc
    rt = make_runtime_factory(cfg, stim, task_hierarchy(cfg.grid, cfg.beta))(bound, None)
    res = execute_cp(bound.program, rt, bound.args, t_c=spec.deadline)
    text = emit_trace(res.trace, args.format)
    if args.out:
        write_atomic(Path(args.out) / f"trace.{_ext(args.format)}", text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_runner(args) -> int:
    from .runner import RUNNER_TASK, RunnerConfig, RunnerWorld, compare_with_random, run_runner_episode, track_for

    try:
        config = RunnerConfig(step_cap=args.steps)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.episodes < 1:
        raise UsageError("--episodes must be >= 1")
    ex = Executive()
    if args.cp is not None:
        bound = _bound(RUNNER_TASK, args.cp, ex)
        ex = Executive({**ex.library, "runner": bound.program})
    cmp = compare_with_random(args.episodes, args.seed, config, ex)
    first = run_runner_episode(None, RunnerWorld(track_for(args.seed, config), G=config.G), ex, config, args.seed)
    out = Path(args.out)
    report = {**cmp.to_dict(), "step_cap": config.step_cap, "lookahead": config.lookahead, "G": config.G}
    write_atomic(out / "runner.json", _dumps(report))
    write_atomic(out / f"runner_trace.{_ext(args.format)}", emit_trace(first.trace, args.format))
    print(f"cp mean {cmp.cp_mean:.2f}  random mean {cmp.random_mean:.2f}  ratio {cmp.ratio:.2f}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="attnctl", description="Attentional control simulator")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, out_default: str | None = "out"):
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
        sp.add_argument("--out", default=out_default, help="output directory")
        sp.add_argument("--format", choices=FORMATS, default="csv")

    sp = sub.add_parser("run-task", help="run one trial of a task")
    sp.add_argument("task", help="task file (JSON)")
    sp.add_argument("--cp", help="CP source file; default is the library CP for the task")
    sp.add_argument("--trial", type=int, default=0, help="trial index")
    common(sp)
    sp.set_defaults(func=cmd_run_task)

    sp = sub.add_parser("run-suite", help="run an experiment")
    sp.add_argument("experiment", help="experiment file (JSON)")
    sp.add_argument("--n", type=int, help="trials per condition (overrides the file)")
    common(sp)
    sp.set_defaults(func=cmd_run_suite, seed=None)  # None: keep the file's seed

    sp = sub.add_parser("oracle", help="print the claims table")
    sp.add_argument("--claim", help="keep claims whose id or expression contains this text")
    common(sp, out_default=None)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("trace", help="signal trace of one unmonitored CP run")
    sp.add_argument("cp", help="CP source file")
    sp.add_argument("task", help="task file (JSON)")
    sp.add_argument("--trial", type=int, default=0)
    common(sp, out_default=None)
    sp.set_defaults(func=cmd_trace)

    sp = sub.add_parser("runner", help="runner episodes against the random baseline")
    sp.add_argument("--episodes", type=int, default=100)
    sp.add_argument("--steps", type=int, default=500, help="step cap per episode")
    sp.add_argument("--cp", help="runner CP source file")
    common(sp)
    sp.set_defaults(func=cmd_runner)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"attnctl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
