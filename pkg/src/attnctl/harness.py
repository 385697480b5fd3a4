"""Synthetic trials, the cueing and search experiments, and experiment reports.

Stimuli live on a square grid split into 4x4 blocks, one item per block.
An item is a 2x2 patch lit in one colour channel and one orientation
channel, so it drives exactly one top-layer location of the default
hierarchy.
"""

from __future__ import annotations

import csv
import io
import json
import statistics
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .cp.runtime import Runtime, StaticScene
from .cp.trace import SignalTrace
from .executive import BoundCp, Executive, TaskSpec, TaxonomyNode, template_for
from .fixation import GazeState
from .hierarchy import Cell, Hierarchy, Stimulus, build_hierarchy, default_config
from .memory import DegeneratePercept, decision_cycles  # noqa: F401  (part of this module's API)

CHANNELS = ("red", "green", "vertical", "horizontal")
GROUPS = {"color": ("red", "green"), "orientation": ("vertical", "horizontal")}
COLORS = GROUPS["color"]
ORIENTATIONS = GROUPS["orientation"]
KINDS = tuple(f"{c}+{o}" for c in COLORS for o in ORIENTATIONS)
BLOCK = 4


class InfeasibleTrial(ValueError):
    pass


def rng_for(seed: int, trial_index: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by (seed, trial index); draws advance the counter."""
    if seed < 0 or trial_index < 0:
        raise ValueError("seed and trial index must be non-negative")
    return np.random.Generator(np.random.Philox(key=[int(seed), int(trial_index)]))


@lru_cache(maxsize=None)
def task_hierarchy(grid: int = 16, beta: float = 0.1) -> Hierarchy:
    return build_hierarchy(default_config(len(CHANNELS), grid, beta))


# ---------------------------------------------------------------------------
# Trial generation


@dataclass(frozen=True)
class TrialConfig:
    seed: int
    task: TaskSpec
    trial_index: int = 0
    grid: int = 16
    set_size: int = 1
    present_prob: float = 0.5
    intensity: tuple[float, float] = (0.6, 1.0)
    clutter: float = 0.0
    cue_validity: str | None = None  # valid, invalid, neutral
    distractor: str = "green"
    beta: float = 0.1

    def __post_init__(self):
        if self.set_size < 1:
            raise InfeasibleTrial(f"set size must be >= 1, got {self.set_size}")
        if self.grid < BLOCK or self.grid % BLOCK:
            raise InfeasibleTrial(f"grid must be a positive multiple of {BLOCK}")
        if self.set_size > (self.grid // BLOCK) ** 2:
            raise InfeasibleTrial(f"{self.set_size} items do not fit on a {self.grid}x{self.grid} grid")
        lo, hi = self.intensity
        if not 0 < lo <= hi <= 1:
            raise InfeasibleTrial("intensity range must lie in (0, 1]")
        if not 0 <= self.clutter < 1:
            raise InfeasibleTrial("clutter density must lie in [0, 1)")
        if self.cue_validity not in (None, "valid", "invalid", "neutral"):
            raise InfeasibleTrial(f"unknown cue validity {self.cue_validity!r}")

    @classmethod
    def from_task(cls, seed: int, task: TaskSpec, trial_index: int = 0) -> "TrialConfig":
        """Generator parameters read from the task's stimulus block."""
        s = task.stimulus
        known = {
            "grid": int,
            "set_size": int,
            "present_prob": float,
            "clutter": float,
            "cue_validity": str,
            "distractor": str,
            "beta": float,
        }
        kw = {k: conv(s[k]) for k, conv in known.items() if k in s}
        if "intensity" in s:
            kw["intensity"] = tuple(float(v) for v in s["intensity"])
        return cls(seed=seed, task=task, trial_index=trial_index, **kw)


@dataclass(frozen=True)
class Item:
    kind: str
    block: tuple[int, int]
    intensity: float

    def cells(self) -> list[Cell]:
        by, bx = self.block
        return [(BLOCK * by + 1 + dy, BLOCK * bx + 1 + dx) for dy in (0, 1) for dx in (0, 1)]


@dataclass(frozen=True)
class GroundTruth:
    correct_response: str
    target_cells: tuple[Cell, ...] = ()
    items: tuple[Item, ...] = ()
    present: bool | None = None


def render(items, grid: int, clutter_mask: np.ndarray | None = None) -> Stimulus:
    v = np.zeros((len(CHANNELS), grid, grid))
    for it in items:
        for part in it.kind.split("+"):
            ch = CHANNELS.index(part)
            for y, x in it.cells():
                v[ch, y, x] = it.intensity
    if clutter_mask is not None:
        v = np.maximum(v, clutter_mask)
    return Stimulus(v)


def _other_kinds(kind: str) -> list[str]:
    return [k for k in KINDS if k != kind]


def _pop_out_distractors(kind: str) -> list[str]:
    c, o = kind.split("+")
    return [k for k in KINDS if c not in k.split("+") and o not in k.split("+")]


def _conjunction_distractors(kind: str) -> list[str]:
    c, o = kind.split("+")
    return [k for k in KINDS if k != kind and (k.startswith(c + "+") or k.endswith("+" + o))]


def _blocks(rng, grid: int, n: int) -> list[tuple[int, int]]:
    nb = grid // BLOCK
    idx = rng.choice(nb * nb, size=n, replace=False)
    return [tuple(int(v) for v in divmod(int(i), nb)) for i in idx]


def _intensity(rng, cfg: TrialConfig) -> float:
    lo, hi = cfg.intensity
    return float(round(rng.uniform(lo, hi), 6))


def _target_kind(cfg: TrialConfig) -> str:
    t = cfg.task.target
    if t not in KINDS:
        raise InfeasibleTrial(f"target must be one of {KINDS}, got {t!r}")
    return t


def gen_trial(cfg: TrialConfig) -> tuple[Stimulus, GroundTruth]:
    """Deterministic stimulus and ground truth for one trial."""
    rng = rng_for(cfg.seed, cfg.trial_index)
    name = template_for(cfg.task)
    grid = cfg.grid
    clutter = None
    if name in ("discrimination", "recognition", "identification"):
        target = _target_kind(cfg)
        same = bool(rng.random() < cfg.present_prob)
        kind = target if same else str(rng.choice(_other_kinds(target)))
        item = Item(kind, _blocks(rng, grid, 1)[0], _intensity(rng, cfg))
        resp = {
            "discrimination": ("same", "different"),
            "recognition": ("yes", "no"),
            "identification": (target, "unknown"),
        }[name]
        truth = GroundTruth(resp[0] if same else resp[1], tuple(item.cells()), (item,), same)
        items = [item]
    elif name == "detection":
        feature = cfg.task.target
        present = bool(rng.random() < cfg.present_prob)
        pool = [k for k in KINDS if (feature in k.split("+")) == present]
        if not pool:
            raise InfeasibleTrial(f"no item kind for detection target {feature!r}")
        item = Item(str(rng.choice(pool)), _blocks(rng, grid, 1)[0], _intensity(rng, cfg))
        items = [item]
        truth = GroundTruth("present" if present else "absent", tuple(item.cells()), (item,), present)
    elif name in ("localization", "gaze_shift"):
        target = _target_kind(cfg)
        blocks = _blocks(rng, grid, cfg.set_size)
        items = [Item(target, blocks[0], _intensity(rng, cfg))]
        for b in blocks[1:]:
            items.append(Item(str(rng.choice(_pop_out_distractors(target))), b, _intensity(rng, cfg)))
        truth = GroundTruth("location", tuple(items[0].cells()), tuple(items), True)
    elif name in ("search_1look", "search_nlook"):
        target = _target_kind(cfg)
        present = bool(rng.random() < cfg.present_prob)
        blocks = _blocks(rng, grid, cfg.set_size)
        distract = _conjunction_distractors(target)
        items = []
        for i, b in enumerate(blocks):
            kind = target if (present and i == 0) else str(rng.choice(distract))
            items.append(Item(kind, b, _intensity(rng, cfg)))
        cells = tuple(items[0].cells()) if present else ()
        truth = GroundTruth("present" if present else "absent", cells, tuple(items), present)
    elif name == "same_different":
        nb = grid // BLOCK
        row = (nb - 1) // 2 + (1 if nb > 2 else 0)
        left_block, right_block = (row, max(0, nb // 2 - 1)), (row, nb - 1)
        if nb < 2:
            raise InfeasibleTrial("same-different needs at least two blocks per row")
        first = str(rng.choice(KINDS))
        same = bool(rng.random() < cfg.present_prob)
        if same:
            second = first
        else:
            c, o = first.split("+")
            how = int(rng.integers(3))
            c2 = [x for x in COLORS if x != c][0] if how in (0, 2) else c
            o2 = [x for x in ORIENTATIONS if x != o][0] if how in (1, 2) else o
            second = f"{c2}+{o2}"
        items = [Item(first, left_block, _intensity(rng, cfg)), Item(second, right_block, _intensity(rng, cfg))]
        truth = GroundTruth("same" if same else "different", (), tuple(items), same)
    elif name == "cueing":
        target_color = cfg.task.target
        if target_color not in COLORS or cfg.distractor not in COLORS or cfg.distractor == target_color:
            raise InfeasibleTrial("cueing needs distinct target and distractor colours")
        nb = grid // BLOCK
        tb = _blocks(rng, grid, 1)[0]
        nbrs = [
            (tb[0] + dy, tb[1] + dx)
            for dy, dx in ((0, 1), (0, -1), (1, 0), (-1, 0))
            if 0 <= tb[0] + dy < nb and 0 <= tb[1] + dx < nb
        ]
        db = nbrs[int(rng.integers(len(nbrs)))]
        items = [
            Item(target_color, tb, _intensity(rng, cfg)),
            Item(cfg.distractor, db, _intensity(rng, cfg)),
        ]
        truth = GroundTruth("target", tuple(items[0].cells()), tuple(items), True)
    else:
        raise InfeasibleTrial(f"no stimulus generator for CP {name!r}")
    if cfg.clutter > 0:
        occupied = np.zeros((grid, grid), dtype=bool)
        for it in items:
            for y, x in it.cells():
                occupied[y, x] = True
        noise = rng.random((len(CHANNELS), grid, grid)) < cfg.clutter
        clutter = np.where(noise & ~occupied[None], rng.uniform(0.05, 0.3, noise.shape), 0.0)
    return render(items, grid, clutter), truth


def judge(truth: GroundTruth, response: str | None) -> bool:
    if response is None:
        return False
    if truth.correct_response != "location":
        return response == truth.correct_response
    try:
        y, x = (float(v) for v in response.split(","))
    except ValueError:
        return False
    ys = [c[0] for c in truth.target_cells]
    xs = [c[1] for c in truth.target_cells]
    return min(ys) - 0.5 <= y <= max(ys) + 0.5 and min(xs) - 0.5 <= x <= max(xs) + 0.5


# ---------------------------------------------------------------------------
# Running trials


@dataclass
class TrialResult:
    seed: int
    trial_index: int
    cp: str
    result: str
    reason: str | None
    response: str | None
    correct: bool
    cycles: int  # onset to end of the final execution
    total_cycles: int
    fixations: int
    restarts: int
    repairs: int
    objective_trajectory: list[tuple[int, float]]
    trace: SignalTrace
    fixation_log: list[tuple[int, int, int, int]]
    attempts: list[dict] = field(default_factory=list)

    def to_dict(self, with_trace: bool = False) -> dict:
        d = {
            "seed": self.seed,
            "trial_index": self.trial_index,
            "cp": self.cp,
            "result": self.result,
            "reason": self.reason,
            "response": self.response,
            "correct": self.correct,
            "cycles": self.cycles,
            "total_cycles": self.total_cycles,
            "fixations": self.fixations,
            "restarts": self.restarts,
            "repairs": self.repairs,
            "objective_trajectory": [[t, round(v, 9)] for t, v in self.objective_trajectory],
            "attempts": self.attempts,
        }
        if with_trace:
            d["trace"] = self.trace.to_records()
            d["fixation_log"] = [list(r) for r in self.fixation_log]
        return d


def make_runtime_factory(cfg: TrialConfig, stim: Stimulus, hierarchy: Hierarchy):
    foveated = cfg.task.taxonomy.eye_movements
    _, h, w = stim.shape

    def factory(bound: BoundCp, previous: Runtime | None) -> Runtime:
        env = StaticScene(stim, CHANNELS, GROUPS, foveated=foveated, gaze=GazeState((w - 1) // 2, (h - 1) // 2))
        rt = Runtime(hierarchy, env, params=bound.params)
        if previous is not None and not bound.rescan:
            rt.inhibited = set(previous.inhibited)
            rt.ior = previous.ior
        return rt

    return factory


def _with_cue(cfg: TrialConfig) -> TaskSpec:
    if cfg.cue_validity is None:
        return cfg.task
    cue = {"valid": cfg.task.target, "invalid": cfg.distractor, "neutral": "none"}[cfg.cue_validity]
    return replace(cfg.task, stimulus={**cfg.task.stimulus, "cue_features": cue})


def run_trial(cp: BoundCp | None, cfg: TrialConfig, executive: Executive | None = None) -> TrialResult:
    """Generate, prime, present, execute, monitor and repair one trial."""
    executive = executive or Executive()
    spec = _with_cue(cfg)
    stim, truth = gen_trial(cfg)
    hierarchy = task_hierarchy(cfg.grid, cfg.beta)
    bound = cp or executive.select(spec)
    outcome = executive.run(spec, make_runtime_factory(cfg, stim, hierarchy), bound)
    rt = outcome.final.runtime
    onset = rt.onset_t if rt.onset_t is not None else spec.start
    return TrialResult(
        seed=cfg.seed,
        trial_index=cfg.trial_index,
        cp=bound.name,
        result=outcome.result,
        reason=outcome.reason,
        response=outcome.response,
        correct=outcome.result == "success" and judge(truth, outcome.response),
        cycles=outcome.final.t_end - onset,
        total_cycles=outcome.total_cycles,
        fixations=len(rt.fixations),
        restarts=outcome.monitor.restarts,
        repairs=outcome.repairs,
        objective_trajectory=list(outcome.monitor.trajectory),
        trace=outcome.final.trace,
        fixation_log=[(f.t_start, f.t_end, f.x, f.y) for f in rt.fixations],
        attempts=[
            {"cp": a.cp, "status": a.status, "reason": a.reason, "response": a.response, "note": a.note}
            for a in outcome.attempts
        ],
    )


# ---------------------------------------------------------------------------
# Experiments


@dataclass
class ConditionSummary:
    name: str
    trials: int
    accuracy: float
    mean_cycles: float
    sd_cycles: float
    mean_fixations: float
    restarts: int
    repairs: int
    failures: int

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "trials": self.trials,
            "accuracy": round(self.accuracy, 9),
            "mean_cycles": round(self.mean_cycles, 9),
            "sd_cycles": round(self.sd_cycles, 9),
            "mean_fixations": round(self.mean_fixations, 9),
            "restarts": self.restarts,
            "repairs": self.repairs,
            "failures": self.failures,
        }


def summarize(name: str, results: list) -> ConditionSummary:
    cyc = [r.cycles for r in results]
    return ConditionSummary(
        name=name,
        trials=len(results),
        accuracy=sum(r.correct for r in results) / len(results),
        mean_cycles=statistics.fmean(cyc),
        sd_cycles=statistics.pstdev(cyc) if len(cyc) > 1 else 0.0,
        mean_fixations=statistics.fmean(r.fixations for r in results),
        restarts=sum(r.restarts for r in results),
        repairs=sum(r.repairs for r in results),
        failures=sum(r.result != "success" for r in results),
    )


@dataclass
class ExperimentReport:
    name: str
    seed: int
    conditions: list[ConditionSummary]
    trials: dict[str, list] = field(default_factory=dict)

    def condition(self, name: str) -> ConditionSummary:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self, with_trials: bool = True) -> dict:
        d = {"name": self.name, "seed": self.seed, "conditions": [c.to_dict() for c in self.conditions]}
        if with_trials:
            d["trials"] = {k: [r.to_dict() for r in v] for k, v in self.trials.items()}
        return d

    def to_json(self, with_trials: bool = True) -> str:
        return json.dumps(self.to_dict(with_trials), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ["name", "trials", "accuracy", "mean_cycles", "sd_cycles", "mean_fixations", "restarts", "repairs", "failures"]
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for c in self.conditions:
            w.writerow(c.to_dict())
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [f"experiment {self.name} (seed {self.seed})"]
        for c in self.conditions:
            lines.append(
                f"  {c.name:<24} n={c.trials:<4} acc={c.accuracy:.3f} cycles={c.mean_cycles:.2f}"
                f"±{c.sd_cycles:.2f} fix={c.mean_fixations:.2f} restarts={c.restarts} repairs={c.repairs}"
            )
        return "\n".join(lines) + "\n"


def run_experiment(conditions: list[tuple[str, TrialConfig]], n: int, name: str = "experiment") -> ExperimentReport:
    """``n`` trials per condition, trial indices 0..n-1 under each condition's seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not conditions:
        raise ValueError("experiment has no conditions")
    executive = Executive()
    summaries, trials = [], {}
    seed = conditions[0][1].seed
    for cname, base in conditions:
        results = [run_trial(None, replace(base, trial_index=i), executive) for i in range(n)]
        trials[cname] = results
        summaries.append(summarize(cname, results))
    return ExperimentReport(name, seed, summaries, trials)


def cueing_task(deadline: int = 400) -> TaskSpec:
    return TaskSpec(TaxonomyNode("Detection"), deadline=deadline, target="red", cp="cueing")


def cueing_conditions(seed: int = 0) -> list[tuple[str, TrialConfig]]:
    task = cueing_task()
    return [(v, TrialConfig(seed=seed, task=task, cue_validity=v)) for v in ("valid", "neutral", "invalid")]


def cueing_experiment(n: int = 100, seed: int = 0) -> ExperimentReport:
    return run_experiment(cueing_conditions(seed), n, name="cueing")


def search_conditions(
    seed: int = 0, set_sizes=(1, 2, 4, 8), present_prob: float = 0.0, eye_movements: bool = False
) -> list[tuple[str, TrialConfig]]:
    node = TaxonomyNode("VisualSearch", looks="n" if eye_movements else "one", eye_movements=eye_movements)
    task = TaskSpec(node, deadline=2000, target="red+vertical")
    label = "nlook" if eye_movements else "1look"
    return [
        (f"{label}_n{k}", TrialConfig(seed=seed, task=task, set_size=k, present_prob=present_prob))
        for k in set_sizes
    ]


def search_experiment(n: int = 20, seed: int = 0, set_sizes=(1, 2, 4, 8), eye_movements: bool = False):
    return run_experiment(search_conditions(seed, set_sizes, 0.0, eye_movements), n, name="search")


_TRIAL_FIELDS = ("grid", "set_size", "present_prob", "intensity", "clutter", "cue_validity", "distractor", "beta")


class ExperimentError(ValueError):
    pass


def experiment_from_dict(d: dict) -> tuple[str, list[tuple[str, TrialConfig]], int]:
    """(name, conditions, n) from an experiment file.

    Either ``{"preset": "cueing" | "search", ...}`` or explicit conditions,
    each ``{"name", "task"?, "trial"?}``; a condition without its own task
    uses the top-level ``task``.
    """
    seed = int(d.get("seed", 0))
    n = int(d.get("n", 1))
    name = str(d.get("name", d.get("preset", "experiment")))
    preset = d.get("preset")
    if preset == "cueing":
        return name, cueing_conditions(seed), n
    if preset == "search":
        sizes = tuple(int(k) for k in d.get("set_sizes", (1, 2, 4, 8)))
        eye = bool(d.get("eye_movements", False))
        return name, search_conditions(seed, sizes, float(d.get("present_prob", 0.0)), eye), n
    if preset is not None:
        raise ExperimentError(f"unknown preset {preset!r}")
    conds = d.get("conditions") or []
    if not conds:
        raise ExperimentError("experiment has no conditions")
    out = []
    for c in conds:
        task_d = c.get("task", d.get("task"))
        if task_d is None:
            raise ExperimentError(f"condition {c.get('name')!r} has no task")
        task = TaskSpec.from_dict(task_d)
        trial = dict(c.get("trial", {}))
        unknown = set(trial) - set(_TRIAL_FIELDS)
        if unknown:
            raise ExperimentError(f"unknown trial fields {sorted(unknown)}")
        if "intensity" in trial:
            trial["intensity"] = tuple(float(v) for v in trial["intensity"])
        out.append((str(c.get("name", f"c{len(out)}")), TrialConfig(seed=seed, task=task, **trial)))
    return name, out, n


__all__ = [
    "CHANNELS",
    "GROUPS",
    "KINDS",
    "ConditionSummary",
    "DegeneratePercept",
    "ExperimentError",
    "ExperimentReport",
    "GroundTruth",
    "InfeasibleTrial",
    "Item",
    "TrialConfig",
    "TrialResult",
    "cueing_conditions",
    "cueing_experiment",
    "decision_cycles",
    "experiment_from_dict",
    "gen_trial",
    "judge",
    "render",
    "rng_for",
    "run_experiment",
    "run_trial",
    "search_conditions",
    "search_experiment",
    "task_hierarchy",
]
