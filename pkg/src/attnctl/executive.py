"""Task executive: taxonomy, CP selection, objective monitoring and repair."""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

from .cp import Program, load_library
from .cp.interpreter import FAILURE, FINISHED, HALTED, SUCCESS, ExecResult, execute_cp
from .cp.runtime import Runtime
from .cp.trace import ControlSignal, SignalTrace
from .objective import objective_value  # noqa: F401  (re-exported)

PROBLEMS = (
    "Discrimination",
    "Recognition",
    "Detection",
    "Categorization",
    "Identification",
    "Classification",
    "Localization",
    "GazeShift",
    "VisualSearch",
    "SameDifferent",
    "Compare",
    "Measure",
)
LOOKS = ("one", "two", "n")


class TaskError(ValueError):
    pass


class NoCpForTask(LookupError):
    pass


@dataclass(frozen=True)
class TaxonomyNode:
    problem: str
    looks: str = "one"
    eye_movements: bool = False
    K: int | None = None
    M: int | None = None

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise TaskError(f"unknown problem type {self.problem!r}")
        if self.looks not in LOOKS:
            raise TaskError(f"looks must be one of {LOOKS}, got {self.looks!r}")
        if self.eye_movements and self.looks != "n":
            raise TaskError("tasks with eye movements are n-look tasks")
        if self.problem == "Classification":
            if self.K is None or self.M is None or not self.K >= self.M >= 1:
                raise TaskError("Classification needs K >= M >= 1")


@dataclass(frozen=True)
class TaskSpec:
    taxonomy: TaxonomyNode
    deadline: int  # t_c in cycles
    start: int = 0  # t_i
    target: str = ""
    stimulus: dict = field(default_factory=dict)
    cp: str | None = None  # explicit library entry, overrides the taxonomy lookup

    def __post_init__(self):
        if not self.deadline > self.start >= 0:
            raise TaskError(f"need deadline > start >= 0, got start={self.start}, deadline={self.deadline}")

    @classmethod
    def from_dict(cls, d: dict, cycle_ms: float = 10.0) -> "TaskSpec":
        try:
            node = TaxonomyNode(
                problem=d["problem"],
                looks=d.get("looks", "one"),
                eye_movements=bool(d.get("eye_movements", False)),
                K=d.get("K"),
                M=d.get("M"),
            )
            if "deadline_ms" in d:
                deadline = int(math.ceil(float(d["deadline_ms"]) / cycle_ms - 1e-9))
            else:
                deadline = int(d["deadline"])
        except KeyError as exc:
            raise TaskError(f"task specification lacks field {exc.args[0]!r}") from exc
        return cls(
            taxonomy=node,
            deadline=deadline,
            start=int(d.get("start", 0)),
            target=str(d.get("target", "")),
            stimulus=dict(d.get("stimulus", {})),
            cp=d.get("cp"),
        )

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self.taxonomy).items() if v is not None}
        d.update(deadline=self.deadline, start=self.start, target=self.target, stimulus=dict(self.stimulus))
        if self.cp:
            d["cp"] = self.cp
        return d


def load_task(path) -> TaskSpec:
    with open(path, encoding="utf-8") as f:
        return TaskSpec.from_dict(json.load(f))


# ---------------------------------------------------------------------------
# Processing profiles


@dataclass(frozen=True)
class Profile:
    """Pass structure of a task after stimulus onset."""

    passes: str  # "single", "ff+partial", "ff+full", "multi"
    saccades: bool

    def describe(self) -> str:
        return f"{self.passes}, {'>=1' if self.saccades else '0'} saccades"


_PASSES = {
    "Discrimination": "single",
    "Categorization": "single",
    "Recognition": "single",
    "Detection": "single",
    "Classification": "single",
    "Identification": "ff+partial",
    "Localization": "ff+full",
    "GazeShift": "ff+full",
    "VisualSearch": "multi",
    "Compare": "multi",
    "Measure": "multi",
    "SameDifferent": "multi",
}


def classify_task(spec: TaskSpec | TaxonomyNode) -> Profile:
    node = spec.taxonomy if isinstance(spec, TaskSpec) else spec
    saccades = node.eye_movements or node.problem == "GazeShift"
    return Profile(_PASSES[node.problem], saccades)


def _segments(trace: SignalTrace, per_frame: bool) -> list[list[ControlSignal]]:
    # Split by time, not list position: a zero-cost onset shares its t_on with
    # the next signal, which may sort ahead of it by name.
    sigs = trace.sorted()
    starts = sorted({s.t_on for s in sigs if s.name == "onset"})
    if not starts:
        return [sigs]
    if not per_frame:
        return [[s for s in sigs if s.t_on >= starts[0]]]
    segs: list[list[ControlSignal]] = [[] for _ in starts]
    for s in sigs:
        k = bisect.bisect_right(starts, s.t_on) - 1
        if k >= 0:
            segs[k].append(s)
    return segs


def conformance(trace: SignalTrace, profile: Profile, per_frame: bool = False) -> list[str]:
    """Mismatches between the trace's post-onset pass structure and ``profile``."""
    problems = []
    for i, seg in enumerate(_segments(trace, per_frame)):
        names = [s.name for s in seg]
        ff = names.count("feedforward")
        loc = [s for s in seg if s.name == "localize"]
        sac = [s for s in seg if s.name == "saccade" and s.duration > 0]
        modes = [s.params[0] if s.params else "full" for s in loc]
        where = f"segment {i}: " if per_frame else ""
        p = profile.passes
        if p == "single" and (ff != 1 or loc):
            problems.append(f"{where}expected one feedforward pass, got {ff} feedforward and {len(loc)} descents")
        elif p == "ff+partial" and (ff != 1 or modes != ["partial"]):
            problems.append(f"{where}expected feedforward + partial descent, got {ff} feedforward, descents {modes}")
        elif p == "ff+full" and (ff != 1 or modes != ["full"]):
            problems.append(f"{where}expected feedforward + full descent, got {ff} feedforward, descents {modes}")
        elif p == "multi" and (ff < 1 or not loc or ff + len(loc) < 2):
            problems.append(f"{where}expected multiple bidirectional passes, got {ff} feedforward, {len(loc)} descents")
        if profile.saccades and not sac:
            problems.append(f"{where}expected at least one saccade")
        if not profile.saccades and sac:
            problems.append(f"{where}expected no saccades, got {len(sac)}")
    return problems


# ---------------------------------------------------------------------------
# CP selection


@dataclass(frozen=True)
class BoundCp:
    program: Program
    args: dict
    params: dict = field(default_factory=dict)  # runtime parameter overrides
    rescan: bool = False  # clear IOR and inhibited candidates before running

    @property
    def name(self) -> str:
        return self.program.name


_TEMPLATES = {
    "Discrimination": "discrimination",
    "Recognition": "recognition",
    "Categorization": "recognition",
    "Classification": "recognition",
    "Detection": "detection",
    "Identification": "identification",
    "Localization": "localization",
    "GazeShift": "gaze_shift",
    "SameDifferent": "same_different",
}


def template_for(spec: TaskSpec) -> str:
    if spec.cp:
        return spec.cp
    node = spec.taxonomy
    if node.problem == "VisualSearch":
        return "search_nlook" if node.eye_movements else "search_1look"
    if node.problem not in _TEMPLATES:
        raise NoCpForTask(f"no CP for task {node.problem}")
    return _TEMPLATES[node.problem]


def select_cp(library: dict[str, Program], spec: TaskSpec) -> BoundCp:
    """Library template for ``spec`` with its formals bound from the task."""
    name = template_for(spec)
    if name not in library:
        raise NoCpForTask(f"no CP for task {spec.taxonomy.problem} (template {name!r} missing)")
    return bind_program(library[name], spec)


def bind_program(prog: Program, spec: TaskSpec) -> BoundCp:
    """Bind ``prog``'s formals from what the task supplies."""
    name = prog.name
    available = {
        "target": spec.target,
        "tau": float(spec.stimulus.get("tau", 0.1)),
        "theta": float(spec.stimulus.get("theta", 0.95)),
        "cue": str(spec.stimulus.get("cue_features", "none")),
    }
    args = {}
    for p in prog.params:
        if p not in available:
            raise NoCpForTask(f"template {name} needs argument {p!r} the task does not supply")
        args[p] = available[p]
    if "target" in args and not args["target"]:
        raise TaskError(f"task {spec.taxonomy.problem} needs a target description")
    return BoundCp(prog, args)


# ---------------------------------------------------------------------------
# Monitoring


@dataclass
class MonitorState:
    active_cp: str
    deadline: int
    objective: float = 0.0
    trajectory: list[tuple[int, float]] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)
    restarts: int = 0

    def __post_init__(self):
        if self.objective < 0:
            raise ValueError("objective must be non-negative")


CONTINUE = ("continue", None)


def monitor(runtime: Runtime, state: MonitorState, signal: ControlSignal | None = None):
    """Continue, ('success', response) or ('failure', reason) at a primitive boundary."""
    state.objective = runtime.objective()
    state.trajectory.append((runtime.clock.t, state.objective))
    state.restarts = runtime.restarts
    if runtime.clock.t > state.deadline:
        return ("failure", "deadline")
    if signal is not None and signal.name == "emit":
        resp = runtime.response
        if resp in runtime.env.positive_responses:
            tau = runtime.params["tau"]
            # Only a CP that compared something has a deviation to honour.
            if runtime.last_match is not None and runtime.last_match[1] > tau + 1e-12:
                return ("failure", "unconfirmed-response")
        return ("success", resp)
    return CONTINUE


# ---------------------------------------------------------------------------
# Repair


@dataclass(frozen=True)
class Retry:
    cp: BoundCp
    note: str


@dataclass(frozen=True)
class GiveUp:
    reason: str
    attempts: int
    report: dict


MAX_REPAIRS = 3


def _relaxed(theta: float, by: float) -> float:
    return max(0.5, round(theta - by, 10))


def repair(spec: TaskSpec, failure: str, attempt: int, current: BoundCp) -> Retry | GiveUp:
    """Deterministic escalation ladder; ``attempt`` counts repairs already made + 1.

    Localisation failures first relax theta, then rescan with IOR cleared,
    then do both.  Exhausted candidates go straight to the rescan.  Deadline
    misses and malformed percepts are not retried.
    """
    report = {"task": spec.taxonomy.problem, "cp": current.name, "failure": failure, "attempt": attempt}
    if attempt > MAX_REPAIRS:
        return GiveUp(failure, attempt - 1, report)
    theta = float(current.params.get("theta", current.args.get("theta", 0.95)))
    if failure == "localization":
        ladder = {
            1: ({"theta": _relaxed(theta, 0.1)}, False, "relax theta"),
            2: ({}, True, "rescan with IOR cleared"),
            3: ({"theta": _relaxed(theta, 0.1)}, True, "relax theta and rescan"),
        }
    elif failure in ("no-candidate", "finished"):
        ladder = {
            1: ({}, True, "rescan with IOR cleared"),
            2: ({"theta": _relaxed(theta, 0.1)}, True, "relax theta and rescan"),
            3: ({"theta": _relaxed(theta, 0.2)}, True, "relax theta further and rescan"),
        }
    else:
        return GiveUp(failure, attempt - 1, report)
    params, rescan, note = ladder[attempt]
    new_params = dict(current.params)
    new_params.update(params)
    args = dict(current.args)
    if "theta" in args and "theta" in params:
        args["theta"] = params["theta"]
    return Retry(BoundCp(current.program, args, new_params, rescan), note)


# ---------------------------------------------------------------------------
# Running a task with monitoring and repair


@dataclass
class Attempt:
    cp: str
    status: str
    reason: str | None
    response: str | None
    cycles: int
    note: str = ""


@dataclass
class ExecutiveOutcome:
    result: str  # "success" or "failure"
    response: str | None
    reason: str | None
    final: ExecResult
    attempts: list[Attempt]
    monitor: MonitorState
    total_cycles: int

    @property
    def repairs(self) -> int:
        return len(self.attempts) - 1


RuntimeFactory = Callable[[BoundCp, Runtime | None], Runtime]


def run_task(spec: TaskSpec, bound: BoundCp, make_runtime: RuntimeFactory) -> ExecutiveOutcome:
    """Execute ``bound`` under monitoring, repairing on failure (at most 4 executions)."""
    attempts: list[Attempt] = []
    total = 0
    current = bound
    previous: Runtime | None = None
    note = ""
    trajectory: list[tuple[int, float]] = []
    restarts = 0
    for attempt in range(1, MAX_REPAIRS + 2):
        rt = make_runtime(current, previous)
        ms = MonitorState(current.name, spec.deadline)

        def observer(runtime, sig, ms=ms):
            verdict = monitor(runtime, ms, sig)
            if verdict[0] == "failure":
                return verdict
            return None

        res = execute_cp(current.program, rt, current.args, t_c=spec.deadline, observer=observer)
        total += res.t_end - spec.start
        restarts += rt.restarts
        trajectory.extend((total - (res.t_end - spec.start) + t, v) for t, v in ms.trajectory)
        status = res.status
        reason = res.reason
        if status == FINISHED:
            status, reason = FAILURE, "finished"
        if status == HALTED:
            status = SUCCESS
        attempts.append(Attempt(current.name, status, reason, res.response, res.t_end, note))
        if status == SUCCESS:
            break
        ms.failures.append({"reason": reason, "t": res.t_end})
        step = repair(spec, reason, attempt, current)
        if isinstance(step, GiveUp):
            break
        current, note = step.cp, step.note
        previous = rt
    ms.trajectory = trajectory
    ms.restarts = restarts
    final_status = attempts[-1].status
    return ExecutiveOutcome(
        result="success" if final_status == SUCCESS else "failure",
        response=res.response if final_status == SUCCESS else None,
        reason=None if final_status == SUCCESS else attempts[-1].reason,
        final=res,
        attempts=attempts,
        monitor=ms,
        total_cycles=total,
    )


class Executive:
    """Library plus the select/monitor/repair policy."""

    def __init__(self, library: dict[str, Program] | None = None):
        self.library = load_library() if library is None else dict(library)

    def select(self, spec: TaskSpec) -> BoundCp:
        return select_cp(self.library, spec)

    def run(self, spec: TaskSpec, make_runtime: RuntimeFactory, bound: BoundCp | None = None) -> ExecutiveOutcome:
        return run_task(spec, bound or self.select(spec), make_runtime)
