"""Tree-walking interpreter over simulated time."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .ast import And, BoolLit, Call, If, Int, Name, Not, Parallel, Program, Real, Sequence, Str, Wait, While
from .primitives import REGISTRY, TYPE_I, TYPE_II
from .runtime import EpisodeEnd, PrimitiveError, Runtime
from .trace import ControlSignal, SignalTrace
from .validate import bind_args, check_cp

SUCCESS, FAILURE, FINISHED, HALTED = "success", "failure", "finished", "halted"


@dataclass
class ExecResult:
    status: str  # success: emitted a response; finished: ran off the end; halted: world ended
    response: str | None
    reason: str | None
    message: str
    t_end: int
    trace: SignalTrace
    runtime: Runtime

    @property
    def ok(self) -> bool:
        return self.status == SUCCESS


class _Stop(Exception):
    def __init__(self, status: str, reason: str | None = None, message: str = ""):
        super().__init__(message)
        self.status = status
        self.reason = reason
        self.message = message


Observer = Callable[[Runtime, ControlSignal], "tuple[str, str] | None"]


class _Machine:
    def __init__(self, rt: Runtime, args: dict, t_c: int | None, observer: Observer | None, trace: SignalTrace):
        self.rt = rt
        self.args = args
        self.t_c = t_c
        self.observer = observer
        self.trace = trace

    def value(self, v):
        if isinstance(v, Name):
            return self.args.get(v.value, v.value)
        if isinstance(v, (Int, Real, Str)):
            return v.value
        raise TypeError(f"not a value: {v!r}")

    def _commit(self, name: str, t: int, cycles: int, params=(), reference=None, observed=None) -> ControlSignal:
        if self.t_c is not None and t + cycles > self.t_c:
            self.trace.add(ControlSignal("deadline", TYPE_II, t, t, (f"aborted={name}",)))
            raise _Stop(FAILURE, "deadline", f"{name} would end at {t + cycles}, past deadline {self.t_c}")
        self.rt.clock.advance(cycles)
        spec = REGISTRY.get(name)
        kind = spec.signal if spec is not None else TYPE_II
        target = spec.mechanisms[0] if spec is not None and spec.mechanisms else name
        sig = ControlSignal(
            name,
            kind,
            t,
            t + cycles,
            tuple(str(p) for p in params),
            target,
            reference if kind == TYPE_I else None,
            observed if kind == TYPE_I else None,
        )
        self.trace.add(sig)
        if self.observer is not None:
            verdict = self.observer(self.rt, sig)
            if verdict is not None:
                raise _Stop(verdict[0], verdict[1], f"monitor stopped the program after {name}")
        return sig

    def call(self, c: Call, as_cond: bool = False):
        spec = REGISTRY[c.name]
        args = [self.value(a) for a in c.args]
        t = self.rt.clock.t
        handler = getattr(self.rt, f"op_{c.name}")
        try:
            out = handler(t, *args)
        except EpisodeEnd as exc:
            raise _Stop(HALTED, "episode-end", str(exc)) from exc
        except PrimitiveError as exc:
            if as_cond and spec.predicate and exc.reason == "no-candidate":
                self._commit(c.name, t, exc.cycles, tuple(map(str, args)))
                return False
            self._commit(c.name, t, exc.cycles, tuple(map(str, args)))
            raise _Stop(FAILURE, exc.reason, str(exc)) from exc
        self._commit(c.name, t, out.cycles, out.params, out.reference, out.observed)
        if c.name == "emit":
            raise _Stop(SUCCESS, None, "")
        return out.value

    def cond(self, c) -> bool:
        if isinstance(c, BoolLit):
            return c.value
        if isinstance(c, Not):
            return not self.cond(c.operand)
        if isinstance(c, And):
            return self.cond(c.left) and self.cond(c.right)
        return bool(self.call(c, as_cond=True))

    def run(self, node) -> None:
        if isinstance(node, Sequence):
            for s in node.body:
                self.run(s)
        elif isinstance(node, Call):
            self.call(node)
        elif isinstance(node, Wait):
            t = self.rt.clock.t
            out = self.rt.op_wait(t, node.cycles)
            self._commit("wait", t, out.cycles, out.params)
        elif isinstance(node, If):
            if self.cond(node.cond):
                self.run(node.then)
            elif node.orelse is not None:
                self.run(node.orelse)
        elif isinstance(node, While):
            while self.cond(node.cond):
                self.run(node.body)
        elif isinstance(node, Parallel):
            clock = self.rt.clock
            t0 = clock.t
            self.run(node.left)
            t_left = clock.t
            clock.t = t0
            self.run(node.right)
            clock.t = max(t_left, clock.t)
        else:
            raise TypeError(f"cannot execute {node!r}")


def execute_cp(
    program: Program,
    runtime: Runtime,
    args: dict | None = None,
    *,
    t_c: int | None = None,
    observer: Observer | None = None,
) -> ExecResult:
    """Run ``program`` on ``runtime`` until it emits, ends, fails or passes ``t_c``.

    Primitive errors come back as a ``failure`` result, never as exceptions.
    """
    check_cp(program)
    bound = bind_args(program, args or {})
    t_i = runtime.clock.t
    trace = SignalTrace(t_i=t_i, t_c=t_c)
    m = _Machine(runtime, bound, t_c, observer, trace)
    status, reason, message = FINISHED, None, ""
    try:
        m.run(program.body)
    except _Stop as stop:
        status, reason, message = stop.status, stop.reason, stop.message
    t_end = runtime.clock.t
    runtime.close(t_end)
    response = runtime.response if status == SUCCESS else None
    return ExecResult(status, response, reason, message, t_end, trace, runtime)
