"""Static checks on a parsed CP before it may run."""

from __future__ import annotations

from dataclasses import dataclass

from .ast import And, BoolLit, Call, If, Int, Name, Not, Parallel, Program, Real, Sequence, Str, Wait, While, iter_calls
from .primitives import REGISTRY, PrimitiveSpec


@dataclass(frozen=True)
class SemanticError:
    line: int
    column: int
    message: str

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.message}"


class ValidationError(Exception):
    def __init__(self, errors: list[SemanticError]):
        super().__init__("; ".join(map(str, errors)))
        self.errors = errors


def _check_args(call: Call, spec: PrimitiveSpec, formals: set[str], errors: list[SemanticError]) -> None:
    lo, hi = spec.arity
    n = len(call.args)
    if not lo <= n <= hi:
        want = str(lo) if lo == hi else f"{lo} to {hi}"
        errors.append(SemanticError(call.line, call.column, f"{call.name} takes {want} argument(s), got {n}"))
        return
    for arg, a in zip(call.args, spec.args):
        if isinstance(arg, Name):
            if arg.value in formals or arg.value in a.keywords:
                continue
            errors.append(SemanticError(call.line, call.column, f"unbound parameter {arg.value!r} in {call.name}"))
        elif a.kind == "int" and not isinstance(arg, Int):
            errors.append(SemanticError(call.line, call.column, f"{call.name}: {a.name} must be an integer"))
        elif a.kind == "num" and not isinstance(arg, (Int, Real)):
            errors.append(SemanticError(call.line, call.column, f"{call.name}: {a.name} must be a number"))
        elif a.kind in ("str", "key") and not isinstance(arg, Str):
            errors.append(SemanticError(call.line, call.column, f"{call.name}: {a.name} must be a string"))
        if a.keywords and isinstance(arg, Str) and call.name == "set_param" and arg.value not in a.keywords:
            errors.append(SemanticError(call.line, call.column, f"set_param: unknown parameter {arg.value!r}"))


def _cond_progresses(c) -> bool:
    """The part of a condition that is always evaluated consumes time."""
    if isinstance(c, Call):
        spec = REGISTRY.get(c.name)
        return spec is not None and spec.min_cost > 0
    if isinstance(c, Not):
        return _cond_progresses(c.operand)
    if isinstance(c, And):
        return _cond_progresses(c.left)
    return False


def progresses(node) -> bool:
    """True when executing ``node`` always advances the clock."""
    if isinstance(node, Sequence):
        return any(progresses(s) for s in node.body)
    if isinstance(node, Call):
        return _cond_progresses(node)
    if isinstance(node, Wait):
        return node.cycles > 0
    if isinstance(node, If):
        return _cond_progresses(node.cond) or (
            node.orelse is not None and progresses(node.then) and progresses(node.orelse)
        )
    if isinstance(node, Parallel):
        return progresses(node.left) or progresses(node.right)
    if isinstance(node, While):
        return _cond_progresses(node.cond)
    return False


def footprint(node) -> tuple[set[str], set[str]]:
    """(reads, writes) runtime resources of every call under ``node``."""
    reads: set[str] = set()
    writes: set[str] = set()
    for c in iter_calls(node):
        spec = REGISTRY.get(c.name)
        if spec is None:
            continue
        reads |= spec.reads
        w = set(spec.writes)
        if c.name == "set_param" and c.args and isinstance(c.args[0], Str):
            w = {f"params:{c.args[0].value}"}
        writes |= w
    return reads, writes


def _walk(node, formals, errors) -> None:
    if isinstance(node, Sequence):
        for s in node.body:
            _walk(s, formals, errors)
    elif isinstance(node, Call):
        spec = REGISTRY.get(node.name)
        if spec is None:
            errors.append(SemanticError(node.line, node.column, f"unknown primitive {node.name!r}"))
        else:
            _check_args(node, spec, formals, errors)
    elif isinstance(node, If):
        _walk_cond(node.cond, formals, errors)
        _walk(node.then, formals, errors)
        if node.orelse is not None:
            _walk(node.orelse, formals, errors)
    elif isinstance(node, While):
        _walk_cond(node.cond, formals, errors)
        _walk(node.body, formals, errors)
        if not progresses(node.body) and not _cond_progresses(node.cond):
            errors.append(SemanticError(node.line, node.column, "while loop makes no progress: body consumes no time"))
    elif isinstance(node, Parallel):
        _walk(node.left, formals, errors)
        _walk(node.right, formals, errors)
        lr, lw = footprint(node.left)
        rr, rw = footprint(node.right)
        clash = (lw & (rr | rw)) | (rw & (lr | lw))
        if clash:
            errors.append(
                SemanticError(node.line, node.column, f"par branches share runtime state: {', '.join(sorted(clash))}")
            )
    elif isinstance(node, Wait):
        pass


def _walk_cond(c, formals, errors) -> None:
    if isinstance(c, Call):
        _walk(c, formals, errors)
        spec = REGISTRY.get(c.name)
        if spec is not None and not spec.predicate:
            errors.append(SemanticError(c.line, c.column, f"{c.name} does not return a truth value"))
    elif isinstance(c, Not):
        _walk_cond(c.operand, formals, errors)
    elif isinstance(c, And):
        _walk_cond(c.left, formals, errors)
        _walk_cond(c.right, formals, errors)
    elif not isinstance(c, BoolLit):
        raise TypeError(f"not a condition: {c!r}")


def validate_cp(program: Program) -> list[SemanticError]:
    """Empty list when ``program`` is well formed."""
    errors: list[SemanticError] = []
    _walk(program.body, set(program.params), errors)
    return errors


def check_cp(program: Program) -> Program:
    errors = validate_cp(program)
    if errors:
        raise ValidationError(errors)
    return program


def bind_args(program: Program, args: dict) -> dict:
    """Check that ``args`` covers exactly the formals; values must be str, int or float."""
    missing = [p for p in program.params if p not in args]
    extra = [k for k in args if k not in program.params]
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"missing {', '.join(missing)}")
        if extra:
            parts.append(f"unexpected {', '.join(extra)}")
        raise ValueError(f"arguments for {program.name}: {'; '.join(parts)}")
    for k, v in args.items():
        if not isinstance(v, (str, int, float)) or isinstance(v, bool):
            raise ValueError(f"argument {k} must be a string or number, got {type(v).__name__}")
    return dict(args)


__all__ = ["SemanticError", "ValidationError", "validate_cp", "check_cp", "bind_args", "progresses", "footprint"]
