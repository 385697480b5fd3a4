"""Syntax tree of a cognitive program.

Source positions are carried for error reporting but excluded from
equality, so a pretty-printed and re-parsed program compares equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union


@dataclass(frozen=True)
class Int:
    value: int


@dataclass(frozen=True)
class Real:
    value: float


@dataclass(frozen=True)
class Str:
    value: str


@dataclass(frozen=True)
class Name:
    """A bare identifier argument: a formal parameter or a keyword such as ``full``."""

    value: str


Value = Union[Int, Real, Str, Name]


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple[Value, ...] = ()
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class Not:
    operand: "Cond"


@dataclass(frozen=True)
class And:
    left: "Cond"
    right: "Cond"


Cond = Union[Call, BoolLit, Not, And]


@dataclass(frozen=True)
class Sequence:
    body: tuple["Stmt", ...] = ()


@dataclass(frozen=True)
class If:
    cond: Cond
    then: Sequence
    orelse: Sequence | None = None


@dataclass(frozen=True)
class While:
    cond: Cond
    body: Sequence
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Parallel:
    left: Sequence
    right: Sequence
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Wait:
    cycles: int
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


Stmt = Union[Call, If, While, Parallel, Wait]


@dataclass(frozen=True)
class Program:
    name: str
    params: tuple[str, ...]
    body: Sequence

    def __len__(self) -> int:
        return len(self.body.body)


def iter_calls(node):
    """Every primitive call in ``node``, conditions included, in source order."""
    if isinstance(node, Program):
        yield from iter_calls(node.body)
    elif isinstance(node, Sequence):
        for s in node.body:
            yield from iter_calls(s)
    elif isinstance(node, Call):
        yield node
    elif isinstance(node, If):
        yield from iter_calls(node.cond)
        yield from iter_calls(node.then)
        if node.orelse is not None:
            yield from iter_calls(node.orelse)
    elif isinstance(node, While):
        yield from iter_calls(node.cond)
        yield from iter_calls(node.body)
    elif isinstance(node, Parallel):
        yield from iter_calls(node.left)
        yield from iter_calls(node.right)
    elif isinstance(node, Not):
        yield from iter_calls(node.operand)
    elif isinstance(node, And):
        yield from iter_calls(node.left)
        yield from iter_calls(node.right)
