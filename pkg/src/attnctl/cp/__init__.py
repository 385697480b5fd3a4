"""Cognitive programs: a small scripting language for attentional control."""

from __future__ import annotations

from importlib import resources

from .ast import Program
from .interpreter import ExecResult, execute_cp
from .parser import ParseError, load_cp, parse_cp, pretty_print
from .primitives import MECHANISMS, REGISTRY
from .runtime import Environment, Runtime, StaticScene
from .trace import ControlSignal, SignalTrace, emit_trace
from .validate import SemanticError, ValidationError, check_cp, validate_cp


def library_sources() -> dict[str, str]:
    """Fixture CP sources keyed by file stem, sorted by name."""
    pkg = resources.files(__package__) / "library"
    out = {}
    for entry in sorted(pkg.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".cp"):
            out[entry.name[:-3]] = entry.read_text(encoding="utf-8")
    return out


def load_library() -> dict[str, Program]:
    lib = {}
    for name, text in library_sources().items():
        prog = check_cp(parse_cp(text))
        if prog.name != name:
            raise ValueError(f"library file {name}.cp defines program {prog.name!r}")
        lib[name] = prog
    return lib


__all__ = [
    "ControlSignal",
    "Environment",
    "ExecResult",
    "MECHANISMS",
    "ParseError",
    "Program",
    "REGISTRY",
    "Runtime",
    "SemanticError",
    "SignalTrace",
    "StaticScene",
    "ValidationError",
    "check_cp",
    "emit_trace",
    "execute_cp",
    "library_sources",
    "load_cp",
    "load_library",
    "parse_cp",
    "pretty_print",
    "validate_cp",
]
