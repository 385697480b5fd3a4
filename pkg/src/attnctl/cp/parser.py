"""Lexer, recursive-descent parser and canonical pretty printer for CP source.

Grammar::

    program := "cp" IDENT "(" [IDENT {"," IDENT}] ")" block
    block   := "{" {stmt} "}"
    stmt    := call ";" | "if" "(" cond ")" block ["else" block]
             | "while" "(" cond ")" block | "par" block block
             | "wait" "(" INT ")" ";"
    call    := IDENT "(" [value {"," value}] ")"
    cond    := unary {"&&" unary}
    unary   := "!" unary | "(" cond ")" | "true" | "false" | call
    value   := INT | REAL | STRING | IDENT

``//`` and ``#`` start comments that run to the end of the line.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .ast import And, BoolLit, Call, Int, If, Name, Not, Parallel, Program, Real, Sequence, Str, Wait, While

KEYWORDS = {"cp", "if", "else", "while", "par", "wait", "true", "false"}


class ParseError(Exception):
    def __init__(self, line: int, column: int, message: str):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column
        self.message = message


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT, INT, REAL, STRING, PUNCT, KEYWORD, EOF
    text: str
    line: int
    column: int
    value: object = None

    def describe(self) -> str:
        return "end of input" if self.kind == "EOF" else repr(self.text)


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>(//|\#)[^\n]*)
  | (?P<real>-?(\d+\.\d*([eE][+-]?\d+)?|\.\d+([eE][+-]?\d+)?|\d+[eE][+-]?\d+))
  | (?P<int>-?\d+)
  | (?P<string>")
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>&&|[(){},;!])
    """,
    re.VERBOSE,
)

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    n = len(text)
    while pos < n:
        col = pos - line_start + 1
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(line, col, f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "string":
            i = m.end()
            chars = []
            while True:
                if i >= n or text[i] == "\n":
                    raise ParseError(line, col, "unterminated string literal")
                ch = text[i]
                if ch == '"':
                    i += 1
                    break
                if ch == "\\":
                    esc = text[i + 1] if i + 1 < n else ""
                    if esc not in _ESCAPES:
                        raise ParseError(line, i - line_start + 1, f"invalid escape \\{esc}")
                    chars.append(_ESCAPES[esc])
                    i += 2
                    continue
                chars.append(ch)
                i += 1
            tokens.append(Token("STRING", text[pos:i], line, col, "".join(chars)))
            pos = i
            continue
        elif kind == "real":
            v = float(m.group())
            if not math.isfinite(v):
                raise ParseError(line, col, f"real literal {m.group()} out of range")
            tokens.append(Token("REAL", m.group(), line, col, v))
        elif kind == "int":
            tokens.append(Token("INT", m.group(), line, col, int(m.group())))
        elif kind == "ident":
            word = m.group()
            tokens.append(Token("KEYWORD" if word in KEYWORDS else "IDENT", word, line, col, word))
        elif kind == "punct":
            tokens.append(Token("PUNCT", m.group(), line, col))
        pos = m.end()
    tokens.append(Token("EOF", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def next(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "EOF":
            self.i += 1
        return t

    def fail(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        raise ParseError(tok.line, tok.column, message)

    def is_punct(self, p: str) -> bool:
        return self.tok.kind == "PUNCT" and self.tok.text == p

    def is_kw(self, k: str) -> bool:
        return self.tok.kind == "KEYWORD" and self.tok.text == k

    def expect_punct(self, p: str, context: str = "") -> Token:
        if not self.is_punct(p):
            self.fail(f"expected {p!r}{context} but found {self.tok.describe()}")
        return self.next()

    def expect_ident(self, what: str) -> Token:
        if self.tok.kind != "IDENT":
            self.fail(f"expected {what} but found {self.tok.describe()}")
        return self.next()

    # -- productions ------------------------------------------------------

    def program(self) -> Program:
        if not self.is_kw("cp"):
            self.fail(f"expected 'cp' but found {self.tok.describe()}")
        self.next()
        name = self.expect_ident("program name").text
        self.expect_punct("(")
        params: list[str] = []
        if not self.is_punct(")"):
            while True:
                t = self.expect_ident("parameter name")
                if t.text in params:
                    self.fail(f"duplicate parameter {t.text!r}", t)
                params.append(t.text)
                if self.is_punct(","):
                    self.next()
                    continue
                break
        self.expect_punct(")", " after parameters")
        body = self.block()
        if self.tok.kind != "EOF":
            self.fail(f"unexpected {self.tok.describe()} after program end")
        return Program(name, tuple(params), body)

    def block(self) -> Sequence:
        open_tok = self.tok
        self.expect_punct("{")
        stmts = []
        while not self.is_punct("}"):
            if self.tok.kind == "EOF":
                self.fail(f"unclosed block opened at {open_tok.line}:{open_tok.column}")
            stmts.append(self.stmt())
        self.next()
        return Sequence(tuple(stmts))

    def stmt(self):
        t = self.tok
        if self.is_kw("if"):
            self.next()
            self.expect_punct("(", " after 'if'")
            cond = self.cond()
            self.expect_punct(")", " after condition")
            then = self.block()
            orelse = None
            if self.is_kw("else"):
                self.next()
                orelse = self.block()
            return If(cond, then, orelse)
        if self.is_kw("while"):
            self.next()
            self.expect_punct("(", " after 'while'")
            cond = self.cond()
            self.expect_punct(")", " after condition")
            return While(cond, self.block(), t.line, t.column)
        if self.is_kw("par"):
            self.next()
            left = self.block()
            if not self.is_punct("{"):
                self.fail(f"'par' needs two blocks; found {self.tok.describe()}")
            return Parallel(left, self.block(), t.line, t.column)
        if self.is_kw("wait"):
            self.next()
            self.expect_punct("(", " after 'wait'")
            if self.tok.kind != "INT":
                self.fail(f"wait expects an integer cycle count but found {self.tok.describe()}")
            n = self.next().value
            if n < 0:
                self.fail("wait expects a non-negative cycle count", t)
            self.expect_punct(")", " after wait count")
            self.expect_punct(";", " after statement")
            return Wait(n, t.line, t.column)
        if t.kind == "IDENT":
            c = self.call()
            self.expect_punct(";", " after call")
            return c
        self.fail(f"expected a statement but found {t.describe()}")

    def call(self) -> Call:
        name = self.expect_ident("primitive name")
        self.expect_punct("(", f" after {name.text!r}")
        args = []
        if not self.is_punct(")"):
            while True:
                args.append(self.value(name))
                if self.is_punct(","):
                    self.next()
                    continue
                break
        if not self.is_punct(")"):
            self.fail(
                f"unclosed call to {name.text!r} opened at {name.line}:{name.column}: "
                f"expected ',' or ')' but found {self.tok.describe()}"
            )
        self.next()
        return Call(name.text, tuple(args), name.line, name.column)

    def value(self, owner: Token):
        t = self.tok
        if t.kind == "INT":
            self.next()
            return Int(t.value)
        if t.kind == "REAL":
            self.next()
            return Real(t.value)
        if t.kind == "STRING":
            self.next()
            return Str(t.value)
        if t.kind == "IDENT":
            self.next()
            return Name(t.text)
        self.fail(
            f"unclosed call to {owner.text!r} opened at {owner.line}:{owner.column}: "
            f"expected an argument but found {t.describe()}"
        )

    def cond(self):
        left = self.unary()
        while self.is_punct("&&"):
            self.next()
            left = And(left, self.unary())
        return left

    def unary(self):
        if self.is_punct("!"):
            self.next()
            return Not(self.unary())
        if self.is_punct("("):
            self.next()
            c = self.cond()
            self.expect_punct(")", " to close the condition")
            return c
        if self.is_kw("true") or self.is_kw("false"):
            return BoolLit(self.next().text == "true")
        if self.tok.kind == "IDENT":
            return self.call()
        self.fail(f"expected a condition but found {self.tok.describe()}")


def parse_cp(text: str) -> Program:
    """Parse CP source; raises :class:`ParseError` with a 1-based line and column."""
    return _Parser(tokenize(text)).program()


def load_cp(path) -> Program:
    with open(path, encoding="utf-8") as f:
        return parse_cp(f.read())


# ---------------------------------------------------------------------------
# Canonical pretty printer

INDENT = "    "


def format_value(v) -> str:
    if isinstance(v, Int):
        return str(v.value)
    if isinstance(v, Real):
        return repr(float(v.value))
    if isinstance(v, Str):
        s = v.value.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
        return f'"{s}"'
    if isinstance(v, Name):
        return v.value
    raise TypeError(f"not a CP value: {v!r}")


def format_call(c: Call) -> str:
    return f"{c.name}({', '.join(format_value(a) for a in c.args)})"


def format_cond(c, nested: bool = False) -> str:
    if isinstance(c, BoolLit):
        return "true" if c.value else "false"
    if isinstance(c, Call):
        return format_call(c)
    if isinstance(c, Not):
        return "!" + format_cond(c.operand, nested=True)
    if isinstance(c, And):
        right = format_cond(c.right, nested=True)
        text = f"{format_cond(c.left)} && {right}"
        return f"({text})" if nested else text
    raise TypeError(f"not a condition: {c!r}")


def _block(seq: Sequence, depth: int) -> list[str]:
    lines = []
    for s in seq.body:
        lines.extend(_stmt(s, depth))
    return lines


def _stmt(s, depth: int) -> list[str]:
    pad = INDENT * depth
    if isinstance(s, Call):
        return [f"{pad}{format_call(s)};"]
    if isinstance(s, Wait):
        return [f"{pad}wait({s.cycles});"]
    if isinstance(s, If):
        out = [f"{pad}if ({format_cond(s.cond)}) {{", *_block(s.then, depth + 1)]
        if s.orelse is not None:
            out += [f"{pad}}} else {{", *_block(s.orelse, depth + 1)]
        return out + [f"{pad}}}"]
    if isinstance(s, While):
        return [f"{pad}while ({format_cond(s.cond)}) {{", *_block(s.body, depth + 1), f"{pad}}}"]
    if isinstance(s, Parallel):
        return [
            f"{pad}par {{",
            *_block(s.left, depth + 1),
            f"{pad}}} {{",
            *_block(s.right, depth + 1),
            f"{pad}}}",
        ]
    raise TypeError(f"not a statement: {s!r}")


def pretty_print(program: Program) -> str:
    head = f"cp {program.name}({', '.join(program.params)}) {{"
    return "\n".join([head, *_block(program.body, 1), "}"]) + "\n"
