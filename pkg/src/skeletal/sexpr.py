"""Minimal S-expression reader with source positions."""
from __future__ import annotations

from dataclasses import dataclass


class SkeletalError(Exception):
    """Base class for input errors reported to the user."""


class ParseError(SkeletalError):
    def __init__(self, message: str, line: int = 0, col: int = 0, source: str = "<input>"):
        self.message = message
        self.line = line
        self.col = col
        self.source = source
        super().__init__(f"{source}:{line}:{col}: {message}")


@dataclass(frozen=True)
class Symbol:
    name: str
    line: int
    col: int

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class String:
    value: str
    line: int
    col: int

    def __str__(self) -> str:
        return f'"{self.value}"'


@dataclass(frozen=True)
class Number:
    value: int
    line: int
    col: int

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class SList:
    items: tuple
    line: int
    col: int

    def __len__(self) -> int:
        return len(self.items)

    def __getitem__(self, i):
        return self.items[i]

    def __iter__(self):
        return iter(self.items)

    @property
    def head(self):
        if self.items and isinstance(self.items[0], Symbol):
            return self.items[0].name
        return None

    def __str__(self) -> str:
        return "(" + " ".join(str(x) for x in self.items) + ")"


_DELIMS = set("()\";") | set(" \t\r\n")


def read_all(text: str, source: str = "<input>") -> list:
    """Parse every top-level form in ``text``.  ``;`` starts a line comment."""
    pos, line, col = 0, 1, 1
    stack = [[]]
    opens = []
    n = len(text)
    while pos < n:
        c = text[pos]
        if c == "\n":
            pos, line, col = pos + 1, line + 1, 1
            continue
        if c in " \t\r":
            pos, col = pos + 1, col + 1
            continue
        if c == ";":
            while pos < n and text[pos] != "\n":
                pos += 1
            continue
        if c == "(":
            stack.append([])
            opens.append((line, col))
            pos, col = pos + 1, col + 1
            continue
        if c == ")":
            if len(stack) == 1:
                raise ParseError("unbalanced ')'", line, col, source)
            items = stack.pop()
            l0, c0 = opens.pop()
            stack[-1].append(SList(tuple(items), l0, c0))
            pos, col = pos + 1, col + 1
            continue
        if c == '"':
            l0, c0 = line, col
            pos, col = pos + 1, col + 1
            buf = []
            while True:
                if pos >= n:
                    raise ParseError("unterminated string", l0, c0, source)
                ch = text[pos]
                if ch == '"':
                    pos, col = pos + 1, col + 1
                    break
                if ch == "\\" and pos + 1 < n:
                    buf.append(text[pos + 1])
                    pos, col = pos + 2, col + 2
                    continue
                if ch == "\n":
                    line, col = line + 1, 0
                buf.append(ch)
                pos, col = pos + 1, col + 1
            stack[-1].append(String("".join(buf), l0, c0))
            continue
        l0, c0 = line, col
        start = pos
        while pos < n and text[pos] not in _DELIMS:
            pos += 1
        tok = text[start:pos]
        col += pos - start
        if tok.lstrip("-").isdigit():
            stack[-1].append(Number(int(tok), l0, c0))
        else:
            stack[-1].append(Symbol(tok, l0, c0))
    if len(stack) != 1:
        l0, c0 = opens[-1]
        raise ParseError("unbalanced '('", l0, c0, source)
    return stack[0]


def position(form) -> tuple:
    return getattr(form, "line", 0), getattr(form, "col", 0)
