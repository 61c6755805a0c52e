"""Procedural mixture terms, their canonical form, and an s-expression syntax.

A process is a finite binary tree whose leaves are outcome identifiers and
whose internal nodes mix two sub-processes with a weight ``mu``.  Unlike
lotteries, mixing a process with itself does not give the process back, so
canonicalization flattens and sorts the tree but never merges repeated
outcomes.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Union

__all__ = [
    "Leaf",
    "Mix",
    "Process",
    "CanonicalProcess",
    "ParseError",
    "mix",
    "canonicalize",
    "equivalent",
    "from_entries",
    "parse_process",
    "format_process",
    "leaves",
]

_BAD_ID = re.compile(r"[\s()]")


def _check_outcome(outcome: str) -> str:
    if not isinstance(outcome, str) or not outcome or _BAD_ID.search(outcome):
        raise ValueError(f"invalid outcome id {outcome!r}")
    return outcome


def _check_weight(mu: float) -> float:
    mu = float(mu)
    if not (0.0 <= mu <= 1.0):
        raise ValueError(f"mixture weight {mu!r} outside [0, 1]")
    return mu


@dataclass(frozen=True)
class Leaf:
    outcome: str

    def __post_init__(self):
        _check_outcome(self.outcome)


@dataclass(frozen=True)
class Mix:
    """``mu * left (+) (1 - mu) * right``, kept unreduced."""

    mu: float
    left: "Process"
    right: "Process"

    def __post_init__(self):
        object.__setattr__(self, "mu", _check_weight(self.mu))


Process = Union[Leaf, Mix]


@dataclass(frozen=True)
class CanonicalProcess:
    """Flat ``(outcome, weight)`` entries sorted by outcome id, then weight."""

    entries: tuple[tuple[str, float], ...]

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(w for _, w in self.entries)

    @property
    def outcomes(self) -> tuple[str, ...]:
        return tuple(x for x, _ in self.entries)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def mix(a: Process, b: Process, mu: float) -> Mix:
    return Mix(mu, a, b)


def canonicalize(p: Process) -> CanonicalProcess:
    entries = []
    stack = [(p, 1.0)]
    while stack:
        node, w = stack.pop()
        if isinstance(node, Leaf):
            entries.append((node.outcome, w))
            continue
        # weight-0 branches vanish together with everything below them
        if node.mu > 0.0:
            stack.append((node.left, w * node.mu))
        if node.mu < 1.0:
            stack.append((node.right, w * (1.0 - node.mu)))
    entries = [e for e in entries if e[1] > 0.0]
    entries.sort()
    return CanonicalProcess(tuple(entries))


def equivalent(a: Process, b: Process, eps: float = 1e-12) -> bool:
    if eps < 0:
        raise ValueError("eps must be non-negative")
    ca, cb = canonicalize(a), canonicalize(b)
    if len(ca) != len(cb):
        return False
    return all(
        xa == xb and abs(wa - wb) <= eps for (xa, wa), (xb, wb) in zip(ca, cb)
    )


def from_entries(entries: Iterable[tuple[str, float]]) -> Process:
    """Right-nested tree whose canonical form is ``entries``."""
    entries = [(x, float(w)) for x, w in entries if w > 0]
    if not entries:
        raise ValueError("no entries with positive weight")
    x, _ = entries[-1]
    tree: Process = Leaf(x)
    remaining = entries[-1][1]
    for x, w in reversed(entries[:-1]):
        remaining += w
        tree = Mix(min(1.0, w / remaining), Leaf(x), tree)
    return tree


def leaves(p: Process) -> list[str]:
    out = []
    stack = [p]
    while stack:
        node = stack.pop()
        if isinstance(node, Leaf):
            out.append(node.outcome)
        else:
            stack.append(node.right)
            stack.append(node.left)
    return out


# --------------------------------------------------------------------------
# text format
#
#   process := "(out" ID ")" | "(mix" WEIGHT process process ")"


class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


_TOKEN = re.compile(r"\s*(?:(\()|(\))|([^\s()]+))")


def _tokenize(text: str):
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN.match(text, pos)
        if m is None:
            break
        if m.end() == pos:
            break
        start = m.start(m.lastindex) if m.lastindex else m.end()
        if m.group(1):
            yield "(", start
        elif m.group(2):
            yield ")", start
        elif m.group(3):
            yield m.group(3), start
        pos = m.end()
    yield None, n


def parse_process(text: str) -> Process:
    tokens = list(_tokenize(text))
    i = 0

    def expect(value):
        nonlocal i
        tok, pos = tokens[i]
        if tok != value:
            found = "end of input" if tok is None else repr(tok)
            raise ParseError(f"expected {value!r}, found {found}", pos)
        i += 1

    def atom(what):
        nonlocal i
        tok, pos = tokens[i]
        if tok is None or tok in "()":
            found = "end of input" if tok is None else repr(tok)
            raise ParseError(f"expected {what}, found {found}", pos)
        i += 1
        return tok, pos

    def node():
        nonlocal i
        expect("(")
        head, pos = atom("'out' or 'mix'")
        if head == "out":
            ident, _ = atom("outcome id")
            expect(")")
            return Leaf(ident)
        if head == "mix":
            raw, wpos = atom("weight")
            try:
                mu = float(raw)
            except ValueError:
                raise ParseError(f"invalid weight {raw!r}", wpos) from None
            if not math.isfinite(mu) or not 0.0 <= mu <= 1.0:
                raise ParseError(f"weight out of range: {raw}", wpos)
            left = node()
            right = node()
            expect(")")
            return Mix(mu, left, right)
        raise ParseError(f"unknown form {head!r}", pos)

    result = node()
    tok, pos = tokens[i]
    if tok is not None:
        raise ParseError(f"trailing input {tok!r}", pos)
    return result


def format_process(p: Process) -> str:
    if isinstance(p, Leaf):
        return f"(out {p.outcome})"
    return f"(mix {p.mu!r} {format_process(p.left)} {format_process(p.right)})"
