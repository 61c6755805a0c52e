"""Aggregated choice-probability and decision-time data over menus.

Two CSV files describe a dataset::

    choices.csv   menu_id,alternative_id,probability
    times.csv     menu_id,decision_time

A menu is the set of alternative ids sharing a ``menu_id``.  Duplicate
options (two buses) are encoded as distinct ids such as ``Bus`` and
``Bus#2``; :func:`label` maps an id back to its display label.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

__all__ = [
    "Menu",
    "Dataset",
    "DataError",
    "ToleranceConfig",
    "label",
    "menu_key",
    "load_dataset",
    "dataset_from_text",
    "read_choices",
    "read_times",
    "read_menus",
    "parse_menus_csv",
    "write_choices",
    "write_times",
]

Menu = frozenset
PROB_ATOL = 1e-9


class DataError(ValueError):
    """Malformed or inconsistent input data."""


@dataclass(frozen=True)
class ToleranceConfig:
    eps_prob: float = 1e-6
    eps_ratio: float = 0.02
    eps_time: float = 1e-9

    def __post_init__(self):
        for name in ("eps_prob", "eps_ratio", "eps_time"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be non-negative")


def label(alternative: str) -> str:
    return alternative.split("#", 1)[0]


def menu_key(menu: Iterable[str]) -> tuple[str, ...]:
    return tuple(sorted(menu))


def _fmt_menu(menu: Iterable[str]) -> str:
    return "{" + ", ".join(menu_key(menu)) + "}"


@dataclass
class Dataset:
    """Choice probabilities ``p[menu][x]`` and decision times ``tau[menu]``.

    ``menus`` is kept in lexicographic order of the sorted member ids so that
    every audit enumerates deterministically.
    """

    p: dict[frozenset, dict[str, float]]
    tau: dict[frozenset, float] = field(default_factory=dict)
    names: dict[frozenset, str] = field(default_factory=dict)

    def __post_init__(self):
        p = {}
        for menu, probs in self.p.items():
            menu = frozenset(menu)
            if not menu:
                raise DataError("empty menu")
            if set(probs) != set(menu):
                raise DataError(f"probabilities do not match menu {_fmt_menu(menu)}")
            vals = {x: float(v) for x, v in probs.items()}
            for x, v in vals.items():
                if not (0.0 <= v <= 1.0):
                    raise DataError(f"probability {v} of {x} in {_fmt_menu(menu)} out of range")
            total = math.fsum(vals.values())
            if abs(total - 1.0) > PROB_ATOL:
                raise DataError(f"probabilities of {_fmt_menu(menu)} sum to {total!r}")
            p[menu] = {x: vals[x] / total for x in menu_key(menu)}
        if not p:
            raise DataError("no menus")
        self.p = dict(sorted(p.items(), key=lambda kv: menu_key(kv[0])))
        tau = {}
        for menu, t in self.tau.items():
            menu = frozenset(menu)
            if menu not in self.p:
                raise DataError(f"decision time for unknown menu {_fmt_menu(menu)}")
            t = float(t)
            if not (t >= 0.0 and math.isfinite(t)):
                raise DataError(f"decision time {t} of {_fmt_menu(menu)} must be >= 0")
            tau[menu] = t
        self.tau = tau
        self.names = {
            menu: self.names.get(menu, "m" + "+".join(menu_key(menu))) for menu in self.p
        }

    @property
    def menus(self) -> list[frozenset]:
        return list(self.p)

    @property
    def outcomes(self) -> list[str]:
        return sorted(set().union(*self.p))

    def __contains__(self, menu) -> bool:
        return frozenset(menu) in self.p

    def prob(self, menu: Iterable[str], x: str) -> float:
        return self.p[frozenset(menu)].get(x, 0.0)

    def prob_of(self, menu: Iterable[str], subset: Iterable[str]) -> float:
        probs = self.p[frozenset(menu)]
        return math.fsum(probs.get(x, 0.0) for x in subset)

    def distribution(self, menu: Iterable[str]) -> list[float]:
        return list(self.p[frozenset(menu)].values())

    def timed_menus(self) -> list[frozenset]:
        return [m for m in self.p if m in self.tau]

    def name(self, menu) -> str:
        return self.names[frozenset(menu)]

    def subset(self, menus: Iterable[frozenset]) -> "Dataset":
        keep = [frozenset(m) for m in menus]
        return Dataset(
            {m: self.p[m] for m in keep},
            {m: self.tau[m] for m in keep if m in self.tau},
            {m: self.names[m] for m in keep},
        )

    def with_times(self, tau: Mapping[frozenset, float]) -> "Dataset":
        return Dataset(dict(self.p), dict(tau), dict(self.names))


# --------------------------------------------------------------------------
# CSV


def _open_text(source) -> str:
    if isinstance(source, io.StringIO):
        return source.getvalue()
    return Path(source).read_text(encoding="utf-8")


def _rows(text: str, header: Sequence[str], what: str) -> list[tuple[int, list[str]]]:
    reader = csv.reader(io.StringIO(text))
    rows = [(i, [c.strip() for c in row]) for i, row in enumerate(reader, start=1) if row]
    if not rows:
        raise DataError(f"{what}: empty file")
    line, first = rows[0]
    if first != list(header):
        raise DataError(f"{what}: expected header {','.join(header)}, got {','.join(first)}")
    body = rows[1:]
    for line, row in body:
        if len(row) != len(header):
            raise DataError(f"{what} line {line}: expected {len(header)} fields, got {len(row)}")
        if any(not c for c in row):
            raise DataError(f"{what} line {line}: empty field")
    return body


def _float(value: str, what: str, line: int) -> float:
    try:
        v = float(value)
    except ValueError:
        raise DataError(f"{what} line {line}: not a number: {value!r}") from None
    if not math.isfinite(v):
        raise DataError(f"{what} line {line}: not finite: {value!r}")
    return v


def read_choices(text: str) -> tuple[dict[frozenset, dict[str, float]], dict[str, frozenset]]:
    body = _rows(text, ("menu_id", "alternative_id", "probability"), "choices")
    if not body:
        raise DataError("choices: no menus")
    grouped: dict[str, dict[str, float]] = {}
    for line, (menu_id, alt, prob) in body:
        v = _float(prob, "choices", line)
        if not 0.0 <= v <= 1.0:
            raise DataError(f"choices line {line}: probability {v} out of range")
        members = grouped.setdefault(menu_id, {})
        if alt in members:
            raise DataError(f"choices line {line}: duplicate alternative {alt} in menu {menu_id}")
        members[alt] = v
    p: dict[frozenset, dict[str, float]] = {}
    ids: dict[str, frozenset] = {}
    for menu_id, members in grouped.items():
        menu = frozenset(members)
        if menu in p:
            raise DataError(f"choices: menu {menu_id} repeats the alternatives of another menu")
        total = math.fsum(members.values())
        if abs(total - 1.0) > PROB_ATOL:
            raise DataError(f"choices: probabilities of menu {menu_id} sum to {total!r}")
        p[menu] = members
        ids[menu_id] = menu
    return p, ids


def read_times(text: str) -> dict[str, float]:
    body = _rows(text, ("menu_id", "decision_time"), "times")
    out: dict[str, float] = {}
    for line, (menu_id, t) in body:
        v = _float(t, "times", line)
        if v < 0:
            raise DataError(f"times line {line}: negative decision time")
        if menu_id in out:
            raise DataError(f"times line {line}: duplicate menu {menu_id}")
        out[menu_id] = v
    return out


def parse_menus_csv(text: str) -> list[tuple[str, frozenset]]:
    body = _rows(text, ("menu_id", "alternative_id"), "menus")
    if not body:
        raise DataError("menus: no menus")
    grouped: dict[str, list[str]] = {}
    for line, (menu_id, alt) in body:
        members = grouped.setdefault(menu_id, [])
        if alt in members:
            raise DataError(f"menus line {line}: duplicate alternative {alt} in menu {menu_id}")
        members.append(alt)
    return [(k, frozenset(v)) for k, v in grouped.items()]


def read_menus(path) -> list[tuple[str, frozenset]]:
    return parse_menus_csv(_open_text(path))


def dataset_from_text(choices_text: str, times_text: str | None = None) -> Dataset:
    p, ids = read_choices(choices_text)
    tau = {}
    if times_text is not None:
        for menu_id, t in read_times(times_text).items():
            if menu_id not in ids:
                raise DataError(f"times: menu {menu_id} missing from choices")
            tau[ids[menu_id]] = t
    return Dataset(p, tau, {menu: menu_id for menu_id, menu in ids.items()})


def load_dataset(choices_path, times_path=None) -> Dataset:
    times_text = None if times_path is None else _open_text(times_path)
    return dataset_from_text(_open_text(choices_path), times_text)


def write_choices(d: Dataset, out) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["menu_id", "alternative_id", "probability"])
    for menu, probs in d.p.items():
        for x, v in probs.items():
            w.writerow([d.name(menu), x, repr(v)])


def write_times(d: Dataset, out) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["menu_id", "decision_time"])
    for menu, t in d.tau.items():
        w.writerow([d.name(menu), repr(t)])
