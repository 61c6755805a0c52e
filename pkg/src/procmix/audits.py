"""Finite-data audits of the choice and decision-time axioms.

Every audit returns an :class:`AxiomReport`; a report passes exactly when
its violation list is empty.  Enumeration follows the lexicographic menu
order of :class:`~procmix.dataset.Dataset`, so reports are reproducible.

Richness and continuity of decision times are preconditions of the
characterization results but cannot be falsified by finitely many menus;
they are not audited.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .dataset import Dataset, ToleranceConfig, menu_key

__all__ = [
    "AxiomReport",
    "SimilarityPartition",
    "NOT_CHECKABLE",
    "check_positivity",
    "check_iia",
    "iia_pair_status",
    "similarity_partition",
    "check_dt_independence",
    "check_dt_independence_equally_dissimilar",
    "check_iia_equally_dissimilar",
    "run_all",
]

NOT_CHECKABLE = (
    "richness and continuity of decision times: not checkable on finite data"
)


@dataclass
class AxiomReport:
    axiom: str
    violations: list[dict] = field(default_factory=list)
    instances: int = 0
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "axiom": self.axiom,
            "pass": self.passed,
            "instances": self.instances,
            "violations": self.violations,
            "notes": self.notes,
        }

    def to_text(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        lines = [f"{self.axiom}: {status} ({self.instances} instances, "
                 f"{len(self.violations)} violations)"]
        for v in self.violations:
            lines.append("  - " + v["detail"])
        for note in self.notes:
            lines.append("  note: " + note)
        return "\n".join(lines)


def _fmt(menu: Iterable[str]) -> str:
    return "{" + ", ".join(menu_key(menu)) + "}"


def _sign(x: float, eps: float) -> int:
    if x > eps:
        return 1
    if x < -eps:
        return -1
    return 0


def _log_ratio(px: float, py: float) -> float | None:
    if px == 0.0 and py == 0.0:
        return None
    if py == 0.0:
        return math.inf
    if px == 0.0:
        return -math.inf
    return math.log(px) - math.log(py)


def _deviation(a: float, b: float) -> float:
    if a == b:
        return 0.0
    return abs(a - b)


def check_positivity(d: Dataset, tol: ToleranceConfig = ToleranceConfig()) -> AxiomReport:
    report = AxiomReport("positivity")
    unchecked = 0
    for menu in d.menus:
        if len(menu) != 2:
            continue
        x, y = menu_key(menu)
        report.instances += 1
        for z in (x, y):
            if d.prob(menu, z) <= 0.0:
                report.violations.append({
                    "kind": "zero probability",
                    "menu": list(menu_key(menu)),
                    "alternative": z,
                    "detail": f"p({z}, {_fmt(menu)}) = 0",
                })
        if menu not in d.tau:
            unchecked += 1
            continue
        t_pair = d.tau[menu]
        for z in (x, y):
            single = frozenset([z])
            if single not in d.tau:
                unchecked += 1
                continue
            gap = t_pair - d.tau[single]
            if gap <= tol.eps_time:
                report.violations.append({
                    "kind": "no deliberation time",
                    "menu": list(menu_key(menu)),
                    "alternative": z,
                    "deviation": gap,
                    "detail": f"tau({_fmt(menu)}) - tau({{{z}}}) = {gap:.6g} <= {tol.eps_time:g}",
                })
    if unchecked:
        report.notes.append(f"{unchecked} time comparisons not checkable (missing singleton or time)")
    return report


def _iia_comparisons(d: Dataset):
    """Yield ``(x, y, binary_menu, larger_menu, deviation_or_None)``."""
    for menu in d.menus:
        if len(menu) != 2:
            continue
        x, y = menu_key(menu)
        base = _log_ratio(d.prob(menu, x), d.prob(menu, y))
        for other in d.menus:
            if len(other) <= 2 or x not in other or y not in other:
                continue
            cur = _log_ratio(d.prob(other, x), d.prob(other, y))
            dev = None if base is None or cur is None else _deviation(base, cur)
            yield x, y, menu, other, dev


def check_iia(d: Dataset, tol: ToleranceConfig = ToleranceConfig()) -> AxiomReport:
    report = AxiomReport("IIA")
    skipped = []
    for x, y, _, other, dev in _iia_comparisons(d):
        if dev is None:
            skipped.append(f"({x}, {y}) in {_fmt(other)}")
            continue
        report.instances += 1
        if dev > tol.eps_ratio:
            report.violations.append({
                "pair": [x, y],
                "menu": list(menu_key(other)),
                "deviation": dev,
                "detail": (f"({x}, {y}): ln-ratio {_fmt([x, y])} vs {_fmt(other)} "
                           f"differs by {dev:.6g} > {tol.eps_ratio:g}"),
            })
    if skipped:
        report.notes.append("skipped (zero probabilities on both sides): " + "; ".join(skipped))
    if report.instances == 0:
        report.notes.append("0 instances: no binary menu is nested in a larger menu")
    return report


HOLDS, FAILS, UNKNOWN = "holds", "fails", "unknown"


def iia_pair_status(d: Dataset, tol: ToleranceConfig = ToleranceConfig()) -> dict[tuple[str, str], str]:
    """Classify every pair of outcomes as ``holds``/``fails``/``unknown`` for IIA.

    A pair fails when two menus containing both members disagree on their
    log probability ratio by more than ``eps_ratio``; it holds when a binary
    menu exists and nothing disagrees with it.
    """
    ratios: dict[tuple[str, str], list[float]] = defaultdict(list)
    binary = set()
    for menu in d.menus:
        members = menu_key(menu)
        if len(members) == 2:
            binary.add(members)
        for x, y in itertools.combinations(members, 2):
            lr = _log_ratio(d.prob(menu, x), d.prob(menu, y))
            if lr is not None:
                ratios[(x, y)].append(lr)
    status = {}
    for pair in itertools.combinations(d.outcomes, 2):
        vals = ratios.get(pair, [])
        if any(_deviation(a, b) > tol.eps_ratio for a, b in itertools.combinations(vals, 2)):
            status[pair] = FAILS
        elif pair in binary and vals:
            status[pair] = HOLDS
        else:
            status[pair] = UNKNOWN
    return status


@dataclass
class SimilarityPartition:
    classes: list[tuple[str, ...]]
    report: AxiomReport
    insufficient: list[str]
    status: dict[tuple[str, str], str]

    def category_of(self) -> dict[str, int]:
        return {x: i for i, cls in enumerate(self.classes) for x in cls}


def _addition_effects(d: Dataset, eps: float):
    """Effect of adding one alternative ``w`` on the ratio of each pair.

    Yields ``(w, y, z, changed)`` for every menu pair ``M`` and ``M + {w}``
    in the data and every pair ``y, z`` of ``M`` with positive probabilities.
    """
    present = set(d.menus)
    for menu in d.menus:
        members = menu_key(menu)
        for w in members:
            base = menu - {w}
            if len(base) < 2 or base not in present:
                continue
            for y, z in itertools.combinations(menu_key(base), 2):
                a = _log_ratio(d.prob(base, y), d.prob(base, z))
                b = _log_ratio(d.prob(menu, y), d.prob(menu, z))
                if a is None or b is None:
                    continue
                yield w, y, z, _deviation(a, b) > eps


class _Classes:
    """Union-find over outcomes with a dissimilarity relation between classes."""

    def __init__(self, outcomes):
        self.parent = {x: x for x in outcomes}
        self.apart: set[frozenset] = set()

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def is_apart(self, x, y) -> bool:
        return frozenset((self.find(x), self.find(y))) in self.apart

    def separate(self, x, y) -> bool:
        key = frozenset((self.find(x), self.find(y)))
        if len(key) < 2 or key in self.apart:
            return False
        self.apart.add(key)
        return True

    def union(self, x, y) -> bool:
        a, b = self.find(x), self.find(y)
        if a == b:
            return False
        keep, gone = min(a, b), max(a, b)
        self.parent[gone] = keep
        self.apart = {
            frozenset(keep if c == gone else c for c in pair) for pair in self.apart
        }
        self.apart = {pair for pair in self.apart if len(pair) == 2}
        return True


def similarity_partition(d: Dataset, tol: ToleranceConfig = ToleranceConfig()) -> SimilarityPartition:
    """Group outcomes into classes of categorically similar alternatives.

    Evidence is combined under the assumption that similarity is an
    equivalence relation:

    * IIA failing at ``x, y`` makes them dissimilar;
    * adding ``w`` changes the ratio of a dissimilar pair ``y, z`` only if
      ``w`` is similar to ``y`` or to ``z``, so excluding one forces the other;
    * adding ``w`` leaves that ratio unchanged only if ``w`` is similar to
      neither.

    After these rules reach a fixed point, classes joined by a pair at which
    IIA holds and not known to be dissimilar are merged, smallest first.
    IIA failing inside a final class is reported as a violation.
    Non-transitive triples of the raw pairwise relation are listed in the
    notes.
    """
    outcomes = d.outcomes
    status = iia_pair_status(d, tol)

    def st(a, b):
        return status[(a, b) if a < b else (b, a)]

    cls = _Classes(outcomes)
    for (x, y), s in status.items():
        if s == FAILS:
            cls.separate(x, y)
    effects = sorted(set(_addition_effects(d, tol.eps_ratio)))
    moved_facts = [(w, y, z) for w, y, z, moved in effects if moved]
    still_facts = [(w, y, z) for w, y, z, moved in effects if not moved]
    links: list[tuple[str, str]] = []

    def join_pass() -> bool:
        grew = False
        for w, y, z in moved_facts:
            if not cls.is_apart(y, z):
                continue
            if cls.is_apart(w, y) and cls.union(w, z):
                links.append((w, z))
                grew = True
            elif cls.is_apart(w, z) and cls.union(w, y):
                links.append((w, y))
                grew = True
        return grew

    # a detected shift is stronger evidence than an undetected one, so
    # joins always run to a fixed point before separations are applied
    while True:
        while join_pass():
            pass
        split = False
        for w, y, z in still_facts:
            if cls.is_apart(y, z):
                split |= cls.separate(w, y)
                split |= cls.separate(w, z)
        if not split:
            break

    for x, y in itertools.combinations(outcomes, 2):
        if status[(x, y)] == HOLDS and cls.find(x) != cls.find(y) and not cls.is_apart(x, y):
            cls.union(x, y)
            links.append((x, y))

    groups: dict[str, list[str]] = defaultdict(list)
    for x in outcomes:
        groups[cls.find(x)].append(x)
    classes = sorted(tuple(sorted(g)) for g in groups.values())

    adj: dict[str, list[str]] = {x: [] for x in outcomes}
    for x, y in links:
        adj[x].append(y)
        adj[y].append(x)
    report = AxiomReport("categorical similarity")
    for members in classes:
        for x, y in itertools.combinations(members, 2):
            report.instances += 1
            if status[(x, y)] == FAILS:
                path = _path(adj, x, y)
                report.violations.append({
                    "pair": [x, y],
                    "path": path,
                    "detail": f"IIA fails at ({x}, {y}) although linked via {' ~ '.join(path)}",
                })
    for x, y, z in itertools.combinations(outcomes, 3):
        trio = [(x, y), (x, z), (y, z)]
        kinds = sorted(st(a, b) for a, b in trio)
        if kinds == [FAILS, HOLDS, HOLDS]:
            report.notes.append(f"IIA pairwise relation not transitive on {{{x}, {y}, {z}}}")
    insufficient = [
        x for x in outcomes
        if all(st(x, z) == UNKNOWN for z in outcomes if z != x)
    ]
    if insufficient:
        report.notes.append("insufficient evidence for: " + ", ".join(insufficient))
    return SimilarityPartition(classes, report, insufficient, status)


def _path(adj, start, goal) -> list[str]:
    prev = {start: None}
    queue = deque([start])
    while queue:
        a = queue.popleft()
        if a == goal:
            break
        for b in adj[a]:
            if b not in prev:
                prev[b] = a
                queue.append(b)
    if goal not in prev:
        return [start, goal]
    path, node = [], goal
    while node is not None:
        path.append(node)
        node = prev.get(node)
    return path[::-1]


def _category_map(partition: Sequence[Iterable[str]] | SimilarityPartition, outcomes):
    if isinstance(partition, SimilarityPartition):
        partition = partition.classes
    cat = {}
    for i, cls in enumerate(partition):
        for x in cls:
            if x in cat:
                raise ValueError(f"{x} appears in two categories")
            cat[x] = i
    n = len(partition)
    for x in outcomes:
        if x not in cat:
            cat[x] = n
            n += 1
    return cat


def _dt_triples(d: Dataset):
    """Yield ``(C, D, E)`` with ``C, D, C|E, D|E`` all timed and disjoint from ``E``."""
    by_rest: dict[frozenset, list[tuple[frozenset, frozenset]]] = defaultdict(list)
    for whole in d.timed_menus():
        members = menu_key(whole)
        for k in range(1, len(members)):
            for e in itertools.combinations(members, k):
                rest = whole - frozenset(e)
                if rest in d.tau:
                    by_rest[frozenset(e)].append((rest, whole))
    for e in sorted(by_rest, key=lambda s: (len(s), menu_key(s))):
        group = by_rest[e]
        for (c, ce), (dd, de) in itertools.combinations(group, 2):
            yield c, dd, e, ce, de


def _dt_check(d: Dataset, tol: ToleranceConfig, name: str, keep: Callable | None) -> AxiomReport:
    report = AxiomReport(name)
    excluded = 0
    for c, dd, e, ce, de in _dt_triples(d):
        if abs(d.prob_of(ce, c) - d.prob_of(de, dd)) > tol.eps_prob:
            continue
        if keep is not None and not keep(c, dd, e):
            excluded += 1
            continue
        report.instances += 1
        lower = _sign(d.tau[c] - d.tau[dd], tol.eps_time)
        upper = _sign(d.tau[ce] - d.tau[de], tol.eps_time)
        if lower != upper:
            report.violations.append({
                "C": list(menu_key(c)),
                "D": list(menu_key(dd)),
                "E": list(menu_key(e)),
                "tau": [d.tau[c], d.tau[dd], d.tau[ce], d.tau[de]],
                "detail": (f"C={_fmt(c)}, D={_fmt(dd)}, E={_fmt(e)}: "
                           f"tau(C)={d.tau[c]:.6g} vs tau(D)={d.tau[dd]:.6g} but "
                           f"tau(C|E)={d.tau[ce]:.6g} vs tau(D|E)={d.tau[de]:.6g}"),
            })
    if report.instances == 0:
        report.notes.append("0 instances: no (C, D, E) with matched probabilities")
    if excluded:
        report.notes.append(f"{excluded} matched triples excluded by the similarity restriction")
    return report


def check_dt_independence(d: Dataset, tol: ToleranceConfig = ToleranceConfig()) -> AxiomReport:
    return _dt_check(d, tol, "independence of decision times", None)


def check_dt_independence_equally_dissimilar(
    d: Dataset, partition, tol: ToleranceConfig = ToleranceConfig()
) -> AxiomReport:
    cat = _category_map(partition, d.outcomes)

    def keep(c, dd, e):
        return all(cat[z] != cat[x] for z in e for x in c | dd)

    return _dt_check(d, tol, "decision time independence (equally dissimilar)", keep)


def check_iia_equally_dissimilar(
    d: Dataset, partition, tol: ToleranceConfig = ToleranceConfig()
) -> AxiomReport:
    cat = _category_map(partition, d.outcomes)
    report = AxiomReport("IIA (equally dissimilar)")
    for menu in d.menus:
        members = menu_key(menu)
        if len(members) < 2:
            continue
        for z in d.outcomes:
            if z in menu or (menu | {z}) not in d:
                continue
            bigger = menu | {z}
            for x, y in itertools.combinations(members, 2):
                if (cat[x] == cat[z]) != (cat[y] == cat[z]):
                    continue
                a = _log_ratio(d.prob(menu, x), d.prob(menu, y))
                b = _log_ratio(d.prob(bigger, x), d.prob(bigger, y))
                if a is None or b is None:
                    continue
                report.instances += 1
                dev = _deviation(a, b)
                if dev > tol.eps_ratio:
                    report.violations.append({
                        "pair": [x, y],
                        "added": z,
                        "menu": list(members),
                        "deviation": dev,
                        "detail": (f"({x}, {y}) in {_fmt(menu)} + {z}: ln-ratio differs by "
                                   f"{dev:.6g} > {tol.eps_ratio:g}"),
                    })
    if report.instances == 0:
        report.notes.append("0 instances: no menu extended by an equally similar alternative")
    return report


def run_all(d: Dataset, tol: ToleranceConfig = ToleranceConfig()) -> list[AxiomReport]:
    reports = [check_positivity(d, tol), check_iia(d, tol), check_dt_independence(d, tol)]
    reports[-1].notes.append(NOT_CHECKABLE)
    return reports
