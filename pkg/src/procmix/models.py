"""Luce, Luce-Hick and nested Luce-Hick models of choice and decision time.

A Luce-Hick model predicts the choice distribution of a menu with the Luce
rule and its decision time as ``time_of_entropy(H_r(p))``.  The monotone map
is stored in the entropy -> seconds direction so predictions need a single
interpolation.

The nested model first picks a category with probability proportional to
``v(D & S)`` and then an alternative inside it by a Luce rule; its decision
time composes the within-category entropies (through ``t_S``) with the
entropy of the category distribution.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .dataset import DataError, Dataset, menu_key
from .entropy import entropy_H

__all__ = [
    "MonotoneMap",
    "LuceModel",
    "LuceHickModel",
    "NestedLuceHickModel",
    "IncompleteDataError",
    "fit_luce",
    "predict_p",
    "predict_time",
    "predict_time_nested",
    "nested_entropy_value",
    "model_to_dict",
    "model_from_dict",
    "save_model",
    "load_model",
]


class IncompleteDataError(DataError):
    pass


@dataclass(frozen=True)
class MonotoneMap:
    """Strictly increasing piecewise-linear map with linear extrapolation."""

    knots: tuple[tuple[float, float], ...]

    def __post_init__(self):
        knots = tuple((float(a), float(b)) for a, b in self.knots)
        if len(knots) < 2:
            raise ValueError("a monotone map needs at least two knots")
        xs = np.array([k[0] for k in knots])
        ys = np.array([k[1] for k in knots])
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise ValueError("knots must be finite")
        if np.any(np.diff(xs) <= 0) or np.any(np.diff(ys) <= 0):
            raise ValueError("knot inputs and outputs must be strictly increasing")
        object.__setattr__(self, "knots", knots)

    @classmethod
    def linear(cls, intercept: float, slope: float) -> "MonotoneMap":
        return cls(((0.0, intercept), (1.0, intercept + slope)))

    @property
    def xs(self) -> np.ndarray:
        return np.array([k[0] for k in self.knots])

    @property
    def ys(self) -> np.ndarray:
        return np.array([k[1] for k in self.knots])

    def __call__(self, x):
        xs, ys = self.xs, self.ys
        x_arr = np.asarray(x, dtype=float)
        out = np.interp(x_arr, xs, ys)
        lo_slope = (ys[1] - ys[0]) / (xs[1] - xs[0])
        hi_slope = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
        out = np.where(x_arr < xs[0], ys[0] + lo_slope * (x_arr - xs[0]), out)
        out = np.where(x_arr > xs[-1], ys[-1] + hi_slope * (x_arr - xs[-1]), out)
        return float(out) if out.ndim == 0 else out

    def inverse(self) -> "MonotoneMap":
        return MonotoneMap(tuple((b, a) for a, b in self.knots))

    def to_list(self) -> list[list[float]]:
        return [[a, b] for a, b in self.knots]


@dataclass(frozen=True)
class LuceModel:
    v: Mapping[str, float]
    # max |ln-ratio| disagreement between the fitted v and the observed menus
    residual: float | None = None

    def __post_init__(self):
        v = {str(k): float(x) for k, x in self.v.items()}
        if not all(math.isfinite(x) for x in v.values()):
            raise ValueError("Luce values must be finite")
        object.__setattr__(self, "v", v)


@dataclass(frozen=True)
class LuceHickModel:
    luce: LuceModel
    r: float
    time_of_entropy: MonotoneMap

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("r must be positive")

    @property
    def reaction_time(self) -> float:
        return self.time_of_entropy(0.0)


def _cat_key(members: Iterable[str]) -> tuple[str, ...]:
    return tuple(sorted(members))


@dataclass(frozen=True)
class NestedLuceHickModel:
    """Nested Luce-Hick model.

    ``category_value`` holds ``v(D & S)`` for explicit subsets of a category;
    a subset that is not listed is valued by the sum of ``within_v`` over
    its members.  ``r_S`` and ``t_S`` are keyed by the sorted member tuple
    of each category.
    """

    partition: tuple[tuple[str, ...], ...]
    within_v: Mapping[str, float]
    r: float
    r_S: Mapping[tuple[str, ...], float]
    t_S: Mapping[tuple[str, ...], MonotoneMap]
    time_of_entropy: MonotoneMap
    category_value: Mapping[frozenset, float] = field(default_factory=dict)

    def __post_init__(self):
        partition = tuple(sorted(_cat_key(c) for c in self.partition))
        seen = set()
        for cat in partition:
            if not cat:
                raise ValueError("empty category")
            if seen & set(cat):
                raise ValueError("categories overlap")
            seen |= set(cat)
        object.__setattr__(self, "partition", partition)
        within = {k: float(x) for k, x in self.within_v.items()}
        if any(not x > 0 for x in within.values()):
            raise ValueError("within-category values must be positive")
        object.__setattr__(self, "within_v", within)
        if not self.r > 0:
            raise ValueError("r must be positive")
        r_S = {_cat_key(k): float(x) for k, x in self.r_S.items()}
        t_S = {_cat_key(k): m for k, m in self.t_S.items()}
        for cat in partition:
            if cat not in r_S or not r_S[cat] > 0:
                raise ValueError(f"missing or non-positive r_S for {cat}")
            if cat not in t_S:
                raise ValueError(f"missing t_S for {cat}")
            if abs(t_S[cat](0.0)) > 1e-9:
                raise ValueError(f"t_S({cat}) must map 0 to 0")
        object.__setattr__(self, "r_S", r_S)
        object.__setattr__(self, "t_S", t_S)
        cv = {frozenset(k): float(x) for k, x in self.category_value.items()}
        if any(not x > 0 for x in cv.values()):
            raise ValueError("category values must be positive")
        object.__setattr__(self, "category_value", cv)

    def category_of(self, x: str) -> tuple[str, ...]:
        for cat in self.partition:
            if x in cat:
                return cat
        raise KeyError(f"{x} is not covered by the model")

    def value_of(self, subset: frozenset) -> float:
        if subset in self.category_value:
            return self.category_value[subset]
        return math.fsum(self.within_v[x] for x in subset)

    def split(self, menu: Iterable[str]) -> dict[tuple[str, ...], frozenset]:
        groups: dict[tuple[str, ...], set] = {}
        for x in menu:
            groups.setdefault(self.category_of(x), set()).add(x)
        return {cat: frozenset(groups[cat]) for cat in sorted(groups)}


Model = Union[LuceModel, LuceHickModel, NestedLuceHickModel]


def _luce_p(v: Mapping[str, float], members: Sequence[str]) -> dict[str, float]:
    vals = np.array([v[x] for x in members])
    w = np.exp(vals - vals.max())
    w /= w.sum()
    return dict(zip(members, w.tolist()))


def _nested_parts(m: NestedLuceHickModel, members: Sequence[str]):
    """Category probabilities and conditional within-category distributions."""
    groups = m.split(members)
    weights = {cat: m.value_of(sub) for cat, sub in groups.items()}
    total = math.fsum(weights.values())
    cat_p = {cat: w / total for cat, w in weights.items()}
    within = {}
    for cat, sub in groups.items():
        keys = menu_key(sub)
        vals = np.array([m.within_v[x] for x in keys])
        within[cat] = dict(zip(keys, (vals / vals.sum()).tolist()))
    return cat_p, within


def predict_p(m: Model, menu: Iterable[str]) -> dict[str, float]:
    members = menu_key(menu)
    if not members:
        raise ValueError("empty menu")
    if isinstance(m, LuceHickModel):
        m = m.luce
    if isinstance(m, LuceModel):
        missing = [x for x in members if x not in m.v]
        if missing:
            raise KeyError(f"outcomes not covered by the model: {missing}")
        return _luce_p(m.v, members)
    missing = [x for x in members if x not in m.within_v]
    if missing:
        raise KeyError(f"outcomes not covered by the model: {missing}")
    cat_p, within = _nested_parts(m, members)
    out = {}
    for cat, cond in within.items():
        for x, px in cond.items():
            out[x] = cat_p[cat] * px
    return {x: out[x] for x in members}


def predict_time(m: LuceHickModel, menu: Iterable[str]) -> float:
    p = predict_p(m, menu)
    return float(m.time_of_entropy(entropy_H(m.r, list(p.values()), atol=1e-9)))


def nested_entropy_value(m: NestedLuceHickModel, menu: Iterable[str]) -> float:
    """The composed entropy value whose image under ``time_of_entropy`` is the time."""
    cat_p, within = _nested_parts(m, menu_key(menu))
    total = 0.0
    for cat, pc in cat_p.items():
        if pc <= 0:
            continue
        h = entropy_H(m.r_S[cat], list(within[cat].values()), atol=1e-9)
        total += pc ** m.r * m.t_S[cat](h)
    probs = [pc for pc in cat_p.values() if pc > 0]
    return total + entropy_H(m.r, probs, atol=1e-9)


def predict_time_nested(m: NestedLuceHickModel, menu: Iterable[str]) -> float:
    return float(m.time_of_entropy(nested_entropy_value(m, menu)))


def fit_luce(d: Dataset, reference: str) -> LuceModel:
    """Luce values from binary log-odds, anchored at ``v(reference) = 0``.

    Every binary menu contributes one equation ``v(x) - v(y) = ln p(x)/p(y)``;
    values are the least-squares solution over the component of the
    binary-menu graph that contains ``reference``, so outcomes without a
    direct binary menu against the reference are reached through chains.
    """
    outcomes = d.outcomes
    if reference not in outcomes:
        raise IncompleteDataError(f"reference {reference} does not occur in the data")
    edges = []
    for menu in d.menus:
        if len(menu) != 2:
            continue
        x, y = menu_key(menu)
        px, py = d.prob(menu, x), d.prob(menu, y)
        if px <= 0 or py <= 0:
            raise DataError(f"positivity fails in binary menu {{{x}, {y}}}")
        edges.append((x, y, math.log(px) - math.log(py)))

    adj: dict[str, set[str]] = {x: set() for x in outcomes}
    for x, y, _ in edges:
        adj[x].add(y)
        adj[y].add(x)
    reach = {reference}
    stack = [reference]
    while stack:
        a = stack.pop()
        for b in adj[a] - reach:
            reach.add(b)
            stack.append(b)
    missing = [x for x in outcomes if x not in reach]
    if missing:
        pairs = ", ".join(f"{{{x}, {reference}}}" for x in missing)
        raise IncompleteDataError(f"no chain of binary menus links the reference to: {pairs}")

    free = [x for x in outcomes if x != reference]
    index = {x: i for i, x in enumerate(free)}
    v = {reference: 0.0}
    if free:
        rows = [e for e in edges if e[0] in reach]
        A = np.zeros((len(rows), len(free)))
        b = np.zeros(len(rows))
        for k, (x, y, lo) in enumerate(rows):
            if x in index:
                A[k, index[x]] = 1.0
            if y in index:
                A[k, index[y]] = -1.0
            b[k] = lo
        sol = np.linalg.lstsq(A, b, rcond=None)[0]
        v.update({x: float(sol[index[x]]) for x in free})

    residual = 0.0
    for menu in d.menus:
        members = menu_key(menu)
        for i, x in enumerate(members):
            for y in members[i + 1:]:
                px, py = d.prob(menu, x), d.prob(menu, y)
                if px > 0 and py > 0:
                    dev = abs((v[x] - v[y]) - (math.log(px) - math.log(py)))
                    residual = max(residual, dev)
    return LuceModel(dict(sorted(v.items())), residual=residual)


# --------------------------------------------------------------------------
# JSON model files


def _key(members: Iterable[str]) -> str:
    members = menu_key(members)
    for x in members:
        if "," in x:
            raise ValueError(f"outcome id {x!r} contains ','")
    return ",".join(members)


def _unkey(key: str) -> tuple[str, ...]:
    return tuple(key.split(","))


def model_to_dict(m: Model) -> dict:
    if isinstance(m, LuceModel):
        return {"type": "luce", "v": dict(m.v)}
    if isinstance(m, LuceHickModel):
        return {
            "type": "luce_hick",
            "v": dict(m.luce.v),
            "r": m.r,
            "knots": m.time_of_entropy.to_list(),
        }
    return {
        "type": "nested",
        "v": dict(m.within_v),
        "r": m.r,
        "knots": m.time_of_entropy.to_list(),
        "partition": [list(c) for c in m.partition],
        "r_S": {_key(c): m.r_S[c] for c in m.partition},
        "t_S_knots": {_key(c): m.t_S[c].to_list() for c in m.partition},
        "category_value": {_key(k): x for k, x in sorted(
            m.category_value.items(), key=lambda kv: (len(kv[0]), menu_key(kv[0])))},
    }


def model_from_dict(data: Mapping) -> Model:
    try:
        kind = data["type"]
        if kind == "luce":
            return LuceModel(data["v"])
        if kind == "luce_hick":
            return LuceHickModel(
                LuceModel(data["v"]), float(data["r"]), MonotoneMap(tuple(map(tuple, data["knots"])))
            )
        if kind == "nested":
            return NestedLuceHickModel(
                partition=tuple(tuple(c) for c in data["partition"]),
                within_v=data["v"],
                r=float(data["r"]),
                r_S={_unkey(k): x for k, x in data["r_S"].items()},
                t_S={_unkey(k): MonotoneMap(tuple(map(tuple, kn)))
                     for k, kn in data["t_S_knots"].items()},
                time_of_entropy=MonotoneMap(tuple(map(tuple, data["knots"]))),
                category_value={frozenset(_unkey(k)): x
                                for k, x in data.get("category_value", {}).items()},
            )
    except KeyError as exc:
        raise DataError(f"model file lacks field {exc}") from None
    raise DataError(f"unknown model type {data.get('type')!r}")


def save_model(m: Model, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(m), indent=2) + "\n", encoding="utf-8")


def load_model(path) -> Model:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"model file is not valid JSON: {exc}") from None
    return model_from_dict(data)
