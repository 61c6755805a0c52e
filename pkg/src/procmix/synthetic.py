"""Synthetic models and menu designs for simulation studies."""

from __future__ import annotations

from itertools import combinations
from math import comb

import numpy as np

from .models import LuceHickModel, LuceModel, MonotoneMap, NestedLuceHickModel

__all__ = [
    "random_menus",
    "random_luce_hick",
    "smooth_map",
    "nested_model",
    "nested_design",
]


def random_menus(outcomes, n_menus: int, sizes=(1, 6), seed: int | None = 0) -> list[frozenset]:
    """``n_menus`` distinct random menus with sizes drawn uniformly from ``sizes``."""
    rng = np.random.default_rng(seed)
    outcomes = sorted(outcomes)
    lo, hi = sizes
    hi = min(hi, len(outcomes))
    if not 1 <= lo <= hi:
        raise ValueError(f"bad menu sizes {sizes!r} for {len(outcomes)} outcomes")
    available = sum(comb(len(outcomes), k) for k in range(lo, hi + 1))
    if n_menus > available:
        raise ValueError(f"only {available} distinct menus exist, asked for {n_menus}")
    menus: list[frozenset] = []
    seen = set()
    attempts = 0
    while len(menus) < n_menus:
        attempts += 1
        if attempts > 1000 * n_menus:
            raise ValueError("cannot draw that many distinct menus")
        k = int(rng.integers(lo, hi + 1))
        menu = frozenset(rng.choice(outcomes, k, replace=False).tolist())
        if menu not in seen:
            seen.add(menu)
            menus.append(menu)
    return menus


def smooth_map(f, lo: float = 0.0, hi: float = 6.0, n: int = 400) -> MonotoneMap:
    """Piecewise-linear interpolant of an increasing function on ``[lo, hi]``."""
    xs = np.linspace(lo, hi, n)
    return MonotoneMap(tuple(zip(xs.tolist(), [float(f(x)) for x in xs])))


def random_luce_hick(
    r: float, n_outcomes: int = 12, seed: int | None = 0, time_of_entropy: MonotoneMap | None = None
) -> LuceHickModel:
    rng = np.random.default_rng(seed)
    v = {f"x{i:02d}": float(rng.normal()) for i in range(n_outcomes)}
    T = time_of_entropy or MonotoneMap.linear(0.3, 1.0)
    return LuceHickModel(LuceModel(v), r, T)


def nested_model(
    r: float = 1.6,
    r_S=(0.7, 1.0, 2.2),
    per_category: int = 10,
    lam: float = 0.5,
    sigma: float = 1.5,
    seed: int | None = 0,
) -> NestedLuceHickModel:
    """Nested model with linear transforms and ``v(T) = (sum of w over T) ** lam``.

    One category per entry of ``r_S``.  With ``lam != 1`` the category
    values are not additive, so choice ratios across categories move when a
    same-category companion is added.
    """
    rng = np.random.default_rng(seed)
    partition = tuple(
        tuple(f"{chr(65 + c)}{i:02d}" for i in range(1, per_category + 1)) for c in range(len(r_S))
    )
    within_v = {x: float(np.exp(rng.normal(0.0, sigma))) for cat in partition for x in cat}
    category_value = {}
    for cat in partition:
        for k in range(1, len(cat) + 1):
            for sub in combinations(cat, k):
                category_value[frozenset(sub)] = sum(within_v[x] for x in sub) ** lam
    slopes = (0.6, 0.8, 1.0)
    t_S = {cat: MonotoneMap.linear(0.0, slopes[i % 3]) for i, cat in enumerate(partition)}
    return NestedLuceHickModel(
        partition=partition,
        within_v=within_v,
        r=r,
        r_S=dict(zip(partition, r_S)),
        t_S=t_S,
        time_of_entropy=MonotoneMap.linear(0.3, 0.5),
        category_value=category_value,
    )


def nested_design(m: NestedLuceHickModel, seed: int | None = 0, n_within: int = 55,
                  n_cross: int = 60) -> list[frozenset]:
    """Menu design from which the partition, ``r`` and every ``r_S`` are identified.

    * every singleton;
    * per category, each member against one outside alternative, and each
      pair of members adjacent in value order together with it, which chains
      the category together and separates it from the others;
    * ``n_within`` random menus of size 2-6 inside each category;
    * ``n_cross`` random menus with one alternative from two or three
      categories.
    """
    rng = np.random.default_rng(seed)
    cats = list(m.partition)
    outcomes = sorted(x for c in cats for x in c)
    menus: list[frozenset] = [frozenset([x]) for x in outcomes]
    for i, cat in enumerate(cats):
        # neighbours in value order shift each other's ratios detectably
        chain = sorted(cat, key=lambda x: (m.within_v[x], x))
        o = cats[(i + 1) % len(cats)][0]
        menus += [frozenset([x, o]) for x in chain]
        menus += [frozenset([a, b, o]) for a, b in zip(chain, chain[1:])]
    seen = set(menus)

    def draw(n, build):
        out = []
        while len(out) < n:
            menu = build()
            if menu not in seen:
                seen.add(menu)
                out.append(menu)
        return out

    for cat in cats:
        def inside(cat=cat):
            k = int(rng.integers(2, min(6, len(cat)) + 1))
            return frozenset(rng.choice(cat, k, replace=False).tolist())
        menus += draw(n_within, inside)

    def across():
        k = int(rng.integers(2, min(3, len(cats)) + 1))
        picked = rng.choice(len(cats), k, replace=False)
        return frozenset(str(rng.choice(cats[c])) for c in picked)

    menus += draw(n_cross, across)
    return menus
