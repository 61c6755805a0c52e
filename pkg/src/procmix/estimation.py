"""Rank-based estimation of the entropy order and isotonic time transforms.

Decision times are an unknown increasing function of ``H_r(p)``, so only
the ordering of the entropies is informative about ``r``.  ``estimate_r``
minimizes the number of menu pairs whose time ordering contradicts their
entropy ordering; ``fit_monotone_T`` then recovers the transform itself by
pool-adjacent-violators regression.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .audits import similarity_partition
from .dataset import DataError, Dataset, ToleranceConfig, menu_key
from .entropy import SHANNON_EPS, entropy_H
from .models import (
    LuceHickModel,
    MonotoneMap,
    NestedLuceHickModel,
    predict_p,
    predict_time,
    predict_time_nested,
)

__all__ = [
    "FitConfig",
    "FitResult",
    "IsotonicFit",
    "NestedFit",
    "IncompleteDesignError",
    "pava",
    "fit_isotonic",
    "profile_matrix",
    "entropy_matrix",
    "violation_count",
    "discordance",
    "rank_fit",
    "estimate_r",
    "fit_monotone_T",
    "estimate_nested",
    "fit_choice_values",
    "simulate",
]

log = logging.getLogger(__name__)

STRICT_SLOPE = 1e-9
GOLDEN_TOL = 1e-7
EDGE_TOL = 1e-7
DENSE_POINTS = 201
POLISH_TOL = 1e-9
POLISH_POINTS = 41
POLISH_SWEEPS = 2


class IncompleteDesignError(DataError):
    pass


@dataclass(frozen=True)
class FitConfig:
    r_min: float = 0.05
    r_max: float = 5.0
    grid_steps: int = 200
    refine_iters: int = 50
    tie_eps: float = 1e-9
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.r_min < self.r_max:
            raise ValueError("need 0 < r_min < r_max")
        if self.grid_steps < 2:
            raise ValueError("grid_steps must be at least 2")
        if self.tie_eps < 0:
            raise ValueError("tie_eps must be non-negative")


@dataclass
class FitResult:
    r_hat: float
    violation_count: int
    time_of_entropy: MonotoneMap | None = None
    residual_max: float = math.nan
    # closed intervals of r on which the violation count is minimal
    minimizer_set: list[tuple[float, float]] = field(default_factory=list)
    grid: np.ndarray | None = field(default=None, repr=False)
    grid_counts: np.ndarray | None = field(default=None, repr=False)

    def contains(self, r: float) -> bool:
        return any(lo <= r <= hi for lo, hi in self.minimizer_set)

    def to_dict(self) -> dict:
        return {
            "r_hat": self.r_hat,
            "violations": self.violation_count,
            "knots": None if self.time_of_entropy is None else self.time_of_entropy.to_list(),
            "residual_max": self.residual_max,
            "minimizer_set": [list(iv) for iv in self.minimizer_set],
        }


# --------------------------------------------------------------------------
# isotonic regression


def pava(y: Sequence[float], w: Sequence[float] | None = None) -> np.ndarray:
    """Weighted least-squares non-decreasing fit (pool adjacent violators)."""
    y = np.asarray(y, dtype=float)
    w = np.ones_like(y) if w is None else np.asarray(w, dtype=float)
    means: list[float] = []
    weights: list[float] = []
    sizes: list[int] = []
    for yi, wi in zip(y, w):
        means.append(yi)
        weights.append(wi)
        sizes.append(1)
        while len(means) > 1 and means[-2] > means[-1]:
            m2, w2, s2 = means.pop(), weights.pop(), sizes.pop()
            m1, w1, s1 = means.pop(), weights.pop(), sizes.pop()
            wt = w1 + w2
            means.append((m1 * w1 + m2 * w2) / wt)
            weights.append(wt)
            sizes.append(s1 + s2)
    return np.repeat(means, sizes)


@dataclass
class IsotonicFit:
    map: MonotoneMap
    residual_max: float
    fitted: np.ndarray


def fit_isotonic(
    x: Sequence[float],
    y: Sequence[float],
    w: Sequence[float] | None = None,
    *,
    anchor_zero: bool = False,
) -> IsotonicFit:
    """Strictly increasing piecewise-linear fit of ``y`` against ``x``.

    Points whose ``x`` agree within 1e-12 share a knot.  Flat stretches left
    by pooling are tilted by ``STRICT_SLOPE`` per knot.  With
    ``anchor_zero`` the map is forced through ``(0, 0)``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.ones_like(x) if w is None else np.asarray(w, dtype=float)
    if x.size == 0:
        raise DataError("no points to fit")
    order = np.argsort(x, kind="stable")
    xs, ys, ws = x[order], y[order], w[order]

    gx, gy, gw = [], [], []
    for xi, yi, wi in zip(xs, ys, ws):
        if gx and xi - gx[-1] <= 1e-12:
            tot = gw[-1] + wi
            gy[-1] = (gy[-1] * gw[-1] + yi * wi) / tot
            gw[-1] = tot
        else:
            gx.append(xi)
            gy.append(yi)
            gw.append(wi)
    gx_a = np.array(gx)
    if anchor_zero:
        # points at h = 0 carry no information once the map is pinned there;
        # clipping the unconstrained fit at 0 gives the bounded isotonic fit
        keep = gx_a > 1e-12
        gx_a = np.concatenate([[0.0], gx_a[keep]])
        tail = pava(np.array(gy)[keep], np.array(gw)[keep]) if keep.any() else np.array([])
        gy_fit = np.concatenate([[0.0], np.maximum(tail, 0.0)])
    else:
        gy_fit = pava(gy, gw)

    knots_y = gy_fit.copy()
    for i in range(1, len(knots_y)):
        if knots_y[i] - knots_y[i - 1] < STRICT_SLOPE:
            knots_y[i] = knots_y[i - 1] + STRICT_SLOPE
    knots_x = gx_a
    if len(knots_x) == 1:
        knots_x = np.array([knots_x[0], knots_x[0] + 1.0])
        knots_y = np.array([knots_y[0], knots_y[0] + STRICT_SLOPE])
    mono = MonotoneMap(tuple(zip(knots_x.tolist(), knots_y.tolist())))
    fitted = np.asarray(mono(x), dtype=float).reshape(x.shape)
    residual = float(np.max(np.abs(fitted - y))) if x.size else 0.0
    return IsotonicFit(mono, residual, fitted)


# --------------------------------------------------------------------------
# rank objective


def profile_matrix(dists: Iterable[Sequence[float]]) -> np.ndarray:
    """Rows of descending probabilities, zero padded."""
    rows = [sorted((float(p) for p in d), reverse=True) for d in dists]
    width = max((len(r) for r in rows), default=0)
    out = np.zeros((len(rows), max(width, 1)))
    for i, row in enumerate(rows):
        out[i, : len(row)] = row
    return out


def entropy_matrix(P: np.ndarray, r: float) -> np.ndarray:
    """``H_r`` of every row of ``P``; agrees with :func:`entropy_H`."""
    pos = P > 0
    if abs(r - 1.0) < SHANNON_EPS:
        safe = np.where(pos, P, 1.0)
        return np.maximum(-(np.where(pos, P * np.log(safe), 0.0)).sum(axis=1), 0.0)
    powered = np.where(pos, np.where(pos, P, 1.0) ** r, 0.0)
    return np.maximum((1.0 - powered.sum(axis=1)) / (r - 1.0), 0.0)


def _pair_terms(H: np.ndarray, t: np.ndarray, tie_eps: float):
    iu = np.triu_indices(len(t), 1)
    dt = (t[:, None] - t[None, :])[iu]
    dh = (H[:, None] - H[None, :])[iu]
    informative = np.abs(dt) > tie_eps
    dh = np.where(np.abs(dh) > 1e-12, dh, 0.0)
    return np.sign(dt[informative]), dh[informative]


def violation_count(H: np.ndarray, t: np.ndarray, tie_eps: float = 1e-9) -> int:
    """Menu pairs whose time ordering and entropy ordering disagree strictly."""
    s, dh = _pair_terms(H, t, tie_eps)
    return int(np.sum(s * dh < 0))


def discordance(H: np.ndarray, t: np.ndarray, tie_eps: float = 1e-9) -> float:
    """Continuous surrogate of :func:`violation_count`.

    Mean entropy gap over discordant pairs, in units of the mean absolute
    entropy gap, so it is zero exactly where the count is zero and is
    comparable across orders ``r``.
    """
    s, dh = _pair_terms(H, t, tie_eps)
    if dh.size == 0:
        return 0.0
    scale = np.mean(np.abs(dh))
    if scale == 0:
        return 0.0
    return float(np.mean(np.maximum(0.0, -s * dh)) / scale)


def _golden(f, lo: float, hi: float, tol: float = GOLDEN_TOL) -> float:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _edge(count, inside: float, outside: float, target: int) -> float:
    """Last ``r`` from ``inside`` towards ``outside`` with ``count == target``."""
    while abs(outside - inside) > EDGE_TOL:
        mid = 0.5 * (inside + outside)
        if count(mid) == target:
            inside = mid
        else:
            outside = mid
    return inside


def rank_fit(P: np.ndarray, t: np.ndarray, cfg: FitConfig = FitConfig()) -> FitResult:
    """Estimate ``r`` from choice profiles ``P`` and times ``t``.

    Grid search on the violation count (ties resolved towards the smallest
    ``r``), a dense scan of the chosen grid block polished by golden-section
    search on :func:`discordance`, then bisection of the edges of the
    minimizing interval.  The point estimate is the smallest minimizer.
    """
    t = np.asarray(t, dtype=float)
    distinct = {tuple(np.round(row, 12)) for row in P}
    if len(distinct) < 3:
        raise DataError(f"need at least 3 menus with distinct choice profiles, got {len(distinct)}")

    def count(r):
        return violation_count(entropy_matrix(P, r), t, cfg.tie_eps)

    def surrogate(r):
        return discordance(entropy_matrix(P, r), t, cfg.tie_eps)

    grid = np.linspace(cfg.r_min, cfg.r_max, cfg.grid_steps)
    counts = np.array([count(r) for r in grid])
    best = int(counts.min())
    i = int(np.argmax(counts == best))
    j = i
    while j + 1 < len(grid) and counts[j + 1] == best:
        j += 1
    step = grid[1] - grid[0]

    # dense scan of the chosen block, then a golden-section polish of the
    # surrogate around the best scanned point
    lo = grid[max(i - 1, 0)]
    hi = grid[min(j + 1, len(grid) - 1)]
    fine = np.linspace(lo, hi, DENSE_POINTS)
    scored = sorted((count(r), surrogate(r), r) for r in fine)
    c_hat, _, r_hat = scored[0]
    h = fine[1] - fine[0]
    r_gold = _golden(surrogate, max(r_hat - h, cfg.r_min), min(r_hat + h, cfg.r_max))
    c_gold = count(r_gold)
    if c_gold < c_hat:
        r_hat, c_hat = r_gold, c_gold
    if c_hat > best:
        r_hat, c_hat = float(grid[i]), best
    log.debug("grid min %d at r=%.4f, refined r=%.6f with %d violations", best, grid[i], r_hat, c_hat)

    left = r_hat
    while left - step >= cfg.r_min and count(left - step) == c_hat:
        left -= step
    left = _edge(count, left, max(left - step, cfg.r_min), c_hat) if left > cfg.r_min else left
    right = r_hat
    while right + step <= cfg.r_max and count(right + step) == c_hat:
        right += step
    right = _edge(count, right, min(right + step, cfg.r_max), c_hat) if right < cfg.r_max else right
    r_hat = left

    intervals = [(float(left), float(right))]
    if c_hat == best:
        k = 0
        while k < len(grid):
            if counts[k] == best:
                m = k
                while m + 1 < len(grid) and counts[m + 1] == best:
                    m += 1
                iv = (float(grid[k]), float(grid[m]))
                if not (iv[0] >= left and iv[1] <= right):
                    intervals.append(iv)
                k = m + 1
            else:
                k += 1
    intervals.sort()
    merged: list[tuple[float, float]] = []
    for lo_i, hi_i in intervals:
        if merged and lo_i <= merged[-1][1] + EDGE_TOL:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi_i))
        else:
            merged.append((lo_i, hi_i))
    intervals = merged
    return FitResult(
        r_hat=float(r_hat),
        violation_count=int(c_hat),
        minimizer_set=intervals,
        grid=grid,
        grid_counts=counts,
    )


def _timed_arrays(d: Dataset):
    menus = d.timed_menus()
    P = profile_matrix(d.distribution(m) for m in menus)
    t = np.array([d.tau[m] for m in menus])
    return menus, P, t


def fit_monotone_T(d: Dataset, r: float) -> IsotonicFit:
    """Entropy -> seconds map fitted to the timed menus of ``d`` at order ``r``."""
    if not r > 0:
        raise ValueError("r must be positive")
    _, P, t = _timed_arrays(d)
    if t.size == 0:
        raise DataError("no decision times to fit")
    return fit_isotonic(entropy_matrix(P, r), t)


def estimate_r(d: Dataset, cfg: FitConfig = FitConfig()) -> FitResult:
    _, P, t = _timed_arrays(d)
    result = rank_fit(P, t, cfg)
    iso = fit_monotone_T(d, result.r_hat)
    result.time_of_entropy = iso.map
    result.residual_max = iso.residual_max
    return result


# --------------------------------------------------------------------------
# simulation


MenuList = Iterable[Union[frozenset, tuple[str, frozenset]]]


def simulate(
    m: LuceHickModel | NestedLuceHickModel,
    menus: MenuList,
    noise_sd: float = 0.0,
    seed: int | None = 0,
) -> Dataset:
    """Dataset whose probabilities are the model's and whose times carry noise.

    Times are the model prediction plus Gaussian noise with standard
    deviation ``noise_sd``, truncated at zero.
    """
    if noise_sd < 0:
        raise ValueError("noise_sd must be non-negative")
    rng = np.random.default_rng(seed)
    p, tau, names = {}, {}, {}
    for k, item in enumerate(menus):
        if isinstance(item, tuple):
            name, menu = item
        else:
            name, menu = f"m{k + 1:03d}", item
        menu = frozenset(menu)
        if menu in p:
            continue
        p[menu] = predict_p(m, menu)
        if isinstance(m, NestedLuceHickModel):
            t = predict_time_nested(m, menu)
        else:
            t = predict_time(m, menu)
        if noise_sd > 0:
            t += rng.normal(0.0, noise_sd)
        tau[menu] = max(0.0, t)
        names[menu] = name
    return Dataset(p, tau, names)


# --------------------------------------------------------------------------
# nested model


@dataclass
class NestedFit:
    model: NestedLuceHickModel
    residual_max: float
    diagnostics: dict


def _log_values(equations, nodes) -> dict:
    """Least-squares log values from ``ln v(a) - ln v(b) = c`` equations.

    Each connected component is anchored at its smallest node (log value 0).
    """
    nodes = sorted(set(nodes), key=lambda n: (len(n), menu_key(n)) if isinstance(n, frozenset) else n)
    adj = {n: set() for n in nodes}
    for a, b, _ in equations:
        adj[a].add(b)
        adj[b].add(a)
    out = {}
    seen = set()
    for root in nodes:
        if root in seen:
            continue
        comp, stack = [root], [root]
        seen.add(root)
        while stack:
            a = stack.pop()
            for b in adj[a] - seen:
                seen.add(b)
                comp.append(b)
                stack.append(b)
        free = [n for n in comp if n != root]
        out[root] = 0.0
        if not free:
            continue
        idx = {n: i for i, n in enumerate(free)}
        members = set(comp)
        rows = [e for e in equations if e[0] in members]
        A = np.zeros((len(rows), len(free)))
        b = np.zeros(len(rows))
        for k, (x, y, c) in enumerate(rows):
            if x in idx:
                A[k, idx[x]] += 1.0
            if y in idx:
                A[k, idx[y]] -= 1.0
            b[k] = c
        sol = np.linalg.lstsq(A, b, rcond=None)[0]
        out.update({n: float(sol[idx[n]]) for n in free})
    return out


def fit_choice_values(d: Dataset, partition) -> tuple[dict[str, float], dict[frozenset, float]]:
    """Within-category Luce values and category-subset values of a nested model.

    Both are least-squares solutions of log-ratio equations: pairs in one
    category give ``ln w(x) - ln w(y)``, and categories met in one menu give
    ``ln v(D & S) - ln v(D & S')``.  Each connected set of unknowns is
    anchored at value 1 on its smallest member.
    """
    partition = [tuple(sorted(c)) for c in partition]
    cat_of = {x: tuple(c) for c in partition for x in c}
    within_eq, value_eq = [], []
    subsets = set()
    for menu in d.menus:
        groups: dict[tuple, list[str]] = {}
        for x in menu_key(menu):
            groups.setdefault(cat_of[x], []).append(x)
        for members in groups.values():
            for i, x in enumerate(members):
                for y in members[i + 1:]:
                    px, py = d.prob(menu, x), d.prob(menu, y)
                    if px > 0 and py > 0:
                        within_eq.append((x, y, math.log(px) - math.log(py)))
        parts = [(frozenset(mem), d.prob_of(menu, mem)) for mem in groups.values()]
        subsets.update(s for s, _ in parts)
        for (a, pa), (b, pb) in zip(parts, parts[1:]):
            if pa > 0 and pb > 0:
                value_eq.append((a, b, math.log(pa) - math.log(pb)))
    within = _log_values(within_eq, d.outcomes)
    values = _log_values(value_eq, subsets)
    return ({x: math.exp(v) for x, v in within.items()},
            {s: math.exp(v) for s, v in values.items()})


def _nested_terms(d: Dataset, menus, partition, r_S, r):
    """Per menu: category probabilities, within entropies and ``H_r`` of categories."""
    cat_of = {x: tuple(c) for c in partition for x in c}
    terms = []
    for menu in menus:
        groups: dict[tuple, list[str]] = {}
        for x in menu_key(menu):
            groups.setdefault(cat_of[x], []).append(x)
        cats = {}
        for cat, members in groups.items():
            pc = min(d.prob_of(menu, members), 1.0)
            if pc <= 0:
                continue
            cond = [d.prob(menu, x) / pc for x in members]
            cats[cat] = (pc, entropy_H(r_S[cat], cond, atol=1e-9))
        h_top = entropy_H(r, [pc for pc, _ in cats.values()], atol=1e-9)
        terms.append((cats, h_top))
    return terms


def _composed(terms, t_S, r) -> np.ndarray:
    return np.array([
        sum(pc ** r * t_S[cat](h) for cat, (pc, h) in cats.items()) + h_top
        for cats, h_top in terms
    ])


def _bracket(fit: FitResult, r: float) -> tuple[float, float]:
    for lo, hi in fit.minimizer_set:
        if lo - EDGE_TOL <= r <= hi + EDGE_TOL:
            return lo, hi
    return r, r


def _plateau_scan(run, lo: float, hi: float):
    """Midpoint of the best run of scan points, for objectives made of plateaus."""
    xs = np.linspace(lo, hi, POLISH_POINTS)
    fits = [run(x) for x in xs]
    scores = np.array([f.rms for f in fits])
    best = scores.min()
    i = int(np.argmax(scores <= best))
    j = i
    while j + 1 < len(xs) and scores[j + 1] <= best:
        j += 1
    x = 0.5 * (xs[i] + xs[j])
    return x, run(x)


@dataclass
class _Stage3:
    residual_max: float
    rms: float
    t_S: dict
    F: MonotoneMap
    iterations: int


def _alternate(d: Dataset, timed, partition, cross, r, r_S, cfg: FitConfig) -> _Stage3:
    """Alternating isotonic fits of ``t_S`` and the entropy -> seconds map."""
    cat_of = {x: c for c in partition for x in c}
    t_all = np.array([d.tau[m] for m in timed])
    terms = _nested_terms(d, timed, partition, r_S, r)
    cross_set = set(cross)
    cross_idx = [k for k, m in enumerate(timed) if m in cross_set]
    F = fit_isotonic([terms[k][1] for k in cross_idx], t_all[cross_idx]).map
    t_S = {cat: MonotoneMap.linear(0.0, 1.0) for cat in partition}
    F_inv = F.inverse()
    for cat in partition:
        idx = [k for k, m in enumerate(timed) if m <= frozenset(cat) and len(m) > 1]
        if idx:
            h = [terms[k][0][cat][1] for k in idx]
            target = [F_inv(t_all[k]) for k in idx]
            t_S[cat] = fit_isotonic(h, target, anchor_zero=True).map

    best = None
    for it in range(max(cfg.refine_iters, 1)):
        u = _composed(terms, t_S, r)
        iso = fit_isotonic(u, t_all)
        if best is None or iso.residual_max < best.residual_max - 1e-9:
            rms = float(np.sqrt(np.mean((iso.fitted - t_all) ** 2)))
            best = _Stage3(iso.residual_max, rms, dict(t_S), iso.map, it + 1)
        elif it > 0:
            break
        F_inv = iso.map.inverse()
        u_star = np.array([F_inv(t) for t in t_all])
        for cat in partition:
            idx = [k for k, (cats, _) in enumerate(terms)
                   if cat in cats and sum(cat_of[x] == cat for x in timed[k]) > 1]
            if not idx:
                continue
            h, target, weight = [], [], []
            for k in idx:
                cats, h_top = terms[k]
                pc, hc = cats[cat]
                rest = sum(pj ** r * t_S[c](hj) for c, (pj, hj) in cats.items() if c != cat)
                h.append(hc)
                target.append((u_star[k] - h_top - rest) / pc ** r)
                weight.append(pc ** (2 * r))
            t_S[cat] = fit_isotonic(h, target, weight, anchor_zero=True).map
    return best


def estimate_nested(
    d: Dataset, cfg: FitConfig = FitConfig(), tol: ToleranceConfig = ToleranceConfig()
) -> NestedFit:
    """Fit a nested Luce-Hick model in three stages.

    1. ``r_S`` per category from menus inside a single category.
    2. ``r`` from menus holding at most one alternative per category.
    3. ``t_S`` and the entropy -> seconds map by alternating isotonic fits
       over all menus.
    """
    sim = similarity_partition(d, tol)
    partition = [tuple(c) for c in sim.classes]
    cat_of = {x: c for c in partition for x in c}
    timed = d.timed_menus()
    diagnostics: dict = {"partition": [list(c) for c in partition],
                         "similarity_report": sim.report.to_dict(), "notes": []}
    within_v, category_value = fit_choice_values(d, partition)

    if len(partition) == 1:
        fit = estimate_r(d, cfg)
        cat = partition[0]
        model = NestedLuceHickModel(
            partition=tuple(partition), within_v=within_v, r=fit.r_hat,
            r_S={cat: fit.r_hat}, t_S={cat: MonotoneMap.linear(0.0, 1.0)},
            time_of_entropy=fit.time_of_entropy, category_value=category_value,
        )
        diagnostics.update(stage2=fit.to_dict(), stage1={})
        diagnostics["notes"].append("single category: reduces to a Luce-Hick fit")
        return NestedFit(model, fit.residual_max, diagnostics)

    # stage 1
    r_S: dict[tuple, float] = {}
    stage1 = {}
    stage1_fits: dict[tuple, FitResult] = {}
    for cat in partition:
        inside = [m for m in timed if m <= frozenset(cat)]
        if len(cat) > 1 and not any(len(m) > 1 for m in inside):
            raise IncompleteDesignError(f"no within-category menu for category {{{', '.join(cat)}}}")
        profiles = {tuple(np.round(sorted(d.distribution(m)), 12)) for m in inside}
        if len(cat) == 1 or len(profiles) < 3:
            r_S[cat] = 1.0
            if len(cat) > 1:
                diagnostics["notes"].append(
                    f"r_S of {{{', '.join(cat)}}} not identified ({len(profiles)} profiles); set to 1")
            continue
        fit = rank_fit(profile_matrix(d.distribution(m) for m in inside),
                       np.array([d.tau[m] for m in inside]), cfg)
        r_S[cat] = fit.r_hat
        stage1_fits[cat] = fit
        stage1[",".join(cat)] = fit.to_dict()
    diagnostics["stage1"] = stage1

    # stage 2
    cross = [m for m in timed if len({cat_of[x] for x in m}) == len(m)]
    cross_profiles = {tuple(np.round(sorted(d.distribution(m)), 12)) for m in cross}
    if len(cross_profiles) < 3:
        raise IncompleteDesignError(
            "need at least 3 distinct menus with at most one alternative per category")
    stage2 = rank_fit(profile_matrix(d.distribution(m) for m in cross),
                      np.array([d.tau[m] for m in cross]), cfg)
    r = stage2.r_hat
    diagnostics["stage2"] = stage2.to_dict()

    # stage 3
    state = _alternate(d, timed, partition, cross, r, r_S, cfg)
    if state.residual_max > POLISH_TOL:
        # the rank stages only bound r and r_S; pick the admissible values
        # that let the composed times fit best
        bounds = {None: _bracket(stage2, r)}
        bounds.update({
            cat: _bracket(stage1_fits[cat], r_S[cat]) for cat in partition if cat in stage1_fits
        })
        for sweep in range(POLISH_SWEEPS):
            for key, (lo, hi) in bounds.items():
                if hi - lo <= GOLDEN_TOL:
                    continue

                def run(x, key=key):
                    if key is None:
                        return _alternate(d, timed, partition, cross, x, r_S, cfg)
                    return _alternate(d, timed, partition, cross, r, {**r_S, key: x}, cfg)

                x, trial = _plateau_scan(run, lo, hi)
                if trial.rms < state.rms:
                    state = trial
                    if key is None:
                        r = x
                    else:
                        r_S[key] = x
                if state.residual_max <= POLISH_TOL:
                    break
            if state.residual_max <= POLISH_TOL:
                break
        diagnostics["polished"] = True
    residual, t_S, F, iters = state.residual_max, state.t_S, state.F, state.iterations
    diagnostics["iterations"] = iters + 1
    diagnostics["residual_max"] = residual
    model = NestedLuceHickModel(
        partition=tuple(partition), within_v=within_v, r=r, r_S=r_S, t_S=t_S,
        time_of_entropy=F, category_value=category_value,
    )
    return NestedFit(model, residual, diagnostics)
