"""Comparative statics of mixture entropy values.

Executable versions of the value-of-mixing sign condition, the equal
self-mix iteration, the Renyi-entropy inequality behind higher values of
mixing, certainty equivalents, and the comparisons of risk aversion and
consequentialism between two preferences.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .entropy import EntropyParams, binary_entropy, renyi_R

__all__ = [
    "MixingSign",
    "PremiseError",
    "WitnessResult",
    "RiskAversionResult",
    "ConsequentialismResult",
    "value_of_mixing_sign",
    "self_mix_sequence",
    "higher_value_of_mixing_witness",
    "certainty_equivalent_utility",
    "is_weakly_more_risk_averse",
    "is_weakly_more_consequentialist",
]

LN2 = math.log(2.0)
SIGN_TOL = 1e-12


class MixingSign(enum.Enum):
    NEGATIVE = "negative"
    ZERO = "zero"
    POSITIVE = "positive"

    def __str__(self) -> str:
        return self.value


class PremiseError(ValueError):
    """The two preferences do not satisfy the premise of a comparison."""


def value_of_mixing_sign(Ua: float, params: EntropyParams) -> MixingSign:
    """Sign of ``U(mu a (+) (1-mu) a) - U(a)``; negative iff ``Ua (r-1) > q``."""
    gap = Ua * (params.r - 1.0) - params.q
    if abs(gap) <= SIGN_TOL:
        return MixingSign.ZERO
    return MixingSign.NEGATIVE if gap > 0 else MixingSign.POSITIVE


def self_mix_sequence(U0: float, params: EntropyParams, n: int) -> list[float]:
    """``U_1 .. U_n`` of the equal self-mix ``U_{k+1} = 2**(1-r) U_k + q H_r(1/2)``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    factor = 2.0 ** (1.0 - params.r)
    step = params.q * binary_entropy(params.r, 0.5)
    out, u = [], float(U0)
    for _ in range(n):
        u = factor * u + step
        out.append(float(u))
    return out


@dataclass(frozen=True)
class WitnessResult:
    alpha: float
    holds: bool
    # R_high(alpha) - R_high(beta) - R_high(gamma)
    margin: float
    # beta or gamma is 0, where the inequality collapses to an equality
    degenerate: bool

    def __iter__(self):
        return iter((self.alpha, self.holds))


def higher_value_of_mixing_witness(
    r_low: float, r_high: float, beta: float, gamma: float, tol: float = 1e-12
) -> WitnessResult:
    """Solve ``R_low(alpha) = R_low(beta) + R_low(gamma)`` and test the higher order.

    ``holds`` reports ``R_high(alpha) > R_high(beta) + R_high(gamma)``; in the
    degenerate case (``beta`` or ``gamma`` zero) it reports equality within
    ``1e-9`` instead.
    """
    if not 0 < r_low < r_high:
        raise ValueError("need 0 < r_low < r_high")
    for name, p in (("beta", beta), ("gamma", gamma)):
        if not 0.0 <= p <= 0.5:
            raise ValueError(f"{name} must lie in [0, 1/2]")
    target = renyi_R(r_low, beta) + renyi_R(r_low, gamma)
    if target > LN2 + tol:
        raise ValueError(
            f"R_{r_low:g}(beta) + R_{r_low:g}(gamma) = {target!r} exceeds ln 2; no alpha exists"
        )
    lo, hi = 0.0, 0.5
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if renyi_R(r_low, mid) < target:
            lo = mid
        else:
            hi = mid
    alpha = 0.5 * (lo + hi)
    margin = renyi_R(r_high, alpha) - renyi_R(r_high, beta) - renyi_R(r_high, gamma)
    degenerate = beta == 0.0 or gamma == 0.0
    holds = abs(margin) <= 1e-9 if degenerate else margin > tol
    return WitnessResult(alpha, bool(holds), margin, degenerate)


def certainty_equivalent_utility(Ux: float, Uy: float, alpha: float, r: float) -> float:
    """Utility of ``c`` with ``alpha x (+) (1-alpha) y ~ alpha c (+) (1-alpha) c``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if not r > 0:
        raise ValueError("r must be positive")
    a, b = alpha ** r, (1.0 - alpha) ** r
    return (a * Ux + b * Uy) / (a + b)


def _mix_gap(params: EntropyParams, ux: float, uy: float, uz: float, alpha: float) -> float:
    # U(alpha x (+) (1-alpha) y) - U(alpha z (+) (1-alpha) z); the entropy terms cancel
    if abs(params.r - 1.0) < 1e-9:
        a, b = alpha, 1.0 - alpha
    else:
        a, b = alpha ** params.r, (1.0 - alpha) ** params.r
    return a * (ux - uz) + b * (uy - uz)


@dataclass(frozen=True)
class RiskAversionResult:
    holds: bool
    counterexample: dict | None = None

    def __bool__(self) -> bool:
        return self.holds


def _shared(utilA: Mapping[str, float], utilB: Mapping[str, float]) -> list[str]:
    if set(utilA) != set(utilB):
        raise PremiseError("the two utility maps cover different outcomes")
    if not utilA:
        raise PremiseError("empty outcome set")
    return sorted(utilA)


def is_weakly_more_risk_averse(
    paramsA: EntropyParams,
    utilA: Mapping[str, float],
    paramsB: EntropyParams,
    utilB: Mapping[str, float],
    samples: int = 10_000,
    seed: int | None = 0,
) -> RiskAversionResult:
    """Sampling refuter for "A is at least as risk averse as B".

    Draws ``(alpha, x, y, z)`` and looks for a case where A weakly prefers
    ``alpha x (+) (1-alpha) y`` to the self-mix of ``z`` while B strictly
    prefers the self-mix.  Finding none is evidence, not proof.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    outcomes = _shared(utilA, utilB)
    rng = np.random.default_rng(seed)
    alphas = rng.uniform(0.0, 1.0, samples)
    idx = rng.integers(0, len(outcomes), size=(samples, 3))
    for alpha, (i, j, k) in zip(alphas, idx):
        if not 0.0 < alpha < 1.0:
            continue
        x, y, z = outcomes[i], outcomes[j], outcomes[k]
        gap_a = _mix_gap(paramsA, utilA[x], utilA[y], utilA[z], alpha)
        gap_b = _mix_gap(paramsB, utilB[x], utilB[y], utilB[z], alpha)
        if gap_a >= 0.0 and gap_b < -SIGN_TOL:
            return RiskAversionResult(False, {
                "alpha": float(alpha), "x": x, "y": y, "z": z,
                "gap_A": float(gap_a), "gap_B": float(gap_b),
            })
    return RiskAversionResult(True)


@dataclass(frozen=True)
class ConsequentialismResult:
    holds: bool
    s: float
    t: float

    def __bool__(self) -> bool:
        return self.holds


def is_weakly_more_consequentialist(
    paramsA: EntropyParams,
    utilA: Mapping[str, float],
    paramsB: EntropyParams,
    utilB: Mapping[str, float],
    tol: float = 1e-9,
) -> ConsequentialismResult:
    """Whether B is at least as consequentialist as A.

    Requires equally risk averse preferences: equal ``r`` and
    ``utilB = s utilA + t`` with ``s > 0``.  Then the answer is
    ``s qA + t >= qB``.
    """
    outcomes = _shared(utilA, utilB)
    if abs(paramsA.r - paramsB.r) > tol:
        raise PremiseError("comparison needs equal entropy orders r")
    lo = min(outcomes, key=lambda x: (utilA[x], x))
    hi = max(outcomes, key=lambda x: (utilA[x], x))
    span = utilA[hi] - utilA[lo]
    if span <= tol:
        raise PremiseError("utilities over outcomes are constant; no strict preference exists")
    s = (utilB[hi] - utilB[lo]) / span
    t = utilB[lo] - s * utilA[lo]
    worst = max(abs(utilB[x] - (s * utilA[x] + t)) for x in outcomes)
    if worst > tol * max(1.0, max(abs(v) for v in utilB.values())):
        raise PremiseError(f"utilities are not affinely related (deviation {worst:.3g})")
    if not s > 0:
        raise PremiseError("utilities are related by a non-increasing map")
    return ConsequentialismResult(bool(s * paramsA.q + t >= paramsB.q - tol), s, t)
