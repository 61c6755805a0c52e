"""Shannon/Tsallis/Renyi entropies and the mixture-entropy value.

``U(mu a (+) (1-mu) b) = mu**r U(a) + (1-mu)**r U(b) + q H_r(mu)``

with ``H_1`` the Shannon entropy and ``H_r`` (r != 1) the Tsallis entropy.
Zero weights contribute exactly zero (``0 ln 0 = 0``, ``0**r = 0``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .process import CanonicalProcess, Leaf, Mix, Process

__all__ = [
    "SHANNON_EPS",
    "EntropyParams",
    "entropy_H",
    "binary_entropy",
    "renyi_R",
    "inverse_H1_binary",
    "ddm_transform",
    "eval_U_tree",
    "eval_U_canonical",
]

LN2 = math.log(2.0)
# below this distance from 1 the Tsallis quotient is replaced by its limit
SHANNON_EPS = 1e-9


@dataclass(frozen=True)
class EntropyParams:
    r: float = 1.0
    q: float = 1.0

    def __post_init__(self):
        _check_r(self.r)


def _check_r(r: float) -> None:
    if not r > 0 or not math.isfinite(r):
        raise ValueError(f"entropy order r must be positive, got {r!r}")


def _weights(w: Sequence[float], atol: float) -> np.ndarray:
    a = np.asarray(w, dtype=float).ravel()
    if a.size == 0:
        raise ValueError("empty weight vector")
    if np.any(~np.isfinite(a)) or np.any(a < 0) or np.any(a > 1):
        raise ValueError("weights must lie in [0, 1]")
    if abs(a.sum() - 1.0) > atol:
        raise ValueError(f"weights sum to {a.sum()!r}, not 1")
    return a


def entropy_H(r: float, w: Sequence[float], *, atol: float = 1e-12) -> float:
    """Shannon entropy for ``r == 1``, Tsallis entropy of order ``r`` otherwise."""
    _check_r(r)
    a = _weights(w, atol)
    a = a[a > 0]
    if abs(r - 1.0) < SHANNON_EPS:
        return float(max(0.0, -np.sum(a * np.log(a))))
    return float(max(0.0, (1.0 - np.sum(a**r)) / (r - 1.0)))


def binary_entropy(r: float, mu: float) -> float:
    return entropy_H(r, (mu, 1.0 - mu), atol=1e-9)


def renyi_R(r: float, mu: float) -> float:
    """Binary Renyi entropy ``ln(mu**r + (1-mu)**r) / (1 - r)``."""
    _check_r(r)
    if not 0.0 <= mu <= 1.0:
        raise ValueError(f"probability {mu!r} outside [0, 1]")
    if abs(r - 1.0) < SHANNON_EPS:
        return binary_entropy(1.0, mu)
    s = (mu**r if mu > 0 else 0.0) + ((1.0 - mu) ** r if mu < 1 else 0.0)
    return max(0.0, math.log(s) / (1.0 - r))


def inverse_H1_binary(u: float, *, tol: float = 1e-12, max_iter: int = 200) -> float:
    """Smallest ``mu`` with ``H_1(mu) = u``; lies in ``[0, 1/2]``."""
    if not -tol <= u <= LN2 + tol:
        raise ValueError(f"entropy {u!r} outside [0, ln 2]")
    if u <= 0.0:
        return 0.0
    if u >= LN2:
        return 0.5
    lo, hi = 0.0, 0.5
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        h = -mid * math.log(mid) - (1.0 - mid) * math.log1p(-mid)
        if h < u:
            lo = mid
        else:
            hi = mid
        # H_1 is flat near 1/2; keep narrowing mu after |H - u| is met
        if hi - lo < 1e-16 or (abs(h - u) <= tol and hi - lo < 1e-15):
            break
    return 0.5 * (lo + hi)


def ddm_transform(u: float, k: float = 1.0) -> float:
    """Mean drift-diffusion decision time for the binary choice with entropy ``u``.

    ``f(mu) = k (1 - 2 mu) / (ln(1 - mu) - ln mu)`` evaluated at ``mu = H_1^{-1}(u)``,
    with the removable singularities ``f(0) = 0`` and ``f(1/2) = k / 2``.
    """
    if not k > 0:
        raise ValueError("k must be positive")
    mu = inverse_H1_binary(u)
    if mu <= 0.0:
        return 0.0
    d = 1.0 - 2.0 * mu
    if d <= 0.0:
        return k / 2.0
    # ln((1-mu)/mu) = 2 artanh(1 - 2 mu), stable as mu -> 1/2
    return k * d / (2.0 * math.atanh(d))


def eval_U_tree(p: Process, util: Mapping[str, float], params: EntropyParams) -> float:
    r, q = params.r, params.q
    shannon = abs(r - 1.0) < SHANNON_EPS

    def go(node: Process) -> float:
        if isinstance(node, Leaf):
            return float(util[node.outcome])
        mu = node.mu
        if mu == 1.0:
            return go(node.left)
        if mu == 0.0:
            return go(node.right)
        if shannon:
            a_w, b_w = mu, 1.0 - mu
            h = -mu * math.log(mu) - (1.0 - mu) * math.log1p(-mu)
        else:
            a_w, b_w = mu**r, (1.0 - mu) ** r
            h = (1.0 - a_w - b_w) / (r - 1.0)
        return a_w * go(node.left) + b_w * go(node.right) + q * h

    return go(p)


def eval_U_canonical(
    c: CanonicalProcess, util: Mapping[str, float], params: EntropyParams
) -> float:
    r, q = params.r, params.q
    weights = np.array(c.weights, dtype=float)
    values = np.array([float(util[x]) for x in c.outcomes])
    h = entropy_H(r, weights, atol=1e-9)
    if abs(r - 1.0) < SHANNON_EPS:
        return float(np.dot(weights, values) + q * h)
    return float(np.dot(weights**r, values) + q * h)
