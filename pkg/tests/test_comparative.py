import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from procmix.comparative import (
    MixingSign,
    PremiseError,
    certainty_equivalent_utility,
    higher_value_of_mixing_witness,
    is_weakly_more_consequentialist,
    is_weakly_more_risk_averse,
    self_mix_sequence,
    value_of_mixing_sign,
)
from procmix.entropy import EntropyParams, eval_U_canonical, eval_U_tree, renyi_R
from procmix.process import Leaf, canonicalize, mix

from treegen import trees

LN2 = math.log(2.0)
UTIL = {"w": 0.0, "x": 1.0, "y": 2.5, "z": 4.0}


# -- value of mixing ----------------------------------------------------------


@pytest.mark.parametrize(
    "Ua, r, q, want",
    [(0, 1, 1, MixingSign.POSITIVE), (5, 2, 1, MixingSign.NEGATIVE), (1, 2, 1, MixingSign.ZERO)],
)
def test_sign_examples(Ua, r, q, want):
    assert value_of_mixing_sign(Ua, EntropyParams(r, q)) is want
    assert str(want) == want.value


def empirical_sign(Ua, params, mu, leaf="a"):
    a = Leaf(leaf)
    gap = eval_U_tree(mix(a, a, mu), {leaf: Ua}, params) - Ua
    return gap


@settings(max_examples=300)
@given(st.floats(-20, 20), st.floats(0.1, 4.0), st.floats(-5, 5), st.sampled_from([0.2, 0.5, 0.8]))
def test_sign_matches_self_mix(Ua, r, q, mu):
    params = EntropyParams(r, q)
    gap = empirical_sign(Ua, params, mu)
    sign = value_of_mixing_sign(Ua, params)
    # near the boundary the formula and the float evaluation may disagree
    assume(abs(Ua * (r - 1) - q) > 1e-9)
    assert (gap > 0) == (sign is MixingSign.POSITIVE)
    assert (gap < 0) == (sign is MixingSign.NEGATIVE)


@settings(max_examples=200)
@given(st.floats(-20, 20), st.floats(0.1, 4.0), st.floats(-5, 5), st.floats(0.05, 0.95))
def test_sign_is_stable_under_self_mixing(Ua, r, q, mu):
    params = EntropyParams(r, q)
    assume(abs(Ua * (r - 1) - q) > 1e-6)
    U1 = eval_U_tree(mix(Leaf("a"), Leaf("a"), mu), {"a": Ua}, params)
    assume(abs(U1 * (r - 1) - q) > 1e-9)
    assert value_of_mixing_sign(U1, params) is value_of_mixing_sign(Ua, params)


def test_self_mix_sequence_examples():
    seq = self_mix_sequence(0.0, EntropyParams(2, 1), 200)
    assert len(seq) == 200
    assert abs(seq[-1] - 1.0) <= 1e-9
    assert self_mix_sequence(0.0, EntropyParams(1, 1 / LN2), 3) == pytest.approx([1, 2, 3], abs=1e-12)
    assert self_mix_sequence(0.0, EntropyParams(1.7, 0.0), 5) == [0.0] * 5
    with pytest.raises(ValueError):
        self_mix_sequence(0.0, EntropyParams(), 0)


def test_self_mix_sequence_matches_tree_evaluation():
    params = EntropyParams(1.5, 0.7)
    p = Leaf("a")
    seq = self_mix_sequence(0.3, params, 6)
    for k in range(6):
        p = mix(p, p, 0.5)
        assert eval_U_tree(p, {"a": 0.3}, params) == pytest.approx(seq[k], abs=1e-12)


@pytest.mark.parametrize("r", [1.5, 2.0, 3.0])
def test_self_mix_converges_above_one(r):
    seq = self_mix_sequence(7.0, EntropyParams(r, 2.0), 200)
    assert abs(seq[-1] - 2.0 / (r - 1)) <= 1e-9


def test_self_mix_diverges_at_or_below_one():
    for r in (0.5, 1.0):
        seq = self_mix_sequence(0.0, EntropyParams(r, 1.0), 200)
        assert seq[-1] > 50


# -- higher value of mixing ---------------------------------------------------


def test_witness_unsolvable_at_half():
    with pytest.raises(ValueError, match="exceeds ln 2"):
        higher_value_of_mixing_witness(1, 2, 0.5, 0.5)


def test_witness_tenths_at_order_half_are_unsolvable():
    # R_0.5(0.1) is 0.470, so the two terms already exceed ln 2
    assert 2 * renyi_R(0.5, 0.1) > LN2
    with pytest.raises(ValueError):
        higher_value_of_mixing_witness(0.5, 2, 0.1, 0.1)


def test_witness_tenths_at_order_one():
    res = higher_value_of_mixing_witness(1, 2, 0.1, 0.1)
    alpha, holds = res
    assert holds and not res.degenerate
    assert alpha == pytest.approx(0.354458, abs=1e-5)
    assert renyi_R(1, alpha) == pytest.approx(2 * renyi_R(1, 0.1), abs=1e-11)
    assert res.margin > 1e-12


def test_witness_degenerate():
    res = higher_value_of_mixing_witness(0.7, 3, 0.0, 0.2)
    assert res.degenerate and res.holds
    assert res.alpha == pytest.approx(0.2, abs=1e-9)


@pytest.mark.parametrize("args", [(2, 1, 0.1, 0.1), (0, 1, 0.1, 0.1), (1, 2, 0.6, 0.1), (1, 2, 0.1, -0.1)])
def test_witness_preconditions(args):
    with pytest.raises(ValueError):
        higher_value_of_mixing_witness(*args)


def solvable_instances(n, seed):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        lo, hi = sorted(rng.uniform(0.05, 5.0, 2))
        b, g = rng.uniform(0.0, 0.5, 2)
        if hi - lo < 1e-3 or renyi_R(lo, b) + renyi_R(lo, g) > LN2:
            continue
        out.append((lo, hi, b, g))
    return out


def test_witness_holds_on_sampled_instances():
    for lo, hi, b, g in solvable_instances(100, seed=11):
        res = higher_value_of_mixing_witness(lo, hi, b, g)
        assert res.holds and res.margin > 1e-12, (lo, hi, b, g, res)


# -- certainty equivalents and preference comparisons -------------------------


def test_certainty_equivalents():
    assert certainty_equivalent_utility(1, 0, 0.5, 1) == pytest.approx(0.5)
    assert certainty_equivalent_utility(1, 0, 0.25, 2) == pytest.approx(0.1)
    assert certainty_equivalent_utility(3.3, 3.3, 0.7, 2.2) == pytest.approx(3.3)
    with pytest.raises(ValueError):
        certainty_equivalent_utility(1, 0, 1.0, 1)
    with pytest.raises(ValueError):
        certainty_equivalent_utility(1, 0, 0.5, 0)


@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(0.01, 0.99), st.floats(0.1, 4), st.floats(-3, 3))
def test_certainty_equivalent_is_indifferent(ux, uy, alpha, r, q):
    c = certainty_equivalent_utility(ux, uy, alpha, r)
    params = EntropyParams(r, q)
    lhs = eval_U_tree(mix(Leaf("x"), Leaf("y"), alpha), {"x": ux, "y": uy}, params)
    rhs = eval_U_tree(mix(Leaf("c"), Leaf("c"), alpha), {"c": c}, params)
    assert lhs == pytest.approx(rhs, abs=1e-9)


def test_risk_aversion_reflexive():
    p = EntropyParams(1.5, 1)
    assert is_weakly_more_risk_averse(p, UTIL, p, UTIL)


def test_risk_aversion_concave_transform():
    p = EntropyParams(1.5, 1)
    concave = {k: math.sqrt(v) for k, v in UTIL.items()}
    assert is_weakly_more_risk_averse(p, concave, p, UTIL, samples=10_000)
    res = is_weakly_more_risk_averse(p, UTIL, p, concave, samples=10_000)
    assert not res and res.counterexample["gap_B"] < 0


def test_risk_aversion_different_orders():
    res = is_weakly_more_risk_averse(EntropyParams(1, 1), UTIL, EntropyParams(2, 1), UTIL)
    assert not res
    assert set(res.counterexample) == {"alpha", "x", "y", "z", "gap_A", "gap_B"}


def test_risk_aversion_premises():
    p = EntropyParams()
    with pytest.raises(PremiseError):
        is_weakly_more_risk_averse(p, {"x": 1.0}, p, {"y": 1.0})
    with pytest.raises(ValueError):
        is_weakly_more_risk_averse(p, UTIL, p, UTIL, samples=0)


def test_consequentialism_examples():
    assert is_weakly_more_consequentialist(EntropyParams(2, 1), UTIL, EntropyParams(2, 1), UTIL)
    doubled = {k: 2 * v for k, v in UTIL.items()}
    res = is_weakly_more_consequentialist(EntropyParams(2, 1), UTIL, EntropyParams(2, 1.5), doubled)
    assert res and res.s == pytest.approx(2) and res.t == pytest.approx(0)
    assert not is_weakly_more_consequentialist(EntropyParams(2, 1), UTIL, EntropyParams(2, 2), UTIL)


def test_consequentialism_premises():
    p = EntropyParams(2, 1)
    with pytest.raises(PremiseError, match="affinely"):
        is_weakly_more_consequentialist(p, UTIL, p, {k: v * v for k, v in UTIL.items()})
    with pytest.raises(PremiseError, match="non-increasing"):
        is_weakly_more_consequentialist(p, UTIL, p, {k: -v for k, v in UTIL.items()})
    with pytest.raises(PremiseError, match="orders"):
        is_weakly_more_consequentialist(p, UTIL, EntropyParams(1, 1), UTIL)
    with pytest.raises(PremiseError, match="constant"):
        is_weakly_more_consequentialist(p, {"a": 1.0, "b": 1.0}, p, {"a": 1.0, "b": 1.0})


@settings(max_examples=50)
@given(st.lists(trees, min_size=2, max_size=8), st.floats(0.2, 3.0), st.floats(0.1, 5.0), st.floats(0.1, 10.0))
def test_rankings_ignore_the_scale_of_q(processes, r, q, lam):
    zero = {x: 0.0 for x in "ABCDE"}
    a = [eval_U_canonical(canonicalize(p), zero, EntropyParams(r, q)) for p in processes]
    b = [eval_U_canonical(canonicalize(p), zero, EntropyParams(r, lam * q)) for p in processes]
    for i in range(len(a)):
        for j in range(len(a)):
            if abs(a[i] - a[j]) > 1e-9 * max(1.0, abs(a[i])):
                assert (a[i] > a[j]) == (b[i] > b[j])
