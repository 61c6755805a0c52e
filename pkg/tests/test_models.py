import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from procmix.dataset import DataError, Dataset
from procmix.entropy import entropy_H
from procmix.figures import figure_dataset, figure_model
from procmix.models import (
    IncompleteDataError,
    LuceHickModel,
    LuceModel,
    MonotoneMap,
    NestedLuceHickModel,
    fit_luce,
    load_model,
    model_from_dict,
    model_to_dict,
    predict_p,
    predict_time,
    predict_time_nested,
    save_model,
)
from procmix.synthetic import nested_model

LN2 = math.log(2.0)
FIG1 = figure_dataset("fig1")


def fs(*xs):
    return frozenset(xs)


def fig1_model():
    return LuceHickModel(fit_luce(FIG1, "Bus"), 1.0, MonotoneMap.linear(0.5, 1 / LN2))


# -- monotone maps ------------------------------------------------------------


def test_monotone_map_interpolates_and_extrapolates():
    m = MonotoneMap(((0.0, 1.0), (1.0, 3.0), (2.0, 4.0)))
    assert m(0.5) == 2.0
    assert m(-1.0) == -1.0
    assert m(4.0) == 6.0
    assert np.allclose(m(np.array([0.0, 1.5])), [1.0, 3.5])
    assert m.inverse()(3.5) == pytest.approx(1.5)


@pytest.mark.parametrize(
    "knots",
    [((0.0, 0.0),), ((0.0, 0.0), (0.0, 1.0)), ((0.0, 1.0), (1.0, 1.0)), ((0.0, 0.0), (1.0, float("inf")))],
)
def test_monotone_map_rejects_bad_knots(knots):
    with pytest.raises(ValueError):
        MonotoneMap(knots)


# -- fitting Luce values ------------------------------------------------------


def test_fit_luce_fig1():
    v = fit_luce(FIG1, "Bus").v
    assert v["Bus"] == 0.0
    assert v["Airplane"] == pytest.approx(0.0, abs=1e-12)
    assert v["Bus#2"] == pytest.approx(0.0, abs=1e-12)
    assert v["Car"] == pytest.approx(math.log(3), abs=1e-12)
    assert v["Train"] == pytest.approx(math.log(4), abs=1e-12)


def test_fit_luce_uniform_binaries():
    d = Dataset({fs("a", x): {"a": 0.5, x: 0.5} for x in "bcd"})
    assert all(abs(x) < 1e-12 for x in fit_luce(d, "a").v.values())
    assert fit_luce(d, "a").residual == pytest.approx(0.0, abs=1e-12)


def test_fit_luce_reference_alone():
    d = Dataset({fs("a"): {"a": 1.0}})
    assert fit_luce(d, "a").v == {"a": 0.0}


def test_fit_luce_missing_binary():
    d = Dataset({fs("a", "b"): {"a": 0.5, "b": 0.5}, fs("a", "b", "c"): {"a": 0.2, "b": 0.2, "c": 0.6}})
    with pytest.raises(IncompleteDataError, match=r"\{c, a\}"):
        fit_luce(d, "a")
    with pytest.raises(IncompleteDataError):
        fit_luce(d, "zzz")


def test_fit_luce_positivity():
    d = Dataset({fs("a", "b"): {"a": 1.0, "b": 0.0}})
    with pytest.raises(DataError, match="positivity"):
        fit_luce(d, "a")


# -- predictions --------------------------------------------------------------


def test_fig1_probabilities():
    m = fig1_model()
    p = predict_p(m, {"Airplane", "Bus", "Car"})
    assert [p[x] for x in ("Airplane", "Bus", "Car")] == pytest.approx([0.2, 0.2, 0.6], abs=1e-12)
    assert predict_p(m, {"Train"}) == {"Train": 1.0}


def test_fig1_times():
    m = fig1_model()
    assert predict_time(m, {"Airplane", "Bus", "Car"}) == pytest.approx(1.871, abs=1e-3)
    assert predict_time(m, {"Bus"}) == pytest.approx(0.5, abs=1e-12)
    assert predict_time(m, {"Airplane", "Train"}) == pytest.approx(1.222, abs=1e-3)
    assert predict_time(m, {"Bus", "Bus#2"}) == pytest.approx(1.5, abs=1e-12)


def test_fig2_nested_predictions():
    m = figure_model("fig2")
    p = predict_p(m, {"BlueBus", "RedBus", "Car"})
    assert [p[x] for x in ("BlueBus", "RedBus", "Car")] == pytest.approx([0.125, 0.125, 0.75], abs=1e-12)
    assert predict_time_nested(m, {"BlueBus", "RedBus"}) == pytest.approx(1.0, abs=1e-12)
    # 0.25 * (ln 2 / 2) + H1(0.25), then 0.5 + u / ln 2
    u = 0.25 * LN2 / 2 + entropy_H(1, (0.25, 0.75))
    assert predict_time_nested(m, {"BlueBus", "RedBus", "Car"}) == pytest.approx(0.5 + u / LN2, abs=1e-12)
    assert predict_time_nested(m, {"BlueBus", "RedBus", "Car"}) == pytest.approx(1.436, abs=1e-3)
    assert predict_time_nested(m, {"Airplane"}) == pytest.approx(0.5, abs=1e-12)


def test_uncovered_outcome():
    with pytest.raises(KeyError):
        predict_p(fig1_model(), {"Boat"})
    with pytest.raises(KeyError):
        predict_p(figure_model("fig2"), {"Boat"})
    with pytest.raises(ValueError):
        predict_p(fig1_model(), set())


def test_nested_model_validation():
    kw = dict(
        partition=(("a",), ("b",)),
        within_v={"a": 1.0, "b": 1.0},
        r=1.0,
        r_S={("a",): 1.0, ("b",): 1.0},
        t_S={("a",): MonotoneMap.linear(0, 1), ("b",): MonotoneMap.linear(0, 1)},
        time_of_entropy=MonotoneMap.linear(0, 1),
    )
    NestedLuceHickModel(**kw)
    with pytest.raises(ValueError, match="overlap"):
        NestedLuceHickModel(**{**kw, "partition": (("a",), ("a", "b"))})
    with pytest.raises(ValueError, match="map 0 to 0"):
        NestedLuceHickModel(**{**kw, "t_S": {("a",): MonotoneMap.linear(1, 1), ("b",): MonotoneMap.linear(0, 1)}})
    with pytest.raises(ValueError, match="r_S"):
        NestedLuceHickModel(**{**kw, "r_S": {("a",): 1.0}})
    with pytest.raises(ValueError):
        NestedLuceHickModel(**{**kw, "within_v": {"a": 0.0, "b": 1.0}})


values = st.dictionaries(st.sampled_from("abcdefg"), st.floats(-4, 4), min_size=2)


@given(values)
def test_luce_probabilities_satisfy_iia_exactly(v):
    m = LuceModel(v)
    members = sorted(v)
    full = predict_p(m, members)
    assert sum(full.values()) == pytest.approx(1.0, abs=1e-12)
    for x, y in itertools.combinations(members, 2):
        pair = predict_p(m, {x, y})
        lhs = math.log(pair[x]) - math.log(pair[y])
        rhs = math.log(full[x]) - math.log(full[y])
        assert abs(lhs - rhs) <= 1e-12


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=6), st.floats(0.2, 4.0), st.randoms())
def test_time_invariant_under_relabeling(vals, r, rnd):
    ids = [f"x{i}" for i in range(len(vals))]
    perm = ids[:]
    rnd.shuffle(perm)
    T = MonotoneMap.linear(0.3, 1.0)
    a = LuceHickModel(LuceModel(dict(zip(ids, vals))), r, T)
    b = LuceHickModel(LuceModel(dict(zip(perm, vals))), r, T)
    assert predict_time(a, ids) == pytest.approx(predict_time(b, ids), abs=1e-12)


@settings(max_examples=50)
@given(values, st.floats(0.2, 4.0))
def test_one_category_nested_model_is_luce_hick(v, r):
    members = tuple(sorted(v))
    T = MonotoneMap.linear(0.5, 2.0)
    flat = LuceHickModel(LuceModel(v), r, T)
    nested = NestedLuceHickModel(
        partition=(members,),
        within_v={x: math.exp(val) for x, val in v.items()},
        r=r,
        r_S={members: r},
        t_S={members: MonotoneMap.linear(0.0, 1.0)},
        time_of_entropy=T,
    )
    for k in range(1, len(members) + 1):
        for menu in itertools.combinations(members, k):
            assert abs(predict_time(flat, menu) - predict_time_nested(nested, menu)) <= 1e-10


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=5))
def test_copying_a_menu_into_each_option_doubles_shannon_entropy(vals):
    v = {f"x{i}": x for i, x in enumerate(vals)}
    menu = sorted(v)
    doubled = {f"{a}.{b}": v[a] + v[b] for a in menu for b in menu}
    h = entropy_H(1, list(predict_p(LuceModel(v), menu).values()), atol=1e-9)
    h2 = entropy_H(1, list(predict_p(LuceModel(doubled), sorted(doubled)).values()), atol=1e-9)
    assert h2 == pytest.approx(2 * h, abs=1e-10)


# -- model files --------------------------------------------------------------


@pytest.mark.parametrize("build", [fig1_model, lambda: figure_model("fig2"), lambda: nested_model(per_category=3)])
def test_model_json_roundtrip(tmp_path, build):
    m = build()
    path = tmp_path / "m.json"
    save_model(m, path)
    back = load_model(path)
    assert model_to_dict(back) == model_to_dict(m)
    data = json.loads(path.read_text())
    assert {"type", "v", "r", "knots"} <= set(data)
    if data["type"] == "nested":
        assert {"partition", "r_S", "t_S_knots", "category_value"} <= set(data)


def test_model_file_errors(tmp_path):
    with pytest.raises(DataError, match="lacks field"):
        model_from_dict({"type": "luce_hick", "v": {}})
    with pytest.raises(DataError, match="unknown model type"):
        model_from_dict({"type": "probit"})
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(DataError):
        load_model(bad)
