import io

import pytest
from hypothesis import given
from hypothesis import strategies as st

from procmix.dataset import (
    DataError,
    Dataset,
    ToleranceConfig,
    dataset_from_text,
    label,
    load_dataset,
    parse_menus_csv,
    write_choices,
    write_times,
)
from procmix.figures import figure_dataset, figure_text

HEAD = "menu_id,alternative_id,probability\n"


def test_fig1_shape():
    d = figure_dataset("fig1")
    assert len(d.menus) == 8
    assert d.outcomes == ["Airplane", "Bus", "Bus#2", "Car", "Train"]
    assert len(d.timed_menus()) == 8


def test_fig2_shape():
    d = figure_dataset("fig2")
    assert len(d.menus) == 9
    assert d.outcomes == ["Airplane", "BlueBus", "Car", "RedBus"]


def test_duplicate_option_labels():
    assert label("Bus#2") == "Bus"
    assert label("Bus") == "Bus"


def test_load_from_paths(tmp_path):
    c = tmp_path / "c.csv"
    t = tmp_path / "t.csv"
    c.write_text(figure_text("fig1", "choices"))
    t.write_text(figure_text("fig1", "times"))
    d = load_dataset(c, t)
    assert d.tau[frozenset({"Airplane", "Train"})] == 1.2
    assert d.name(frozenset({"Airplane", "Train"})) == "at"


def test_csv_roundtrip():
    d = figure_dataset("fig2")
    c, t = io.StringIO(), io.StringIO()
    write_choices(d, c)
    write_times(d, t)
    back = dataset_from_text(c.getvalue(), t.getvalue())
    assert back.p == d.p
    assert back.tau == d.tau
    assert back.names == d.names


@pytest.mark.parametrize(
    "text, message",
    [
        ("", "empty file"),
        (HEAD, "no menus"),
        ("menu,alt,prob\nm,A,1\n", "expected header"),
        (HEAD + "m,A,1.2\n", "out of range"),
        (HEAD + "m,A,-0.1\n", "out of range"),
        (HEAD + "m,A,x\n", "not a number"),
        (HEAD + "m,A,nan\n", "not finite"),
        (HEAD + "m,A,0.5\nm,B,0.4\n", "sum to"),
        (HEAD + "m,A,0.5\nm,A,0.5\n", "duplicate alternative"),
        (HEAD + "m,A\n", "expected 3 fields"),
        (HEAD + "m,,1\n", "empty field"),
        (HEAD + "m,A,1\nn,A,1\n", "repeats the alternatives"),
    ],
)
def test_choice_errors(text, message):
    with pytest.raises(DataError, match=message):
        dataset_from_text(text)


@pytest.mark.parametrize(
    "times, message",
    [
        ("menu_id,decision_time\nzz,1\n", "missing from choices"),
        ("menu_id,decision_time\nm,-1\n", "negative"),
        ("menu_id,decision_time\nm,1\nm,2\n", "duplicate menu"),
        ("menu_id,time\nm,1\n", "expected header"),
    ],
)
def test_time_errors(times, message):
    with pytest.raises(DataError, match=message):
        dataset_from_text(HEAD + "m,A,1\n", times)


def test_normalization_tolerance():
    d = dataset_from_text(HEAD + "m,A,0.3333333333\nm,B,0.6666666667\n")
    assert sum(d.distribution({"A", "B"})) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(DataError):
        dataset_from_text(HEAD + "m,A,0.333\nm,B,0.666\n")


def test_dataset_validation():
    with pytest.raises(DataError, match="do not match"):
        Dataset({frozenset({"A", "B"}): {"A": 1.0}})
    with pytest.raises(DataError, match="unknown menu"):
        Dataset({frozenset({"A"}): {"A": 1.0}}, {frozenset({"B"}): 0.5})
    with pytest.raises(DataError, match="must be >= 0"):
        Dataset({frozenset({"A"}): {"A": 1.0}}, {frozenset({"A"}): -0.5})
    with pytest.raises(DataError, match="no menus"):
        Dataset({})


def test_off_menu_probability_is_zero():
    d = figure_dataset("fig1")
    assert d.prob({"Airplane", "Bus"}, "Car") == 0.0
    assert d.prob_of({"Airplane", "Bus", "Car"}, {"Airplane", "Bus"}) == pytest.approx(0.4)


def test_subset_and_with_times():
    d = figure_dataset("fig1")
    small = d.subset([frozenset({"Bus"}), frozenset({"Train"})])
    assert small.menus == [frozenset({"Bus"}), frozenset({"Train"})]
    assert small.with_times({}).tau == {}


def test_menus_file():
    menus = parse_menus_csv("menu_id,alternative_id\nx,A\nx,B\ny,C\n")
    assert menus == [("x", frozenset({"A", "B"})), ("y", frozenset({"C"}))]
    with pytest.raises(DataError, match="duplicate"):
        parse_menus_csv("menu_id,alternative_id\nx,A\nx,A\n")
    with pytest.raises(DataError, match="no menus"):
        parse_menus_csv("menu_id,alternative_id\n")


def test_tolerances_non_negative():
    with pytest.raises(ValueError):
        ToleranceConfig(eps_ratio=-1)


@given(st.lists(st.floats(0.01, 1.0), min_size=1, max_size=6))
def test_menus_are_ordered_and_normalized(raw):
    total = sum(raw)
    probs = {f"x{i}": v / total for i, v in enumerate(raw)}
    menu = frozenset(probs)
    d = Dataset({menu: probs, frozenset({"x0"}): {"x0": 1.0}})
    assert abs(sum(d.distribution(menu)) - 1.0) <= 1e-12
    assert d.menus == sorted(d.menus, key=lambda m: sorted(m))
