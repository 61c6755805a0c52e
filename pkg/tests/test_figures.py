import itertools

import pytest

from procmix.dataset import DataError
from procmix.figures import FIGURES, figure_model, figure_text, reproduce
from procmix.models import NestedLuceHickModel
from procmix.synthetic import nested_design, nested_model, random_luce_hick, random_menus, smooth_map


@pytest.mark.parametrize("name, rows, worst", [("fig1", 8, 0.029), ("fig2", 9, 0.036)])
def test_reproduction(name, rows, worst):
    rep = reproduce(name)
    assert len(rep.rows) == rows
    assert rep.passed
    assert rep.max_deviation == pytest.approx(worst, abs=1e-3)
    for row in rep.rows:
        assert sum(row["probabilities"]) == pytest.approx(1.0, abs=1e-12)
        assert row["probabilities"] == pytest.approx(row["observed_probabilities"], abs=1e-9)


def test_unknown_figure():
    assert FIGURES == ("fig1", "fig2")
    with pytest.raises(DataError, match="unknown figure"):
        reproduce("fig3")
    with pytest.raises(ValueError):
        figure_text("fig1", "menus")


def test_fig2_model_shape():
    m = figure_model("fig2")
    assert isinstance(m, NestedLuceHickModel)
    assert m.r == 1.0 and set(m.r_S.values()) == {1.0}
    assert m.t_S[("BlueBus", "RedBus")](1.0) == 0.5


def test_random_menus():
    menus = random_menus("abcdef", 40, sizes=(2, 4), seed=1)
    assert len(set(menus)) == 40
    assert all(2 <= len(m) <= 4 for m in menus)
    assert menus == random_menus("abcdef", 40, sizes=(2, 4), seed=1)
    with pytest.raises(ValueError, match="distinct menus exist"):
        random_menus("abc", 8)
    with pytest.raises(ValueError):
        random_menus("abc", 1, sizes=(0, 2))


def test_random_luce_hick():
    m = random_luce_hick(2.0, n_outcomes=5, seed=4)
    assert len(m.luce.v) == 5 and m.r == 2.0
    assert m.luce.v == random_luce_hick(2.0, n_outcomes=5, seed=4).luce.v


def test_smooth_map():
    f = smooth_map(lambda u: u**3 + u, 0, 2, 50)
    assert f(1.0) == pytest.approx(2.0, abs=1e-2)


def test_nested_model_values_are_powers_of_sums():
    m = nested_model(seed=0)
    assert [len(c) for c in m.partition] == [10, 10, 10]
    cat = m.partition[0]
    sub = frozenset(cat[:3])
    assert m.value_of(sub) == pytest.approx(sum(m.within_v[x] for x in sub) ** 0.5)
    assert [m.r_S[c] for c in m.partition] == [0.7, 1.0, 2.2]


def test_nested_design():
    m = nested_model(seed=0)
    menus = nested_design(m, seed=0)
    assert len(menus) == len(set(menus)) == 312
    assert sum(len(x) == 1 for x in menus) == 30
    cat_of = {x: i for i, c in enumerate(m.partition) for x in c}
    cross = [x for x in menus if len({cat_of[y] for y in x}) == len(x) > 1]
    assert len(cross) >= 60
    for a, b in itertools.combinations(m.partition, 2):
        assert not any(x <= frozenset(a + b) and x & frozenset(a) and x & frozenset(b) and len(x) > 3
                       for x in menus)
