"""Built-in travel-mode datasets and the models that generate their times.

``fig1`` is a Luce-Hick dataset (airplane, bus, car, train, with a
duplicated bus menu); ``fig2`` adds a red bus next to the blue one and is
generated by a nested model with a faster within-category decision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources

from .dataset import DataError, Dataset, dataset_from_text, menu_key
from .estimation import fit_choice_values
from .models import (
    LuceHickModel,
    MonotoneMap,
    NestedLuceHickModel,
    fit_luce,
    predict_p,
    predict_time,
    predict_time_nested,
)

__all__ = [
    "FIGURES",
    "Reproduction",
    "figure_text",
    "figure_dataset",
    "figure_model",
    "reproduce",
]

FIGURES = ("fig1", "fig2")
TOLERANCE = 0.05
FIG2_PARTITION = (("Airplane",), ("BlueBus", "RedBus"), ("Car",))


def _check(name: str) -> None:
    if name not in FIGURES:
        raise DataError(f"unknown figure {name!r}; choose from {', '.join(FIGURES)}")


def figure_text(name: str, kind: str) -> str:
    """Raw CSV text of a built-in file; ``kind`` is ``choices`` or ``times``."""
    _check(name)
    if kind not in ("choices", "times"):
        raise ValueError("kind must be 'choices' or 'times'")
    return resources.files("procmix.data").joinpath(f"{name}_{kind}.csv").read_text(encoding="utf-8")


def figure_dataset(name: str) -> Dataset:
    return dataset_from_text(figure_text(name, "choices"), figure_text(name, "times"))


def _seconds_of_entropy() -> MonotoneMap:
    # 0.5 s base time plus one second per bit
    return MonotoneMap.linear(0.5, 1.0 / math.log(2.0))


def figure_model(name: str) -> LuceHickModel | NestedLuceHickModel:
    """Generating model; choice values come from the figure's own choice data."""
    _check(name)
    d = figure_dataset(name)
    if name == "fig1":
        return LuceHickModel(fit_luce(d, "Bus"), 1.0, _seconds_of_entropy())
    within_v, category_value = fit_choice_values(d, FIG2_PARTITION)
    return NestedLuceHickModel(
        partition=FIG2_PARTITION,
        within_v=within_v,
        r=1.0,
        r_S={c: 1.0 for c in FIG2_PARTITION},
        t_S={c: MonotoneMap.linear(0.0, 0.5) for c in FIG2_PARTITION},
        time_of_entropy=_seconds_of_entropy(),
        category_value=category_value,
    )


@dataclass
class Reproduction:
    figure: str
    rows: list[dict]

    @property
    def max_deviation(self) -> float:
        return max(row["deviation"] for row in self.rows)

    @property
    def passed(self) -> bool:
        return self.max_deviation <= TOLERANCE


def reproduce(name: str) -> Reproduction:
    """Predicted against tabulated decision times for every menu of a figure."""
    d = figure_dataset(name)
    m = figure_model(name)
    rows = []
    for menu in d.timed_menus():
        if isinstance(m, NestedLuceHickModel):
            t = predict_time_nested(m, menu)
        else:
            t = predict_time(m, menu)
        p = predict_p(m, menu)
        rows.append({
            "menu": d.name(menu),
            "alternatives": list(menu_key(menu)),
            "probabilities": [p[x] for x in menu_key(menu)],
            "observed_probabilities": [d.prob(menu, x) for x in menu_key(menu)],
            "predicted_time": t,
            "observed_time": d.tau[menu],
            "deviation": abs(t - d.tau[menu]),
        })
    return Reproduction(name, rows)
