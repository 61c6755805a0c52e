"""Procedural mixtures, entropy-based decision times and Luce-Hick choice models."""

from .comparative import (
    MixingSign,
    certainty_equivalent_utility,
    higher_value_of_mixing_witness,
    is_weakly_more_consequentialist,
    is_weakly_more_risk_averse,
    self_mix_sequence,
    value_of_mixing_sign,
)
from .dataset import Dataset, DataError, ToleranceConfig, load_dataset
from .entropy import EntropyParams, entropy_H, eval_U_canonical, eval_U_tree, renyi_R
from .estimation import FitConfig, FitResult, estimate_nested, estimate_r, simulate
from .models import (
    LuceHickModel,
    LuceModel,
    MonotoneMap,
    NestedLuceHickModel,
    predict_p,
    predict_time,
    predict_time_nested,
)
from .process import Leaf, Mix, canonicalize, mix, parse_process

__version__ = "0.1.0"

__all__ = [
    "MixingSign",
    "certainty_equivalent_utility",
    "higher_value_of_mixing_witness",
    "is_weakly_more_consequentialist",
    "is_weakly_more_risk_averse",
    "self_mix_sequence",
    "value_of_mixing_sign",
    "Dataset",
    "DataError",
    "ToleranceConfig",
    "load_dataset",
    "EntropyParams",
    "entropy_H",
    "eval_U_canonical",
    "eval_U_tree",
    "renyi_R",
    "FitConfig",
    "FitResult",
    "estimate_nested",
    "estimate_r",
    "simulate",
    "LuceHickModel",
    "LuceModel",
    "MonotoneMap",
    "NestedLuceHickModel",
    "predict_p",
    "predict_time",
    "predict_time_nested",
    "Leaf",
    "Mix",
    "canonicalize",
    "mix",
    "parse_process",
]
