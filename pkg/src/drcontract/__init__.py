"""Optimal demand-response contracts on energy consumption and its volatility."""

from .core_model import ModelParams, two_usage_params, split_usages, nominal_params
from .contracts import Regime, solve

__all__ = ["ModelParams", "Regime", "two_usage_params", "solve", "split_usages", "nominal_params"]
__version__ = "0.1.0"
