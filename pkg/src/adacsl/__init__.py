"""Budget-constrained cost-sensitive classification with adaptive cost tuning."""

from .adaptive import AdaptiveConfig, AdaptiveResult, AdaptiveTrace, apply_to_test, fit_adaptive, project_budget
from .core import BudgetSpec, ConfusionCounts, CostMatrix, Dataset, confusion, metrics, total_cost
from .threshold import ThresholdPair, classifier_threshold, classify_with_budget, static_threshold, tie_proportion
from .tree import LeafGrouping, TreeModel, TreeParams, fit, leaf_groups, load, persist, score

__version__ = "0.1.0"
