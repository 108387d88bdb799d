"""Budget-aware value-tree search for tool-augmented question answering."""

from .budget import ActionCost, BudgetLedger, tier_limits
from .config import RunConfig, load_config
from .engine import RunResult, run_question, search
from .tree import SearchNode, ValueTree, create_root

__all__ = [
    "ActionCost",
    "BudgetLedger",
    "RunConfig",
    "RunResult",
    "SearchNode",
    "ValueTree",
    "create_root",
    "load_config",
    "run_question",
    "search",
    "tier_limits",
]

__version__ = "0.1.0"
