"""Property language and exact checker."""
from .checker import CheckResult, UnknownReward, check, check_text, expected_cumulative_reward
from .formula import FormulaSyntaxError, FragmentUnsupported, parse_formula
from .states import UnknownName

__all__ = [
    "CheckResult",
    "FormulaSyntaxError",
    "FragmentUnsupported",
    "UnknownName",
    "UnknownReward",
    "check",
    "check_text",
    "expected_cumulative_reward",
    "parse_formula",
]
