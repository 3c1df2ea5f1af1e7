from .formula import (And, Always, Eventually, FalseF, Formula, Interval, NegPred, Not, Or, Pred,
                      TrueF, UnsupportedConstruct, Until, count_disjunctions, formula_horizon,
                      formula_size, is_nnf, to_nnf, to_text)
from .parser import STLSyntaxError, parse
from .robustness import TraceTooShort, robustness_signal, sampled_robustness

__all__ = [
    "And", "Always", "Eventually", "FalseF", "Formula", "Interval", "NegPred", "Not", "Or",
    "Pred", "TrueF", "Until", "UnsupportedConstruct", "STLSyntaxError", "TraceTooShort",
    "count_disjunctions", "formula_horizon", "formula_size", "is_nnf", "parse",
    "robustness_signal", "sampled_robustness", "to_nnf", "to_text",
]
