from .bnb import branch_and_bound, solve_lp
from .lpformat import (InfeasibleAssignment, LPFormatError, export_model, from_lp_text, import_model,
                       import_solution, to_lp_text, write_solution)
from .model import FEAS_TOL, LinExpr, MilpModel, ModelError, Solution

__all__ = [
    "FEAS_TOL", "InfeasibleAssignment", "LPFormatError", "LinExpr", "MilpModel", "ModelError",
    "Solution", "branch_and_bound", "export_model", "from_lp_text", "import_model",
    "import_solution", "solve_lp", "to_lp_text", "write_solution",
]
