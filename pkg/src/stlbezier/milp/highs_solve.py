"""Reference external solver: ``python3 -m stlbezier.milp.highs_solve model.lp out.sol``.

Reads an LP text file with HiGHS's own reader, solves it as a MILP and writes
``name value`` lines. Exit status 0 on a proven optimum, 2 when infeasible and
4 otherwise; after a limit the best incumbent, if any, is still written.
"""
from __future__ import annotations

import argparse
import sys


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="highs_solve")
    ap.add_argument("lp")
    ap.add_argument("solution")
    ap.add_argument("--time-limit", type=float, default=None)
    ap.add_argument("--gap", type=float, default=1e-6)
    args = ap.parse_args(argv)

    import highspy

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("threads", 1)
    h.setOptionValue("random_seed", 0)
    h.setOptionValue("mip_rel_gap", args.gap)
    h.setOptionValue("mip_feasibility_tolerance", 1e-9)
    h.setOptionValue("primal_feasibility_tolerance", 1e-9)
    if args.time_limit:
        h.setOptionValue("time_limit", args.time_limit)
    if h.readModel(args.lp) != highspy.HighsStatus.kOk:
        print(f"cannot read {args.lp}", file=sys.stderr)
        return 4
    h.run()
    status = h.getModelStatus()
    S = highspy.HighsModelStatus
    if status == S.kInfeasible:
        return 2
    sol = h.getSolution()
    if not sol.value_valid:
        return 4
    names = h.getLp().col_names_
    with open(args.solution, "w") as fh:
        for name, v in zip(names, sol.col_value):
            fh.write(f"{name} {float(v)!r}\n")
    return 0 if status == S.kOptimal else 4


if __name__ == "__main__":
    sys.exit(main())
