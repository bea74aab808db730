#!/usr/bin/env python3
"""Solve an LP file with HiGHS and write `name value` solution lines.

Usage: highs_solve.py MODEL.lp SOLUTION.sol [time-limit-seconds]

The first line of the solution file is the model status as reported by
HiGHS ("Optimal", "Infeasible", ...). Values follow only when a primal
solution exists.
"""

import sys

import highspy


def main():
    if len(sys.argv) < 3:
        sys.exit(__doc__)
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("threads", 1)
    if len(sys.argv) > 3:
        h.setOptionValue("time_limit", float(sys.argv[3]))
    if h.readModel(sys.argv[1]) != highspy.HighsStatus.kOk:
        sys.exit(f"cannot read {sys.argv[1]}")
    h.run()
    status = h.getModelStatus()
    info = h.getInfo()
    with open(sys.argv[2], "w") as out:
        text = h.modelStatusToString(status)
        # "Time limit reached" with an incumbent is still a usable feasible point.
        has_point = info.primal_solution_status == 2
        if status == highspy.HighsModelStatus.kOptimal:
            out.write("Optimal\n")
        elif status == highspy.HighsModelStatus.kInfeasible:
            out.write("Infeasible\n")
        elif has_point:
            out.write(f"Feasible ({text})\n")
        else:
            out.write(f"Error: {text}\n")
        if has_point:
            out.write(f"objective {info.objective_function_value!r}\n")
            names = h.getLp().col_names_
            for name, value in zip(names, h.getSolution().col_value):
                out.write(f"{name} {value!r}\n")


if __name__ == "__main__":
    main()
