"""Numeric checks of the Poincare inequalities and the uniqueness sets.

    python3 demos/theory_checks.py

Walks through the small worked graphs, then runs a randomized sweep with
both norm conventions for the wavelet operator: the stacked form (the
norm of the vector of polynomial terms) holds, while summing the terms
before taking the norm can fail once coefficients cancel.
"""

import numpy as np

from msimap.pw_verify import (
    STACKED,
    SUMMED,
    PolynomialOperator,
    enumerate_lambda_sets,
    find_lambda_set,
    lambda_psi,
    path_graph,
    poincare_sweep,
    star_graph,
    uniqueness_rank_check,
    verify_poincare_laplacian,
    verify_poincare_sgw,
)


def show_graph(name, g):
    ls = find_lambda_set(g)
    size, _ = enumerate_lambda_sets(g)
    rep = verify_poincare_laplacian(g, ls.S, 1000, seed=0)
    print(f"{name}: greedy S={list(ls.S)} (largest valid size {size}), d(G)={ls.lam:g}, "
          f"max ||phi||/||L phi|| = {rep.max_ratio:.4f}, exact {rep.exact_ratio:.4f}")
    return ls


def main():
    g = path_graph(3)
    ls = show_graph("path a-b-c", g)
    for coeffs in [(0, 1), (1, 0), (1, 1), (1, -1)]:
        op = PolynomialOperator(coeffs)
        lp = lambda_psi(op, ls.lam)
        st = verify_poincare_sgw(g, ls.S, op, 1000, norm=STACKED)
        su = verify_poincare_sgw(g, ls.S, op, 1000, norm=SUMMED)
        omega = (1 / lp) * (1 - 1e-9)
        print(f"  a={coeffs}: Lambda_psi={lp:.4f}  stacked violations={st.violations}  "
              f"summed violations={su.violations}  U={list(ls.U)} unique below 1/Lambda_psi: "
              f"{uniqueness_rank_check(g, omega, ls.U)}")
    show_graph("star K1,4", star_graph(5))
    show_graph("K2", path_graph(2))

    for norm in (STACKED, SUMMED):
        res = poincare_sweep(10_000, seed=0, norm=norm)
        print(f"sweep ({norm}): {res.trials} trials, Laplacian violations {res.laplacian_violations}, "
              f"wavelet violations {res.sgw_violations}, uniqueness "
              f"{res.uniqueness_checked - res.uniqueness_failures}/{res.uniqueness_checked}")


if __name__ == "__main__":
    np.set_printoptions(precision=4)
    main()
