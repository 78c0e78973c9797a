"""Dense tableau primal simplex for ``max c.x  s.t.  A x <= b, x >= 0`` with ``b >= 0``.

The slack basis is feasible from the start, so only phase 2 is needed.
Entering variable by Dantzig's rule; after a run of degenerate pivots the
rule switches to Bland's (lowest index) until progress resumes.
"""
from __future__ import annotations

import numpy as np

OPTIMAL = "optimal"
UNBOUNDED = "unbounded"
INFEASIBLE = "infeasible"
ITERATION_LIMIT = "iteration_limit"


def simplex_max(c, A, b, eps=1e-11, max_iter=None, degenerate_switch=50):
    """Return ``(status, x, objective, iterations)``."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    if np.any(b < 0):
        return INFEASIBLE, None, np.nan, 0
    if max_iter is None:
        max_iter = 50 * (m + n) + 1000

    tab = np.zeros((m + 1, n + m + 1))
    tab[:m, :n] = A
    tab[:m, n:n + m] = np.eye(m)
    tab[:m, -1] = b
    # objective row holds reduced costs of a maximisation problem
    tab[m, :n] = c
    basis = np.arange(n, n + m)

    degenerate_run = 0
    it = 0
    while it < max_iter:
        rc = tab[m, :-1]
        if degenerate_run >= degenerate_switch:
            cand = np.flatnonzero(rc > eps)
            if cand.size == 0:
                break
            j = int(cand[0])
        else:
            j = int(np.argmax(rc))
            if rc[j] <= eps:
                break
        col = tab[:m, j]
        pos = col > eps
        if not pos.any():
            return UNBOUNDED, None, np.inf, it
        ratios = np.full(m, np.inf)
        ratios[pos] = tab[:m, -1][pos] / col[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + eps * max(1.0, abs(best)))
        # Bland tie-break on the leaving variable
        i = int(ties[np.argmin(basis[ties])])

        degenerate_run = degenerate_run + 1 if best <= eps else 0
        piv = tab[i, j]
        tab[i] /= piv
        others = tab[:, j].copy()
        others[i] = 0.0
        tab -= np.outer(others, tab[i])
        basis[i] = j
        it += 1
    else:
        return ITERATION_LIMIT, None, np.nan, it

    x = np.zeros(n + m)
    x[basis] = tab[:m, -1]
    x = np.maximum(x[:n], 0.0)
    return OPTIMAL, x, float(c @ x), it
