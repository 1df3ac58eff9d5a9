"""Pure Python peeling kernel, used when the compiled extension is absent.

Same contract as codedgrad._peel.peel_kernel: resolve one erased symbol per
degree-one check until done or stuck; mutates `erased` and `symbols` in place.
"""

import numpy as np


def peel_kernel(check_indptr, check_cols, var_indptr, var_checks, erased, symbols):
    """Peel in place; returns (steps, residual_erasures)."""
    n_checks = len(check_indptr) - 1

    erased_count = np.zeros(n_checks, dtype=np.int32)
    for c in range(n_checks):
        lo, hi = check_indptr[c], check_indptr[c + 1]
        erased_count[c] = int(erased[check_cols[lo:hi]].sum())
    stack = [c for c in range(n_checks) if erased_count[c] == 1]
    remaining = int(np.count_nonzero(erased))
    steps = 0

    while stack and remaining > 0:
        c = stack.pop()
        if erased_count[c] != 1:
            continue
        lo, hi = check_indptr[c], check_indptr[c + 1]
        neighbors = check_cols[lo:hi]
        v = -1
        for u in neighbors:
            if erased[u]:
                v = u
                break
        if v < 0:
            continue
        acc = symbols[neighbors].sum(axis=0) - symbols[v]
        symbols[v] = -acc
        erased[v] = 0
        remaining -= 1
        steps += 1
        for c2 in var_checks[var_indptr[v]:var_indptr[v + 1]]:
            erased_count[c2] -= 1
            if erased_count[c2] == 1:
                stack.append(int(c2))

    return steps, remaining
