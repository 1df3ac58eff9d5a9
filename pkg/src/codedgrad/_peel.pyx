# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled peeling kernel for erasure decoding on a bipartite check graph.

Resolves one erased symbol per degree-one check; work is linear in the
number of edges. Interface mirrors codedgrad._peel_py.peel_kernel.
"""

import numpy as np

cimport numpy as cnp


def peel_kernel(
    cnp.int32_t[::1] check_indptr,
    cnp.int32_t[::1] check_cols,
    cnp.int32_t[::1] var_indptr,
    cnp.int32_t[::1] var_checks,
    cnp.uint8_t[::1] erased,
    cnp.float64_t[:, ::1] symbols,
):
    """Peel in place; returns (steps, residual_erasures)."""
    cdef Py_ssize_t n_checks = check_indptr.shape[0] - 1
    cdef Py_ssize_t n_vars = var_indptr.shape[0] - 1
    cdef Py_ssize_t n_rows = symbols.shape[1]

    cdef cnp.int32_t[::1] erased_count = np.zeros(n_checks, dtype=np.int32)
    # Each decrement pushes at most once, so edges + initial checks bounds the stack.
    cdef cnp.int32_t[::1] stack = np.empty(
        check_cols.shape[0] + n_checks, dtype=np.int32
    )
    cdef Py_ssize_t top = 0
    cdef Py_ssize_t c, v, j, r, c2, jj
    cdef Py_ssize_t steps = 0
    cdef Py_ssize_t remaining = 0
    cdef double acc

    for v in range(n_vars):
        if erased[v]:
            remaining += 1

    for c in range(n_checks):
        for j in range(check_indptr[c], check_indptr[c + 1]):
            if erased[check_cols[j]]:
                erased_count[c] += 1
        if erased_count[c] == 1:
            stack[top] = <cnp.int32_t> c
            top += 1

    while top > 0 and remaining > 0:
        top -= 1
        c = stack[top]
        if erased_count[c] != 1:
            continue
        v = -1
        for j in range(check_indptr[c], check_indptr[c + 1]):
            if erased[check_cols[j]]:
                v = check_cols[j]
                break
        if v < 0:
            continue
        for r in range(n_rows):
            acc = 0.0
            for j in range(check_indptr[c], check_indptr[c + 1]):
                jj = check_cols[j]
                if jj != v:
                    acc += symbols[jj, r]
            symbols[v, r] = -acc
        erased[v] = 0
        remaining -= 1
        steps += 1
        for j in range(var_indptr[v], var_indptr[v + 1]):
            c2 = var_checks[j]
            erased_count[c2] -= 1
            if erased_count[c2] == 1:
                stack[top] = <cnp.int32_t> c2
                top += 1

    return steps, remaining
