"""Regular LDPC ensembles over the reals: sampling, peeling decode, BEC threshold.

The parity-check matrix H is binary, but its checks are read as real linear
constraints (the coordinates in each check sum to zero), so the peeling
decoder resolves real-valued payload symbols by exact subtraction. A real
systematic generator is derived from H so the code plugs into the generic
erasure machinery.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .codes import RANK_RTOL, ErasurePattern, LinearCode, erasure_solve
from .errors import ConstructionError, ParameterError, UnrecoverableErasureError
from .peeling import get_kernel

NULLSPACE_ATOL = 1e-9

_SAMPLE_RETRY_CAP = 2000


@dataclass(eq=False)
class LdpcCode:
    """A binary parity-check matrix plus its derived real systematic code."""

    N: int
    K: int
    H: np.ndarray
    code: LinearCode
    d_v: int | None = None
    d_c: int | None = None
    seed: int | None = None

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=np.uint8)
        if self.H.shape != (self.N - self.K, self.N):
            raise ParameterError(
                f"H shape {self.H.shape} != ({self.N - self.K}, {self.N})"
            )
        if self.d_v is not None and self.d_c is not None:
            if self.d_v * self.N != self.d_c * (self.N - self.K):
                raise ParameterError("socket counts disagree: d_v*N != d_c*(N-K)")
            if not np.all(self.H.sum(axis=0) == self.d_v):
                raise ParameterError(f"columns must have exactly {self.d_v} ones")
            if not np.all(self.H.sum(axis=1) == self.d_c):
                raise ParameterError(f"rows must have exactly {self.d_c} ones")
        residual = np.abs(self.H.astype(np.float64) @ self.code.generator.T).max()
        if residual > NULLSPACE_ATOL:
            raise ParameterError(
                f"generator is not in the null space of H (max residual {residual:.3e})"
            )
        self._adjacency = None

    def adjacency(self):
        """CSR-style (check->vars, var->checks) arrays for the peeling kernel."""
        if self._adjacency is None:
            H = self.H
            check_counts = H.sum(axis=1, dtype=np.int64)
            check_indptr = np.concatenate([[0], np.cumsum(check_counts)]).astype(np.int32)
            check_cols = np.nonzero(H)[1].astype(np.int32)
            var_counts = H.sum(axis=0, dtype=np.int64)
            var_indptr = np.concatenate([[0], np.cumsum(var_counts)]).astype(np.int32)
            var_checks = np.nonzero(H.T)[1].astype(np.int32)
            self._adjacency = (check_indptr, check_cols, var_indptr, var_checks)
        return self._adjacency


@dataclass
class PeelingResult:
    """Outcome of a peeling decode.

    message is None when the decoder halted on a stopping set, in which case
    residual_erasures counts the unresolved symbols.
    """

    message: np.ndarray | None
    residual_erasures: int
    peel_steps: int
    used_fallback: bool = False

    @property
    def success(self) -> bool:
        return self.message is not None


def sample_ldpc(
    N: int,
    K: int,
    d_v: int,
    d_c: int,
    seed: int,
    retry_cap: int = _SAMPLE_RETRY_CAP,
) -> LdpcCode:
    """Draw a (d_v, d_c)-regular parity-check matrix by the configuration model.

    Variable sockets are matched uniformly to check sockets; double edges are
    then removed by switching the variable endpoint of one duplicate with a
    random other edge, which preserves both degree sequences. Matchings that
    cannot be repaired, or whose matrix is row-rank deficient over the reals,
    are redrawn up to `retry_cap` times.
    """
    if N - K < 1:
        raise ParameterError("need at least one check: N - K >= 1")
    if d_v < 1 or d_c < 1:
        raise ParameterError("degrees must be positive")
    if d_v * N != d_c * (N - K):
        raise ParameterError(
            f"socket counts disagree: d_v*N = {d_v * N}, d_c*(N-K) = {d_c * (N - K)}"
        )
    if d_c > N or d_v > N - K:
        raise ParameterError("degrees exceed the graph size; no simple matrix exists")
    rng = np.random.default_rng(seed)
    n_checks = N - K
    n_edges = N * d_v
    var_sockets = np.repeat(np.arange(N, dtype=np.int64), d_v)
    check_of_edge = np.repeat(np.arange(n_checks, dtype=np.int64), d_c)
    for _ in range(retry_cap):
        edge_var = var_sockets[rng.permutation(n_edges)]
        if not _repair_double_edges(edge_var, check_of_edge, N, rng):
            continue
        H = np.zeros((n_checks, N), dtype=np.uint8)
        H[check_of_edge, edge_var] = 1
        try:
            generator, positions = _systematic_generator(H)
        except ConstructionError:
            continue
        code = LinearCode(
            N=N,
            K=K,
            generator=generator,
            systematic_positions=positions,
            kind="ldpc-derived",
        )
        return LdpcCode(N=N, K=K, H=H, code=code, d_v=d_v, d_c=d_c, seed=seed)
    raise ConstructionError(
        f"no simple full-rank ({d_v},{d_c}) matrix found in {retry_cap} attempts"
    )


def ldpc_from_parity(H, seed: int | None = None) -> LdpcCode:
    """Build an LdpcCode from an explicit binary parity-check matrix.

    Accepts irregular matrices; degree metadata is left unset unless the
    matrix is exactly regular.
    """
    H = np.asarray(H, dtype=np.uint8)
    if H.ndim != 2 or H.size == 0:
        raise ParameterError("H must be a nonempty 2-D binary matrix")
    n_checks, N = H.shape
    K = N - n_checks
    if K < 1:
        raise ParameterError("H must have fewer rows than columns")
    generator, positions = _systematic_generator(H)
    col_sums = np.unique(H.sum(axis=0))
    row_sums = np.unique(H.sum(axis=1))
    regular = len(col_sums) == 1 and len(row_sums) == 1
    code = LinearCode(
        N=N, K=K, generator=generator, systematic_positions=positions, kind="ldpc-derived"
    )
    return LdpcCode(
        N=N,
        K=K,
        H=H,
        code=code,
        d_v=int(col_sums[0]) if regular else None,
        d_c=int(row_sums[0]) if regular else None,
        seed=seed,
    )


def peel_decode(
    ldpc: LdpcCode,
    pattern: ErasurePattern,
    coded_matrix: np.ndarray,
    solver_fallback: bool = False,
    backend: str | None = None,
) -> PeelingResult:
    """Erasure-decode by peeling degree-one checks.

    Each step finds a check with a single erased coordinate and resolves it
    as the negated sum of the check's known coordinates; total work is linear
    in the number of parity edges per payload row. Halts on a stopping set
    (every incident check covers two or more erasures); with solver_fallback
    the dense erasure solver is then tried on the received columns.
    """
    coded = np.atleast_2d(np.asarray(coded_matrix, dtype=np.float64))
    received = np.asarray(pattern.received_indices, dtype=np.int64)
    if received.size and received[-1] > ldpc.N:
        raise ParameterError("received index exceeds block length")
    if coded.shape[1] != received.size:
        raise ParameterError(
            f"coded matrix has {coded.shape[1]} columns for {received.size} received indices"
        )
    n_rows = coded.shape[0]

    symbols = np.zeros((ldpc.N, n_rows))
    symbols[received - 1] = coded.T
    erased = np.ones(ldpc.N, dtype=np.uint8)
    erased[received - 1] = 0

    kernel = get_kernel(backend)
    steps, residual = kernel(*ldpc.adjacency(), erased, symbols)

    if residual == 0:
        positions = np.asarray(ldpc.code.systematic_positions, dtype=np.int64)
        return PeelingResult(
            message=symbols[positions - 1].T.copy(),
            residual_erasures=0,
            peel_steps=steps,
        )
    if solver_fallback:
        try:
            message = erasure_solve(ldpc.code, pattern, coded)
        except UnrecoverableErasureError:
            pass
        else:
            return PeelingResult(
                message=message,
                residual_erasures=0,
                peel_steps=steps,
                used_fallback=True,
            )
    return PeelingResult(message=None, residual_erasures=int(residual), peel_steps=steps)


@dataclass(frozen=True)
class TrialReport:
    """Aggregate outcome of repeated random-erasure peeling trials."""

    trials: int
    successes: int
    success_rate: float
    mean_erasures: float
    mean_peel_steps: float


def peeling_trial(
    ldpc: LdpcCode,
    p: float,
    trials: int,
    seed: int,
    backend: str | None = None,
) -> TrialReport:
    """Erase each coordinate i.i.d. with probability p and peel, `trials` times.

    Each trial encodes a fresh Gaussian message; success requires full
    peeling and message agreement within 1e-8.
    """
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"erasure probability must lie in [0, 1], got {p}")
    if trials < 1:
        raise ParameterError("need at least one trial")
    rng = np.random.default_rng(seed)
    successes = 0
    total_erasures = 0
    total_steps = 0
    for _ in range(trials):
        message = rng.standard_normal((1, ldpc.K))
        codeword = message @ ldpc.code.generator
        erased = rng.random(ldpc.N) < p
        total_erasures += int(erased.sum())
        received = np.nonzero(~erased)[0] + 1
        result = peel_decode(
            ldpc, ErasurePattern(received.tolist()), codeword[:, ~erased], backend=backend
        )
        total_steps += result.peel_steps
        if result.success and np.allclose(result.message, message, atol=1e-8):
            successes += 1
    return TrialReport(
        trials=trials,
        successes=successes,
        success_rate=successes / trials,
        mean_erasures=total_erasures / trials,
        mean_peel_steps=total_steps / trials,
    )


def bec_threshold(d_v: int, d_c: int, tolerance: float = 1e-5) -> float:
    """Peeling threshold p* of the (d_v, d_c) ensemble on the erasure channel.

    Bisects on the channel erasure probability; a candidate is decodable when
    the density-evolution map x <- eps*(1 - (1-x)**(d_c-1))**(d_v-1), started
    at x = eps, iterates to zero.
    """
    if d_v < 2 or d_c < 2:
        raise ParameterError("density evolution needs d_v, d_c >= 2")
    if tolerance <= 0:
        raise ParameterError("tolerance must be positive")
    lo, hi = 0.0, 1.0
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if _erasure_iteration_dies(mid, d_v, d_c):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def ldpc_to_json(ldpc: LdpcCode) -> dict:
    """Sparse JSON document: per-check lists of (1-based) variable indices."""
    rows = [(np.nonzero(row)[0] + 1).tolist() for row in ldpc.H]
    doc = {"N": ldpc.N, "K": ldpc.K, "rows": rows}
    if ldpc.d_v is not None:
        doc["d_v"] = ldpc.d_v
    if ldpc.d_c is not None:
        doc["d_c"] = ldpc.d_c
    if ldpc.seed is not None:
        doc["seed"] = ldpc.seed
    return doc


def ldpc_from_json(doc: dict) -> LdpcCode:
    try:
        N = int(doc["N"])
        K = int(doc["K"])
        rows = doc["rows"]
    except KeyError as exc:
        raise ParameterError(f"LDPC document missing field {exc}") from exc
    H = np.zeros((N - K, N), dtype=np.uint8)
    for r, cols in enumerate(rows):
        for c in cols:
            if not 1 <= c <= N:
                raise ParameterError(f"column index {c} out of [1, {N}]")
            H[r, c - 1] = 1
    return ldpc_from_parity(H, seed=doc.get("seed"))


def _repair_double_edges(edge_var, check_of_edge, N, rng, sweeps: int = 200) -> bool:
    """Switch duplicate (check, var) edges with random partners, in place."""
    n_edges = edge_var.shape[0]
    for _ in range(sweeps):
        keys = check_of_edge * N + edge_var
        order = np.argsort(keys, kind="stable")
        dup = order[1:][keys[order][1:] == keys[order][:-1]]
        if dup.size == 0:
            return True
        for i in dup:
            j = int(rng.integers(n_edges))
            edge_var[i], edge_var[j] = edge_var[j], edge_var[i]
    return False


def _systematic_generator(H: np.ndarray):
    """Real systematic generator of the null space of binary H.

    QR with column pivoting picks a well-conditioned invertible column set P;
    the remaining (free) columns carry the message. Raises ConstructionError
    when H is row-rank deficient over the reals.
    """
    n_checks, N = H.shape
    K = N - n_checks
    Hf = H.astype(np.float64)
    R, piv = scipy.linalg.qr(Hf, mode="r", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size < n_checks or diag[-1] <= RANK_RTOL * diag[0]:
        raise ConstructionError("parity-check matrix is row-rank deficient over the reals")
    pivot_cols = np.sort(piv[:n_checks])
    free_cols = np.sort(piv[n_checks:])
    # Null-space completion: H_P c_P = -H_F c_F, message on the free columns.
    X = np.linalg.solve(Hf[:, pivot_cols], -Hf[:, free_cols])
    G = np.zeros((K, N))
    G[np.arange(K), free_cols] = 1.0
    G[:, pivot_cols] = X.T
    return G, tuple(int(c) + 1 for c in free_cols)


def _erasure_iteration_dies(
    eps: float, d_v: int, d_c: int, target: float = 1e-8, max_iter: int = 500_000
) -> bool:
    """True when density evolution drives the erasure fraction to zero."""
    dc1, dv1 = d_c - 1, d_v - 1
    x = eps
    for _ in range(max_iter):
        xn = eps * (1.0 - (1.0 - x) ** dc1) ** dv1
        if xn < target:
            return True
        if x - xn < 1e-15:
            return False
        x = xn
    return False
