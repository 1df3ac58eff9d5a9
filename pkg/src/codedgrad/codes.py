"""Linear codes over the reals: constructors, distance certification, erasure solving.

A code is an [N, K] row space of a K x N generator matrix G with rank K.
Minimum distance d is the least Hamming weight of a nonzero codeword; codes
with d = N - K + 1 meet the Singleton bound (MDS). Column indices in the
public API are 1-based throughout this library.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConstructionError,
    ParameterError,
    UnrecoverableErasureError,
    UnsupportedSizeError,
)

# A column subset counts as rank deficient when its smallest singular value
# falls below this fraction of the largest one.
RANK_RTOL = 1e-9

# Brute-force distance certification is capped at this block length.
MIN_DISTANCE_MAX_N = 20

# Block lengths up to this bound get their MDS property verified at construction.
MDS_VERIFY_MAX_N = 12

_MDS_RESAMPLE_CAP = 10


@dataclass(eq=False)
class LinearCode:
    """An [N, K] real linear code described by its generator matrix.

    systematic_positions, when set, lists the K (1-based) columns where the
    generator restricted to them is exactly the identity. min_distance is
    cached once certified.
    """

    N: int
    K: int
    generator: np.ndarray
    systematic_positions: tuple[int, ...] | None = None
    min_distance: int | None = None
    kind: str = "custom"

    def __post_init__(self):
        if self.K < 1 or self.N < self.K:
            raise ParameterError(f"need 1 <= K <= N, got K={self.K}, N={self.N}")
        self.generator = np.asarray(self.generator, dtype=np.float64)
        if self.generator.shape != (self.K, self.N):
            raise ParameterError(
                f"generator shape {self.generator.shape} != ({self.K}, {self.N})"
            )
        sv = np.linalg.svd(self.generator, compute_uv=False)
        if sv[-1] <= RANK_RTOL * sv[0]:
            raise ParameterError("generator matrix is rank deficient")
        if self.systematic_positions is not None:
            self.systematic_positions = tuple(int(i) for i in self.systematic_positions)
            if len(self.systematic_positions) != self.K:
                raise ParameterError("systematic_positions must list K columns")
            sub = self.generator[:, [i - 1 for i in self.systematic_positions]]
            if not np.array_equal(sub, np.eye(self.K)):
                raise ParameterError("systematic columns do not form the identity")
        if self.min_distance is not None and self.min_distance > self.N - self.K + 1:
            raise ParameterError("min_distance violates the Singleton bound")

    def column(self, j: int) -> np.ndarray:
        """The j-th generator column (1-based)."""
        if not 1 <= j <= self.N:
            raise ParameterError(f"column index {j} out of [1, {self.N}]")
        return self.generator[:, j - 1]


@dataclass(frozen=True)
class ErasurePattern:
    """The set of (1-based) codeword positions that survived erasure."""

    received_indices: tuple[int, ...]

    def __init__(self, received_indices):
        indices = tuple(sorted(int(i) for i in received_indices))
        if len(set(indices)) != len(indices):
            raise ParameterError("received indices must be distinct")
        if indices and indices[0] < 1:
            raise ParameterError("received indices are 1-based")
        object.__setattr__(self, "received_indices", indices)

    @property
    def t(self) -> int:
        return len(self.received_indices)


def make_gaussian_code(N: int, K: int, seed: int) -> LinearCode:
    """Random code whose generator has i.i.d. standard normal entries."""
    _check_dims(N, K)
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((K, N))
    return LinearCode(N=N, K=K, generator=G, kind="gaussian")


def make_systematic_mds(N: int, K: int, seed: int) -> LinearCode:
    """Systematic MDS code G = [I | P] with a Gaussian parity block.

    Gaussian parity blocks are MDS with probability 1; for N up to
    MDS_VERIFY_MAX_N the distance is certified brute force and degenerate
    draws are resampled.
    """
    _check_dims(N, K)
    rng = np.random.default_rng(seed)
    for _ in range(_MDS_RESAMPLE_CAP + 1):
        P = rng.standard_normal((K, N - K))
        G = np.hstack([np.eye(K), P])
        code = LinearCode(
            N=N,
            K=K,
            generator=G,
            systematic_positions=tuple(range(1, K + 1)),
            min_distance=N - K + 1,
            kind="systematic-mds",
        )
        if N > MDS_VERIFY_MAX_N:
            return code
        code.min_distance = None
        if min_distance(code) == N - K + 1:
            code.min_distance = N - K + 1
            return code
    raise ConstructionError(
        f"failed to draw an MDS [{N}, {K}] parity block in {_MDS_RESAMPLE_CAP} resamples"
    )


def make_repetition_code(N: int) -> LinearCode:
    """The [N, 1, N] all-ones repetition code."""
    if N < 1:
        raise ParameterError(f"need N >= 1, got {N}")
    return LinearCode(
        N=N,
        K=1,
        generator=np.ones((1, N)),
        systematic_positions=(1,),
        min_distance=N,
        kind="repetition",
    )


def make_vandermonde_code(N: int, K: int, evaluation_points=None) -> LinearCode:
    """MDS code with G[i][j] = x_j**(i-1) over distinct evaluation points.

    Defaults to points 0, 1, ..., N-1.
    """
    _check_dims(N, K)
    if evaluation_points is None:
        evaluation_points = np.arange(N, dtype=np.float64)
    points = np.asarray(evaluation_points, dtype=np.float64)
    if points.shape != (N,):
        raise ParameterError(f"need {N} evaluation points, got shape {points.shape}")
    if len(np.unique(points)) != N:
        raise ParameterError("evaluation points must be distinct")
    G = np.vander(points, K, increasing=True).T
    return LinearCode(N=N, K=K, generator=G, min_distance=N - K + 1, kind="vandermonde")


def min_distance(code: LinearCode) -> int:
    """Certify the minimum distance by exhausting column subsets.

    d = N - max{|S| : rank(G_S) < K}; subsets are scanned in decreasing size,
    stopping at the first rank-deficient one. Any subset smaller than K is
    deficient automatically, so the scan runs over sizes N-1 down to K.
    Exponential; refuses block lengths above MIN_DISTANCE_MAX_N.
    """
    if code.min_distance is not None:
        return code.min_distance
    if code.N > MIN_DISTANCE_MAX_N:
        raise UnsupportedSizeError(
            f"brute-force distance certification capped at N={MIN_DISTANCE_MAX_N}"
        )
    G = code.generator
    dist = code.N - code.K + 1  # reached when no size >= K subset is deficient
    for size in range(code.N - 1, code.K - 1, -1):
        found = False
        for subset in itertools.combinations(range(code.N), size):
            sv = np.linalg.svd(G[:, subset], compute_uv=False)
            if sv[-1] <= RANK_RTOL * sv[0]:
                found = True
                break
        if found:
            dist = code.N - size
            break
    code.min_distance = dist
    return dist


def erasure_solve(
    code: LinearCode, pattern: ErasurePattern, coded_matrix: np.ndarray
) -> np.ndarray:
    """Recover the message matrix M from M @ G_T = coded_matrix.

    coded_matrix carries one column per received index. Exactly determined
    systems go through LU; overdetermined ones through least squares, whose
    residual must vanish since consistent inputs are the contract.
    """
    coded = np.atleast_2d(np.asarray(coded_matrix, dtype=np.float64))
    t = pattern.t
    if pattern.received_indices and pattern.received_indices[-1] > code.N:
        raise ParameterError("received index exceeds block length")
    if coded.shape[1] != t:
        raise ParameterError(
            f"coded matrix has {coded.shape[1]} columns for {t} received indices"
        )
    G_T = code.generator[:, [i - 1 for i in pattern.received_indices]]
    rank = _numeric_rank(G_T)
    if rank < code.K:
        raise UnrecoverableErasureError(
            f"received columns span rank {rank} < K={code.K}",
            rank=rank,
            needed=code.K,
        )
    if t == code.K:
        message = np.linalg.solve(G_T.T, coded.T).T
    else:
        message = np.linalg.lstsq(G_T.T, coded.T, rcond=None)[0].T
        residual = np.linalg.norm(message @ G_T - coded)
        if residual > 1e-6 * (1.0 + np.linalg.norm(coded)):
            raise ParameterError(
                f"inconsistent coded matrix (residual {residual:.3e})"
            )
    return message


def condition_number(matrix: np.ndarray) -> float:
    """2-norm condition number: largest over smallest singular value."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.size == 0:
        raise ParameterError("condition number needs a nonempty 2-D matrix")
    sv = np.linalg.svd(m, compute_uv=False)
    if sv[-1] <= RANK_RTOL * sv[0]:
        return float("inf")
    return float(sv[0] / sv[-1])


def code_to_json(code: LinearCode) -> dict:
    """JSON document: {kind, N, K, delta?, systematic_positions?, generator}."""
    doc = {
        "kind": code.kind,
        "N": code.N,
        "K": code.K,
        "generator": code.generator.tolist(),
    }
    if code.min_distance is not None:
        doc["delta"] = code.min_distance
    if code.systematic_positions is not None:
        doc["systematic_positions"] = list(code.systematic_positions)
    return doc


def code_from_json(doc: dict) -> LinearCode:
    try:
        return LinearCode(
            N=int(doc["N"]),
            K=int(doc["K"]),
            generator=np.asarray(doc["generator"], dtype=np.float64),
            systematic_positions=(
                tuple(doc["systematic_positions"])
                if "systematic_positions" in doc
                else None
            ),
            min_distance=doc.get("delta"),
            kind=str(doc.get("kind", "custom")),
        )
    except KeyError as exc:
        raise ParameterError(f"code document missing field {exc}") from exc


def _check_dims(N: int, K: int) -> None:
    if not 1 <= K <= N:
        raise ParameterError(f"need 1 <= K <= N, got K={K}, N={N}")


def _numeric_rank(matrix: np.ndarray) -> int:
    sv = np.linalg.svd(matrix, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.count_nonzero(sv > RANK_RTOL * sv[0]))
