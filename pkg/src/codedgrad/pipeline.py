"""Coded gradient aggregation pipeline.

Workers are split into groups that replicate the same dataset shards; each
worker sends one generator column's worth of its group's summed gradient,
arranged as a short matrix, so the server can rebuild every group sum from
any large-enough subset of group members and add them up. Block length sets
the group size, code dimension the communication saving, and minimum
distance the number of stragglers survived.

Workers, groups, and datasets are numbered from 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .codes import ErasurePattern, LinearCode, erasure_solve, min_distance
from .codes import _numeric_rank
from .errors import ParameterError, UnrecoverableErasureError, UnrecoverableGroupError

SCHEME_FRACTIONAL_REPETITION = "fractional-repetition"
SCHEME_CYCLIC = "cyclic"


@dataclass(eq=False)
class PlacementPlan:
    """Worker-to-dataset assignment with group structure."""

    n: int
    k: int
    N: int
    l: int
    groups: tuple[tuple[int, ...], ...]
    assignment: dict[int, tuple[int, ...]]
    scheme: str

    def __post_init__(self):
        self.groups = tuple(tuple(int(w) for w in g) for g in self.groups)
        self.assignment = {int(w): tuple(int(d) for d in ds) for w, ds in self.assignment.items()}
        if self.p * self.N != self.n:
            raise ParameterError("groups must partition the workers evenly")
        seen = [w for g in self.groups for w in g]
        if sorted(seen) != list(range(1, self.n + 1)):
            raise ParameterError("every worker must appear in exactly one group")
        if sorted(self.assignment) != list(range(1, self.n + 1)):
            raise ParameterError("assignment must cover workers 1..n")
        for w, ds in self.assignment.items():
            if len(ds) != self.l:
                raise ParameterError(f"worker {w} assigned {len(ds)} datasets, expected {self.l}")
            if any(not 1 <= d <= self.k for d in ds):
                raise ParameterError(f"worker {w} assigned dataset outside [1, {self.k}]")

    @property
    def p(self) -> int:
        return len(self.groups)

    def group_of(self, worker: int) -> tuple[int, int]:
        """(group index, within-group position), both 1-based."""
        for i, members in enumerate(self.groups, start=1):
            if worker in members:
                return i, members.index(worker) + 1
        raise ParameterError(f"worker {worker} not in plan")

    def group_datasets(self, group_index: int) -> tuple[int, ...]:
        if not 1 <= group_index <= self.p:
            raise ParameterError(f"group index {group_index} out of [1, {self.p}]")
        return self.assignment[self.groups[group_index - 1][0]]


@dataclass(eq=False)
class GradientBatch:
    """The k partial gradients of one iteration, stacked as a (k, d) array."""

    partial_gradients: np.ndarray

    def __post_init__(self):
        self.partial_gradients = np.atleast_2d(
            np.asarray(self.partial_gradients, dtype=np.float64)
        )

    @property
    def k(self) -> int:
        return self.partial_gradients.shape[0]

    @property
    def d(self) -> int:
        return self.partial_gradients.shape[1]


@dataclass(eq=False)
class CodedChunk:
    """One worker's encoded payload of length ceil(d/K)."""

    group: int
    worker: int  # position within the group, 1-based
    payload: np.ndarray

    def __post_init__(self):
        self.payload = np.asarray(self.payload, dtype=np.float64).reshape(-1)


@dataclass(frozen=True)
class DecodeCost:
    """Realized decode effort: linear-solve dimension and multiply-add count."""

    solve_dim: int
    multiply_adds: int
    groups_decoded: int = 1


class AchievedTriple(NamedTuple):
    l: int
    m: int
    s: int
    optimal: bool


def lower_bound_load(n: int, k: int, s: int, m: int) -> int:
    """Smallest admissible per-worker load: ceil(k*(s+m)/n)."""
    if k < 1 or n < 1:
        raise ParameterError("need n, k >= 1")
    if not 1 <= s + m <= n:
        raise ParameterError(f"need 1 <= s+m <= n, got s+m={s + m}, n={n}")
    return -(-k * (s + m) // n)


def achieved_triple(n: int, k: int, code: LinearCode) -> AchievedTriple:
    """(load, saving, straggler tolerance) achieved by a code on n workers, k shards.

    Equals (kN/n, K, d-1); flagged optimal when the load meets the lower
    bound with equality.
    """
    _check_divisibility(n, k, code.N)
    delta = min_distance(code)
    l = k * code.N // n
    m = code.K
    s = delta - 1
    optimal = l == lower_bound_load(n, k, s, m)
    return AchievedTriple(l=l, m=m, s=s, optimal=optimal)


def fractional_repetition_placement(n: int, k: int, N: int) -> PlacementPlan:
    """Partition n workers into groups of N; group i replicates shards (i-1)l+1..il."""
    _check_divisibility(n, k, N)
    p = n // N
    l = k * N // n
    groups = tuple(
        tuple(range((i - 1) * N + 1, i * N + 1)) for i in range(1, p + 1)
    )
    assignment = {}
    for i, members in enumerate(groups, start=1):
        datasets = tuple(range((i - 1) * l + 1, i * l + 1))
        for w in members:
            assignment[w] = datasets
    return PlacementPlan(
        n=n, k=k, N=N, l=l, groups=groups, assignment=assignment,
        scheme=SCHEME_FRACTIONAL_REPETITION,
    )


def cyclic_placement(n: int, l: int) -> PlacementPlan:
    """Worker i holds the l consecutive shards D_i, D_{i+1}, ... (wrapping past n).

    Requires k = n. There is no replication group structure; each worker
    forms its own singleton group.
    """
    if not 1 <= l <= n:
        raise ParameterError(f"need 1 <= l <= n, got l={l}, n={n}")
    groups = tuple((i,) for i in range(1, n + 1))
    assignment = {
        i: tuple((i - 1 + j) % n + 1 for j in range(l)) for i in range(1, n + 1)
    }
    return PlacementPlan(
        n=n, k=n, N=1, l=l, groups=groups, assignment=assignment, scheme=SCHEME_CYCLIC
    )


def group_gradient(plan: PlacementPlan, batch: GradientBatch, group_index: int) -> np.ndarray:
    """Sum of the partial gradients assigned to one group."""
    if batch.k != plan.k:
        raise ParameterError(f"batch has {batch.k} partials, plan expects {plan.k}")
    datasets = plan.group_datasets(group_index)
    return batch.partial_gradients[[d - 1 for d in datasets]].sum(axis=0)


def matricize(vector: np.ndarray, K: int) -> np.ndarray:
    """Arrange a length-d vector as a ceil(d/K) x K matrix, column-major.

    The vector is zero-padded to K*ceil(d/K) entries first, so column c holds
    entries c*ceil(d/K)+1 ... (c+1)*ceil(d/K).
    """
    v = np.asarray(vector, dtype=np.float64).reshape(-1)
    if K < 1:
        raise ParameterError("K must be positive")
    rows = -(-v.size // K)
    padded = np.zeros(K * rows)
    padded[: v.size] = v
    return padded.reshape(K, rows).T


def devectorize(matrix: np.ndarray, d: int) -> np.ndarray:
    """Invert matricize: stack columns and drop the trailing pad zeros."""
    m = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    rows, K = m.shape
    if rows != -(-d // K):
        raise ParameterError(
            f"matrix with {rows} rows cannot hold a length-{d} vector over {K} columns"
        )
    return m.T.reshape(-1)[:d]


def encode_worker(
    plan: PlacementPlan, code: LinearCode, batch: GradientBatch, worker_id: int
) -> CodedChunk:
    """One worker's chunk: its group's matricized gradient times its generator column."""
    if code.N != plan.N:
        raise ParameterError(
            f"code block length {code.N} != group size {plan.N}"
        )
    i, j = plan.group_of(worker_id)
    g = group_gradient(plan, batch, i)
    payload = matricize(g, code.K) @ code.column(j)
    return CodedChunk(group=i, worker=j, payload=payload)


def decode_group(
    code: LinearCode, chunks_for_group, d: int
) -> tuple[np.ndarray, DecodeCost]:
    """Recover one group's gradient sum from its received chunks.

    Systematic codes take a fast path: coordinates carried by received
    systematic columns are copied through, and only the missing ones are
    solved for, against the received parity columns. The realized solve
    dimension is therefore at most min(K, number of stragglers).
    """
    chunks = list(chunks_for_group)
    if not chunks:
        raise ParameterError("no chunks supplied")
    group = chunks[0].group
    if any(c.group != group for c in chunks):
        raise ParameterError("chunks span more than one group")
    workers = [c.worker for c in chunks]
    if len(set(workers)) != len(workers):
        raise ParameterError("duplicate chunks for one worker")
    rows = -(-d // code.K)
    if any(c.payload.size != rows for c in chunks):
        raise ParameterError(f"payload length must be ceil(d/K) = {rows}")
    if code.min_distance is not None and len(chunks) < code.N - code.min_distance + 1:
        raise UnrecoverableGroupError(
            f"group {group}: {len(chunks)} chunks < {code.N - code.min_distance + 1} required",
            group=group,
        )

    chunks.sort(key=lambda c: c.worker)
    received = [c.worker for c in chunks]
    payloads = np.column_stack([c.payload for c in chunks])  # rows x t

    if code.systematic_positions is not None:
        message, cost = _systematic_decode(code, group, received, payloads, rows)
    else:
        try:
            message = erasure_solve(code, ErasurePattern(received), payloads)
        except UnrecoverableErasureError as exc:
            raise UnrecoverableGroupError(
                f"group {group}: {exc}", group=group, rank=exc.rank, needed=code.K
            ) from exc
        cost = DecodeCost(
            solve_dim=code.K,
            multiply_adds=code.K**3 + rows * code.K**2,
        )
    return devectorize(message, d), cost


def aggregate(group_gradients, group_count: int | None = None) -> np.ndarray:
    """Sum the per-group gradients; with replication-disjoint shards this
    equals the sum of all partial gradients."""
    if isinstance(group_gradients, dict):
        p = group_count if group_count is not None else len(group_gradients)
        missing = set(range(1, p + 1)) - set(group_gradients)
        if missing:
            raise ParameterError(f"missing group gradients: {sorted(missing)}")
        vectors = [np.asarray(group_gradients[i], dtype=np.float64) for i in range(1, p + 1)]
    else:
        vectors = [np.asarray(v, dtype=np.float64) for v in group_gradients]
        if group_count is not None and len(vectors) != group_count:
            raise ParameterError(f"expected {group_count} group gradients, got {len(vectors)}")
    if not vectors:
        raise ParameterError("no group gradients to aggregate")
    d = vectors[0].size
    if any(v.size != d for v in vectors):
        raise ParameterError("group gradients must share one length")
    return np.sum(vectors, axis=0)


def decode_all(plan: PlacementPlan, code: LinearCode, chunks, d: int):
    """Decode every group and aggregate; returns (gradient sum, per-group costs)."""
    by_group: dict[int, list[CodedChunk]] = {}
    for c in chunks:
        by_group.setdefault(c.group, []).append(c)
    missing = set(range(1, plan.p + 1)) - set(by_group)
    if missing:
        raise UnrecoverableGroupError(
            f"no chunks received for group {sorted(missing)[0]}", group=sorted(missing)[0]
        )
    gradients = {}
    costs = []
    for i in range(1, plan.p + 1):
        vec, cost = decode_group(code, by_group[i], d)
        gradients[i] = vec
        costs.append(cost)
    return aggregate(gradients, plan.p), costs


def plan_to_json(plan: PlacementPlan) -> dict:
    return {
        "n": plan.n,
        "k": plan.k,
        "N": plan.N,
        "l": plan.l,
        "scheme": plan.scheme,
        "groups": [list(g) for g in plan.groups],
        "assignment": {str(w): list(ds) for w, ds in plan.assignment.items()},
    }


def plan_from_json(doc: dict) -> PlacementPlan:
    try:
        return PlacementPlan(
            n=int(doc["n"]),
            k=int(doc["k"]),
            N=int(doc["N"]),
            l=int(doc["l"]),
            groups=tuple(tuple(g) for g in doc["groups"]),
            assignment={int(w): tuple(ds) for w, ds in doc["assignment"].items()},
            scheme=str(doc["scheme"]),
        )
    except KeyError as exc:
        raise ParameterError(f"plan document missing field {exc}") from exc


def _systematic_decode(code, group, received, payloads, rows):
    """Read received systematic coordinates directly; solve only for the rest."""
    pos_to_coord = {pos: c for c, pos in enumerate(code.systematic_positions)}
    K = code.K
    message = np.zeros((rows, K))
    known = []
    parity_cols = []
    for idx, col in enumerate(received):
        c = pos_to_coord.get(col)
        if c is not None:
            message[:, c] = payloads[:, idx]
            known.append(c)
        else:
            parity_cols.append(idx)
    missing = sorted(set(range(K)) - set(known))
    if not missing:
        return message, DecodeCost(solve_dim=0, multiply_adds=0)

    q = len(missing)
    G = code.generator
    parity_G_cols = [received[idx] - 1 for idx in parity_cols]
    if len(parity_cols) < q:
        raise UnrecoverableGroupError(
            f"group {group}: {q} systematic coordinates missing, "
            f"only {len(parity_cols)} parity chunks received",
            group=group,
            rank=len(known) + len(parity_cols),
            needed=K,
        )
    # Move the known coordinates' contribution to the left-hand side.
    B = payloads[:, parity_cols] - message[:, known] @ G[np.ix_(known, parity_G_cols)]
    A = G[np.ix_(missing, parity_G_cols)]  # q x n_parity
    rank = _numeric_rank(A)
    if rank < q:
        raise UnrecoverableGroupError(
            f"group {group}: received columns span rank {len(known) + rank} < {K}",
            group=group,
            rank=len(known) + rank,
            needed=K,
        )
    if A.shape[1] == q:
        M_missing = np.linalg.solve(A.T, B.T).T
    else:
        M_missing = np.linalg.lstsq(A.T, B.T, rcond=None)[0].T
    message[:, missing] = M_missing
    madds = q**3 + rows * q**2 + rows * len(parity_cols) * len(known)
    return message, DecodeCost(solve_dim=q, multiply_adds=madds)


def _check_divisibility(n: int, k: int, N: int) -> None:
    if n < 1 or k < 1 or N < 1:
        raise ParameterError("need n, k, N >= 1")
    if n % N != 0:
        raise ParameterError(f"group size {N} must divide worker count {n}")
    if (k * N) % n != 0:
        raise ParameterError(f"load k*N/n = {k}*{N}/{n} is not an integer")
