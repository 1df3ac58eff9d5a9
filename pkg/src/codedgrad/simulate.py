"""Deterministic straggler simulator: logistic regression under coded aggregation.

Simulated workers compute partial gradients of a fixed training batch; a
delay model makes some of them slow; the server applies one of three wait
policies (wait for everyone, drop the slowest, or decode from the fastest
group members) and updates the model with Nesterov momentum. Per-iteration
time is the finish time of the last worker the policy waits for.

Timing is delay-driven by default: compute_time_per_sample = 0 so scheme
comparisons isolate the wait policy. Set it positive to add compute time
proportional to each worker's assigned sample count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .codes import LinearCode, code_from_json, make_gaussian_code, make_repetition_code
from .codes import make_systematic_mds, make_vandermonde_code, min_distance
from .errors import ConfigError, InvariantViolationError, ParameterError
from .errors import UnrecoverableGroupError
from .pipeline import (
    GradientBatch,
    decode_all,
    encode_worker,
    fractional_repetition_placement,
)

SCHEME_NAIVE = "naive"
SCHEME_IGNORE = "ignore-stragglers"
SCHEME_CODED = "commfr-gc"


# ---------------------------------------------------------------------------
# data


@dataclass(eq=False)
class SyntheticDataset:
    """Feature matrix plus binary labels drawn from a planted logistic model."""

    features: np.ndarray
    labels: np.ndarray
    seed: int | None = None
    planted_weights: np.ndarray | None = None

    def __post_init__(self):
        self.features = np.atleast_2d(np.asarray(self.features, dtype=np.float64))
        self.labels = np.asarray(self.labels, dtype=np.float64).reshape(-1)
        if self.features.shape[0] != self.labels.size:
            raise ParameterError("feature rows and labels disagree")
        if not np.all((self.labels == 0) | (self.labels == 1)):
            raise ParameterError("labels must be 0/1")


def make_synthetic_dataset(M: int, d: int, seed: int) -> SyntheticDataset:
    """Standard-normal features; labels Bernoulli(sigmoid(x @ w*)), |w*| = 1."""
    if M < 1 or d < 1:
        raise ParameterError("need M, d >= 1")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((M, d))
    w_star = rng.standard_normal(d)
    w_star /= np.linalg.norm(w_star)
    labels = (rng.random(M) < expit(X @ w_star)).astype(np.float64)
    return SyntheticDataset(features=X, labels=labels, seed=seed, planted_weights=w_star)


def load_dataset_csv(path) -> SyntheticDataset:
    """Load features from a CSV whose last column is the 0/1 label."""
    data = np.loadtxt(path, delimiter=",", ndmin=2)
    if data.shape[1] < 2:
        raise ParameterError("dataset CSV needs at least one feature column plus a label")
    return SyntheticDataset(features=data[:, :-1], labels=data[:, -1])


# ---------------------------------------------------------------------------
# model


def logistic_gradient(w: np.ndarray, features: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Summed (not averaged) logistic-loss gradient: X.T @ (sigmoid(Xw) - y)."""
    w = np.asarray(w, dtype=np.float64)
    X = np.atleast_2d(np.asarray(features, dtype=np.float64))
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    if X.size == 0:
        return np.zeros_like(w)
    if X.shape[1] != w.size or X.shape[0] != y.size:
        raise ParameterError(
            f"shape mismatch: features {X.shape}, w {w.size}, labels {y.size}"
        )
    return X.T @ (expit(X @ w) - y)


def logistic_loss(w: np.ndarray, features: np.ndarray, labels: np.ndarray) -> float:
    """Mean logistic loss: log(1 + exp(z)) - y*z averaged over the batch."""
    X = np.atleast_2d(np.asarray(features, dtype=np.float64))
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    z = X @ np.asarray(w, dtype=np.float64)
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


# ---------------------------------------------------------------------------
# schemes and delay models


@dataclass(frozen=True)
class NaiveScheme:
    """Uncoded: every worker one shard, server waits for all of them."""

    name: str = field(default=SCHEME_NAIVE, init=False)


@dataclass(frozen=True)
class IgnoreStragglersScheme:
    """Uncoded: server sums the fastest n-s shards and drops the rest."""

    s: int
    name: str = field(default=SCHEME_IGNORE, init=False)

    def __post_init__(self):
        if self.s < 0:
            raise ParameterError("straggler allowance must be nonnegative")


@dataclass(frozen=True)
class CodedScheme:
    """Group-replicated placement with erasure-coded chunks.

    wait_stragglers defaults to the code's certified tolerance (min distance
    minus one); the server waits for the fastest N - s workers per group.
    """

    code: LinearCode
    wait_stragglers: int | None = None
    name: str = field(default=SCHEME_CODED, init=False)


@dataclass(frozen=True)
class FixedSetStragglers:
    """The listed workers are always late by `delay`; everyone else is on time."""

    workers: tuple[int, ...]
    delay: float

    def __post_init__(self):
        object.__setattr__(self, "workers", tuple(sorted(set(int(w) for w in self.workers))))
        if self.delay < 0:
            raise ParameterError("delay must be nonnegative")


@dataclass(frozen=True)
class BernoulliStragglers:
    """Each worker independently straggles with probability p, delayed by `delay`."""

    p: float
    delay: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ParameterError(f"straggle probability must lie in [0, 1], got {self.p}")
        if self.delay < 0:
            raise ParameterError("delay must be nonnegative")


@dataclass(frozen=True)
class ShiftedExponentialDelays:
    """Every worker draws base + Exponential(rate) of extra latency."""

    base: float
    rate: float

    def __post_init__(self):
        if self.base < 0 or self.rate <= 0:
            raise ParameterError("need base >= 0 and rate > 0")


def straggler_sample(model, n: int, round_seed) -> np.ndarray:
    """Per-worker delay vector for one round; deterministic in (model, n, seed)."""
    rng = np.random.default_rng(round_seed)
    if isinstance(model, FixedSetStragglers):
        delays = np.zeros(n)
        for w in model.workers:
            if not 1 <= w <= n:
                raise ParameterError(f"straggler id {w} out of [1, {n}]")
            delays[w - 1] = model.delay
        return delays
    if isinstance(model, BernoulliStragglers):
        return np.where(rng.random(n) < model.p, model.delay, 0.0)
    if isinstance(model, ShiftedExponentialDelays):
        return model.base + rng.exponential(1.0 / model.rate, n)
    raise ParameterError(f"unknown straggler model: {model!r}")


# ---------------------------------------------------------------------------
# simulation


@dataclass(eq=False)
class SimConfig:
    n: int
    k: int
    d: int
    scheme: NaiveScheme | IgnoreStragglersScheme | CodedScheme
    straggler_model: object
    dataset: SyntheticDataset
    iterations: int
    learning_rate: float
    momentum: float = 0.9
    seed: int = 0
    compute_time_per_sample: float = 0.0
    validation: SyntheticDataset | None = None

    def __post_init__(self):
        if self.n < 1 or self.k < 1 or self.d < 1:
            raise ParameterError("need n, k, d >= 1")
        if self.iterations < 0:
            raise ParameterError("iterations must be nonnegative")
        if self.dataset.features.shape[1] != self.d:
            raise ParameterError(
                f"dataset has {self.dataset.features.shape[1]} features, config says d={self.d}"
            )
        if isinstance(self.scheme, IgnoreStragglersScheme) and self.scheme.s >= self.n:
            raise ParameterError("cannot ignore all workers")


@dataclass(eq=False)
class SimState:
    w: np.ndarray
    velocity: np.ndarray


@dataclass(eq=False)
class IterationRecord:
    iteration: int
    loss: float
    sim_time: float
    decode_dim: int
    grad_error: float
    grad_error_abs: float
    multiply_adds: int
    waited_per_group: tuple[int, ...]
    clock: float = 0.0
    val_loss: float | None = None


@dataclass(eq=False)
class TrainingTrace:
    scheme_name: str
    records: list[IterationRecord]

    @property
    def mean_iteration_time(self) -> float:
        return float(np.mean([r.sim_time for r in self.records])) if self.records else 0.0

    @property
    def losses(self) -> np.ndarray:
        return np.array([r.loss for r in self.records])

    @property
    def iteration_times(self) -> np.ndarray:
        return np.array([r.sim_time for r in self.records])


class _Runtime:
    """Per-config precomputation: shards, placement, code, sample counts."""

    def __init__(self, config: SimConfig):
        scheme = config.scheme
        X, y = config.dataset.features, config.dataset.labels
        self.X, self.y = X, y
        self.M = X.shape[0]
        if isinstance(scheme, CodedScheme):
            code = scheme.code
            self.plan = fractional_repetition_placement(config.n, config.k, code.N)
            self.code = code
            wait = scheme.wait_stragglers
            if wait is None:
                wait = min_distance(code) - 1
            if not 0 <= wait < code.N:
                raise ParameterError(f"wait budget {wait} out of [0, {code.N - 1}]")
            self.wait_stragglers = wait
            self.dataset_slices = _balanced_slices(self.M, config.k)
            counts = np.array([sl.stop - sl.start for sl in self.dataset_slices])
            self.worker_samples = np.array(
                [counts[[d - 1 for d in self.plan.assignment[w]]].sum() for w in range(1, config.n + 1)]
            )
        else:
            self.shard_slices = _balanced_slices(self.M, config.n)
            self.worker_samples = np.array(
                [sl.stop - sl.start for sl in self.shard_slices]
            )

    def partial_gradients(self, w: np.ndarray) -> GradientBatch:
        parts = [
            logistic_gradient(w, self.X[sl], self.y[sl]) for sl in self.dataset_slices
        ]
        return GradientBatch(np.vstack(parts))

    def shard_gradient(self, w: np.ndarray, worker: int) -> np.ndarray:
        sl = self.shard_slices[worker - 1]
        return logistic_gradient(w, self.X[sl], self.y[sl])


def run_iteration(config: SimConfig, state: SimState, round_seed, runtime=None, iteration: int = 1):
    """Advance one round; returns (new state, iteration record)."""
    rt = runtime if runtime is not None else _Runtime(config)
    delays = straggler_sample(config.straggler_model, config.n, round_seed)
    finish = config.compute_time_per_sample * rt.worker_samples + delays
    w = state.w

    if isinstance(config.scheme, NaiveScheme):
        grad_sum = sum(rt.shard_gradient(w, i) for i in range(1, config.n + 1))
        sim_time = float(finish.max())
        waited = (config.n,)
        decode_dim, madds = 0, 0
    elif isinstance(config.scheme, IgnoreStragglersScheme):
        # Server stops at the (n-s)-th arrival; gradients arriving at exactly
        # that instant are already available and still count.
        kept, sim_time = _wait_cutoff(range(1, config.n + 1), finish, config.scheme.s)
        grad_sum = sum(rt.shard_gradient(w, i) for i in kept)
        waited = (len(kept),)
        decode_dim, madds = 0, 0
    else:
        batch = rt.partial_gradients(w)
        chunks = []
        sim_time = 0.0
        waited = []
        for members in rt.plan.groups:
            kept, group_time = _wait_cutoff(members, finish, rt.wait_stragglers)
            waited.append(len(kept))
            sim_time = max(sim_time, group_time)
            chunks.extend(encode_worker(rt.plan, rt.code, batch, i) for i in kept)
        try:
            grad_sum, costs = decode_all(rt.plan, rt.code, chunks, config.d)
        except UnrecoverableGroupError as exc:
            raise InvariantViolationError(
                f"decode failed under the wait policy (group {exc.group}): {exc}"
            ) from exc
        decode_dim = max(c.solve_dim for c in costs)
        madds = sum(c.multiply_adds for c in costs)
        waited = tuple(waited)

    exact = logistic_gradient(w, rt.X, rt.y)
    err_abs = float(np.linalg.norm(grad_sum - exact))
    err_rel = err_abs / max(float(np.linalg.norm(exact)), 1e-300)

    ghat = grad_sum / rt.M
    velocity = config.momentum * state.velocity + ghat
    w_new = w - config.learning_rate * (ghat + config.momentum * velocity)

    record = IterationRecord(
        iteration=iteration,
        loss=logistic_loss(w_new, rt.X, rt.y),
        sim_time=sim_time,
        decode_dim=decode_dim,
        grad_error=err_rel,
        grad_error_abs=err_abs,
        multiply_adds=madds,
        waited_per_group=tuple(waited),
        val_loss=(
            logistic_loss(w_new, config.validation.features, config.validation.labels)
            if config.validation is not None
            else None
        ),
    )
    return SimState(w=w_new, velocity=velocity), record


def _wait_cutoff(workers, finish, stragglers: int):
    """Workers available once the (count - stragglers)-th of them has finished.

    Ties at the cutoff instant are included; the wait time is unaffected.
    """
    ordered = sorted(workers, key=lambda i: (finish[i - 1], i))
    cutoff = float(finish[ordered[len(ordered) - stragglers - 1] - 1])
    return [i for i in ordered if finish[i - 1] <= cutoff], cutoff


def run_training(config: SimConfig) -> TrainingTrace:
    """Run the configured number of rounds; fully determined by config.seed."""
    rt = _Runtime(config)
    state = SimState(w=np.zeros(config.d), velocity=np.zeros(config.d))
    round_seeds = np.random.SeedSequence(config.seed).generate_state(
        max(config.iterations, 1), dtype=np.uint64
    )
    records = []
    clock = 0.0
    for it in range(1, config.iterations + 1):
        state, rec = run_iteration(
            config, state, int(round_seeds[it - 1]), runtime=rt, iteration=it
        )
        clock += rec.sim_time
        rec.clock = clock
        records.append(rec)
    return TrainingTrace(scheme_name=config.scheme.name, records=records)


def trace_to_csv(trace: TrainingTrace) -> str:
    lines = ["iteration,loss,sim_time,decode_dim"]
    for r in trace.records:
        lines.append(f"{r.iteration},{r.loss!r},{r.sim_time!r},{r.decode_dim}")
    return "\n".join(lines) + "\n"


def trace_to_json(trace: TrainingTrace) -> dict:
    return {
        "scheme": trace.scheme_name,
        "mean_iteration_time": trace.mean_iteration_time,
        "records": [
            {
                "iteration": r.iteration,
                "loss": r.loss,
                "val_loss": r.val_loss,
                "sim_time": r.sim_time,
                "clock": r.clock,
                "decode_dim": r.decode_dim,
                "grad_error": r.grad_error,
                "multiply_adds": r.multiply_adds,
                "waited_per_group": list(r.waited_per_group),
            }
            for r in trace.records
        ],
    }


# ---------------------------------------------------------------------------
# JSON configuration


def scheme_from_json(doc: dict, where: str = "scheme") -> object:
    name = _require(doc, "name", where)
    if name == SCHEME_NAIVE:
        return NaiveScheme()
    if name == SCHEME_IGNORE:
        return IgnoreStragglersScheme(s=int(_require(doc, "s", where)))
    if name == SCHEME_CODED:
        code_doc = _require(doc, "code", where)
        wait = doc.get("wait_stragglers")
        return CodedScheme(
            code=_code_from_spec(code_doc, f"{where}.code"),
            wait_stragglers=None if wait is None else int(wait),
        )
    raise ConfigError(f"{where}.name: unknown scheme {name!r}")


def straggler_model_from_json(doc: dict, where: str = "straggler_model") -> object:
    kind = _require(doc, "model", where)
    try:
        if kind == "fixed-set":
            return FixedSetStragglers(
                workers=tuple(_require(doc, "workers", where)),
                delay=float(_require(doc, "delay", where)),
            )
        if kind == "iid-bernoulli":
            return BernoulliStragglers(
                p=float(_require(doc, "p", where)),
                delay=float(_require(doc, "delay", where)),
            )
        if kind == "shifted-exponential":
            return ShiftedExponentialDelays(
                base=float(_require(doc, "base", where)),
                rate=float(_require(doc, "rate", where)),
            )
    except ParameterError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    raise ConfigError(f"{where}.model: unknown delay model {kind!r}")


def parse_simulation_config(doc: dict) -> list[SimConfig]:
    """Parse a simulation document into one SimConfig per listed scheme.

    All schemes share the dataset, delay model, seeds, and optimizer settings
    so their traces are directly comparable.
    """
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    n = int(_require(doc, "n", "config"))
    k = int(_require(doc, "k", "config"))
    d = int(_require(doc, "d", "config"))
    dataset = _dataset_from_json(_require(doc, "dataset", "config"), d, "dataset")
    validation = (
        _dataset_from_json(doc["validation"], d, "validation")
        if "validation" in doc
        else None
    )
    model = straggler_model_from_json(_require(doc, "straggler_model", "config"))
    if "schemes" in doc:
        scheme_docs = doc["schemes"]
        if not isinstance(scheme_docs, list) or not scheme_docs:
            raise ConfigError("schemes: must be a nonempty list")
    elif "scheme" in doc:
        scheme_docs = [doc["scheme"]]
    else:
        raise ConfigError("config needs a 'scheme' or 'schemes' field")
    configs = []
    for idx, sdoc in enumerate(scheme_docs):
        scheme = scheme_from_json(sdoc, where=f"schemes[{idx}]")
        try:
            configs.append(
                SimConfig(
                    n=n,
                    k=k,
                    d=d,
                    scheme=scheme,
                    straggler_model=model,
                    dataset=dataset,
                    validation=validation,
                    iterations=int(_require(doc, "iterations", "config")),
                    learning_rate=float(_require(doc, "learning_rate", "config")),
                    momentum=float(doc.get("momentum", 0.9)),
                    seed=int(_require(doc, "seed", "config")),
                    compute_time_per_sample=float(doc.get("compute_time_per_sample", 0.0)),
                )
            )
        except ParameterError as exc:
            raise ConfigError(f"schemes[{idx}]: {exc}") from exc
    return configs


def _dataset_from_json(doc: dict, d: int, where: str) -> SyntheticDataset:
    if not isinstance(doc, dict):
        raise ConfigError(f"{where}: must be an object")
    if "csv" in doc:
        return load_dataset_csv(doc["csv"])
    M = int(_require(doc, "M", where))
    seed = int(_require(doc, "seed", where))
    return make_synthetic_dataset(M, d, seed)


def _code_from_spec(doc: dict, where: str) -> LinearCode:
    if not isinstance(doc, dict):
        raise ConfigError(f"{where}: must be an object")
    if "generator" in doc:
        return code_from_json(doc)
    kind = _require(doc, "kind", where)
    N = int(_require(doc, "N", where))
    if kind == "repetition":
        return make_repetition_code(N)
    K = int(_require(doc, "K", where))
    if kind == "systematic-mds":
        return make_systematic_mds(N, K, int(_require(doc, "seed", where)))
    if kind == "gaussian":
        return make_gaussian_code(N, K, int(_require(doc, "seed", where)))
    if kind == "vandermonde":
        return make_vandermonde_code(N, K, doc.get("points"))
    raise ConfigError(f"{where}.kind: unknown code kind {kind!r}")


def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise ConfigError(f"missing field '{key}' in {where}")
    return doc[key]


def _balanced_slices(M: int, parts: int) -> list[slice]:
    """Split range(M) into `parts` contiguous slices differing by at most one."""
    if parts < 1:
        raise ParameterError("need at least one part")
    base, extra = divmod(M, parts)
    slices = []
    start = 0
    for i in range(parts):
        size = base + (1 if i < extra else 0)
        slices.append(slice(start, start + size))
        start += size
    return slices
