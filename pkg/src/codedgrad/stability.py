"""Numerical-stability calculus for Gaussian-generator gradient codes.

Bounds the probability that some decoding submatrix is ill-conditioned via a
union bound over received-column subsets and a condition-number tail bound
for i.i.d. standard normal matrices, then turns that into the number of
stragglers tolerable while every decode stays below a condition-number cap.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .codes import LinearCode, condition_number
from .errors import InadmissibleKappaError, ParameterError

# Universal constant of the condition-number tail bound for Gaussian matrices.
C = 6.414

_SQRT_2PI = math.sqrt(2.0 * math.pi)

# Representative (n, s, m) grid: small and large clusters, straggler budgets
# near 5/10/20% of n, and both the s >= m and s <= m regimes.
DEFAULT_THRESHOLD_GRID = (
    (60, 3, 2),
    (60, 8, 2),
    (60, 13, 2),
    (60, 3, 12),
    (60, 8, 12),
    (60, 13, 12),
    (1000, 40, 10),
    (1000, 90, 10),
    (1000, 190, 10),
    (1000, 40, 210),
    (1000, 90, 210),
    (1000, 190, 210),
)


@dataclass(frozen=True)
class StabilityReport:
    """Threshold scan outcome for one (s, m, kappa, epsilon) query."""

    s: int
    m: int
    kappa: float
    epsilon: float
    t_star: int
    s_kappa: int
    f_curve: tuple[tuple[int, float], ...]
    s_kappa_ya: int | None = None


@dataclass
class ThresholdRow:
    """One comparison row: both thresholds at shared kappa and epsilon."""

    n: int
    s: int
    m: int
    s_kappa_ya: int | None
    s_kappa: int | None
    note: str = ""
    report: StabilityReport | None = None
    report_ya: StabilityReport | None = None


@dataclass(frozen=True)
class TailPoint:
    """Empirical vs. bounded exceedance of the scaled condition number."""

    x: float
    frequency: float
    bound: float


@dataclass(frozen=True)
class GroupStabilityResult:
    fraction_ok: float
    max_condition: float
    exceed_frequency: float
    union_bound: float
    subsets_checked: int
    exhaustive: bool


def f_value(s: int, m: int, kappa: float, t: int, *, constant: float = C) -> float:
    """Union-bound estimate for a size-t wait:

        f(t) = (1/sqrt(2*pi)) * binom(m+s, t) * (C*t / (kappa*(t-m+1)))**(t-m+1)

    Evaluated in log space (log-gamma binomial) so thousand-scale parameters
    do not overflow. `constant` overrides the pinned tail constant C.
    """
    if m < 1 or s < 0:
        raise ParameterError(f"need m >= 1 and s >= 0, got m={m}, s={s}")
    if not m <= t <= m + s:
        raise ParameterError(f"need m <= t <= m+s, got t={t} for m={m}, s={s}")
    if kappa <= 0:
        raise ParameterError("kappa must be positive")
    e = t - m + 1
    log_binom = (
        math.lgamma(m + s + 1) - math.lgamma(t + 1) - math.lgamma(m + s - t + 1)
    )
    log_f = -math.log(_SQRT_2PI) + log_binom + e * (
        math.log(constant * t) - math.log(kappa * e)
    )
    return math.exp(log_f)


def kappa_min(s: int, m: int, epsilon: float, *, constant: float = C) -> float:
    """Admissibility bound on the condition-number cap:

        max( (1/(eps*sqrt(2*pi)))**(1/(s+1)) * C*(m+s)/(s+1),  C*s/2 )

    Above it, f is decreasing in t and f(m+s) <= eps, so a threshold exists.
    """
    if not 0.0 < epsilon < 1.0:
        raise ParameterError("epsilon must lie in (0, 1)")
    if m < 1 or s < 0:
        raise ParameterError(f"need m >= 1 and s >= 0, got m={m}, s={s}")
    first = (1.0 / (epsilon * _SQRT_2PI)) ** (1.0 / (s + 1)) * (
        constant * (m + s) / (s + 1)
    )
    return max(first, constant * s / 2.0)


def straggler_threshold_kappa(
    s: int, m: int, kappa: float, epsilon: float, *, constant: float = C
) -> StabilityReport:
    """Stragglers tolerable while every decoding matrix stays below kappa.

    Scans t = m..m+s for the first t with f(t) <= epsilon; the threshold is
    s + m - t_star, guaranteed with probability at least 1 - epsilon.
    """
    bound = kappa_min(s, m, epsilon, constant=constant)
    if kappa <= bound:
        raise InadmissibleKappaError(
            f"kappa={kappa:g} is not above the admissibility bound {bound:g}",
            kappa=kappa,
            bound=bound,
        )
    curve = tuple(
        (t, f_value(s, m, kappa, t, constant=constant)) for t in range(m, m + s + 1)
    )
    t_star = next(t for t, f in curve if f <= epsilon)
    return StabilityReport(
        s=s,
        m=m,
        kappa=kappa,
        epsilon=epsilon,
        t_star=t_star,
        s_kappa=s + m - t_star,
        f_curve=curve,
    )


def ye_abbe_report(
    n: int, s: int, kappa: float, epsilon: float, *, constant: float = C
) -> StabilityReport:
    """Baseline cyclic-placement scheme: one global (n-s) x n Gaussian decode.

    Obtained from the group threshold scan by substituting m+s -> n and
    m -> n-s.
    """
    if not 0 <= s < n:
        raise ParameterError(f"need 0 <= s < n, got s={s}, n={n}")
    return straggler_threshold_kappa(s, n - s, kappa, epsilon, constant=constant)


def ye_abbe_threshold(
    n: int, s: int, kappa: float, epsilon: float, *, constant: float = C
) -> int:
    return ye_abbe_report(n, s, kappa, epsilon, constant=constant).s_kappa


def stability_table(
    rows, kappa: float, epsilon: float, *, constant: float = C
) -> list[ThresholdRow]:
    """Both straggler thresholds for each (n, s, m) row.

    Rows whose kappa is inadmissible are flagged in `note` instead of
    raising, so one bad row does not sink a whole table.
    """
    out = []
    for n, s, m in rows:
        row = ThresholdRow(n=int(n), s=int(s), m=int(m), s_kappa_ya=None, s_kappa=None)
        notes = []
        try:
            row.report_ya = ye_abbe_report(row.n, row.s, kappa, epsilon, constant=constant)
            row.s_kappa_ya = row.report_ya.s_kappa
        except InadmissibleKappaError as exc:
            notes.append(f"baseline: {exc}")
        try:
            row.report = straggler_threshold_kappa(
                row.s, row.m, kappa, epsilon, constant=constant
            )
            row.s_kappa = row.report.s_kappa
            if row.s_kappa_ya is not None:
                row.report = dataclasses.replace(row.report, s_kappa_ya=row.s_kappa_ya)
        except InadmissibleKappaError as exc:
            notes.append(f"grouped: {exc}")
        row.note = "; ".join(notes)
        out.append(row)
    return out


def table_to_csv(rows: list[ThresholdRow]) -> str:
    lines = ["n,s,m,s_kappa_YA,s_kappa"]
    for r in rows:
        ya = "" if r.s_kappa_ya is None else str(r.s_kappa_ya)
        ours = "" if r.s_kappa is None else str(r.s_kappa)
        lines.append(f"{r.n},{r.s},{r.m},{ya},{ours}")
    return "\n".join(lines) + "\n"


def table_to_json(rows: list[ThresholdRow]) -> list[dict]:
    docs = []
    for r in rows:
        doc = {
            "n": r.n,
            "s": r.s,
            "m": r.m,
            "s_kappa_YA": r.s_kappa_ya,
            "s_kappa": r.s_kappa,
        }
        if r.note:
            doc["note"] = r.note
        if r.report is not None:
            doc["f_curve"] = [[t, f] for t, f in r.report.f_curve]
            doc["t_star"] = r.report.t_star
        if r.report_ya is not None:
            doc["f_curve_YA"] = [[t, f] for t, f in r.report_ya.f_curve]
            doc["t_star_YA"] = r.report_ya.t_star
        docs.append(doc)
    return docs


def condition_tail_bound(u: int, v: int, x: float) -> float:
    """Tail bound sqrt(2*pi) * (C/x)**(|v-u|+1) for scaled condition numbers."""
    if u < 2 or v < 2:
        raise ParameterError("tail bound needs u, v >= 2")
    e = abs(v - u) + 1
    if x < e:
        raise ParameterError(f"bound valid only for x >= |v-u|+1 = {e}")
    return _SQRT_2PI * (C / x) ** e


def empirical_condition_tail(
    u: int, v: int, x_values, trials: int, seed: int
) -> list[TailPoint]:
    """Monte-Carlo exceedance of cond(M)/(v/(|v-u|+1)) over x for Gaussian M."""
    if trials < 1:
        raise ParameterError("need at least one trial")
    xs = [float(x) for x in x_values]
    bounds = [condition_tail_bound(u, v, x) for x in xs]  # validates range
    rng = np.random.default_rng(seed)
    scale = v / (abs(v - u) + 1)
    scaled = np.empty(trials)
    for i in range(trials):
        scaled[i] = condition_number(rng.standard_normal((u, v))) / scale
    return [
        TailPoint(x=x, frequency=float(np.mean(scaled > x)), bound=b)
        for x, b in zip(xs, bounds)
    ]


def empirical_group_stability(
    code: LinearCode,
    t: int,
    kappa: float,
    trials: int,
    seed: int,
    subset_cap: int = 100_000,
) -> GroupStabilityResult:
    """How often the worst size-t column subset stays below the cap.

    For the given code, measures the fraction of size-t column subsets with
    condition number <= kappa (exhaustively when there are at most
    subset_cap subsets, sampled otherwise). Then redraws `trials` Gaussian
    codes of the same shape and reports how often their worst subset exceeds
    kappa, next to the union-bound estimate f(t) it should stay under.
    """
    if not code.K <= t <= code.N:
        raise ParameterError(f"need K <= t <= N, got t={t}")
    if trials < 0:
        raise ParameterError("trials must be nonnegative")
    rng = np.random.default_rng(seed)

    conds = _subset_conditions(code.generator, t, subset_cap, rng)
    fraction_ok = float(np.mean(conds <= kappa))
    max_condition = float(conds.max())
    exhaustive = math.comb(code.N, t) <= subset_cap

    exceed = 0
    for _ in range(trials):
        G = rng.standard_normal((code.K, code.N))
        if _subset_conditions(G, t, subset_cap, rng).max() > kappa:
            exceed += 1
    return GroupStabilityResult(
        fraction_ok=fraction_ok,
        max_condition=max_condition,
        exceed_frequency=exceed / trials if trials else 0.0,
        union_bound=f_value(code.N - code.K, code.K, kappa, t),
        subsets_checked=len(conds),
        exhaustive=exhaustive,
    )


def _subset_conditions(G: np.ndarray, t: int, cap: int, rng) -> np.ndarray:
    N = G.shape[1]
    total = math.comb(N, t)
    if total <= cap:
        subsets = itertools.combinations(range(N), t)
        n_subsets = total
    else:
        subsets = (tuple(rng.choice(N, size=t, replace=False)) for _ in range(cap))
        n_subsets = cap
    out = np.empty(n_subsets)
    for i, cols in enumerate(subsets):
        out[i] = condition_number(G[:, list(cols)])
    return out
