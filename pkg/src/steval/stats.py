"""System-level correlation analysis: Pearson, Spearman, pooling, and reports.

p-values use the two-sided t-test with t = rho * sqrt((n-2)/(1-rho^2)) on n-2
degrees of freedom. The t CDF is evaluated through the regularized incomplete
beta function (continued fraction, relative error well below 1e-10), so no
external statistics package is required. n = 2 is degenerate by construction:
the Pearson coefficient is +/-1 with p fixed at 1.0 and the Spearman p is
undefined (rendered as "n/a"). Zero-variance inputs yield an explicit
undefined result instead of NaN.

Pooling stacks (system, condition) pairs from several conditions as
exchangeable data points with no per-condition re-centering; this reproduces
the cross-condition analysis procedure exactly, fragility included. An
optional centered mode is provided as a clearly labeled extension.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .evalset import Condition
from .metrics import Granularity, ScoreTable

SIGNIFICANCE_LEVEL = 0.05
EXACT_PERMUTATION_MAX_N = 8


class PoolAxis(str, Enum):
    TASK = "task"
    DOMAIN = "domain"
    LANGUAGE = "language"


@dataclass(frozen=True)
class PairedScores:
    """Two score vectors over the same labeled systems (or system-condition pairs)."""

    labels: tuple[str, ...]
    x: tuple[float, ...]
    y: tuple[float, ...]
    method_x: str = "x"
    method_y: str = "y"
    conditions: tuple[Condition, ...] = ()

    def __post_init__(self) -> None:
        if not (len(self.labels) == len(self.x) == len(self.y)):
            raise ValueError("labels, x, and y must have equal lengths")
        if len(self.labels) < 2:
            raise ValueError("need at least two paired observations")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("labels must be distinct")

    @property
    def n(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class CorrelationResult:
    pearson_rho: float | None
    pearson_p: float | None
    spearman_r: float | None
    spearman_p: float | None
    n: int
    significant_pearson: bool
    significant_spearman: bool
    method_x: str = "x"
    method_y: str = "y"
    conditions: tuple[Condition, ...] = ()
    reference_set: str | None = None


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 400):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("shape parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_bt = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    bt = math.exp(ln_bt)
    if x < (a + 1.0) / (a + b + 2.0):
        return bt * _betacf(a, b, x) / a
    return 1.0 - bt * _betacf(b, a, 1.0 - x) / b


def t_two_sided_p(t: float, df: int) -> float:
    """P(|T_df| >= |t|) via the incomplete beta identity."""
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if math.isinf(t):
        return 0.0
    return betainc_reg(df / 2.0, 0.5, df / (df + t * t))


def _p_from_coefficient(coef: float, n: int) -> float | None:
    if n == 2:
        return None
    clipped = min(1.0, max(-1.0, coef))
    if 1.0 - clipped * clipped <= 1e-15:
        return 0.0
    t = clipped * math.sqrt((n - 2) / (1.0 - clipped * clipped))
    return t_two_sided_p(t, n - 2)


def _corrcoef(x: np.ndarray, y: np.ndarray) -> float | None:
    n = len(x)
    xm = x - x.mean()
    ym = y - y.mean()
    sxx = float(np.dot(xm, xm))
    syy = float(np.dot(ym, ym))
    if sxx <= 0.0 or syy <= 0.0:
        return None
    return float(np.dot(xm, ym) / math.sqrt(sxx * syy))


def pearson(pairs: PairedScores) -> tuple[float | None, float | None]:
    """Sample Pearson coefficient and two-sided t-test p-value.

    n = 2 gives coefficient +/-1 with p = 1.0; zero variance on either side
    gives (None, None).
    """
    x = np.asarray(pairs.x, dtype=np.float64)
    y = np.asarray(pairs.y, dtype=np.float64)
    rho = _corrcoef(x, y)
    if rho is None:
        return None, None
    if pairs.n == 2:
        return (1.0 if rho > 0 else -1.0), 1.0
    return rho, _p_from_coefficient(rho, pairs.n)


def rank_average(values: tuple[float, ...] | list[float] | np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the average of their positions."""
    arr = np.asarray(values, dtype=np.float64)
    order = np.argsort(arr, kind="stable")
    ranks = np.empty(len(arr), dtype=np.float64)
    i = 0
    while i < len(arr):
        j = i
        while j + 1 < len(arr) and arr[order[j + 1]] == arr[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def spearman(pairs: PairedScores) -> tuple[float | None, float | None]:
    """Rank correlation (average ranks for ties) with the t-approximation p.

    n = 2 gives coefficient +/-1 with an undefined p (None, rendered "n/a").
    """
    rx = rank_average(pairs.x)
    ry = rank_average(pairs.y)
    r = _corrcoef(rx, ry)
    if r is None:
        return None, None
    if pairs.n == 2:
        return (1.0 if r > 0 else -1.0), None
    return r, _p_from_coefficient(r, pairs.n)


def permutation_p(
    pairs: PairedScores,
    statistic: str = "pearson",
    iterations: int = 10_000,
    seed: int = 0,
) -> float:
    """Two-sided permutation p: fraction of y-permutations with |stat| >= |observed|.

    Exact enumeration of all n! permutations for n <= 8, seeded Monte Carlo
    above that.
    """
    if statistic not in ("pearson", "spearman"):
        raise ValueError(f"unknown statistic: {statistic!r}")
    if pairs.n < 3:
        raise ValueError("permutation test needs n >= 3")
    x = np.asarray(pairs.x, dtype=np.float64)
    y = np.asarray(pairs.y, dtype=np.float64)
    if statistic == "spearman":
        x = rank_average(x)
        y = rank_average(y)
    xm = x - x.mean()
    sx = math.sqrt(float(np.dot(xm, xm)))
    ym = y - y.mean()
    sy = math.sqrt(float(np.dot(ym, ym)))
    if sx == 0.0 or sy == 0.0:
        raise ValueError("zero variance makes the permutation statistic undefined")
    observed = abs(float(np.dot(xm, ym)) / (sx * sy))

    n = pairs.n
    if n <= EXACT_PERMUTATION_MAX_N:
        perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
        permuted = ym[perms]
    else:
        rng = np.random.default_rng(seed)
        permuted = ym[np.argsort(rng.random((iterations, n)), axis=1)]
    stats = np.abs(permuted @ xm) / (sx * sy)
    # Tolerate float noise when counting ties with the observed statistic.
    count = int(np.sum(stats >= observed - 1e-12))
    return count / len(stats)


def correlate(table_a: ScoreTable, table_b: ScoreTable) -> CorrelationResult:
    """Join two system-level tables on system id and correlate them."""
    if table_a.granularity is not Granularity.SYSTEM:
        raise ValueError("correlate requires system-granularity tables")
    if table_b.granularity is not Granularity.SYSTEM:
        raise ValueError("correlate requires system-granularity tables")
    scores_a = table_a.system_scores()
    scores_b = table_b.system_scores()
    shared = sorted(set(scores_a) & set(scores_b))
    dropped = sorted(set(scores_a) ^ set(scores_b))
    if dropped:
        warnings.warn(
            f"correlate: dropping systems without scores on both sides: {dropped}",
            stacklevel=2,
        )
    if len(shared) < 2:
        raise ValueError(
            f"need at least 2 shared systems to correlate, found {len(shared)}"
        )
    pairs = PairedScores(
        labels=tuple(shared),
        x=tuple(scores_a[s] for s in shared),
        y=tuple(scores_b[s] for s in shared),
        method_x=table_a.method,
        method_y=table_b.method,
        conditions=tuple(dict.fromkeys(table_a.conditions + table_b.conditions)),
    )
    return correlate_pairs(pairs, reference_set=table_b.reference_set)


def correlate_pairs(
    pairs: PairedScores, reference_set: str | None = None
) -> CorrelationResult:
    rho, p_rho = pearson(pairs)
    r, p_r = spearman(pairs)
    return CorrelationResult(
        pearson_rho=rho,
        pearson_p=p_rho,
        spearman_r=r,
        spearman_p=p_r,
        n=pairs.n,
        significant_pearson=p_rho is not None and p_rho <= SIGNIFICANCE_LEVEL,
        significant_spearman=p_r is not None and p_r <= SIGNIFICANCE_LEVEL,
        method_x=pairs.method_x,
        method_y=pairs.method_y,
        conditions=pairs.conditions,
        reference_set=reference_set,
    )


def average_domains(tables: list[ScoreTable]) -> ScoreTable:
    """Per-system unweighted mean across domain tables of one method."""
    if len(tables) < 2:
        raise ValueError("domain averaging needs at least two tables")
    method = tables[0].method
    reference_set = tables[0].reference_set
    system_sets = [set(t.system_scores()) for t in tables]
    for t in tables:
        if t.method != method:
            raise ValueError("cannot average tables of different methods")
        if t.granularity is not Granularity.SYSTEM:
            raise ValueError("domain averaging requires system-level tables")
    common = set.intersection(*system_sets)
    union = set.union(*system_sets)
    if common != union:
        raise ValueError(
            f"no partial averaging: systems missing from some tables: "
            f"{sorted(union - common)}"
        )
    domains = [c.domain for t in tables for c in t.conditions]
    if len(set(domains)) < 2:
        raise ValueError("domain averaging expects tables from different domains")
    rows: dict[tuple[str, str | None], float] = {}
    for system_id in sorted(common):
        rows[(system_id, None)] = sum(
            t.system_scores()[system_id] for t in tables
        ) / len(tables)
    conditions = tuple(dict.fromkeys(c for t in tables for c in t.conditions))
    return ScoreTable(method, Granularity.SYSTEM, conditions, reference_set, rows)


def pool_conditions(
    tables_human: list[ScoreTable],
    tables_metric: list[ScoreTable],
    pool_axis: PoolAxis,
    centered: bool = False,
) -> CorrelationResult:
    """Correlate jointly across conditions, stacking (system, condition) points.

    Each human table must have a metric table for the same condition. A system
    appearing under two conditions contributes two points. `centered` z-scores
    each condition's vectors first; that is an extension, not the reproduced
    procedure, and defaults off.
    """
    if len(tables_human) != len(tables_metric) or not tables_human:
        raise ValueError("each human table needs a matching metric table")
    by_condition_metric: dict[Condition, ScoreTable] = {}
    for t in tables_metric:
        if len(t.conditions) != 1:
            raise ValueError("pooling expects single-condition tables")
        by_condition_metric[t.conditions[0]] = t
    labels: list[str] = []
    xs: list[float] = []
    ys: list[float] = []
    conds: list[Condition] = []
    for human in tables_human:
        if len(human.conditions) != 1:
            raise ValueError("pooling expects single-condition tables")
        cond = human.conditions[0]
        if cond not in by_condition_metric:
            raise ValueError(f"no metric table for condition {cond.label}")
        metric = by_condition_metric.pop(cond)
        h_scores = human.system_scores()
        m_scores = metric.system_scores()
        shared = sorted(set(h_scores) & set(m_scores))
        if not shared:
            raise ValueError(f"no shared systems under condition {cond.label}")
        h_vec = [h_scores[s] for s in shared]
        m_vec = [m_scores[s] for s in shared]
        if centered:
            h_vec = _zscore(h_vec)
            m_vec = _zscore(m_vec)
        for system_id, h, m in zip(shared, h_vec, m_vec):
            labels.append(f"{system_id}@{cond.label}")
            xs.append(h)
            ys.append(m)
            conds.append(cond)
    if by_condition_metric:
        leftover = [c.label for c in by_condition_metric]
        raise ValueError(f"metric tables without human counterpart: {leftover}")
    _check_pool_axis(list(dict.fromkeys(conds)), pool_axis)
    if len(labels) < 3:
        raise ValueError("pooled correlation needs at least 3 points")
    pairs = PairedScores(
        labels=tuple(labels),
        x=tuple(xs),
        y=tuple(ys),
        method_x=tables_human[0].method,
        method_y=tables_metric[0].method,
        conditions=tuple(dict.fromkeys(conds)),
    )
    return correlate_pairs(pairs, reference_set=tables_metric[0].reference_set)


def _zscore(values: list[float]) -> list[float]:
    arr = np.asarray(values, dtype=np.float64)
    sd = float(arr.std())
    if sd == 0.0:
        return [0.0] * len(values)
    return list((arr - arr.mean()) / sd)


def _check_pool_axis(conditions: list[Condition], axis: PoolAxis) -> None:
    if len(conditions) < 2:
        raise ValueError("pooling needs tables from at least two conditions")
    tasks = {c.task for c in conditions}
    langs = {c.lang_pair for c in conditions}
    domains = {c.domain for c in conditions}
    if axis is PoolAxis.TASK and len(tasks) < 2:
        raise ValueError("task pooling expects conditions with different tasks")
    if axis is PoolAxis.DOMAIN and len(domains) < 2:
        raise ValueError("domain pooling expects conditions with different domains")
    if axis is PoolAxis.LANGUAGE and len(langs) < 2:
        raise ValueError("language pooling expects conditions with different languages")


REPORT_TSV_COLUMNS = (
    "task",
    "lang_pair",
    "domains",
    "method_x",
    "method_y",
    "reference_set",
    "n",
    "pearson_rho",
    "pearson_p",
    "spearman_r",
    "spearman_p",
    "sig_pearson",
    "sig_spearman",
)


def _fmt_full(value: float | None) -> str:
    return "n/a" if value is None else repr(value)


def _fmt_2dp(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.2f}"


def _result_fields(result: CorrelationResult) -> dict[str, str]:
    tasks = "+".join(dict.fromkeys(c.task.value for c in result.conditions)) or "-"
    langs = "+".join(dict.fromkeys(c.lang_pair for c in result.conditions)) or "-"
    domains = "+".join(dict.fromkeys(c.domain.value for c in result.conditions)) or "-"
    return {"task": tasks, "lang_pair": langs, "domains": domains}


def render_report(
    results: list[CorrelationResult],
    fmt: str = "tsv",
    path: str | Path | None = None,
) -> str:
    """Render correlation results as TSV (full precision) or Markdown.

    Markdown shows coefficients to two decimals, bolds the significant ones,
    and renders undefined p-values as "n/a".
    """
    if fmt == "tsv":
        lines = ["\t".join(REPORT_TSV_COLUMNS)]
        for res in results:
            cond = _result_fields(res)
            lines.append(
                "\t".join(
                    [
                        cond["task"],
                        cond["lang_pair"],
                        cond["domains"],
                        res.method_x,
                        res.method_y,
                        res.reference_set or "",
                        str(res.n),
                        _fmt_full(res.pearson_rho),
                        _fmt_full(res.pearson_p),
                        _fmt_full(res.spearman_r),
                        _fmt_full(res.spearman_p),
                        str(res.significant_pearson).lower(),
                        str(res.significant_spearman).lower(),
                    ]
                )
            )
        text = "".join(line + "\n" for line in lines)
    elif fmt == "md":
        header = (
            "| task | lang_pair | domains | methods | ref_set | n "
            "| pearson | spearman |"
        )
        rule = "|---|---|---|---|---|---|---|---|"
        lines = [header, rule]
        for res in results:
            cond = _result_fields(res)
            lines.append(
                "| "
                + " | ".join(
                    [
                        cond["task"],
                        cond["lang_pair"],
                        cond["domains"],
                        f"{res.method_x}/{res.method_y}",
                        res.reference_set or "-",
                        str(res.n),
                        _md_cell(res.pearson_rho, res.pearson_p, res.significant_pearson),
                        _md_cell(res.spearman_r, res.spearman_p, res.significant_spearman),
                    ]
                )
                + " |"
            )
        text = "".join(line + "\n" for line in lines)
    else:
        raise ValueError(f"unknown report format: {fmt!r}")
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")
    return text


def _md_cell(coef: float | None, p: float | None, significant: bool) -> str:
    if coef is None:
        return "undefined"
    coef_text = f"{coef:.2f}"
    if significant:
        coef_text = f"**{coef_text}**"
    return f"{coef_text} (p={_fmt_2dp(p)})"
