"""Native chrF and BLEU, plus ingestion of externally computed score tables.

chrF aggregates matched/total character n-gram counts over the corpus
(whitespace removed first), computes per-order precision/recall and F_beta,
and averages F over the orders that carry any n-grams. BLEU is the classic
corpus score: geometric mean of clipped n-gram precisions times the brevity
penalty, with no smoothing.

Model-based scores (COMET) and human scores (MQM, CR) are never computed here;
they arrive as TSV files and are validated into the same ScoreTable shape.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .evalset import Condition, LoadError, TestSet
from .tokenization import TokenizationLevel, TokenStream, tokenize

SCORE_TSV_COLUMNS = (
    "method",
    "task",
    "langs",
    "domain",
    "reference_set",
    "system_id",
    "segment_id",
    "score",
)


class Granularity(str, Enum):
    SEGMENT = "segment"
    SYSTEM = "system"


@dataclass(frozen=True)
class MetricConfig:
    metric: str = "chrf"
    char_ngram_max: int = 6
    beta: float = 2.0
    bleu_ngram_max: int = 4

    def __post_init__(self) -> None:
        if self.metric not in ("chrf", "bleu"):
            raise ValueError(f"unknown metric: {self.metric!r}")
        if self.char_ngram_max < 1:
            raise ValueError("char_ngram_max must be >= 1")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.bleu_ngram_max < 1:
            raise ValueError("bleu_ngram_max must be >= 1")


@dataclass
class ScoreTable:
    """Scores for one method under one condition, keyed by (system, segment).

    System-granularity tables use segment_id None and carry exactly one row
    per system; segment-granularity tables carry identical segment-id sets
    for every system. `conditions` is a single condition normally and the
    constituent conditions for domain-averaged tables.
    """

    method: str
    granularity: Granularity
    conditions: tuple[Condition, ...]
    reference_set: str | None
    rows: dict[tuple[str, str | None], float] = field(default_factory=dict)

    def validate(self) -> None:
        if not self.conditions:
            raise ValueError("score table has no condition")
        per_system: dict[str, set[str | None]] = {}
        for (system_id, segment_id) in self.rows:
            per_system.setdefault(system_id, set()).add(segment_id)
        if self.granularity is Granularity.SYSTEM:
            for system_id, segs in per_system.items():
                if segs != {None}:
                    raise ValueError(
                        f"system-level table has segment rows for {system_id!r}"
                    )
        else:
            seg_sets = {frozenset(s) for s in per_system.values()}
            if len(seg_sets) > 1:
                raise ValueError(
                    "segment-level table has mismatched segment sets across systems"
                )

    @property
    def systems(self) -> list[str]:
        return sorted({system_id for system_id, _ in self.rows})

    def system_scores(self) -> dict[str, float]:
        if self.granularity is not Granularity.SYSTEM:
            raise ValueError("system_scores requires a system-granularity table")
        return {system_id: score for (system_id, _), score in self.rows.items()}


def _char_ngram_counts(text: str, n: int) -> Counter:
    return Counter(text[i : i + n] for i in range(len(text) - n + 1))


def _strip_whitespace(text: str) -> str:
    return "".join(ch for ch in text if not ch.isspace())


def _chrf_stats(
    hyps: list[str], refs: list[str], max_order: int
) -> list[tuple[int, int, int]]:
    """Per-order (matched, hyp_total, ref_total) summed over the corpus."""
    stats = [(0, 0, 0)] * max_order
    for hyp, ref in zip(hyps, refs):
        h = _strip_whitespace(hyp)
        r = _strip_whitespace(ref)
        for order in range(1, max_order + 1):
            hc = _char_ngram_counts(h, order)
            rc = _char_ngram_counts(r, order)
            matched = sum((hc & rc).values())
            m0, h0, r0 = stats[order - 1]
            stats[order - 1] = (
                m0 + matched,
                h0 + sum(hc.values()),
                r0 + sum(rc.values()),
            )
    return stats


def _chrf_from_stats(stats: list[tuple[int, int, int]], beta: float) -> float:
    beta_sq = beta * beta
    f_scores = []
    for matched, hyp_total, ref_total in stats:
        if hyp_total == 0 and ref_total == 0:
            continue
        precision = matched / hyp_total if hyp_total else 0.0
        recall = matched / ref_total if ref_total else 0.0
        denom = beta_sq * precision + recall
        f_scores.append((1 + beta_sq) * precision * recall / denom if denom else 0.0)
    if not f_scores:
        return 0.0
    return 100.0 * sum(f_scores) / len(f_scores)


def chrf_corpus(hyps: list[str], refs: list[str], cfg: MetricConfig | None = None) -> float:
    """Corpus chrF in [0, 100]; counts aggregate over all pairs before scoring."""
    cfg = cfg or MetricConfig()
    if len(hyps) != len(refs):
        raise ValueError(f"corpus size mismatch: {len(hyps)} hyps vs {len(refs)} refs")
    if not hyps:
        raise ValueError("empty corpus")
    return _chrf_from_stats(_chrf_stats(hyps, refs, cfg.char_ngram_max), cfg.beta)


def chrf_sentence(hyp: str, ref: str, cfg: MetricConfig | None = None) -> float:
    return chrf_corpus([hyp], [ref], cfg)


def _token_ngram_counts(tokens: tuple[str, ...], n: int) -> Counter:
    return Counter(tokens[i : i + n] for i in range(len(tokens) - n + 1))


def bleu_corpus(
    hyps: list[TokenStream], refs: list[TokenStream], cfg: MetricConfig | None = None
) -> float:
    """Corpus BLEU in [0, 100] with unit clipping and no smoothing."""
    cfg = cfg or MetricConfig(metric="bleu")
    if len(hyps) != len(refs):
        raise ValueError(f"corpus size mismatch: {len(hyps)} hyps vs {len(refs)} refs")
    if not hyps:
        raise ValueError("empty corpus")
    level = hyps[0].level
    for stream in list(hyps) + list(refs):
        if stream.level is not level:
            raise ValueError("mixed tokenization levels in BLEU corpus")

    max_order = cfg.bleu_ngram_max
    correct = [0] * max_order
    total = [0] * max_order
    sys_len = 0
    ref_len = 0
    for hyp, ref in zip(hyps, refs):
        sys_len += len(hyp)
        ref_len += len(ref)
        for order in range(1, max_order + 1):
            hc = _token_ngram_counts(hyp.tokens, order)
            rc = _token_ngram_counts(ref.tokens, order)
            correct[order - 1] += sum((hc & rc).values())
            total[order - 1] += max(len(hyp) - order + 1, 0)

    if sys_len == 0:
        return 0.0
    log_sum = 0.0
    for order in range(max_order):
        if total[order] == 0 or correct[order] == 0:
            return 0.0
        log_sum += math.log(correct[order] / total[order])
    brevity = 1.0 if sys_len >= ref_len else math.exp(1.0 - ref_len / sys_len)
    return 100.0 * brevity * math.exp(log_sum / max_order)


def metric_level(condition: Condition) -> TokenizationLevel:
    """Tokenization level for token-based metrics: characters for zh/ja targets."""
    if condition.target_lang in ("zh", "ja"):
        return TokenizationLevel.CHARACTER
    return TokenizationLevel.WORD


def score_systems(
    testset: TestSet,
    systems: list[str] | None,
    cfg: MetricConfig,
    reference_set: str,
) -> ScoreTable:
    """One system-level metric score per system over the full condition test set."""
    if reference_set not in testset.reference_sets:
        raise ValueError(
            f"unknown reference set {reference_set!r}; test set has "
            f"{list(testset.reference_sets)}"
        )
    system_ids = sorted(testset.systems) if systems is None else list(systems)
    if not system_ids:
        raise ValueError("no systems to score")
    outputs = []
    for system_id in system_ids:
        if system_id not in testset.systems:
            raise ValueError(f"system {system_id!r} is not registered in the test set")
        output = testset.systems[system_id]
        if not output.resegmented:
            raise ValueError(
                f"system {system_id!r} is not resegmented; run resegmentation "
                "before scoring"
            )
        missing = set(testset.doc_ids) - set(output.segments_by_doc)
        if missing:
            raise ValueError(
                f"system {system_id!r} lacks output for documents {sorted(missing)}"
            )
        outputs.append(output)

    refs = [
        seg.references[reference_set]
        for doc in testset.documents
        for seg in doc.segments
    ]
    table = ScoreTable(
        method=cfg.metric,
        granularity=Granularity.SYSTEM,
        conditions=(testset.condition,),
        reference_set=reference_set,
    )
    level = metric_level(testset.condition)
    for output in outputs:
        hyps = [
            line
            for doc in testset.documents
            for line in output.segments_by_doc[doc.doc_id]
        ]
        if cfg.metric == "chrf":
            score = chrf_corpus(hyps, refs, cfg)
        else:
            score = bleu_corpus(
                [tokenize(h, level) for h in hyps],
                [tokenize(r, level) for r in refs],
                cfg,
            )
        table.rows[(output.system_id, None)] = score
    table.validate()
    return table


def write_score_table(table: ScoreTable, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["\t".join(SCORE_TSV_COLUMNS)]
    domain = "+".join(dict.fromkeys(c.domain.value for c in table.conditions))
    task = "+".join(dict.fromkeys(c.task.value for c in table.conditions))
    langs = "+".join(dict.fromkeys(c.lang_pair for c in table.conditions))
    for (system_id, segment_id) in sorted(
        table.rows, key=lambda key: (key[0], key[1] or "")
    ):
        score = table.rows[(system_id, segment_id)]
        lines.append(
            "\t".join(
                [
                    table.method,
                    task,
                    langs,
                    domain,
                    table.reference_set or "",
                    system_id,
                    segment_id or "",
                    repr(score),
                ]
            )
        )
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def read_score_table(path: str | Path) -> ScoreTable:
    """Read a score TSV; single-condition tables only (no '+' pooling markers)."""
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise LoadError(f"missing score file: {path}") from exc
    lines = raw.splitlines()
    if not lines:
        raise LoadError(f"{path}: empty score file")
    header = tuple(lines[0].split("\t"))
    if header != SCORE_TSV_COLUMNS:
        raise LoadError(
            f"{path}: bad header {header!r}, expected {SCORE_TSV_COLUMNS!r}"
        )
    rows: dict[tuple[str, str | None], float] = {}
    method = None
    condition = None
    reference_set: str | None = None
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != len(SCORE_TSV_COLUMNS):
            raise LoadError(f"{path}:{lineno}: expected {len(SCORE_TSV_COLUMNS)} columns")
        f_method, task, langs, domain, ref_set, system_id, segment_id, score_text = fields
        try:
            score = float(score_text)
        except ValueError as exc:
            raise LoadError(
                f"{path}:{lineno}: non-numeric score {score_text!r}"
            ) from exc
        row_condition = Condition.from_dict(
            {"task": task, "langs": langs, "domain": domain}
        )
        if condition is None:
            condition = row_condition
            method = f_method
            reference_set = ref_set or None
        else:
            if row_condition != condition:
                raise LoadError(f"{path}:{lineno}: mixed conditions in one table")
            if f_method != method:
                raise LoadError(f"{path}:{lineno}: mixed methods in one table")
        key = (system_id, segment_id or None)
        if key in rows:
            raise LoadError(f"{path}:{lineno}: duplicate row for {key!r}")
        rows[key] = score
    if condition is None or method is None:
        raise LoadError(f"{path}: no data rows")
    granularity = (
        Granularity.SYSTEM
        if all(seg is None for _, seg in rows)
        else Granularity.SEGMENT
    )
    table = ScoreTable(method, granularity, (condition,), reference_set, rows)
    table.validate()
    return table


def ingest_external_scores(
    path: str | Path,
    method: str | None = None,
    granularity: Granularity | None = None,
    condition: Condition | None = None,
    testset: TestSet | None = None,
) -> ScoreTable:
    """Read an externally computed score TSV and validate it.

    When expectations are passed they are checked against the file; when a
    test set is passed, system and segment ids must all be registered there.
    """
    table = read_score_table(path)
    if method is not None and table.method != method:
        raise LoadError(f"{path}: method {table.method!r}, expected {method!r}")
    if granularity is not None and table.granularity is not granularity:
        raise LoadError(
            f"{path}: granularity {table.granularity.value}, expected {granularity.value}"
        )
    if condition is not None and table.conditions != (condition,):
        raise LoadError(f"{path}: condition mismatch")
    if testset is not None:
        known_systems = set(testset.systems)
        known_segments = {seg.segment_id for _, _, seg in testset.all_segments()}
        bad_systems = sorted(
            {sys_id for sys_id, _ in table.rows if sys_id not in known_systems}
        )
        bad_segments = sorted(
            {
                seg_id
                for _, seg_id in table.rows
                if seg_id is not None and seg_id not in known_segments
            }
        )
        if bad_systems or bad_segments:
            parts = []
            if bad_systems:
                parts.append(f"unknown systems: {bad_systems}")
            if bad_segments:
                parts.append(f"unknown segments: {bad_segments}")
            raise LoadError(f"{path}: " + "; ".join(parts))
    return table
