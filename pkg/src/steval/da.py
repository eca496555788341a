"""Direct-assessment campaign mechanics: sampling, task building, records.

Scores are judgments of one (system, segment) pair on a continuous 0-100
scale. The same sampled segments are used for every system so that systems
stay comparable, tasks carry the system's own translations of the adjacent
segments as context, and presentation order is shuffled and decoupled from
document order. All randomness is driven by explicit seeds through Python's
Mersenne Twister (random.Random), making plans and task lists reproducible
bit for bit.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

from .evalset import Condition, TestSet

ANNOTATOR_INSTRUCTIONS = (
    "Sentence boundary errors are expected and should not be factored in when "
    "judging translation quality. This is when the translation appears to be "
    "missing or adding extra words but the source was segmented at a different "
    "place. To this end, we have included the translations for the previous and "
    "next sentences also. If the source and translation are only different "
    "because of sentence boundary issues, do not let this affect your scoring "
    "judgment."
)

RECORDS_TSV_COLUMNS = (
    "task",
    "langs",
    "domain",
    "system_id",
    "doc_id",
    "segment_id",
    "annotator_id",
    "raw_score",
    "timestamp",
)


class IngestError(Exception):
    """A record file failed validation; message carries the row number."""


@dataclass(frozen=True)
class SamplePlan:
    condition: Condition
    seed: int
    k: int
    segment_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(set(self.segment_ids)) != len(self.segment_ids):
            raise ValueError("sample plan contains duplicate segment ids")


@dataclass(frozen=True)
class AnnotationTask:
    task_id: str
    annotator_id: str
    system_id: str  # never exposed to the annotator
    segment_id: str
    doc_id: str
    source_text: str
    hyp_text: str
    prev_hyp_text: str | None
    next_hyp_text: str | None
    presentation_index: int


@dataclass(frozen=True)
class DARecord:
    annotator_id: str
    system_id: str
    segment_id: str
    raw_score: float
    timestamp: str = ""

    def __post_init__(self) -> None:
        if not 0.0 <= self.raw_score <= 100.0:
            raise ValueError(f"raw_score outside [0,100]: {self.raw_score}")

    @property
    def doc_id(self) -> str:
        return self.segment_id.rsplit(":", 1)[0]

    @property
    def segment_index(self) -> int:
        return int(self.segment_id.rsplit(":", 1)[1])

    def key(self) -> tuple[str, str, str]:
        return (self.annotator_id, self.system_id, self.segment_id)


def sample_segments(testset: TestSet, k: int, seed: int) -> SamplePlan:
    """Sample k segment ids without replacement, uniformly, deterministically.

    The population is every segment of the condition in canonical document
    order; k >= the population size returns all ids in that order. The drawn
    subset is also reported in canonical order (shuffling happens later, at
    task-building time).
    """
    if k <= 0:
        raise ValueError("sample size k must be positive")
    ordered = [seg.segment_id for _, _, seg in testset.all_segments()]
    if k >= len(ordered):
        chosen = list(ordered)
    else:
        rng = random.Random(seed)
        picked = set(rng.sample(range(len(ordered)), k))
        chosen = [seg_id for idx, seg_id in enumerate(ordered) if idx in picked]
    return SamplePlan(testset.condition, seed, k, tuple(chosen))


def build_tasks(
    testset: TestSet,
    plan: SamplePlan,
    systems: list[str],
    annotators: list[str],
    shuffle_seed: int,
) -> list[AnnotationTask]:
    """One task per (system, sampled segment), shuffled and assigned to annotators.

    Assignment is round-robin over the shuffled task list, with a repair pass
    guaranteeing that no annotator sees two systems' outputs for the same
    segment back to back (when avoidable). Deterministic given the seeds.
    """
    if not annotators:
        raise ValueError("need at least one annotator")
    if not systems:
        raise ValueError("need at least one system")
    if plan.condition != testset.condition:
        raise ValueError("sample plan belongs to a different condition")
    seg_lookup: dict[str, tuple[str, int]] = {}
    for doc, idx, seg in testset.all_segments():
        seg_lookup[seg.segment_id] = (doc.doc_id, idx)

    raw: list[tuple[str, str]] = []
    for system_id in systems:
        if system_id not in testset.systems:
            raise ValueError(f"system {system_id!r} not registered in test set")
        output = testset.systems[system_id]
        if not output.resegmented:
            raise ValueError(
                f"system {system_id!r} is not resegmented; tasks need "
                "reference-parallel output"
            )
        for segment_id in plan.segment_ids:
            doc_id, _ = seg_lookup[segment_id]
            if doc_id not in output.segments_by_doc:
                raise ValueError(
                    f"system {system_id!r} has no output for document {doc_id!r} "
                    f"needed by sampled segment {segment_id!r}"
                )
            raw.append((system_id, segment_id))

    rng = random.Random(shuffle_seed)
    rng.shuffle(raw)

    per_annotator: dict[str, list[tuple[str, str]]] = {a: [] for a in annotators}
    for idx, item in enumerate(raw):
        per_annotator[annotators[idx % len(annotators)]].append(item)
    for annotator in annotators:
        _repair_adjacent_segments(per_annotator[annotator])

    tasks: list[AnnotationTask] = []
    counter = 0
    for annotator in annotators:
        for pos, (system_id, segment_id) in enumerate(per_annotator[annotator]):
            doc_id, seg_idx = seg_lookup[segment_id]
            doc = testset.document(doc_id)
            hyp_lines = testset.systems[system_id].segments_by_doc[doc_id]
            tasks.append(
                AnnotationTask(
                    task_id=f"t{counter:06d}",
                    annotator_id=annotator,
                    system_id=system_id,
                    segment_id=segment_id,
                    doc_id=doc_id,
                    source_text=doc.segments[seg_idx].source_text,
                    hyp_text=hyp_lines[seg_idx],
                    prev_hyp_text=hyp_lines[seg_idx - 1] if seg_idx > 0 else None,
                    next_hyp_text=(
                        hyp_lines[seg_idx + 1] if seg_idx + 1 < len(hyp_lines) else None
                    ),
                    presentation_index=pos,
                )
            )
            counter += 1
    return tasks


def _repair_adjacent_segments(items: list[tuple[str, str]]) -> None:
    """Swap forward to avoid consecutive tasks on the same segment, in place."""
    for i in range(1, len(items)):
        if items[i][1] != items[i - 1][1]:
            continue
        for j in range(i + 1, len(items)):
            if items[j][1] != items[i - 1][1]:
                items[i], items[j] = items[j], items[i]
                break
        # No swap candidate: the tail is all one segment, leave it.


def write_records_tsv(
    records: list[DARecord], path: str | Path, condition: Condition
) -> None:
    """Write records in the exchange TSV format, sorted for reproducibility.

    Sort key is (system_id, doc_id, segment index, annotator_id). The format
    is a documented superset of typical campaign exports (timestamp column
    added); re-importing reproduces the record set exactly.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["\t".join(RECORDS_TSV_COLUMNS)]
    ordered = sorted(
        records,
        key=lambda r: (r.system_id, r.doc_id, r.segment_index, r.annotator_id),
    )
    for rec in ordered:
        lines.append(
            "\t".join(
                [
                    condition.task.value,
                    condition.lang_pair,
                    condition.domain.value,
                    rec.system_id,
                    rec.doc_id,
                    rec.segment_id,
                    rec.annotator_id,
                    repr(rec.raw_score),
                    rec.timestamp,
                ]
            )
        )
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")


export_wmt = write_records_tsv


def _read_records_with_lines(
    path: str | Path, condition: Condition | None = None
) -> list[tuple[int, DARecord]]:
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise IngestError(f"missing records file: {path}") from exc
    lines = raw.splitlines()
    if not lines:
        raise IngestError(f"{path}: empty records file")
    header = lines[0].split("\t")
    missing = set(RECORDS_TSV_COLUMNS) - set(header)
    if missing:
        raise IngestError(f"{path}: header lacks columns {sorted(missing)}")
    col = {name: header.index(name) for name in header}
    records: list[tuple[int, DARecord]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != len(header):
            raise IngestError(f"{path}:{lineno}: expected {len(header)} columns")
        try:
            score = float(fields[col["raw_score"]])
        except ValueError as exc:
            raise IngestError(
                f"{path}:{lineno}: non-numeric score {fields[col['raw_score']]!r}"
            ) from exc
        if not 0.0 <= score <= 100.0:
            raise IngestError(f"{path}:{lineno}: score {score} outside [0,100]")
        if condition is not None:
            row_cond = (
                fields[col["task"]],
                fields[col["langs"]],
                fields[col["domain"]],
            )
            expected = (
                condition.task.value,
                condition.lang_pair,
                condition.domain.value,
            )
            if row_cond != expected:
                raise IngestError(
                    f"{path}:{lineno}: condition {row_cond} does not match "
                    f"{expected}"
                )
        records.append(
            (
                lineno,
                DARecord(
                    annotator_id=fields[col["annotator_id"]],
                    system_id=fields[col["system_id"]],
                    segment_id=fields[col["segment_id"]],
                    raw_score=score,
                    timestamp=fields[col["timestamp"]],
                ),
            )
        )
    return records


def read_records_tsv(
    path: str | Path, condition: Condition | None = None
) -> list[DARecord]:
    """Read an exchange TSV; tolerates reordered columns via the header row."""
    return [rec for _, rec in _read_records_with_lines(path, condition)]


def ingest_da(
    records_path: str | Path,
    tasks: list[AnnotationTask],
    condition: Condition | None = None,
    on_duplicate: str = "error",
) -> list[DARecord]:
    """Validate a records file against the issued tasks.

    Every record must match an issued (annotator, system, segment) task;
    out-of-range scores are errors, never clamped. Duplicates either raise
    (on_duplicate="error") or are skipped keeping the first occurrence
    (on_duplicate="skip").
    """
    if on_duplicate not in ("error", "skip"):
        raise ValueError("on_duplicate must be 'error' or 'skip'")
    issued = {(t.annotator_id, t.system_id, t.segment_id) for t in tasks}
    seen: set[tuple[str, str, str]] = set()
    accepted: list[DARecord] = []
    for lineno, rec in _read_records_with_lines(records_path, condition):
        if rec.key() not in issued:
            raise IngestError(
                f"{records_path}:{lineno}: record {rec.key()} matches no issued task"
            )
        if rec.key() in seen:
            if on_duplicate == "error":
                raise IngestError(
                    f"{records_path}:{lineno}: duplicate record {rec.key()}"
                )
            continue
        seen.add(rec.key())
        accepted.append(rec)
    return accepted


def aggregate_system_da(
    records: list[DARecord],
    mode: str = "raw_mean",
    condition: Condition | None = None,
) -> "ScoreTable":
    """System-level DA score table from validated records.

    raw_mean averages raw scores per system. annotator_z standardizes each
    annotator's scores to zero mean and unit variance first (zero-variance
    annotators contribute zeros), then averages per system.
    """
    from .metrics import Granularity, ScoreTable

    if mode not in ("raw_mean", "annotator_z"):
        raise ValueError("mode must be 'raw_mean' or 'annotator_z'")
    if not records:
        raise ValueError("no records to aggregate")
    if condition is None:
        raise ValueError("aggregation needs the campaign condition")

    values: dict[str, list[float]] = {}
    if mode == "raw_mean":
        for rec in records:
            values.setdefault(rec.system_id, []).append(rec.raw_score)
    else:
        by_annotator: dict[str, list[DARecord]] = {}
        for rec in records:
            by_annotator.setdefault(rec.annotator_id, []).append(rec)
        for recs in by_annotator.values():
            scores = [r.raw_score for r in recs]
            mean = sum(scores) / len(scores)
            var = sum((s - mean) ** 2 for s in scores) / len(scores)
            sd = var**0.5
            for rec in recs:
                z = 0.0 if sd == 0.0 else (rec.raw_score - mean) / sd
                values.setdefault(rec.system_id, []).append(z)

    rows = {
        (system_id, None): sum(vals) / len(vals)
        for system_id, vals in sorted(values.items())
    }
    table = ScoreTable(
        method="da",
        granularity=Granularity.SYSTEM,
        conditions=(condition,),
        reference_set=None,
        rows=rows,
    )
    table.validate()
    return table


def warn_missing_systems(
    records: list[DARecord], expected_systems: list[str]
) -> list[str]:
    """Systems with zero records; callers warn and exclude them."""
    present = {rec.system_id for rec in records}
    return sorted(set(expected_systems) - present)
