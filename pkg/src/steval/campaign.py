"""Campaign persistence and the JSON API the annotation UI talks to.

A campaign directory holds three files:

    campaign.json  -- condition, sample plan, annotators, seeds, task count
    tasks.jsonl    -- one issued AnnotationTask per line
    records.tsv    -- append-only score log in the exchange TSV format

Reloading a directory reproduces the exact in-memory state. The service keeps
task data immutable and serializes all record appends through a single lock;
task payloads never include system identity (annotation is blind).
"""

from __future__ import annotations

import json
import threading
from dataclasses import asdict, dataclass, field
from pathlib import Path

from pydantic import BaseModel, Field

from .da import (
    ANNOTATOR_INSTRUCTIONS,
    AnnotationTask,
    DARecord,
    IngestError,
    RECORDS_TSV_COLUMNS,
    SamplePlan,
    build_tasks,
    ingest_da,
    read_records_tsv,
    sample_segments,
    write_records_tsv,
)
from .evalset import Condition, TestSet

SLIDER_BOUNDS = {"min": 0.0, "max": 100.0, "step": 0.5}


class ScoreSubmission(BaseModel):
    task_id: str
    annotator_id: str
    score: float = Field(ge=0.0, le=100.0)
    timestamp: str = ""


@dataclass
class CampaignState:
    root: Path
    condition: Condition
    plan: SamplePlan
    annotators: tuple[str, ...]
    shuffle_seed: int
    systems: tuple[str, ...]
    tasks: list[AnnotationTask]
    records: list[DARecord] = field(default_factory=list)

    @property
    def records_path(self) -> Path:
        return self.root / "records.tsv"

    def task_by_id(self, task_id: str) -> AnnotationTask | None:
        return self._task_index.get(task_id)

    def __post_init__(self) -> None:
        self._task_index = {t.task_id: t for t in self.tasks}
        self._scored = {r.key() for r in self.records}

    def scored_keys(self) -> set[tuple[str, str, str]]:
        return set(self._scored)

    def next_task(self, annotator_id: str) -> AnnotationTask | None:
        """First unscored task in the annotator's presentation order."""
        mine = [t for t in self.tasks if t.annotator_id == annotator_id]
        mine.sort(key=lambda t: t.presentation_index)
        for task in mine:
            if (task.annotator_id, task.system_id, task.segment_id) not in self._scored:
                return task
        return None

    def progress(self) -> dict:
        per: dict[str, dict[str, int]] = {
            a: {"done": 0, "total": 0} for a in self.annotators
        }
        for task in self.tasks:
            per[task.annotator_id]["total"] += 1
            if (task.annotator_id, task.system_id, task.segment_id) in self._scored:
                per[task.annotator_id]["done"] += 1
        return {
            "annotators": per,
            "done": sum(v["done"] for v in per.values()),
            "total": len(self.tasks),
        }

    def append_record(self, record: DARecord) -> None:
        """Append one validated record to memory and the on-disk log."""
        task_key = record.key()
        issued = {(t.annotator_id, t.system_id, t.segment_id) for t in self.tasks}
        if task_key not in issued:
            raise IngestError(f"record {task_key} matches no issued task")
        if task_key in self._scored:
            raise IngestError(f"duplicate record {task_key}")
        self.records.append(record)
        self._scored.add(task_key)
        self._append_record_line(record)

    def _append_record_line(self, record: DARecord) -> None:
        line = "\t".join(
            [
                self.condition.task.value,
                self.condition.lang_pair,
                self.condition.domain.value,
                record.system_id,
                record.doc_id,
                record.segment_id,
                record.annotator_id,
                repr(record.raw_score),
                record.timestamp,
            ]
        )
        with self.records_path.open("a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()

    def ingest(self, records_path: str | Path, on_duplicate: str = "error") -> int:
        """Validate a records file and append all newly accepted records."""
        accepted = ingest_da(records_path, self.tasks, self.condition, on_duplicate)
        added = 0
        for rec in accepted:
            if rec.key() in self._scored:
                if on_duplicate == "error":
                    raise IngestError(f"record {rec.key()} already scored")
                continue
            self.records.append(rec)
            self._scored.add(rec.key())
            self._append_record_line(rec)
            added += 1
        return added

    def export(self, path: str | Path) -> None:
        write_records_tsv(self.records, path, self.condition)

    def save(self) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        manifest = {
            "condition": self.condition.to_dict(),
            "plan": {
                "seed": self.plan.seed,
                "k": self.plan.k,
                "segment_ids": list(self.plan.segment_ids),
            },
            "annotators": list(self.annotators),
            "shuffle_seed": self.shuffle_seed,
            "systems": list(self.systems),
            "task_count": len(self.tasks),
        }
        (self.root / "campaign.json").write_text(
            json.dumps(manifest, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        with (self.root / "tasks.jsonl").open("w", encoding="utf-8") as fh:
            for task in self.tasks:
                fh.write(json.dumps(asdict(task), ensure_ascii=False, sort_keys=True))
                fh.write("\n")
        if not self.records_path.exists():
            self.records_path.write_text(
                "\t".join(RECORDS_TSV_COLUMNS) + "\n", encoding="utf-8"
            )

    @classmethod
    def build(
        cls,
        root: str | Path,
        testset: TestSet,
        systems: list[str],
        annotators: list[str],
        k: int,
        seed: int,
        shuffle_seed: int,
    ) -> "CampaignState":
        plan = sample_segments(testset, k, seed)
        tasks = build_tasks(testset, plan, systems, annotators, shuffle_seed)
        state = cls(
            root=Path(root),
            condition=testset.condition,
            plan=plan,
            annotators=tuple(annotators),
            shuffle_seed=shuffle_seed,
            systems=tuple(systems),
            tasks=tasks,
        )
        state.save()
        return state

    @classmethod
    def load(cls, root: str | Path) -> "CampaignState":
        root = Path(root)
        manifest_path = root / "campaign.json"
        if not manifest_path.exists():
            raise IngestError(f"not a campaign directory: {root}")
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        condition = Condition.from_dict(manifest["condition"])
        plan = SamplePlan(
            condition=condition,
            seed=manifest["plan"]["seed"],
            k=manifest["plan"]["k"],
            segment_ids=tuple(manifest["plan"]["segment_ids"]),
        )
        tasks = []
        with (root / "tasks.jsonl").open(encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    tasks.append(AnnotationTask(**json.loads(line)))
        records_path = root / "records.tsv"
        records = read_records_tsv(records_path, condition) if records_path.exists() else []
        return cls(
            root=root,
            condition=condition,
            plan=plan,
            annotators=tuple(manifest["annotators"]),
            shuffle_seed=manifest["shuffle_seed"],
            systems=tuple(manifest["systems"]),
            tasks=tasks,
            records=records,
        )


def task_payload(state: CampaignState, task: AnnotationTask) -> dict:
    """The blind task view served to annotators: no system id, no document order."""
    return {
        "task_id": task.task_id,
        "source_text": task.source_text,
        "hyp_text": task.hyp_text,
        "prev_hyp_text": task.prev_hyp_text,
        "next_hyp_text": task.next_hyp_text,
        "instructions": ANNOTATOR_INSTRUCTIONS,
        "slider": dict(SLIDER_BOUNDS),
    }


def create_app(state: CampaignState, ui_dir: str | Path | None = None):
    """FastAPI app exposing the campaign protocol.

    GET  /api/tasks/next?annotator=ID -> task payload, or 204 when done
    POST /api/scores {task_id, annotator_id, score} -> 201
    GET  /api/progress -> per-annotator counts
    """
    from fastapi import FastAPI, HTTPException, Query, Response
    from fastapi.staticfiles import StaticFiles

    app = FastAPI(title="steval campaign service")
    write_lock = threading.Lock()

    @app.get("/api/tasks/next")
    def next_task(annotator: str = Query(...)):
        if annotator not in state.annotators:
            raise HTTPException(status_code=404, detail=f"unknown annotator {annotator!r}")
        task = state.next_task(annotator)
        if task is None:
            return Response(status_code=204)
        return task_payload(state, task)

    @app.post("/api/scores", status_code=201)
    def submit_score(submission: ScoreSubmission):
        task = state.task_by_id(submission.task_id)
        if task is None:
            raise HTTPException(status_code=404, detail="unknown task id")
        if task.annotator_id != submission.annotator_id:
            raise HTTPException(
                status_code=404, detail="task not assigned to this annotator"
            )
        record = DARecord(
            annotator_id=submission.annotator_id,
            system_id=task.system_id,
            segment_id=task.segment_id,
            raw_score=submission.score,
            timestamp=submission.timestamp,
        )
        with write_lock:
            if record.key() in state.scored_keys():
                raise HTTPException(status_code=409, detail="task already scored")
            state.append_record(record)
        progress = state.progress()
        return {"status": "recorded", "done": progress["done"], "total": progress["total"]}

    @app.get("/api/progress")
    def progress():
        return state.progress()

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    return app
