"""Data model and on-disk formats for test sets, reference sets, and system outputs.

On-disk layout: one directory per condition, holding a manifest.json plus
UTF-8 text files with one segment per line. The manifest maps files to
document ids, reference-set names, and system ids:

    {
      "condition": {"task": "offline", "langs": "en-de", "domain": "TED"},
      "documents": [
        {"doc_id": "talk01",
         "source": "talk01.src.txt",
         "references": {"original": "talk01.ref.original.txt",
                        "new": "talk01.ref.new.txt"},
         "systems": {"sysA": "talk01.sysA.txt"}}
      ]
    }

Segment ids are "{doc_id}:{zero-based index}", generated at load time. A
system file may start with a "#resegmented" header line asserting that its
lines already follow the reference segmentation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .tokenization import nfc

RESEGMENTED_HEADER = "#resegmented"


class LoadError(Exception):
    """A test set or system output failed validation; message names the offender."""


class TaskType(str, Enum):
    OFFLINE = "offline"
    MULTILINGUAL = "multilingual"
    SIMULTANEOUS = "simultaneous"


class Domain(str, Enum):
    TED = "TED"
    ACL = "ACL"


# Combinations defined by the campaign: TED is evaluated in the offline and
# simultaneous tasks, ACL in the offline and multilingual tasks.
VALID_TASK_DOMAIN = {
    (TaskType.OFFLINE, Domain.TED),
    (TaskType.SIMULTANEOUS, Domain.TED),
    (TaskType.OFFLINE, Domain.ACL),
    (TaskType.MULTILINGUAL, Domain.ACL),
}


@dataclass(frozen=True)
class Condition:
    """A (task, language pair, domain) triple under which systems are compared."""

    task: TaskType
    lang_pair: str
    domain: Domain

    def __post_init__(self) -> None:
        if (self.task, self.domain) not in VALID_TASK_DOMAIN:
            raise ValueError(
                f"undefined task/domain combination: {self.task.value}/{self.domain.value}"
            )
        parts = self.lang_pair.split("-")
        if len(parts) != 2 or not all(p.isalpha() for p in parts):
            raise ValueError(f"malformed language pair: {self.lang_pair!r}")

    @property
    def source_lang(self) -> str:
        return self.lang_pair.split("-")[0]

    @property
    def target_lang(self) -> str:
        return self.lang_pair.split("-")[1]

    @property
    def label(self) -> str:
        return f"{self.task.value}/{self.lang_pair}/{self.domain.value}"

    def to_dict(self) -> dict:
        return {
            "task": self.task.value,
            "langs": self.lang_pair,
            "domain": self.domain.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Condition":
        try:
            return cls(TaskType(d["task"]), d["langs"], Domain(d["domain"]))
        except (KeyError, ValueError) as exc:
            raise LoadError(f"invalid condition spec {d!r}: {exc}") from exc


@dataclass(frozen=True)
class Segment:
    segment_id: str
    source_text: str
    references: dict[str, str]

    def __post_init__(self) -> None:
        if not self.references:
            raise ValueError(f"segment {self.segment_id} has no references")


@dataclass
class Document:
    doc_id: str
    segments: list[Segment]

    def __post_init__(self) -> None:
        if not self.segments:
            raise ValueError(f"document {self.doc_id} has no segments")


@dataclass
class SystemOutput:
    system_id: str
    condition: Condition
    segments_by_doc: dict[str, list[str]]
    resegmented: bool = False


@dataclass
class TestSet:
    """All documents and registered system outputs for one condition."""

    condition: Condition
    documents: list[Document]
    reference_sets: tuple[str, ...]
    systems: dict[str, SystemOutput] = field(default_factory=dict)

    def document(self, doc_id: str) -> Document:
        for doc in self.documents:
            if doc.doc_id == doc_id:
                return doc
        raise KeyError(doc_id)

    @property
    def doc_ids(self) -> list[str]:
        return [d.doc_id for d in self.documents]

    def all_segments(self) -> list[tuple[Document, int, Segment]]:
        out = []
        for doc in self.documents:
            for idx, seg in enumerate(doc.segments):
                out.append((doc, idx, seg))
        return out

    @property
    def total_segments(self) -> int:
        return sum(len(d.segments) for d in self.documents)

    def register(self, output: SystemOutput) -> None:
        unknown = set(output.segments_by_doc) - set(self.doc_ids)
        if unknown:
            raise LoadError(
                f"system {output.system_id!r} references unknown documents: "
                f"{sorted(unknown)}"
            )
        self.systems[output.system_id] = output


def _read_lines(path: Path) -> list[str]:
    try:
        raw = path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise LoadError(f"missing file: {path}") from exc
    if raw == "":
        return []
    if raw.endswith("\n"):
        raw = raw[:-1]
    return [nfc(line) for line in raw.split("\n")]


def _read_segment_file(path: Path, expected: int | None = None) -> list[str]:
    lines = _read_lines(path)
    if expected is not None and len(lines) != expected:
        raise LoadError(
            f"{path}: expected {expected} lines (one per segment), found {len(lines)}"
        )
    return lines


def load_testset(path: str | Path) -> TestSet:
    """Load and fully validate a test set from a manifest or its directory."""
    manifest_path = Path(path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / "manifest.json"
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise LoadError(f"missing manifest: {manifest_path}") from exc
    except json.JSONDecodeError as exc:
        raise LoadError(f"{manifest_path}: invalid JSON ({exc})") from exc

    root = manifest_path.parent
    condition = Condition.from_dict(manifest.get("condition", {}))
    doc_entries = manifest.get("documents", [])
    if not doc_entries:
        raise LoadError(f"{manifest_path}: no documents listed")

    documents: list[Document] = []
    ref_set_names: tuple[str, ...] | None = None
    seen_ids: set[str] = set()
    system_files: dict[str, dict[str, Path]] = {}
    for entry in doc_entries:
        doc_id = entry.get("doc_id")
        if not doc_id:
            raise LoadError(f"{manifest_path}: document entry without doc_id")
        if doc_id in seen_ids:
            raise LoadError(f"{manifest_path}: duplicate doc_id {doc_id!r}")
        seen_ids.add(doc_id)

        names = tuple(sorted(entry.get("references", {})))
        if not names:
            raise LoadError(f"{manifest_path}: document {doc_id!r} has no references")
        if ref_set_names is None:
            ref_set_names = names
        elif names != ref_set_names:
            raise LoadError(
                f"{manifest_path}: document {doc_id!r} carries reference sets "
                f"{list(names)}, expected {list(ref_set_names)}"
            )

        source_lines = _read_segment_file(root / entry["source"])
        if not source_lines:
            raise LoadError(f"{root / entry['source']}: document {doc_id!r} is empty")
        ref_lines = {
            name: _read_segment_file(root / fname, expected=len(source_lines))
            for name, fname in entry["references"].items()
        }
        segments = [
            Segment(
                segment_id=f"{doc_id}:{idx}",
                source_text=source_lines[idx],
                references={name: ref_lines[name][idx] for name in ref_lines},
            )
            for idx in range(len(source_lines))
        ]
        documents.append(Document(doc_id, segments))
        for system_id, fname in entry.get("systems", {}).items():
            system_files.setdefault(system_id, {})[doc_id] = root / fname

    testset = TestSet(condition, documents, ref_set_names or ())
    for system_id, files in sorted(system_files.items()):
        output = _load_system_files(system_id, files, condition, testset)
        testset.register(output)
    return testset


def _load_system_files(
    system_id: str,
    files: dict[str, Path],
    condition: Condition,
    testset: TestSet,
) -> SystemOutput:
    segments_by_doc: dict[str, list[str]] = {}
    flagged = []
    for doc_id, fpath in sorted(files.items()):
        lines = _read_lines(fpath)
        if not lines:
            raise LoadError(f"{fpath}: empty system output for document {doc_id!r}")
        flag = lines[0].strip() == RESEGMENTED_HEADER
        if flag:
            lines = lines[1:]
            if not lines:
                raise LoadError(f"{fpath}: header-only system output")
        flagged.append(flag)
        segments_by_doc[doc_id] = lines

    resegmented = False
    if flagged and all(flagged):
        for doc_id, lines in segments_by_doc.items():
            expected = len(testset.document(doc_id).segments)
            if len(lines) != expected:
                raise LoadError(
                    f"system {system_id!r} asserts resegmented output but document "
                    f"{doc_id!r} has {len(lines)} lines, reference has {expected}"
                )
        resegmented = True
    return SystemOutput(system_id, condition, segments_by_doc, resegmented)


def load_system_output(path: str | Path, testset: TestSet) -> SystemOutput:
    """Load a system output described by a small JSON manifest.

    Format: {"system_id": ..., "documents": {doc_id: hypothesis_file}}.
    Hypothesis files hold one segment per line; a leading "#resegmented" line
    asserts reference-parallel segmentation (checked against the test set).
    """
    mpath = Path(path)
    try:
        manifest = json.loads(mpath.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise LoadError(f"missing system manifest: {mpath}") from exc
    except json.JSONDecodeError as exc:
        raise LoadError(f"{mpath}: invalid JSON ({exc})") from exc
    system_id = manifest.get("system_id")
    docs = manifest.get("documents", {})
    if not system_id or not docs:
        raise LoadError(f"{mpath}: manifest needs system_id and documents")
    unknown = set(docs) - set(testset.doc_ids)
    if unknown:
        raise LoadError(f"{mpath}: unknown documents {sorted(unknown)}")
    files = {doc_id: mpath.parent / fname for doc_id, fname in docs.items()}
    return _load_system_files(system_id, files, testset.condition, testset)


def save_testset(testset: TestSet, root: str | Path) -> Path:
    """Write a test set (and registered systems) in the canonical layout."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    for doc in testset.documents:
        src_name = f"{doc.doc_id}.src.txt"
        _write_lines(root / src_name, [s.source_text for s in doc.segments])
        ref_entry = {}
        for name in testset.reference_sets:
            ref_name = f"{doc.doc_id}.ref.{name}.txt"
            _write_lines(root / ref_name, [s.references[name] for s in doc.segments])
            ref_entry[name] = ref_name
        sys_entry = {}
        for system_id in sorted(testset.systems):
            output = testset.systems[system_id]
            if doc.doc_id not in output.segments_by_doc:
                continue
            hyp_name = f"{doc.doc_id}.{system_id}.txt"
            lines = list(output.segments_by_doc[doc.doc_id])
            if output.resegmented:
                lines = [RESEGMENTED_HEADER] + lines
            _write_lines(root / hyp_name, lines)
            sys_entry[system_id] = hyp_name
        entries.append(
            {
                "doc_id": doc.doc_id,
                "source": src_name,
                "references": ref_entry,
                "systems": sys_entry,
            }
        )
    manifest = {"condition": testset.condition.to_dict(), "documents": entries}
    out = root / "manifest.json"
    out.write_text(
        json.dumps(manifest, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return out


def save_system_output(
    output: SystemOutput, root: str | Path, mark_resegmented: bool | None = None
) -> Path:
    """Write a system output plus its manifest; returns the manifest path."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    resegmented = output.resegmented if mark_resegmented is None else mark_resegmented
    docs_entry = {}
    for doc_id in sorted(output.segments_by_doc):
        fname = f"{doc_id}.{output.system_id}.txt"
        lines = list(output.segments_by_doc[doc_id])
        if resegmented:
            lines = [RESEGMENTED_HEADER] + lines
        _write_lines(root / fname, lines)
        docs_entry[doc_id] = fname
    manifest = {"system_id": output.system_id, "documents": docs_entry}
    out = root / f"{output.system_id}.json"
    out.write_text(
        json.dumps(manifest, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return out


def _write_lines(path: Path, lines: list[str]) -> None:
    text = "".join(line + "\n" for line in lines)
    path.write_text(text, encoding="utf-8")
