"""Synthetic fixtures: a mini test set, noisy systems, and a full pipeline run.

Everything here is seeded and deterministic. The mini test set has 2 documents
with 25 segments each (50 segments), two reference sets ("original" and
"new"), and 3 systems of decreasing quality whose raw outputs are NOT on the
reference segmentation: sysA and sysB drift segment boundaries by a few
tokens, sysC emits each document as a single blob.
"""

from __future__ import annotations

import random
from pathlib import Path

from . import cli
from .da import DARecord, write_records_tsv
from .evalset import (
    Condition,
    Document,
    Domain,
    Segment,
    SystemOutput,
    TaskType,
    TestSet,
    save_system_output,
    save_testset,
)
from .campaign import CampaignState

_SYLLABLES = [
    "ba", "be", "bi", "bo", "bu", "da", "de", "di", "do", "du",
    "fa", "fe", "fi", "fo", "ga", "ge", "gi", "go", "ka", "ke",
    "ki", "ko", "la", "le", "li", "lo", "ma", "me", "mi", "mo",
    "na", "ne", "ni", "no", "ra", "re", "ri", "ro", "sa", "se",
]

_CJK_CHARS = "的一是不了人我在有他这中大来上国个到说们为子和你地出道也时年得就那要下以生会自着去之过家学对可她里后小么心多天而能好都然"

# Per-system word corruption rate; lower is cleaner output.
SYSTEM_NOISE = {"sysA": 0.05, "sysB": 0.15, "sysC": 0.30}
# DA quality offsets used by the synthetic annotators, aligned with the noise.
SYSTEM_DA_BASE = {"sysA": 85.0, "sysB": 70.0, "sysC": 50.0}


def _word(rng: random.Random) -> str:
    return "".join(rng.choice(_SYLLABLES) for _ in range(rng.randint(2, 4)))


def _vocab(rng: random.Random, size: int) -> list[str]:
    words = set()
    while len(words) < size:
        words.add(_word(rng))
    return sorted(words)


def _sentence(rng: random.Random, vocab: list[str], lo: int = 6, hi: int = 14) -> str:
    return " ".join(rng.choice(vocab) for _ in range(rng.randint(lo, hi)))


def _corrupt(rng: random.Random, text: str, rate: float, vocab: list[str]) -> str:
    words = text.split()
    out = []
    for word in words:
        roll = rng.random()
        if roll < rate / 2:
            continue  # drop
        if roll < rate:
            out.append(rng.choice(vocab))  # substitute
            continue
        out.append(word)
    if not out:
        out.append(rng.choice(vocab))
    return " ".join(out)


def _drift_lines(rng: random.Random, lines: list[str], max_drift: int = 2) -> list[str]:
    """Move up to max_drift words across each boundary, keeping token content."""
    tokens_per_line = [line.split() for line in lines]
    for i in range(len(tokens_per_line) - 1):
        drift = rng.randint(-max_drift, max_drift)
        if drift > 0:
            moved = tokens_per_line[i][-drift:]
            if len(tokens_per_line[i]) > drift:
                tokens_per_line[i] = tokens_per_line[i][:-drift]
                tokens_per_line[i + 1] = moved + tokens_per_line[i + 1]
        elif drift < 0:
            take = -drift
            if len(tokens_per_line[i + 1]) > take:
                moved = tokens_per_line[i + 1][:take]
                tokens_per_line[i + 1] = tokens_per_line[i + 1][take:]
                tokens_per_line[i] = tokens_per_line[i] + moved
    return [" ".join(toks) for toks in tokens_per_line]


def build_mini_testset(
    root: str | Path,
    seed: int = 20240601,
    docs: int = 2,
    segments_per_doc: int = 25,
) -> tuple[Path, dict[str, Path]]:
    """Write the word-level mini test set; returns (testset manifest, system manifests).

    System manifests point at raw (non-resegmented) outputs, ready for the
    reseg command.
    """
    root = Path(root)
    rng = random.Random(seed)
    src_vocab = _vocab(rng, 80)
    tgt_vocab = _vocab(rng, 120)
    condition = Condition(TaskType.OFFLINE, "en-de", Domain.TED)

    documents = []
    raw_outputs: dict[str, dict[str, list[str]]] = {s: {} for s in SYSTEM_NOISE}
    for d in range(docs):
        doc_id = f"talk{d + 1:02d}"
        segments = []
        new_refs = []
        for idx in range(segments_per_doc):
            source = _sentence(rng, src_vocab)
            new_ref = _sentence(rng, tgt_vocab)
            # Subtitle-style variant: mild compression of the natural reference.
            original_ref = _corrupt(rng, new_ref, 0.12, tgt_vocab)
            segments.append(
                Segment(
                    segment_id=f"{doc_id}:{idx}",
                    source_text=source,
                    references={"new": new_ref, "original": original_ref},
                )
            )
            new_refs.append(new_ref)
        documents.append(Document(doc_id, segments))
        for system_id, rate in SYSTEM_NOISE.items():
            hyp_lines = [_corrupt(rng, ref, rate, tgt_vocab) for ref in new_refs]
            if system_id == "sysC":
                raw_outputs[system_id][doc_id] = [" ".join(hyp_lines)]
            else:
                raw_outputs[system_id][doc_id] = _drift_lines(rng, hyp_lines)

    testset = TestSet(condition, documents, ("new", "original"))
    system_manifests = {}
    for system_id in sorted(SYSTEM_NOISE):
        output = SystemOutput(system_id, condition, raw_outputs[system_id])
        testset.register(output)
        system_manifests[system_id] = save_system_output(
            output, root / "raw" / system_id
        )
    manifest = save_testset(testset, root / "testset")
    return manifest, system_manifests


def build_char_testset(
    root: str | Path, seed: int = 20240602, segments: int = 12
) -> tuple[Path, dict[str, Path]]:
    """A small character-level (en-zh) test set with one blob system output."""
    root = Path(root)
    rng = random.Random(seed)
    src_vocab = _vocab(rng, 60)
    condition = Condition(TaskType.OFFLINE, "en-zh", Domain.TED)
    doc_id = "talk01"
    segs = []
    ref_lines = []
    for idx in range(segments):
        ref = "".join(rng.choice(_CJK_CHARS) for _ in range(rng.randint(8, 16)))
        segs.append(
            Segment(
                segment_id=f"{doc_id}:{idx}",
                source_text=_sentence(rng, src_vocab),
                references={"new": ref},
            )
        )
        ref_lines.append(ref)
    testset = TestSet(condition, [Document(doc_id, segs)], ("new",))
    noisy = []
    for ref in ref_lines:
        chars = [c for c in ref if rng.random() > 0.08]
        noisy.append("".join(chars))
    output = SystemOutput("sysZ", condition, {doc_id: ["".join(noisy)]})
    testset.register(output)
    sys_manifest = save_system_output(output, root / "raw" / "sysZ")
    manifest = save_testset(testset, root / "testset")
    return manifest, {"sysZ": sys_manifest}


def synthetic_records(campaign: CampaignState, seed: int = 77) -> list[DARecord]:
    """Deterministic pseudo-annotations for every issued task.

    Scores follow each system's quality level plus bounded noise, so DA
    rankings agree with metric rankings and correlations are meaningful.
    """
    rng = random.Random(seed)
    records = []
    for task in sorted(campaign.tasks, key=lambda t: t.task_id):
        base = SYSTEM_DA_BASE.get(task.system_id, 60.0)
        noise = rng.gauss(0.0, 6.0)
        score = min(100.0, max(0.0, round(base + noise, 1)))
        records.append(
            DARecord(
                annotator_id=task.annotator_id,
                system_id=task.system_id,
                segment_id=task.segment_id,
                raw_score=score,
                timestamp="2024-06-01T00:00:00Z",
            )
        )
    return records


def run_mini_campaign(workdir: str | Path, seed: int = 20240601) -> dict[str, bytes]:
    """Drive the whole pipeline through the CLI on the mini fixture.

    reseg -> score -> campaign build -> synthetic ingest -> export ->
    aggregate -> correlate. Returns a map of produced artifact paths
    (relative to workdir) to bytes, for byte-identity comparisons.
    """
    workdir = Path(workdir)
    manifest, sys_manifests = build_mini_testset(workdir, seed=seed)

    reseg_manifests = []
    for system_id, mpath in sorted(sys_manifests.items()):
        out_dir = workdir / "reseg" / system_id
        rc = cli.main(
            [
                "reseg",
                "--hyp",
                str(mpath),
                "--ref-manifest",
                str(manifest),
                "--level",
                "word",
                "--out",
                str(out_dir),
                "--ref-set",
                "new",
            ]
        )
        if rc != 0:
            raise RuntimeError(f"reseg failed for {system_id}")
        reseg_manifests.append(str(out_dir / f"{system_id}.json"))

    chrf_tsv = workdir / "scores" / "chrf.tsv"
    rc = cli.main(
        [
            "score",
            "--testset",
            str(manifest),
            "--systems",
            *reseg_manifests,
            "--metric",
            "chrf",
            "--ref-set",
            "new",
            "--out",
            str(chrf_tsv),
        ]
    )
    if rc != 0:
        raise RuntimeError("score failed")

    campaign_dir = workdir / "campaign"
    rc = cli.main(
        [
            "campaign",
            "build",
            "--campaign-dir",
            str(campaign_dir),
            "--testset",
            str(manifest),
            "--systems",
            *reseg_manifests,
            "--k",
            "50",
            "--seed",
            "7",
            "--annotators",
            "ann1",
            "ann2",
            "ann3",
            "--shuffle-seed",
            "11",
        ]
    )
    if rc != 0:
        raise RuntimeError("campaign build failed")

    state = CampaignState.load(campaign_dir)
    synth_path = workdir / "synthetic_records.tsv"
    write_records_tsv(synthetic_records(state), synth_path, state.condition)
    rc = cli.main(
        [
            "campaign",
            "ingest",
            "--campaign-dir",
            str(campaign_dir),
            "--records",
            str(synth_path),
        ]
    )
    if rc != 0:
        raise RuntimeError("campaign ingest failed")

    export_tsv = workdir / "exported_records.tsv"
    rc = cli.main(
        ["campaign", "export", "--campaign-dir", str(campaign_dir), "--out", str(export_tsv)]
    )
    if rc != 0:
        raise RuntimeError("campaign export failed")

    da_tsv = workdir / "scores" / "da.tsv"
    rc = cli.main(
        [
            "campaign",
            "aggregate",
            "--campaign-dir",
            str(campaign_dir),
            "--mode",
            "raw_mean",
            "--out",
            str(da_tsv),
        ]
    )
    if rc != 0:
        raise RuntimeError("campaign aggregate failed")

    report_md = workdir / "report.md"
    report_tsv = workdir / "report.tsv"
    for fmt, out in (("md", report_md), ("tsv", report_tsv)):
        rc = cli.main(
            [
                "correlate",
                "--human",
                str(da_tsv),
                "--metric",
                str(chrf_tsv),
                "--format",
                fmt,
                "--out",
                str(out),
            ]
        )
        if rc != 0:
            raise RuntimeError("correlate failed")

    artifacts = {}
    for path in sorted(workdir.rglob("*")):
        if path.is_file():
            artifacts[str(path.relative_to(workdir))] = path.read_bytes()
    return artifacts
