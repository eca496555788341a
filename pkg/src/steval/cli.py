"""Command-line surface: resegmentation, scoring, campaigns, correlation.

Every command is a thin wrapper over the library and is bit-reproducible
given explicit seeds. Exit codes: 0 success, 1 validation failure, 2 I/O or
usage failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import align, da, metrics, stats
from .campaign import CampaignState, create_app
from .evalset import (
    LoadError,
    load_system_output,
    load_testset,
    save_system_output,
)
from .tokenization import TokenizationLevel, tokenize

CAMPAIGN_DIR_ENV = "STEVAL_CAMPAIGN_DIR"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="steval",
        description="Speech translation evaluation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_reseg = sub.add_parser(
        "reseg", help="resegment a system output onto the reference segmentation"
    )
    p_reseg.add_argument("--hyp", required=True, help="system output manifest (JSON)")
    p_reseg.add_argument(
        "--ref-manifest", required=True, help="test set manifest or directory"
    )
    p_reseg.add_argument(
        "--level", required=True, choices=["word", "char"], help="tokenization level"
    )
    p_reseg.add_argument("--out", required=True, help="output directory")
    p_reseg.add_argument("--band", type=int, default=None, help="diagonal band width")
    p_reseg.add_argument(
        "--ref-set",
        default=None,
        help="reference set to align against (default: 'new' if present, else the only one)",
    )
    p_reseg.set_defaults(func=cmd_reseg)

    p_score = sub.add_parser("score", help="score resegmented systems with a metric")
    p_score.add_argument("--testset", required=True)
    p_score.add_argument(
        "--systems",
        nargs="*",
        default=None,
        help="system output manifests (JSON); default: systems registered in the test set",
    )
    p_score.add_argument("--metric", required=True, choices=["chrf", "bleu"])
    p_score.add_argument("--ref-set", required=True)
    p_score.add_argument("--out", required=True)
    p_score.set_defaults(func=cmd_score)

    p_campaign = sub.add_parser("campaign", help="manage a DA campaign")
    campaign_sub = p_campaign.add_subparsers(dest="action", required=True)

    c_build = campaign_sub.add_parser("build", help="sample segments and issue tasks")
    c_build.add_argument("--campaign-dir", default=None)
    c_build.add_argument("--testset", required=True)
    c_build.add_argument(
        "--systems", nargs="+", required=True, help="resegmented system manifests"
    )
    c_build.add_argument("--k", type=int, required=True)
    c_build.add_argument("--seed", type=int, required=True)
    c_build.add_argument("--annotators", nargs="+", required=True)
    c_build.add_argument("--shuffle-seed", type=int, required=True)
    c_build.set_defaults(func=cmd_campaign_build)

    c_serve = campaign_sub.add_parser("serve", help="run the annotation service")
    c_serve.add_argument("--campaign-dir", default=None)
    c_serve.add_argument("--host", default="127.0.0.1")
    c_serve.add_argument("--port", type=int, default=8800)
    c_serve.add_argument("--ui-dir", default=None, help="static UI bundle to mount")
    c_serve.set_defaults(func=cmd_campaign_serve)

    c_ingest = campaign_sub.add_parser("ingest", help="validate and log a records file")
    c_ingest.add_argument("--campaign-dir", default=None)
    c_ingest.add_argument("--records", required=True)
    c_ingest.add_argument(
        "--on-duplicate", choices=["error", "skip"], default="error"
    )
    c_ingest.set_defaults(func=cmd_campaign_ingest)

    c_export = campaign_sub.add_parser("export", help="export the record log as TSV")
    c_export.add_argument("--campaign-dir", default=None)
    c_export.add_argument("--out", required=True)
    c_export.set_defaults(func=cmd_campaign_export)

    c_agg = campaign_sub.add_parser(
        "aggregate", help="aggregate records into a system-level score table"
    )
    c_agg.add_argument("--campaign-dir", default=None)
    c_agg.add_argument("--mode", choices=["raw_mean", "annotator_z"], default="raw_mean")
    c_agg.add_argument("--out", required=True)
    c_agg.set_defaults(func=cmd_campaign_aggregate)

    p_corr = sub.add_parser("correlate", help="correlate human and metric score tables")
    p_corr.add_argument("--human", nargs="+", required=True, help="score TSVs (human)")
    p_corr.add_argument("--metric", nargs="+", required=True, help="score TSVs (metric)")
    p_corr.add_argument("--average-domains", action="store_true")
    p_corr.add_argument("--pool", choices=["task", "domain", "language"], default=None)
    p_corr.add_argument("--format", choices=["tsv", "md"], default="tsv")
    p_corr.add_argument("--out", default=None, help="write the report here (else stdout)")
    p_corr.set_defaults(func=cmd_correlate)

    return parser


def _campaign_dir(args) -> Path:
    given = getattr(args, "campaign_dir", None) or os.environ.get(CAMPAIGN_DIR_ENV)
    if not given:
        raise LoadError(
            f"no campaign directory: pass --campaign-dir or set {CAMPAIGN_DIR_ENV}"
        )
    return Path(given)


def cmd_reseg(args) -> int:
    testset = load_testset(args.ref_manifest)
    output = load_system_output(args.hyp, testset)
    level = TokenizationLevel.from_string(args.level)
    reseg, diags = align.resegment_all(
        output, testset, level, reference_set=args.ref_set, band=args.band
    )
    manifest_path = save_system_output(reseg, Path(args.out))
    for doc in testset.documents:
        if doc.doc_id not in diags:
            continue
        seg = diags[doc.doc_id]
        ref_set = align._pick_reference_set(doc, args.ref_set)
        ref_len = sum(
            len(tokenize(s.references[ref_set], level)) for s in doc.segments
        )
        doc_wer = seg.total_distance / ref_len if ref_len else float("nan")
        approx = " (approximate)" if seg.approximate else ""
        print(
            f"{output.system_id}\t{doc.doc_id}\tdistance={seg.total_distance}"
            f"\twer={doc_wer:.4f}{approx}"
        )
    print(f"wrote {manifest_path}")
    return 0


def _register_systems(testset, system_manifests) -> list[str]:
    ids = []
    for mpath in system_manifests:
        output = load_system_output(mpath, testset)
        testset.register(output)
        ids.append(output.system_id)
    return ids


def cmd_score(args) -> int:
    testset = load_testset(args.testset)
    system_ids = (
        _register_systems(testset, args.systems) if args.systems else None
    )
    cfg = metrics.MetricConfig(metric=args.metric)
    table = metrics.score_systems(testset, system_ids, cfg, args.ref_set)
    metrics.write_score_table(table, args.out)
    for system_id, score in sorted(table.system_scores().items()):
        print(f"{args.metric}\t{system_id}\t{score:.4f}")
    return 0


def cmd_campaign_build(args) -> int:
    root = _campaign_dir(args)
    testset = load_testset(args.testset)
    system_ids = _register_systems(testset, args.systems)
    state = CampaignState.build(
        root=root,
        testset=testset,
        systems=system_ids,
        annotators=args.annotators,
        k=args.k,
        seed=args.seed,
        shuffle_seed=args.shuffle_seed,
    )
    print(
        f"campaign at {root}: {len(state.tasks)} tasks "
        f"({len(system_ids)} systems x {len(state.plan.segment_ids)} segments), "
        f"{len(args.annotators)} annotators"
    )
    return 0


def cmd_campaign_serve(args) -> int:
    import uvicorn

    state = CampaignState.load(_campaign_dir(args))
    app = create_app(state, ui_dir=args.ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_campaign_ingest(args) -> int:
    state = CampaignState.load(_campaign_dir(args))
    added = state.ingest(args.records, on_duplicate=args.on_duplicate)
    print(f"ingested {added} records ({len(state.records)} total)")
    return 0


def cmd_campaign_export(args) -> int:
    state = CampaignState.load(_campaign_dir(args))
    state.export(args.out)
    print(f"exported {len(state.records)} records to {args.out}")
    return 0


def cmd_campaign_aggregate(args) -> int:
    state = CampaignState.load(_campaign_dir(args))
    missing = da.warn_missing_systems(state.records, list(state.systems))
    if missing:
        print(f"warning: no records for systems {missing}; excluded", file=sys.stderr)
    table = da.aggregate_system_da(state.records, args.mode, state.condition)
    metrics.write_score_table(table, args.out)
    for system_id, score in sorted(table.system_scores().items()):
        print(f"da\t{system_id}\t{score:.4f}")
    return 0


def cmd_correlate(args) -> int:
    human_tables = [metrics.read_score_table(p) for p in args.human]
    metric_tables = [metrics.read_score_table(p) for p in args.metric]
    results: list[stats.CorrelationResult] = []
    if args.average_domains and args.pool:
        raise LoadError("--average-domains and --pool are mutually exclusive")
    if args.average_domains:
        avg_h = stats.average_domains(human_tables)
        avg_m = stats.average_domains(metric_tables)
        results.append(stats.correlate(avg_h, avg_m))
    elif args.pool:
        results.append(
            stats.pool_conditions(
                human_tables, metric_tables, stats.PoolAxis(args.pool)
            )
        )
    else:
        for human in human_tables:
            matched = [
                m for m in metric_tables if m.conditions == human.conditions
            ]
            if not matched:
                raise LoadError(
                    f"no metric table for condition "
                    f"{'+'.join(c.label for c in human.conditions)}"
                )
            for m in matched:
                results.append(stats.correlate(human, m))
    text = stats.render_report(results, fmt=args.format, path=args.out)
    if args.out is None:
        sys.stdout.write(text)
    else:
        print(f"wrote {args.out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (LoadError, da.IngestError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


def console_main() -> None:  # pragma: no cover - thin entry point
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    console_main()
