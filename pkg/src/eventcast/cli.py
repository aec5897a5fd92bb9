"""Command-line entry points for each pipeline stage and the full run."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .baseline import detect_spikes, fit_baseline, read_traffic_csv, spike_frequency, zscore_series
from .correlate import lead_time_cdf, match_spikes_to_events
from .ingest import FileCorpusConnector, FilterConfig, assemble_content_record, list_posts, EmptyRecordError
from .inference.backends import HttpLlmBackend, LlmBackendConfig, StubLlmBackend
from .inference.enrich import FixtureRetriever, enrich_event
from .inference.extract import build_event, extract_events
from .model import ContentRecord, SpikeRecord
from .pipeline import PipelineConfig, materialize_scenario, run_pipeline
from .reports import lead_time_table, render_table, spike_frequency_table
from .semantics import (
    HashingStubEmbedder,
    cluster_multilevel,
    embed_event,
    find_duplicates,
    merge_events,
)
from .store import EventStore, JsonlStore
from .synth import BUILTIN_SCENARIOS, Scenario

logger = logging.getLogger(__name__)


def _read_jsonl(path, record_type):
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(record_type.from_dict(json.loads(line)))
    return out


def cmd_synth(args) -> int:
    if args.scenario in BUILTIN_SCENARIOS:
        scenario = BUILTIN_SCENARIOS[args.scenario](seed=args.seed)
    else:
        scenario = Scenario.load(args.scenario)
    config_path = materialize_scenario(scenario, args.out_dir)
    print(f"scenario materialized; pipeline config at {config_path}")
    return 0


def cmd_run(args) -> int:
    config = PipelineConfig.load(args.config)
    report = run_pipeline(config)
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0 if report["status"] == "ok" else 1


def cmd_detect_spikes(args) -> int:
    traffic = read_traffic_csv(args.traffic)
    store = JsonlStore(args.out, SpikeRecord, id_prefix="spk")
    total = 0
    for network_id in sorted(traffic):
        series = traffic[network_id]
        boundary = args.window_weeks * 7 * 86400 // series.step_seconds
        if boundary >= len(series):
            print(f"{network_id}: series too short to score beyond the fitting window",
                  file=sys.stderr)
            return 2
        model = fit_baseline(series.slice(0, boundary), window_weeks=args.window_weeks,
                             bin_minutes=args.bin_minutes)
        z = zscore_series(model, series.slice(boundary), std_floor_fraction=args.std_floor)
        spikes = detect_spikes(z, z_threshold=args.z,
                               min_duration_minutes=args.min_duration,
                               merge_gap_minutes=args.merge_gap)
        for spike in spikes:
            store.append(spike)
        total += len(spikes)
        print(f"{network_id}: {len(spikes)} spikes")
    print(f"{total} spikes appended to {args.out}")
    return 0


def cmd_ingest(args) -> int:
    if args.connector != "file":
        print("only the file connector is wired into the CLI; use the library "
              "for HTTP sources", file=sys.stderr)
        return 2
    connector = FileCorpusConnector(args.corpus)
    filter_config = FilterConfig(
        search_terms=tuple(args.search_term),
        communities=tuple(args.community),
        min_engagement=args.min_engagement,
        require_outbound_link=args.require_outbound_link,
    )
    posts = list_posts(connector, filter_config)
    store = JsonlStore(args.out, ContentRecord, id_field="record_id")
    kept = 0
    for post in posts:
        try:
            record = assemble_content_record(post, top_k_comments=args.top_k_comments)
        except EmptyRecordError as exc:
            logger.warning("%s", exc)
            continue
        store.append(record)
        kept += 1
    print(f"{kept} records written to {args.out} "
          f"({connector.skip_report.malformed} malformed posts skipped)")
    return 0


def _build_cli_llm(args):
    if args.backend == "stub":
        if not args.fixtures:
            raise SystemExit("--fixtures is required with the stub backend")
        return StubLlmBackend.from_file(args.fixtures)
    config = LlmBackendConfig(endpoint_url=args.endpoint_url, model_name=args.model)
    return HttpLlmBackend(config, auth_token_env=args.auth_token_env)


def cmd_infer_events(args) -> int:
    records = _read_jsonl(args.records, ContentRecord)
    llm = _build_cli_llm(args)
    retriever = FixtureRetriever.from_file(args.retriever_fixtures) if args.retriever_fixtures else None
    store = EventStore(args.out)
    count = 0
    for record in records:
        for draft in extract_events(record, llm):
            event = build_event(draft, record, default_timezone=args.default_timezone)
            enriched, _runs = enrich_event(event, llm, retriever, records=[record])
            store.append(enriched)
            count += 1
    print(f"{count} events written to {args.out}")
    return 0


def cmd_dedup(args) -> int:
    store = EventStore(args.events)
    events = store.load_live()
    embedder = HashingStubEmbedder(dim=args.dim)
    embeddings = {e.event_id: embed_event(e, embedder) for e in events}
    groups = find_duplicates(events, embeddings, sim_threshold=args.threshold)
    by_id = {e.event_id: e for e in events}
    for group_ids in groups:
        merged = merge_events([by_id[eid] for eid in group_ids], store=store)
        print(f"merged {len(group_ids)} events into {merged.event_id}; "
              "non-fixed fields cleared for re-inference")
    print(f"{len(groups)} duplicate groups merged in {args.events}")
    return 0


def cmd_cluster(args) -> int:
    store = EventStore(args.events)
    events = store.load_live()
    if not events:
        print("no events to cluster", file=sys.stderr)
        return 2
    embedder = HashingStubEmbedder(dim=args.dim)
    embeddings = {e.event_id: embed_event(e, embedder) for e in events}
    levels = tuple(int(k) for k in args.levels.split(","))
    signatures, models = cluster_multilevel(embeddings, levels=levels, seed=args.seed)
    models.save(args.out_models)
    from dataclasses import replace
    for event in events:
        store.append(replace(event, semantic_signature=signatures[event.event_id]))
    print(f"signatures assigned at levels {list(levels)}; models saved to {args.out_models}")
    return 0


def cmd_correlate(args) -> int:
    events = EventStore(args.events).load_live()
    spikes = _read_jsonl(args.spikes, SpikeRecord)
    matches = match_spikes_to_events(spikes, events, window_hours=args.window_hours)
    with open(args.out, "w", encoding="utf-8") as fh:
        for match in matches:
            fh.write(json.dumps(match.to_dict(), sort_keys=True) + "\n")
    print(f"{len(matches)} matches written to {args.out}")
    return 0


def cmd_report(args) -> int:
    if args.kind == "spike-frequency":
        spikes = _read_jsonl(args.spikes, SpikeRecord)
        bins = tuple(float(b) for b in args.bins.split(","))
        header, rows = spike_frequency_table(spike_frequency(spikes, bins))
    elif args.kind == "lead-time":
        events = EventStore(args.events).load_live()
        cdfs = lead_time_cdf(events, bucket_categories=True,
                             min_category_count=args.min_category_count)
        header, rows = lead_time_table(cdfs)
    elif args.kind == "coverage":
        if args.labels and args.matches and args.spikes:
            from eventcast.correlate import SpikeEventMatch, coverage
            from eventcast.pipeline import _label_spikes, _load_labels
            from eventcast.reports import coverage_table

            spikes = _read_jsonl(args.spikes, SpikeRecord)
            matches = _read_jsonl(args.matches, SpikeEventMatch)
            labeled, _planted = _label_spikes(spikes, _load_labels(args.labels), matches)
            header, rows = coverage_table(coverage(labeled, matches))
        else:
            # fall back to the table a full pipeline run emitted
            path = Path(args.coverage_csv)
            if not path.exists():
                print("coverage needs --labels/--matches/--spikes, or a pipeline-"
                      f"emitted table at {path}", file=sys.stderr)
                return 2
            sys.stdout.write(path.read_text(encoding="utf-8"))
            return 0
    else:
        raise SystemExit(f"unknown report kind {args.kind}")
    sys.stdout.write(render_table(header, rows, format=args.format))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eventcast",
                                     description="event-driven traffic spike pipeline")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="materialize a synthetic scenario")
    p.add_argument("--scenario", default="default",
                   help="builtin name (default) or a scenario JSON path")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("run", help="run the full pipeline from a config file")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("detect-spikes", help="baseline + spike extraction from traffic CSV")
    p.add_argument("--traffic", required=True)
    p.add_argument("--z", type=float, default=2.0)
    p.add_argument("--min-duration", type=float, default=20.0)
    p.add_argument("--merge-gap", type=float, default=5.0)
    p.add_argument("--window-weeks", type=int, default=4)
    p.add_argument("--bin-minutes", type=int, default=5)
    p.add_argument("--std-floor", type=float, default=0.05)
    p.add_argument("--out", default="spikes.jsonl")
    p.set_defaults(fn=cmd_detect_spikes)

    p = sub.add_parser("ingest", help="filter posts and assemble content records")
    p.add_argument("--connector", default="file", choices=["file"])
    p.add_argument("--corpus", required=True)
    p.add_argument("--search-term", action="append", default=[])
    p.add_argument("--community", action="append", default=[])
    p.add_argument("--min-engagement", type=int, default=0)
    p.add_argument("--require-outbound-link", action="store_true")
    p.add_argument("--top-k-comments", type=int, default=20)
    p.add_argument("--out", default="records.jsonl")
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("infer-events", help="extract and enrich events from records")
    p.add_argument("--records", required=True)
    p.add_argument("--backend", choices=["stub", "http"], default="stub")
    p.add_argument("--fixtures", help="stub fixture map (JSON)")
    p.add_argument("--endpoint-url")
    p.add_argument("--model")
    p.add_argument("--auth-token-env")
    p.add_argument("--retriever-fixtures")
    p.add_argument("--default-timezone", default="UTC")
    p.add_argument("--out", default="events.jsonl")
    p.set_defaults(fn=cmd_infer_events)

    p = sub.add_parser("dedup", help="merge same-date near-duplicate events")
    p.add_argument("--events", required=True)
    p.add_argument("--threshold", type=float, default=0.90)
    p.add_argument("--dim", type=int, default=64)
    p.set_defaults(fn=cmd_dedup)

    p = sub.add_parser("cluster", help="fit multi-level k-means signatures")
    p.add_argument("--events", required=True)
    p.add_argument("--levels", default="10,100,1000,10000")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--out-models", default="cluster_models.json")
    p.set_defaults(fn=cmd_cluster)

    p = sub.add_parser("correlate", help="match spikes to events")
    p.add_argument("--events", required=True)
    p.add_argument("--spikes", required=True)
    p.add_argument("--window-hours", type=float, default=6.0)
    p.add_argument("--out", default="matches.jsonl")
    p.set_defaults(fn=cmd_correlate)

    p = sub.add_parser("report", help="emit plot-ready tables")
    p.add_argument("kind", choices=["coverage", "lead-time", "spike-frequency"])
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--spikes", help="spikes.jsonl (spike-frequency, coverage)")
    p.add_argument("--bins", default="2,3,5")
    p.add_argument("--events", help="events.jsonl (lead-time)")
    p.add_argument("--min-category-count", type=int, default=1000)
    p.add_argument("--labels", help="ground-truth labels.jsonl (coverage)")
    p.add_argument("--matches", help="matches.jsonl (coverage)")
    p.add_argument("--coverage-csv", default="out/reports/coverage.csv",
                   help="fallback: pipeline-emitted coverage table")
    p.set_defaults(fn=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
