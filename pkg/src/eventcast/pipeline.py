"""End-to-end orchestration: ingest -> infer -> dedup -> cluster ->
detect-spikes -> correlate -> report.

Stages communicate only through the documented file formats, so each can
also run standalone via the CLI. A stage failure halts downstream stages
but leaves earlier artifacts in place for inspection.
"""

from __future__ import annotations

import json
import logging
import time as time_mod
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

from . import reports as report_tables
from .baseline import detect_spikes, fit_baseline, read_traffic_csv, spike_frequency, zscore_series
from .correlate import (
    coverage,
    export_features,
    lead_time_cdf,
    match_spikes_to_events,
)
from .ingest import (
    FileCorpusConnector,
    FilterConfig,
    HttpJsonConnector,
    NullFetcher,
    assemble_content_record,
    fetch_linked_pages,
    list_posts,
    EmptyRecordError,
    FilePageFetcher,
    HttpPageFetcher,
)
from .inference.backends import HttpLlmBackend, LlmBackendConfig, StubLlmBackend
from .inference.enrich import FixtureRetriever, HttpRetriever, enrich_event
from .inference.extract import build_event, extract_events
from .model import ContentRecord, EventAbstraction, SpikeRecord, utc_from_iso
from .semantics import (
    HashingStubEmbedder,
    HttpEmbedder,
    cluster_multilevel,
    embed_event,
    find_duplicates,
    merge_events,
)
from .store import open_stores

logger = logging.getLogger(__name__)


class StageFailure(RuntimeError):
    """One pipeline stage failed; downstream stages were not run."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")


@dataclass
class PipelineConfig:
    """Everything a full run needs, loadable from one JSON file."""

    out_dir: str = "out"
    seed: int = 7
    default_timezone: str = "UTC"
    traffic_csv: Optional[str] = None
    corpus_path: Optional[str] = None
    labels_path: Optional[str] = None
    connector: str = "file"  # file | http
    connector_http: dict = field(default_factory=dict)
    filter: FilterConfig = field(default_factory=lambda: FilterConfig(search_terms=("event",)))
    top_k_comments: int = 20
    max_linked_pages: int = 0
    page_fetcher: dict = field(default_factory=lambda: {"kind": "none"})
    llm: dict = field(default_factory=lambda: {"kind": "stub", "fixtures_path": None})
    embedder: dict = field(default_factory=lambda: {"kind": "hash", "dim": 64})
    retriever: dict = field(default_factory=lambda: {"kind": "none"})
    ensemble_size: int = 3
    max_attempts: int = 3
    max_context_docs: int = 3
    window_weeks: int = 4
    bin_minutes: int = 5
    std_floor_fraction: float = 0.05
    z_threshold: float = 2.0
    min_duration_minutes: float = 20.0
    merge_gap_minutes: float = 5.0
    dedup_threshold: float = 0.90
    levels: tuple = (10, 100, 1_000, 10_000)
    match_window_hours: float = 6.0
    feature_window_days: int = 3
    min_category_count: int = 1_000
    report_bins: tuple = (2.0, 3.0, 5.0)
    network_regions: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        return cls.from_dict(raw, base_dir=Path(path).parent)

    @classmethod
    def from_dict(cls, raw: dict, base_dir: Optional[Path] = None) -> "PipelineConfig":
        raw = dict(raw)
        if "filter" in raw:
            raw["filter"] = FilterConfig.from_dict(raw["filter"])
        for key in ("levels", "report_bins"):
            if key in raw:
                raw[key] = tuple(raw[key])
        cfg = cls(**raw)
        if base_dir is not None:
            for attr in ("traffic_csv", "corpus_path", "labels_path", "out_dir"):
                value = getattr(cfg, attr)
                if value and not Path(value).is_absolute():
                    setattr(cfg, attr, str(base_dir / value))
            for section in (cfg.llm, cfg.retriever):
                p = section.get("fixtures_path")
                if p and not Path(p).is_absolute():
                    section["fixtures_path"] = str(base_dir / p)
        return cfg

    def to_dict(self) -> dict:
        return {
            "out_dir": self.out_dir,
            "seed": self.seed,
            "default_timezone": self.default_timezone,
            "traffic_csv": self.traffic_csv,
            "corpus_path": self.corpus_path,
            "labels_path": self.labels_path,
            "connector": self.connector,
            "connector_http": self.connector_http,
            "filter": self.filter.to_dict(),
            "top_k_comments": self.top_k_comments,
            "max_linked_pages": self.max_linked_pages,
            "page_fetcher": self.page_fetcher,
            "llm": self.llm,
            "embedder": self.embedder,
            "retriever": self.retriever,
            "ensemble_size": self.ensemble_size,
            "max_attempts": self.max_attempts,
            "max_context_docs": self.max_context_docs,
            "window_weeks": self.window_weeks,
            "bin_minutes": self.bin_minutes,
            "std_floor_fraction": self.std_floor_fraction,
            "z_threshold": self.z_threshold,
            "min_duration_minutes": self.min_duration_minutes,
            "merge_gap_minutes": self.merge_gap_minutes,
            "dedup_threshold": self.dedup_threshold,
            "levels": list(self.levels),
            "match_window_hours": self.match_window_hours,
            "feature_window_days": self.feature_window_days,
            "min_category_count": self.min_category_count,
            "report_bins": list(self.report_bins),
            "network_regions": self.network_regions,
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def build_llm(config: PipelineConfig):
    kind = config.llm.get("kind", "stub")
    if kind == "stub":
        path = config.llm.get("fixtures_path")
        if not path:
            raise ValueError("stub llm backend needs fixtures_path")
        return StubLlmBackend.from_file(path)
    if kind == "http":
        backend_config = LlmBackendConfig(
            endpoint_url=config.llm["endpoint_url"],
            model_name=config.llm["model_name"],
            temperature=config.llm.get("temperature", 0.7),
            max_output_tokens=config.llm.get("max_output_tokens", 2048),
            timeout_seconds=config.llm.get("timeout_seconds", 120),
        )
        return HttpLlmBackend(backend_config, auth_token_env=config.llm.get("auth_token_env"))
    raise ValueError(f"unknown llm backend kind {kind!r}")


def build_embedder(config: PipelineConfig):
    kind = config.embedder.get("kind", "hash")
    if kind == "hash":
        return HashingStubEmbedder(dim=config.embedder.get("dim", 64))
    if kind == "http":
        return HttpEmbedder(
            endpoint_url=config.embedder["endpoint_url"],
            model_name=config.embedder["model_name"],
        )
    raise ValueError(f"unknown embedder kind {kind!r}")


def build_retriever(config: PipelineConfig):
    kind = config.retriever.get("kind", "none")
    if kind == "none":
        return None
    if kind == "fixture":
        return FixtureRetriever.from_file(config.retriever["fixtures_path"])
    if kind == "http":
        return HttpRetriever(base_url=config.retriever["base_url"])
    raise ValueError(f"unknown retriever kind {kind!r}")


def build_connector(config: PipelineConfig):
    if config.connector == "file":
        return FileCorpusConnector(config.corpus_path)
    if config.connector == "http":
        return HttpJsonConnector(**config.connector_http)
    raise ValueError(f"unknown connector {config.connector!r}")


def build_page_fetcher(config: PipelineConfig):
    kind = config.page_fetcher.get("kind", "none")
    if kind == "none":
        return NullFetcher()
    if kind == "file":
        return FilePageFetcher(config.page_fetcher.get("pages", {}),
                               root=config.page_fetcher.get("root"))
    if kind == "http":
        return HttpPageFetcher()
    raise ValueError(f"unknown page fetcher kind {kind!r}")


def run_pipeline(config: PipelineConfig) -> dict:
    """Execute every stage and return the machine-readable run report.

    The report counts inputs/outputs per stage and includes coverage when
    ground-truth labels are configured. All JSONL/CSV artifacts are
    byte-stable for a fixed config and seed; only the report's timings
    vary between runs.
    """
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    reports_dir = out_dir / "reports"
    reports_dir.mkdir(exist_ok=True)
    stores = open_stores(out_dir)

    report: dict = {"stages": {}, "failures": [], "status": "ok"}
    timings: dict = {}

    def run_stage(name, fn):
        start = time_mod.perf_counter()
        try:
            result = fn()
        except Exception as exc:
            report["failures"].append({"stage": name, "error": str(exc)})
            report["status"] = f"failed at {name}"
            raise StageFailure(name, exc) from exc
        finally:
            timings[name] = round(time_mod.perf_counter() - start, 4)
        return result

    # -- ingest
    def stage_ingest() -> List[ContentRecord]:
        connector = build_connector(config)
        fetcher = build_page_fetcher(config)
        posts = list_posts(connector, config.filter)
        records = []
        discarded = 0
        for post in posts:
            pages = ()
            if config.max_linked_pages > 0 and post.outbound_urls:
                pages = fetch_linked_pages(post, fetcher, config.max_linked_pages)
            try:
                record = assemble_content_record(
                    post, pages=pages, top_k_comments=config.top_k_comments
                )
            except EmptyRecordError as exc:
                logger.warning("discarding record: %s", exc)
                discarded += 1
                continue
            records.append(record)
            stores["records"].append(record)
        report["stages"]["ingest"] = {
            "posts_kept": len(posts),
            "posts_skipped_malformed": connector.skip_report.malformed,
            "records": len(records),
            "records_discarded_empty": discarded,
        }
        return records

    # -- infer
    def stage_infer(records: List[ContentRecord]):
        llm = build_llm(config)
        retriever = build_retriever(config)
        events: List[EventAbstraction] = []
        seen_ids = set()
        drafts_total = 0
        flagged_past = 0
        record_failures = 0
        for record in records:
            drafts = extract_events(record, llm)
            drafts_total += len(drafts)
            for draft in drafts:
                if "past_dated" in draft.flags:
                    flagged_past += 1
                event = build_event(draft, record, default_timezone=config.default_timezone)
                if event.event_id in seen_ids:
                    continue
                seen_ids.add(event.event_id)
                enriched, runs = enrich_event(
                    event, llm, retriever, records=[record],
                    ensemble_size=config.ensemble_size,
                    max_attempts=config.max_attempts,
                    max_docs=config.max_context_docs,
                )
                for run in runs:
                    stores["runs"].append(run)
                stores["events"].append(enriched)
                events.append(enriched)
        report["stages"]["infer"] = {
            "records_processed": len(records),
            "records_failed": record_failures,
            "drafts": drafts_total,
            "drafts_flagged_past_dated": flagged_past,
            "events": len(events),
            "events_low_confidence": sum(1 for e in events if e.low_confidence_fields),
        }
        return llm, retriever, events

    # -- dedup
    def stage_dedup(llm, retriever, events, records):
        embedder = build_embedder(config)
        records_by_id = {r.record_id: r for r in records}
        embeddings = {}
        unembedded = []
        for event in events:
            try:
                embeddings[event.event_id] = embed_event(event, embedder)
            except Exception as exc:
                logger.warning("event %s not embedded: %s", event.event_id, exc)
                unembedded.append(event.event_id)
        groups = find_duplicates(events, embeddings, sim_threshold=config.dedup_threshold)
        by_id = {e.event_id: e for e in events}
        merged_count = 0
        for group_ids in groups:
            merged = merge_events([by_id[eid] for eid in group_ids], store=stores["events"])
            merged_count += len(group_ids) - 1
            source_records = [records_by_id[rid] for rid in merged.source_records
                              if rid in records_by_id]
            re_enriched, runs = enrich_event(
                merged, llm, retriever, records=source_records,
                ensemble_size=config.ensemble_size,
                max_attempts=config.max_attempts,
                max_docs=config.max_context_docs,
            )
            for run in runs:
                stores["runs"].append(run)
            stores["events"].append(re_enriched)
        survivors = stores["events"].load_live() if groups else list(events)
        report["stages"]["dedup"] = {
            "duplicate_groups": len(groups),
            "events_absorbed": merged_count,
            "events_surviving": len(survivors),
            "events_unembedded": len(unembedded),
        }
        return survivors

    # -- cluster
    def stage_cluster(events):
        embedder = build_embedder(config)
        embeddings = {}
        for event in events:
            try:
                embeddings[event.event_id] = embed_event(event, embedder)
            except Exception as exc:
                logger.warning("event %s not embedded; left without a signature: %s",
                               event.event_id, exc)
        if not embeddings:
            report["stages"]["cluster"] = {"events": 0, "levels": list(config.levels)}
            return events
        signatures, models = cluster_multilevel(embeddings, levels=config.levels,
                                                seed=config.seed)
        models.save(out_dir / "cluster_models.json")
        from dataclasses import replace as dc_replace
        final = []
        for event in events:
            if event.event_id in signatures:
                event = dc_replace(event, semantic_signature=signatures[event.event_id])
                stores["events"].append(event)
            final.append(event)
        report["stages"]["cluster"] = {
            "events": len(final),
            "levels": list(config.levels),
            "effective_k": [m.level_k for m in models.models],
        }
        return final

    # -- detect spikes
    def stage_detect():
        spikes: List[SpikeRecord] = []
        z_by_network = {}
        if config.traffic_csv:
            traffic = read_traffic_csv(config.traffic_csv)
            for network_id in sorted(traffic):
                series = traffic[network_id]
                boundary = config.window_weeks * 7 * 86400 // series.step_seconds
                if boundary >= len(series):
                    raise ValueError(
                        f"network {network_id}: series too short to score past "
                        f"{config.window_weeks} fitting weeks"
                    )
                model = fit_baseline(series.slice(0, boundary),
                                     window_weeks=config.window_weeks,
                                     bin_minutes=config.bin_minutes)
                z = zscore_series(model, series.slice(boundary),
                                  std_floor_fraction=config.std_floor_fraction)
                z_by_network[network_id] = z
                found = detect_spikes(z, z_threshold=config.z_threshold,
                                      min_duration_minutes=config.min_duration_minutes,
                                      merge_gap_minutes=config.merge_gap_minutes)
                for spike in found:
                    stores["spikes"].append(spike)
                spikes.extend(found)
        report["stages"]["detect_spikes"] = {
            "networks": len(z_by_network),
            "spikes": len(spikes),
        }
        return spikes, z_by_network

    # -- correlate
    def stage_correlate(spikes, events):
        matches = match_spikes_to_events(spikes, events,
                                         window_hours=config.match_window_hours)
        matches_path = out_dir / "matches.jsonl"
        with open(matches_path, "w", encoding="utf-8") as fh:
            for match in matches:
                fh.write(json.dumps(match.to_dict(), sort_keys=True) + "\n")
        report["stages"]["correlate"] = {
            "matches": len(matches),
            "spikes_matched": len({m.spike.key() for m in matches}),
        }
        return matches

    # -- report
    def stage_report(spikes, events, matches, z_by_network):
        histogram = spike_frequency(spikes, config.report_bins) if spikes else {
            b: 0 for b in config.report_bins
        }
        header, rows = report_tables.spike_frequency_table(histogram)
        (reports_dir / "spike_frequency.csv").write_text(
            report_tables.render_table(header, rows), encoding="utf-8")

        cdfs = lead_time_cdf(events, bucket_categories=True,
                             min_category_count=config.min_category_count)
        header, rows = report_tables.lead_time_table(cdfs)
        (reports_dir / "lead_time.csv").write_text(
            report_tables.render_table(header, rows), encoding="utf-8")

        header, rows = export_features(
            events, z_by_network, config.network_regions,
            levels=config.levels, window_days=config.feature_window_days,
        )
        (out_dir / "features.csv").write_text(
            report_tables.render_table(header, rows), encoding="utf-8")

        summary = {
            "spike_frequency": {repr(k): v for k, v in sorted(histogram.items())},
            "feature_rows": len(rows),
        }

        if config.labels_path:
            labels = _load_labels(config.labels_path)
            labeled_spikes, planted = _label_spikes(spikes, labels, matches)
            cov = coverage(labeled_spikes, matches)
            header, rows = report_tables.coverage_table(cov)
            (reports_dir / "coverage.csv").write_text(
                report_tables.render_table(header, rows), encoding="utf-8")
            summary["coverage"] = cov.to_dict()
            summary["planted"] = planted
        report["stages"]["report"] = summary

    try:
        records = run_stage("ingest", stage_ingest)
        llm, retriever, events = run_stage("infer", lambda: stage_infer(records))
        events = run_stage("dedup", lambda: stage_dedup(llm, retriever, events, records))
        events = run_stage("cluster", lambda: stage_cluster(events))
        spikes, z_by_network = run_stage("detect_spikes", stage_detect)
        matches = run_stage("correlate", lambda: stage_correlate(spikes, events))
        run_stage("report", lambda: stage_report(spikes, events, matches, z_by_network))
    except StageFailure:
        pass

    report["timings_seconds"] = timings
    with open(out_dir / "run_report.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report


def _load_labels(path) -> List[dict]:
    labels = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                labels.append(json.loads(line))
    return labels


def _overlap_fraction(spike: SpikeRecord, start, end) -> float:
    lo = max(spike.start, start)
    hi = min(spike.end, end)
    length = (hi - lo).total_seconds()
    planted = (end - start).total_seconds()
    return max(0.0, length) / planted if planted > 0 else 0.0


def _label_spikes(spikes, labels, matches):
    """Label detected spikes against planted ground truth.

    A detected spike is event-driven when it overlaps a planted interval
    on its network. Also summarizes planted-event outcomes: a planted
    event is covered when some overlapping detected spike has a match.
    """
    matched_keys = {m.spike.key() for m in matches}
    labeled = []
    for spike in spikes:
        event_driven = any(
            label["network_id"] == spike.network_id
            and _overlap_fraction(spike, utc_from_iso(label["start"]), utc_from_iso(label["end"])) > 0
            for label in labels
        )
        labeled.append((spike, event_driven))

    non_spont_total = non_spont_covered = 0
    spont_total = spont_matched = 0
    detected_planted = 0
    for label in labels:
        start, end = utc_from_iso(label["start"]), utc_from_iso(label["end"])
        overlapping = [
            s for s in spikes
            if s.network_id == label["network_id"] and _overlap_fraction(s, start, end) > 0
        ]
        if overlapping:
            detected_planted += 1
        matched = any(s.key() in matched_keys for s in overlapping)
        if label.get("spontaneous"):
            spont_total += 1
            spont_matched += int(matched)
        elif not label.get("sub_threshold"):
            non_spont_total += 1
            non_spont_covered += int(matched)
    planted = {
        "planted_total": len(labels),
        "planted_detected": detected_planted,
        "non_spontaneous_total": non_spont_total,
        "non_spontaneous_covered": non_spont_covered,
        "non_spontaneous_coverage": (
            non_spont_covered / non_spont_total if non_spont_total else None
        ),
        "spontaneous_total": spont_total,
        "spontaneous_matched": spont_matched,
    }
    return labeled, planted


def materialize_scenario(scenario, out_dir) -> Path:
    """Write a scenario's inputs + a ready-to-run pipeline config.

    Produces traffic.csv, posts.jsonl, labels.jsonl, llm_fixtures.json,
    retriever_fixtures.json, scenario.json, and pipeline.json under
    out_dir; returns the pipeline config path.
    """
    from .baseline import write_traffic_csv
    from .synth import synth_corpus, synth_traffic

    # absolute paths keep the emitted config valid from any working dir
    out_dir = Path(out_dir).resolve()
    out_dir.mkdir(parents=True, exist_ok=True)

    series, labels = synth_traffic(scenario)
    write_traffic_csv(out_dir / "traffic.csv", [series[k] for k in sorted(series)])
    with open(out_dir / "labels.jsonl", "w", encoding="utf-8") as fh:
        for label in labels:
            fh.write(json.dumps(label, sort_keys=True) + "\n")

    posts, llm_fixtures, retriever_fixtures = synth_corpus(scenario)
    with open(out_dir / "posts.jsonl", "w", encoding="utf-8") as fh:
        for post in posts:
            fh.write(json.dumps(post.to_dict(), sort_keys=True) + "\n")
    with open(out_dir / "llm_fixtures.json", "w", encoding="utf-8") as fh:
        json.dump(llm_fixtures, fh, indent=1, sort_keys=True)
        fh.write("\n")
    with open(out_dir / "retriever_fixtures.json", "w", encoding="utf-8") as fh:
        json.dump(retriever_fixtures, fh, indent=1, sort_keys=True)
        fh.write("\n")
    scenario.save(out_dir / "scenario.json")

    communities = sorted({e.community for e in scenario.planted_events if not e.spontaneous})
    config = PipelineConfig(
        out_dir=str(out_dir / "out"),
        seed=scenario.seed,
        traffic_csv=str(out_dir / "traffic.csv"),
        corpus_path=str(out_dir / "posts.jsonl"),
        labels_path=str(out_dir / "labels.jsonl"),
        filter=FilterConfig(search_terms=("premiere", "kickoff"), communities=tuple(communities),
                            min_engagement=25),
        llm={"kind": "stub", "fixtures_path": str(out_dir / "llm_fixtures.json")},
        embedder={"kind": "hash", "dim": 64},
        retriever={"kind": "fixture", "fixtures_path": str(out_dir / "retriever_fixtures.json")},
        min_category_count=scenario.min_category_count,
        network_regions={
            n.network_id: {"country": n.country, "continent": n.continent}
            for n in scenario.networks
        },
    )
    config_path = out_dir / "pipeline.json"
    config.save(config_path)
    return config_path
