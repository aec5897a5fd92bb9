from __future__ import annotations

import json

import pytest

from eventcast.cli import main
from eventcast.store import EventStore


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    base = tmp_path_factory.mktemp("cli")
    data = base / "data"
    assert main(["synth", "--scenario", "default", "--seed", "7",
                 "--out-dir", str(data)]) == 0
    return data


class TestSynthAndRun:
    def test_run_pipeline(self, synth_dir, capsys):
        assert main(["run", "--config", str(synth_dir / "pipeline.json")]) == 0
        out = capsys.readouterr().out
        report = json.loads(out[out.index("{"):])
        assert report["status"] == "ok"
        assert report["stages"]["report"]["planted"]["non_spontaneous_coverage"] >= 0.9

    def test_synth_accepts_scenario_file(self, tmp_path):
        from eventcast.synth import default_scenario

        scenario_path = tmp_path / "custom.json"
        default_scenario(seed=3).save(scenario_path)
        assert main(["synth", "--scenario", str(scenario_path),
                     "--out-dir", str(tmp_path / "data")]) == 0
        assert (tmp_path / "data" / "pipeline.json").exists()


class TestDetectSpikes:
    def test_standalone(self, synth_dir, tmp_path, capsys):
        out = tmp_path / "spikes.jsonl"
        code = main(["detect-spikes", "--traffic", str(synth_dir / "traffic.csv"),
                     "--z", "2", "--min-duration", "20", "--out", str(out)])
        assert code == 0
        assert out.exists() and out.read_text().strip()
        assert "spikes appended" in capsys.readouterr().out


class TestIngest:
    def test_standalone(self, synth_dir, tmp_path, capsys):
        out = tmp_path / "records.jsonl"
        code = main(["ingest", "--connector", "file",
                     "--corpus", str(synth_dir / "posts.jsonl"),
                     "--community", "matchday", "--community", "screenroom",
                     "--community", "patchnotes", "--community", "encore",
                     "--min-engagement", "25", "--out", str(out)])
        assert code == 0
        lines = [l for l in out.read_text().splitlines() if l.strip()]
        assert len(lines) >= 19


class TestStageChain:
    def test_infer_dedup_cluster_correlate_report(self, synth_dir, tmp_path, capsys):
        records = tmp_path / "records.jsonl"
        events = tmp_path / "events.jsonl"
        spikes = tmp_path / "spikes.jsonl"
        matches = tmp_path / "matches.jsonl"
        models = tmp_path / "models.json"

        assert main(["ingest", "--connector", "file",
                     "--corpus", str(synth_dir / "posts.jsonl"),
                     "--community", "matchday", "--community", "screenroom",
                     "--community", "patchnotes", "--community", "encore",
                     "--min-engagement", "25", "--out", str(records)]) == 0
        assert main(["infer-events", "--records", str(records), "--backend", "stub",
                     "--fixtures", str(synth_dir / "llm_fixtures.json"),
                     "--retriever-fixtures", str(synth_dir / "retriever_fixtures.json"),
                     "--out", str(events)]) == 0
        assert main(["dedup", "--events", str(events), "--threshold", "0.9"]) == 0
        live = EventStore(events).load_live()
        assert len(live) == 18

        # standalone dedup leaves merged events stale: re-infer them
        assert main(["infer-events", "--records", str(records), "--backend", "stub",
                     "--fixtures", str(synth_dir / "llm_fixtures.json"),
                     "--retriever-fixtures", str(synth_dir / "retriever_fixtures.json"),
                     "--out", str(tmp_path / "unused.jsonl")]) == 0

        assert main(["cluster", "--events", str(events), "--levels", "10,100",
                     "--seed", "7", "--out-models", str(models)]) == 0
        assert models.exists()

        assert main(["detect-spikes", "--traffic", str(synth_dir / "traffic.csv"),
                     "--out", str(spikes)]) == 0
        assert main(["correlate", "--events", str(events), "--spikes", str(spikes),
                     "--window-hours", "6", "--out", str(matches)]) == 0
        assert matches.read_text().strip()

        assert main(["report", "spike-frequency", "--spikes", str(spikes),
                     "--bins", "2,3,5", "--format", "csv"]) == 0
        out = capsys.readouterr().out
        assert "z_threshold,spike_count" in out

        assert main(["report", "lead-time", "--events", str(events),
                     "--min-category-count", "3", "--format", "json"]) == 0
        out = capsys.readouterr().out
        rows = json.loads(out[out.index("["):])
        assert any(r["category"] == "Others" for r in rows)


class TestReportCoverage:
    def test_reads_pipeline_emitted_table(self, synth_dir, capsys):
        main(["run", "--config", str(synth_dir / "pipeline.json")])
        capsys.readouterr()
        coverage_csv = synth_dir / "out" / "reports" / "coverage.csv"
        assert main(["report", "coverage", "--coverage-csv", str(coverage_csv)]) == 0
        out = capsys.readouterr().out
        assert "network_id,event_driven_spikes,covered,coverage" in out

    def test_recomputes_from_inputs_as_json(self, synth_dir, capsys):
        main(["run", "--config", str(synth_dir / "pipeline.json")])
        capsys.readouterr()
        out_dir = synth_dir / "out"
        assert main(["report", "coverage", "--format", "json",
                     "--labels", str(synth_dir / "labels.jsonl"),
                     "--matches", str(out_dir / "matches.jsonl"),
                     "--spikes", str(out_dir / "spikes.jsonl")]) == 0
        out = capsys.readouterr().out
        rows = json.loads(out[out.index("["):])
        nets = {r["network_id"] for r in rows}
        assert {"net-eu-1", "net-eu-2", "net-na-1", "ALL"} <= nets
