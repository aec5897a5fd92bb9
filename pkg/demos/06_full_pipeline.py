"""Run the whole pipeline on the built-in synthetic scenario.

Materializes traffic, corpus, ground-truth labels, and stub-backend
fixtures into ./demo_run/, then executes ingest -> infer -> dedup ->
cluster -> detect-spikes -> correlate -> report and prints the run
report. Equivalent CLI:

    eventcast synth --scenario default --out-dir demo_run
    eventcast run --config demo_run/pipeline.json
"""

import json
from pathlib import Path

from eventcast import PipelineConfig, run_pipeline
from eventcast.pipeline import materialize_scenario
from eventcast.synth import default_scenario

out = Path("demo_run")
scenario = default_scenario(seed=7)
print(f"scenario: {len(scenario.planted_events)} planted events on "
      f"{len(scenario.networks)} networks over {scenario.duration_weeks} weeks")

config_path = materialize_scenario(scenario, out)
print(f"inputs written under {out}/ (traffic.csv, posts.jsonl, labels.jsonl, "
      "llm_fixtures.json, retriever_fixtures.json)")

report = run_pipeline(PipelineConfig.load(config_path))

print("\nrun report:")
print(json.dumps(report, indent=2, sort_keys=True))

planted = report["stages"]["report"]["planted"]
print(f"\nnon-spontaneous planted coverage: {planted['non_spontaneous_coverage']:.2f}")
print(f"spontaneous events matched (expected 0): {planted['spontaneous_matched']}")
print(f"\nartifacts: {out}/out/ (events.jsonl, spikes.jsonl, matches.jsonl, "
      "features.csv, reports/)")
