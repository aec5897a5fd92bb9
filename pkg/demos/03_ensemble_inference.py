"""Extract events and infer metadata by three-run ensemble consensus.

Uses the deterministic stub backend (a fixture map keyed by prompt hash)
to walk the full inference path: draft extraction, per-field ensemble
runs, aggregation rules, and a consensus failure that exhausts its
retries.
"""

import json
from datetime import datetime, timezone

from eventcast import ContentRecord
from eventcast.inference import (
    ContextBundle,
    FixtureRetriever,
    StubLlmBackend,
    build_event,
    build_extract_prompt,
    build_field_prompt,
    enrich_with_context,
    extract_events,
    infer_field,
    prompt_key,
)
from eventcast.inference.fields import FIELDS_BY_NAME

POSTED = datetime(2025, 6, 20, 9, 0, tzinfo=timezone.utc)

record = ContentRecord(
    record_id="rec-demo",
    source="forum_thread",
    url="https://forum.example/fights/rec-demo",
    created_at=POSTED,
    fetched_at=POSTED,
    title="Title fight announced",
    body_text="The openweight title fight is official: July 12, 21:00 UTC, pay-per-view.",
    comments=("Taking the day off for this.",),
    engagement=66,
    linked_texts=(),
)

fixtures = {}

# 1. extraction returns the drafts as a JSON array
extract_prompt = build_extract_prompt(record)
fixtures[prompt_key(extract_prompt, "extract")] = json.dumps(
    [{"headline": "Openweight title fight", "date": "2025-07-12", "time": "21:00"}]
)

llm = StubLlmBackend(fixtures)
drafts = extract_events(record, llm)
print(f"extracted {len(drafts)} draft(s): {drafts[0].headline!r} on {drafts[0].date}")

event = build_event(drafts[0], record)
print(f"event {event.event_id}: date/time/description fixed on creation")

# 2. category: plurality voting over three runs (2 of 3 agree)
category = FIELDS_BY_NAME["category"]
prompt = build_field_prompt(event, category.prompt_template_id, records=[record])
for salt, answer in (("a1r0", "Sports"), ("a1r1", "Sports"), ("a1r2", "Combat")):
    llm.fixtures[prompt_key(prompt, salt)] = answer
run = infer_field(event, category, ContextBundle(event.event_id, ()), llm,
                  records=[record])
print(f"\ncategory runs {list(run.run_outputs)} -> consensus {run.consensus_value!r} "
      f"(plurality, attempt {run.attempts})")

# 3. audience size: median of three numeric runs, with reference context
retriever = FixtureRetriever({
    "Openweight title fight": [{
        "title": "Openweight boxing",
        "text": "A heavily streamed combat sport with global pay-per-view reach.",
        "url": "https://wiki.example/openweight",
    }],
})
context = enrich_with_context(event, retriever, max_docs=2)
print(f"\nretrieved {len(context.retrieved_docs)} reference doc(s) for grounding")

audience = FIELDS_BY_NAME["audience_size"]
prompt = build_field_prompt(event, audience.prompt_template_id, records=[record],
                            context_docs=context.retrieved_docs)
for salt, answer in (("a1r0", "2500000"), ("a1r1", "4e6"), ("a1r2", "3,000,000")):
    llm.fixtures[prompt_key(prompt, salt)] = answer
run = infer_field(event, audience, context, llm, records=[record])
print(f"audience runs {list(run.run_outputs)} -> median {run.consensus_value:,.0f}")

# 4. a field that never reaches consensus: three attempts, then FAILED
likelihood = FIELDS_BY_NAME["likelihood"]
prompt = build_field_prompt(event, likelihood.prompt_template_id, records=[record],
                            context_docs=context.retrieved_docs)
answers = iter(["0", "9", "10", "0", "10", "9", "10", "0", "9"])
for attempt in (1, 2, 3):
    for r in range(3):
        llm.fixtures[prompt_key(prompt, f"a{attempt}r{r}")] = next(answers)
run = infer_field(event, likelihood, context, llm, records=[record])
print(f"\nlikelihood runs {list(run.run_outputs)} (spread guard trips each attempt)")
print(f"-> consensus after {run.attempts} attempts: {run.consensus_value!r}; "
      "the event is marked low-confidence for this field")
