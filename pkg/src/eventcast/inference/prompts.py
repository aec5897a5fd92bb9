"""Prompt construction from versioned template files.

Templates live next to this module as plain text files so a prompt sent
to any backend is auditable and byte-stable. Builders are pure: the same
record/event/context always produces the same prompt.
"""

from __future__ import annotations

from importlib import resources
from typing import Sequence

from ..model import ContentRecord, EventAbstraction

RECORD_EXCERPT_CHARS = 2_400
TOTAL_EXCERPT_CHARS = 6_000
CONTEXT_DOC_CHARS = 1_200

FORMAT_REMINDER = (
    "\n\nREMINDER: your previous answer did not match the requested format. "
    "Respond with exactly the format requested above and no extra prose."
)

_cache: dict = {}


def load_template(template_id: str) -> str:
    if template_id not in _cache:
        ref = resources.files("eventcast.inference") / "prompts" / f"{template_id}.txt"
        _cache[template_id] = ref.read_text(encoding="utf-8")
    return _cache[template_id]


def record_excerpt(record: ContentRecord, max_chars: int = RECORD_EXCERPT_CHARS) -> str:
    """Streamlined text form of one content record."""
    parts = [
        f"TITLE: {record.title}",
        f"POSTED: {record.created_at.date().isoformat()}",
        f"BODY: {record.body_text}",
    ]
    for comment in record.comments:
        parts.append(f"COMMENT: {comment}")
    for url, text in record.linked_texts:
        parts.append(f"LINKED ({url}): {text}")
    excerpt = "\n".join(parts)
    if len(excerpt) > max_chars:
        excerpt = excerpt[:max_chars].rstrip()
    return excerpt


def combined_excerpt(records: Sequence[ContentRecord], max_chars: int = TOTAL_EXCERPT_CHARS) -> str:
    """Excerpts of several records under one budget (merged events)."""
    parts = []
    remaining = max_chars
    per_record = max(400, max_chars // max(len(records), 1))
    for record in records:
        if remaining <= 0:
            break
        chunk = record_excerpt(record, min(per_record, remaining))
        parts.append(chunk)
        remaining -= len(chunk) + 5
    return "\n-----\n".join(parts)


def event_summary(event: EventAbstraction) -> str:
    lines = [
        f"EVENT: {event.description}",
        f"DATE: {event.date}",
        f"TIME: {event.time}",
    ]
    if event.category is not None:
        lines.append(f"CATEGORY: {event.category}")
    if event.entities:
        lines.append(f"ENTITIES: {', '.join(event.entities)}")
    return "\n".join(lines)


def context_block(docs: Sequence) -> str:
    """Render retrieved reference docs; '(none)' keeps prompts stable."""
    if not docs:
        return "(none)"
    lines = []
    for title, text, url in docs:
        snippet = text[:CONTEXT_DOC_CHARS]
        lines.append(f"- {title}: {snippet} (source: {url})")
    return "\n".join(lines)


def _fill(template: str, **slots: str) -> str:
    # plain replacement: templates contain literal JSON braces, so
    # str.format would misread them
    for name, value in slots.items():
        template = template.replace("{" + name + "}", value)
    return template


def build_extract_prompt(record: ContentRecord) -> str:
    template = load_template("extract_events_v1")
    return _fill(template, record_excerpt=record_excerpt(record))


def build_field_prompt(
    event: EventAbstraction,
    template_id: str,
    records: Sequence[ContentRecord] = (),
    context_docs: Sequence = (),
) -> str:
    template = load_template(template_id)
    return _fill(
        template,
        event_summary=event_summary(event),
        record_excerpt=combined_excerpt(records) if records else "(unavailable)",
        context_docs=context_block(context_docs),
    )
