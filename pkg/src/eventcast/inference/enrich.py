"""Reference-context retrieval and ensemble metadata inference."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Protocol, Sequence, Tuple

import requests

from ..model import FAILED, ContentRecord, EventAbstraction, InferenceRun
from ..textclean import clean_text
from .backends import BackendError, BackendTimeout, LlmBackend, StubFixtureMissing
from .fields import (
    INFERABLE_SPECS,
    FieldSpec,
    ParseError,
    aggregate_runs,
    apply_consensus,
    normalize_string,
    parse_value,
)
from .prompts import CONTEXT_DOC_CHARS, build_field_prompt

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ContextBundle:
    """Retrieved reference docs injected into later field prompts."""

    event_id: str
    retrieved_docs: tuple  # of (title, cleaned summary text, source url)

    def __post_init__(self):
        docs = tuple((str(t), str(x), str(u)) for t, x, u in self.retrieved_docs)
        object.__setattr__(self, "retrieved_docs", docs)


EMPTY_BUNDLE = ContextBundle(event_id="", retrieved_docs=())


class RetrievalClient(Protocol):
    def search(self, query: str, max_results: int) -> List[Tuple[str, str, str]]: ...


class FixtureRetriever:
    """Serves ranked (title, text, url) docs from a query-keyed map."""

    def __init__(self, fixtures: Dict[str, List]):
        self.fixtures = {normalize_string(k): list(v) for k, v in fixtures.items()}

    @classmethod
    def from_file(cls, path) -> "FixtureRetriever":
        with open(path, "r", encoding="utf-8") as fh:
            return cls(json.load(fh))

    def search(self, query: str, max_results: int) -> List[Tuple[str, str, str]]:
        docs = self.fixtures.get(normalize_string(query), [])
        out = []
        for doc in docs[:max_results]:
            if isinstance(doc, dict):
                out.append((doc["title"], doc["text"], doc.get("url", "")))
            else:
                title, text, url = doc
                out.append((title, text, url))
        return out


class HttpRetriever:
    """Encyclopedia search over an opensearch-style JSON endpoint.

    GET {base_url}?q=<query>&limit=<n> must return a JSON list of
    {"title", "text", "url"} objects, best match first.
    """

    def __init__(self, base_url: str, timeout: float = 15.0,
                 session: Optional[requests.Session] = None):
        self.base_url = base_url
        self.timeout = timeout
        self.session = session or requests.Session()

    def search(self, query: str, max_results: int) -> List[Tuple[str, str, str]]:
        resp = self.session.get(
            self.base_url, params={"q": query, "limit": max_results}, timeout=self.timeout
        )
        resp.raise_for_status()
        return [(d["title"], d["text"], d.get("url", "")) for d in resp.json()[:max_results]]


def enrich_with_context(
    event: EventAbstraction, retriever: RetrievalClient, max_docs: int = 3
) -> ContextBundle:
    """Retrieve reference summaries for an event's entities.

    Queries are the event's entities followed by its description; docs
    are pooled in query order, deduplicated by url, and capped at
    max_docs. Retrieval failure degrades to an empty bundle so inference
    can proceed without reference context.
    """
    queries = list(event.entities or ()) + [event.description]
    docs: List[Tuple[str, str, str]] = []
    seen_urls = set()
    for query in queries:
        if len(docs) >= max_docs:
            break
        try:
            results = retriever.search(query, max_docs)
        except Exception as exc:
            logger.warning("retrieval failed for %r: %s; continuing without context", query, exc)
            return ContextBundle(event_id=event.event_id, retrieved_docs=())
        for title, text, url in results:
            if url in seen_urls or len(docs) >= max_docs:
                continue
            seen_urls.add(url)
            docs.append((title, clean_text(text, "plain", max_chars=CONTEXT_DOC_CHARS), url))
    return ContextBundle(event_id=event.event_id, retrieved_docs=tuple(docs))


def infer_field(
    event: EventAbstraction,
    spec: FieldSpec,
    context: ContextBundle,
    llm: LlmBackend,
    ensemble_size: int = 3,
    max_attempts: int = 3,
    records: Sequence[ContentRecord] = (),
    timeout_retries: int = 2,
) -> InferenceRun:
    """Infer one metadata field by ensemble consensus.

    Each attempt requests ensemble_size independent completions (same
    prompt, distinct run salts), parses them per the field's data type
    (failures abstain), and aggregates. A failed consensus triggers a
    fresh attempt, up to max_attempts; the returned run keeps every
    parsed output plus the final consensus value or FAILED.
    """
    if not spec.ensemble_inferred:
        raise ValueError(f"field {spec.field_name} is not ensemble-inferred")
    prompt = build_field_prompt(event, spec.prompt_template_id, records=records,
                                context_docs=context.retrieved_docs)
    all_outputs: list = []
    consensus = FAILED
    attempts = 0
    for attempt in range(1, max_attempts + 1):
        attempts = attempt
        values = []
        for run_index in range(ensemble_size):
            salt = f"a{attempt}r{run_index}"
            completion = None
            for retry in range(timeout_retries + 1):
                try:
                    completion = llm.send(prompt, salt=salt)
                    break
                except BackendTimeout:
                    if retry == timeout_retries:
                        logger.warning("%s/%s run %s timed out; counting as abstain",
                                       event.event_id, spec.field_name, salt)
                except StubFixtureMissing:
                    raise  # a fixture gap is a configuration defect, not noise
                except BackendError as exc:
                    logger.warning("%s/%s run %s failed (%s); counting as abstain",
                                   event.event_id, spec.field_name, salt, exc)
                    break
            if completion is None:
                values.append(None)
                continue
            try:
                values.append(parse_value(spec.data_type, completion))
            except ParseError as exc:
                logger.debug("%s/%s run %s unparseable: %s", event.event_id,
                             spec.field_name, salt, exc)
                values.append(None)
        all_outputs.extend(values)
        consensus = aggregate_runs(spec, values)
        if consensus is not FAILED:
            break
    return InferenceRun(
        event_id=event.event_id,
        field_name=spec.field_name,
        run_outputs=tuple(all_outputs),
        consensus_value=consensus,
        attempts=attempts,
        ensemble_size=ensemble_size,
    )


def enrich_event(
    event: EventAbstraction,
    llm: LlmBackend,
    retriever: Optional[RetrievalClient],
    records: Sequence[ContentRecord],
    ensemble_size: int = 3,
    max_attempts: int = 3,
    max_docs: int = 3,
    field_specs: Sequence[FieldSpec] = INFERABLE_SPECS,
) -> Tuple[EventAbstraction, List[InferenceRun]]:
    """Fill every unset ensemble-inferred field of one event, in registry
    order (so entities exist before RAG-backed fields query for them)."""
    runs = []
    for spec in field_specs:
        if getattr(event, spec.field_name) is not None:
            continue
        if spec.uses_rag and retriever is not None:
            context = enrich_with_context(event, retriever, max_docs=max_docs)
        else:
            context = ContextBundle(event_id=event.event_id, retrieved_docs=())
        run = infer_field(event, spec, context, llm, ensemble_size=ensemble_size,
                          max_attempts=max_attempts, records=records)
        runs.append(run)
        event = apply_consensus(event, spec, run.consensus_value)
    return event, runs
