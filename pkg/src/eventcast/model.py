"""Shared domain types: traffic series, spikes, content records, events.

Every type is an immutable dataclass with explicit invariant checks and
dict round-trip serialization (``to_dict`` / ``from_dict``). All
timestamps are timezone-aware UTC. Records serialized to disk carry
``schema_version: 1``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from datetime import date, datetime, time, timedelta, timezone
from typing import Any, Mapping, Optional
from zoneinfo import ZoneInfo

SCHEMA_VERSION = 1

UNKNOWN_TIME = "unknown"

CONTENT_SOURCES = ("forum_thread", "linked_page", "wiki_article")


class InvariantError(ValueError):
    """A domain-type invariant was violated; names the offending field."""

    def __init__(self, type_name: str, field_name: str, message: str):
        self.type_name = type_name
        self.field_name = field_name
        super().__init__(f"{type_name}.{field_name}: {message}")


def _fail(type_name: str, field_name: str, message: str) -> None:
    raise InvariantError(type_name, field_name, message)


# -- timestamp helpers -------------------------------------------------------

def ensure_utc(ts: datetime, type_name: str = "timestamp", field_name: str = "") -> datetime:
    """Normalize a datetime to UTC; naive datetimes are rejected."""
    if not isinstance(ts, datetime):
        _fail(type_name, field_name, f"expected datetime, got {type(ts).__name__}")
    if ts.tzinfo is None:
        _fail(type_name, field_name, "naive datetime; timestamps must be timezone-aware")
    return ts.astimezone(timezone.utc)


def utc_from_iso(s: str) -> datetime:
    """Parse an ISO-8601 timestamp string ('Z' suffix accepted) to UTC."""
    return ensure_utc(datetime.fromisoformat(s.replace("Z", "+00:00")))


def utc_to_iso(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


_TIME_RE = re.compile(r"^(\d{1,2}):(\d{2})(?::(\d{2}))?$")


def derive_event_time_utc(
    date_str: str, time_str: str, default_tz: str = "UTC"
) -> Optional[datetime]:
    """Derive a UTC timestamp from verbatim event date/time strings.

    The time string may carry an explicit UTC offset (``"20:45+02:00"``);
    otherwise ``default_tz`` applies. An unknown time-of-day maps to
    12:00 local so window matching stays possible without fabricating
    precision. Returns None when the date does not parse.
    """
    try:
        day = date.fromisoformat(date_str.strip())
    except (ValueError, AttributeError):
        return None
    tz: Any = ZoneInfo(default_tz)
    raw = (time_str or UNKNOWN_TIME).strip()
    if raw.lower() == UNKNOWN_TIME or not raw:
        return datetime.combine(day, time(12, 0), tzinfo=tz).astimezone(timezone.utc)
    # split off an explicit offset if present
    offset_m = re.search(r"([+-]\d{2}:\d{2}|Z)$", raw)
    if offset_m:
        token = offset_m.group(1)
        raw = raw[: offset_m.start()].strip()
        if token == "Z":
            tz = timezone.utc
        else:
            sign = 1 if token[0] == "+" else -1
            hh, mm = int(token[1:3]), int(token[4:6])
            tz = timezone(sign * timedelta(hours=hh, minutes=mm))
    m = _TIME_RE.match(raw)
    if not m:
        return datetime.combine(day, time(12, 0), tzinfo=tz).astimezone(timezone.utc)
    hh, mm = int(m.group(1)), int(m.group(2))
    ss = int(m.group(3) or 0)
    if hh > 23 or mm > 59 or ss > 59:
        return datetime.combine(day, time(12, 0), tzinfo=tz).astimezone(timezone.utc)
    return datetime.combine(day, time(hh, mm, ss), tzinfo=tz).astimezone(timezone.utc)


# -- traffic -----------------------------------------------------------------

@dataclass(frozen=True)
class TrafficSeries:
    """Uniformly sampled per-network throughput in bits/s.

    NaN samples mark known gaps in the measurement; they are excluded
    from baseline fitting and break contiguity in spike detection.
    """

    network_id: str
    start: datetime
    step_seconds: int
    values: tuple

    def __post_init__(self):
        if not self.network_id:
            _fail("TrafficSeries", "network_id", "must be non-empty")
        object.__setattr__(self, "start", ensure_utc(self.start, "TrafficSeries", "start"))
        if not isinstance(self.step_seconds, int) or self.step_seconds <= 0:
            _fail("TrafficSeries", "step_seconds", "must be a positive integer")
        vals = tuple(float(v) for v in self.values)
        if not vals:
            _fail("TrafficSeries", "values", "must be non-empty")
        for i, v in enumerate(vals):
            if math.isnan(v):
                continue  # explicit missing-sample marker
            if not math.isfinite(v) or v < 0:
                _fail("TrafficSeries", "values", f"sample {i} is {v!r}; must be finite and >= 0")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)

    def time_at(self, index: int) -> datetime:
        return self.start + timedelta(seconds=index * self.step_seconds)

    @property
    def end(self) -> datetime:
        """Exclusive end: one step past the last sample."""
        return self.time_at(len(self.values))

    def slice(self, start_index: int, end_index: Optional[int] = None) -> "TrafficSeries":
        return replace(
            self,
            start=self.time_at(start_index),
            values=self.values[start_index:end_index],
        )

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "network_id": self.network_id,
            "start": utc_to_iso(self.start),
            "step_seconds": self.step_seconds,
            "values": [None if math.isnan(v) else v for v in self.values],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "TrafficSeries":
        return cls(
            network_id=d["network_id"],
            start=utc_from_iso(d["start"]),
            step_seconds=d["step_seconds"],
            values=tuple(float("nan") if v is None else v for v in d["values"]),
        )


@dataclass(frozen=True)
class SpikeRecord:
    """A contiguous anomalous interval with peak/mean Z and duration."""

    network_id: str
    start: datetime
    end: datetime
    peak_z: float
    mean_z: float
    duration_minutes: float

    def __post_init__(self):
        if not self.network_id:
            _fail("SpikeRecord", "network_id", "must be non-empty")
        object.__setattr__(self, "start", ensure_utc(self.start, "SpikeRecord", "start"))
        object.__setattr__(self, "end", ensure_utc(self.end, "SpikeRecord", "end"))
        if self.end <= self.start:
            _fail("SpikeRecord", "end", "must be after start")
        span = (self.end - self.start).total_seconds() / 60.0
        if abs(span - self.duration_minutes) > 1e-6:
            _fail("SpikeRecord", "duration_minutes", f"must equal end-start ({span:.6f} min)")
        if self.peak_z < self.mean_z:
            _fail("SpikeRecord", "peak_z", "must be >= mean_z")

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "network_id": self.network_id,
            "start": utc_to_iso(self.start),
            "end": utc_to_iso(self.end),
            "peak_z": self.peak_z,
            "mean_z": self.mean_z,
            "duration_minutes": self.duration_minutes,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "SpikeRecord":
        return cls(
            network_id=d["network_id"],
            start=utc_from_iso(d["start"]),
            end=utc_from_iso(d["end"]),
            peak_z=d["peak_z"],
            mean_z=d["mean_z"],
            duration_minutes=d["duration_minutes"],
        )

    def key(self) -> tuple:
        """Identity for joining spikes across files (no stored id)."""
        return (self.network_id, utc_to_iso(self.start), utc_to_iso(self.end))


# -- discussion content ------------------------------------------------------

@dataclass(frozen=True)
class ContentRecord:
    """One cleaned discussion thread: post + top comments + linked pages."""

    record_id: str
    source: str
    url: str
    created_at: datetime
    fetched_at: datetime
    title: str
    body_text: str
    comments: tuple
    engagement: int
    linked_texts: tuple  # of (url, cleaned text)

    def __post_init__(self):
        if not self.record_id:
            _fail("ContentRecord", "record_id", "must be non-empty")
        if self.source not in CONTENT_SOURCES:
            _fail("ContentRecord", "source", f"must be one of {CONTENT_SOURCES}")
        object.__setattr__(self, "created_at", ensure_utc(self.created_at, "ContentRecord", "created_at"))
        object.__setattr__(self, "fetched_at", ensure_utc(self.fetched_at, "ContentRecord", "fetched_at"))
        if self.created_at > self.fetched_at:
            _fail("ContentRecord", "created_at", "must be <= fetched_at")
        object.__setattr__(self, "comments", tuple(self.comments))
        object.__setattr__(self, "linked_texts", tuple((u, t) for u, t in self.linked_texts))
        if not isinstance(self.engagement, int) or self.engagement < 0:
            _fail("ContentRecord", "engagement", "must be an integer >= 0")
        has_text = bool(self.body_text.strip()) or any(
            c.strip() for c in self.comments
        ) or any(t.strip() for _, t in self.linked_texts)
        if not has_text:
            _fail("ContentRecord", "body_text", "record is empty after cleaning")

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "record_id": self.record_id,
            "source": self.source,
            "url": self.url,
            "created_at": utc_to_iso(self.created_at),
            "fetched_at": utc_to_iso(self.fetched_at),
            "title": self.title,
            "body_text": self.body_text,
            "comments": list(self.comments),
            "engagement": self.engagement,
            "linked_texts": [[u, t] for u, t in self.linked_texts],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ContentRecord":
        return cls(
            record_id=d["record_id"],
            source=d["source"],
            url=d["url"],
            created_at=utc_from_iso(d["created_at"]),
            fetched_at=utc_from_iso(d["fetched_at"]),
            title=d["title"],
            body_text=d["body_text"],
            comments=tuple(d["comments"]),
            engagement=d["engagement"],
            linked_texts=tuple((u, t) for u, t in d["linked_texts"]),
        )


# -- events ------------------------------------------------------------------

@dataclass(frozen=True)
class EventDraft:
    """Minimal extraction output: headline, date, time, provenance."""

    headline: str
    date: str
    time: str
    source_record: str
    flags: tuple = ()

    def __post_init__(self):
        if not self.headline.strip():
            _fail("EventDraft", "headline", "must be non-empty")
        try:
            date.fromisoformat(self.date)
        except ValueError:
            _fail("EventDraft", "date", f"{self.date!r} is not a valid ISO calendar date")
        if not self.time:
            object.__setattr__(self, "time", UNKNOWN_TIME)
        object.__setattr__(self, "flags", tuple(self.flags))

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "headline": self.headline,
            "date": self.date,
            "time": self.time,
            "source_record": self.source_record,
            "flags": list(self.flags),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "EventDraft":
        return cls(
            headline=d["headline"],
            date=d["date"],
            time=d["time"],
            source_record=d["source_record"],
            flags=tuple(d.get("flags", ())),
        )


@dataclass(frozen=True)
class SemanticSignature:
    """Per-granularity-level cluster ids situating an event among peers."""

    levels: tuple
    cluster_ids: tuple

    def __post_init__(self):
        levels = tuple(int(k) for k in self.levels)
        ids = tuple(int(c) for c in self.cluster_ids)
        if len(levels) != len(ids):
            _fail("SemanticSignature", "cluster_ids", "must have one id per level")
        for k, c in zip(levels, ids):
            if k < 1:
                _fail("SemanticSignature", "levels", f"level k={k} must be >= 1")
            if not (0 <= c < k):
                _fail("SemanticSignature", "cluster_ids", f"id {c} out of range [0, {k})")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "cluster_ids", ids)

    def to_dict(self) -> dict:
        return {"levels": list(self.levels), "cluster_ids": list(self.cluster_ids)}

    @classmethod
    def from_dict(cls, d: Mapping) -> "SemanticSignature":
        return cls(levels=tuple(d["levels"]), cluster_ids=tuple(d["cluster_ids"]))


def _check_relevance(name: str, m: Mapping) -> dict:
    out = {}
    for k, v in m.items():
        v = float(v)
        if not (0.0 <= v <= 1.0) or not math.isfinite(v):
            _fail("EventAbstraction", name, f"relevance for {k!r} is {v}; must be in [0, 1]")
        out[str(k)] = v
    return out


@dataclass(frozen=True)
class EventAbstraction:
    """Structured record of a real-world event plus provenance.

    ``date``/``time``/``description`` are fixed on creation; the
    remaining metadata fields stay None until ensemble inference fills
    them. ``event_time_utc`` is derived from the verbatim date/time
    strings with a configured default timezone.
    """

    event_id: str
    date: str
    time: str
    description: str
    source_records: tuple
    first_mentioned_at: datetime
    event_time_utc: Optional[datetime] = None
    category: Optional[str] = None
    entities: Optional[tuple] = None
    platforms: Optional[tuple] = None
    data_per_user_mb: Optional[int] = None
    audience_size: Optional[int] = None
    continent_relevance: Optional[dict] = None
    nation_relevance: Optional[dict] = None
    spike_duration_hours: Optional[float] = None
    likelihood: Optional[int] = None
    semantic_signature: Optional[SemanticSignature] = None
    merge_history: tuple = ()
    low_confidence_fields: tuple = ()
    flags: tuple = ()

    def __post_init__(self):
        if not self.event_id:
            _fail("EventAbstraction", "event_id", "must be non-empty")
        try:
            date.fromisoformat(self.date)
        except ValueError:
            _fail("EventAbstraction", "date", f"{self.date!r} is not a valid ISO calendar date")
        if not self.description.strip():
            _fail("EventAbstraction", "description", "must be non-empty")
        recs = tuple(self.source_records)
        if not recs:
            _fail("EventAbstraction", "source_records", "must be non-empty")
        object.__setattr__(self, "source_records", recs)
        object.__setattr__(
            self, "first_mentioned_at",
            ensure_utc(self.first_mentioned_at, "EventAbstraction", "first_mentioned_at"),
        )
        if self.event_time_utc is not None:
            object.__setattr__(
                self, "event_time_utc",
                ensure_utc(self.event_time_utc, "EventAbstraction", "event_time_utc"),
            )
        if self.entities is not None:
            object.__setattr__(self, "entities", tuple(self.entities))
        if self.platforms is not None:
            object.__setattr__(self, "platforms", tuple(self.platforms))
        if self.likelihood is not None:
            if not isinstance(self.likelihood, int) or not (0 <= self.likelihood <= 10):
                _fail("EventAbstraction", "likelihood", f"{self.likelihood!r} must be an integer in [0, 10]")
        if self.data_per_user_mb is not None and self.data_per_user_mb < 0:
            _fail("EventAbstraction", "data_per_user_mb", "must be >= 0")
        if self.audience_size is not None and self.audience_size < 0:
            _fail("EventAbstraction", "audience_size", "must be >= 0")
        if self.spike_duration_hours is not None and (
            not math.isfinite(self.spike_duration_hours) or self.spike_duration_hours < 0
        ):
            _fail("EventAbstraction", "spike_duration_hours", "must be finite and >= 0")
        if self.continent_relevance is not None:
            object.__setattr__(
                self, "continent_relevance",
                _check_relevance("continent_relevance", self.continent_relevance),
            )
        if self.nation_relevance is not None:
            object.__setattr__(
                self, "nation_relevance",
                _check_relevance("nation_relevance", self.nation_relevance),
            )
        object.__setattr__(self, "merge_history", tuple(self.merge_history))
        object.__setattr__(self, "low_confidence_fields", tuple(self.low_confidence_fields))
        object.__setattr__(self, "flags", tuple(self.flags))

    # fields filled by ensemble inference (everything not fixed on creation
    # and not the clustering-derived signature)
    INFERABLE_FIELDS = (
        "category",
        "entities",
        "platforms",
        "data_per_user_mb",
        "audience_size",
        "continent_relevance",
        "nation_relevance",
        "spike_duration_hours",
        "likelihood",
    )

    def is_enriched(self) -> bool:
        """True when every Table-derived metadata field has been filled."""
        return all(getattr(self, f) is not None for f in self.INFERABLE_FIELDS)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "event_id": self.event_id,
            "date": self.date,
            "time": self.time,
            "description": self.description,
            "source_records": list(self.source_records),
            "first_mentioned_at": utc_to_iso(self.first_mentioned_at),
            "event_time_utc": utc_to_iso(self.event_time_utc) if self.event_time_utc else None,
            "category": self.category,
            "entities": list(self.entities) if self.entities is not None else None,
            "platforms": list(self.platforms) if self.platforms is not None else None,
            "data_per_user_mb": self.data_per_user_mb,
            "audience_size": self.audience_size,
            "continent_relevance": self.continent_relevance,
            "nation_relevance": self.nation_relevance,
            "spike_duration_hours": self.spike_duration_hours,
            "likelihood": self.likelihood,
            "semantic_signature": self.semantic_signature.to_dict() if self.semantic_signature else None,
            "merge_history": list(self.merge_history),
            "low_confidence_fields": list(self.low_confidence_fields),
            "flags": list(self.flags),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "EventAbstraction":
        sig = d.get("semantic_signature")
        return cls(
            event_id=d["event_id"],
            date=d["date"],
            time=d["time"],
            description=d["description"],
            source_records=tuple(d["source_records"]),
            first_mentioned_at=utc_from_iso(d["first_mentioned_at"]),
            event_time_utc=utc_from_iso(d["event_time_utc"]) if d.get("event_time_utc") else None,
            category=d.get("category"),
            entities=tuple(d["entities"]) if d.get("entities") is not None else None,
            platforms=tuple(d["platforms"]) if d.get("platforms") is not None else None,
            data_per_user_mb=d.get("data_per_user_mb"),
            audience_size=d.get("audience_size"),
            continent_relevance=d.get("continent_relevance"),
            nation_relevance=d.get("nation_relevance"),
            spike_duration_hours=d.get("spike_duration_hours"),
            likelihood=d.get("likelihood"),
            semantic_signature=SemanticSignature.from_dict(sig) if sig else None,
            merge_history=tuple(d.get("merge_history", ())),
            low_confidence_fields=tuple(d.get("low_confidence_fields", ())),
            flags=tuple(d.get("flags", ())),
        )


class ConsensusFailed:
    """Sentinel consensus value when all ensemble attempts disagree."""

    _instance: Optional["ConsensusFailed"] = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "FAILED"

    def __bool__(self):
        return False


FAILED = ConsensusFailed()


@dataclass(frozen=True)
class InferenceRun:
    """Audit record of one field's ensemble inference.

    ``run_outputs`` holds the parsed value of every completion across
    all attempts (abstains as None), so its length is always
    ``ensemble_size * attempts``.
    """

    event_id: str
    field_name: str
    run_outputs: tuple
    consensus_value: Any
    attempts: int
    ensemble_size: int = 3

    def __post_init__(self):
        if self.attempts < 1:
            _fail("InferenceRun", "attempts", "must be >= 1")
        outs = tuple(self.run_outputs)
        if len(outs) != self.ensemble_size * self.attempts:
            _fail(
                "InferenceRun", "run_outputs",
                f"length {len(outs)} != ensemble_size ({self.ensemble_size}) * attempts ({self.attempts})",
            )
        object.__setattr__(self, "run_outputs", outs)

    @property
    def failed(self) -> bool:
        return self.consensus_value is FAILED

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "event_id": self.event_id,
            "field_name": self.field_name,
            "run_outputs": [_jsonable(v) for v in self.run_outputs],
            "consensus_value": None if self.failed else _jsonable(self.consensus_value),
            "consensus_failed": self.failed,
            "attempts": self.attempts,
            "ensemble_size": self.ensemble_size,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "InferenceRun":
        value = FAILED if d.get("consensus_failed") else d["consensus_value"]
        return cls(
            event_id=d["event_id"],
            field_name=d["field_name"],
            run_outputs=tuple(d["run_outputs"]),
            consensus_value=value,
            attempts=d["attempts"],
            ensemble_size=d.get("ensemble_size", 3),
        )


def _jsonable(v: Any) -> Any:
    if isinstance(v, tuple):
        return list(v)
    return v
