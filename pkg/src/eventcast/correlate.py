"""Spike-event matching, coverage, lead-time CDFs, and feature export."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from datetime import timedelta
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .baseline import ZSeries
from .model import EventAbstraction, SpikeRecord, utc_to_iso

logger = logging.getLogger(__name__)

DEFAULT_MATCH_WINDOW_HOURS = 6.0
DEFAULT_FEATURE_WINDOW_DAYS = 3
OTHERS_CATEGORY = "Others"
# categories below this inferred-event count fold into "Others"
DEFAULT_MIN_CATEGORY_COUNT = 1_000


@dataclass(frozen=True)
class SpikeEventMatch:
    """One (spike, event) pairing within the matching window."""

    spike: SpikeRecord
    event_id: str
    time_offset_minutes: float  # event UTC time - spike start
    match_score: float

    def __post_init__(self):
        if not (0.0 <= self.match_score <= 1.0):
            raise ValueError(f"match_score {self.match_score} outside [0, 1]")

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "spike": self.spike.to_dict(),
            "event_id": self.event_id,
            "time_offset_minutes": self.time_offset_minutes,
            "match_score": self.match_score,
        }

    @classmethod
    def from_dict(cls, d) -> "SpikeEventMatch":
        return cls(
            spike=SpikeRecord.from_dict(d["spike"]),
            event_id=d["event_id"],
            time_offset_minutes=d["time_offset_minutes"],
            match_score=d["match_score"],
        )


def match_spikes_to_events(
    spikes: Sequence[SpikeRecord],
    events: Sequence[EventAbstraction],
    window_hours: float = DEFAULT_MATCH_WINDOW_HOURS,
) -> List[SpikeEventMatch]:
    """Pair each spike with every event whose window intersects it.

    An event's window runs from window_hours before its derived UTC time
    to max(predicted spike duration, window_hours) after it. Matches for
    one spike are ranked by |time offset|, then by higher likelihood.
    Events without a derivable timestamp are excluded with a warning.
    """
    if window_hours <= 0:
        raise ValueError("window_hours must be positive")
    usable = []
    for event in events:
        if event.event_time_utc is None:
            logger.warning("event %s has no derivable timestamp; excluded from matching",
                           event.event_id)
            continue
        usable.append(event)

    matches: List[SpikeEventMatch] = []
    for spike in sorted(spikes, key=lambda s: (s.network_id, s.start)):
        candidates = []
        for event in usable:
            forward_hours = max(event.spike_duration_hours or 0.0, window_hours)
            win_start = event.event_time_utc - timedelta(hours=window_hours)
            win_end = event.event_time_utc + timedelta(hours=forward_hours)
            if spike.start <= win_end and spike.end >= win_start:
                offset_min = (event.event_time_utc - spike.start).total_seconds() / 60.0
                span_min = (window_hours + forward_hours) * 60.0
                score = min(1.0, max(0.0, 1.0 - abs(offset_min) / span_min))
                likelihood = event.likelihood if event.likelihood is not None else -1
                candidates.append((abs(offset_min), -likelihood, event.event_id,
                                   SpikeEventMatch(spike, event.event_id, offset_min, score)))
        candidates.sort(key=lambda c: c[:3])
        matches.extend(c[3] for c in candidates)
    return matches


@dataclass(frozen=True)
class CoverageReport:
    per_network: Mapping  # network_id -> (covered, event_driven_total, fraction)
    overall: Optional[float]
    omitted_networks: tuple

    def to_dict(self) -> dict:
        return {
            "per_network": {
                net: {"covered": c, "event_driven": t, "coverage": f}
                for net, (c, t, f) in sorted(self.per_network.items())
            },
            "overall": self.overall,
            "omitted_networks": list(self.omitted_networks),
        }


def coverage(
    labeled_spikes: Sequence[Tuple[SpikeRecord, bool]],
    matches: Sequence[SpikeEventMatch],
) -> CoverageReport:
    """Fraction of event-driven labeled spikes that got at least one match.

    Networks with no event-driven labeled spikes are omitted (noted in
    the report) rather than reported as 0/0.
    """
    matched_keys = {m.spike.key() for m in matches}
    per_network: Dict[str, List[int]] = {}
    for spike, event_driven in labeled_spikes:
        stats = per_network.setdefault(spike.network_id, [0, 0])
        if event_driven:
            stats[1] += 1
            if spike.key() in matched_keys:
                stats[0] += 1

    reportize = {}
    omitted = []
    total_covered = total_driven = 0
    for net, (covered, driven) in sorted(per_network.items()):
        if driven == 0:
            omitted.append(net)
            continue
        reportize[net] = (covered, driven, covered / driven)
        total_covered += covered
        total_driven += driven
    overall = total_covered / total_driven if total_driven else None
    return CoverageReport(per_network=reportize, overall=overall,
                          omitted_networks=tuple(omitted))


@dataclass(frozen=True)
class LeadTimeCdf:
    """Empirical CDF of detection lead times for one category."""

    category: str
    lead_days: tuple  # sorted, non-negative
    cumulative_fraction: tuple  # same length, ends at 1.0
    negative_lead_count: int  # mentions that came after the event


def lead_time_cdf(
    events: Sequence[EventAbstraction],
    bucket_categories: bool = True,
    min_category_count: int = DEFAULT_MIN_CATEGORY_COUNT,
) -> Dict[str, LeadTimeCdf]:
    """Per-category CDF of (event time - first mention).

    Categories with fewer events than min_category_count fold into
    "Others". Events whose first mention came after the event count in a
    separate negative-lead bucket instead of the CDF.
    """
    usable = [e for e in events if e.event_time_utc is not None]
    groups: Dict[str, List[EventAbstraction]] = {}
    if bucket_categories:
        by_cat: Dict[str, List[EventAbstraction]] = {}
        for event in usable:
            by_cat.setdefault(event.category or "Uncategorized", []).append(event)
        for cat, members in by_cat.items():
            target = cat if len(members) >= min_category_count else OTHERS_CATEGORY
            groups.setdefault(target, []).extend(members)
    else:
        groups["All"] = list(usable)

    out = {}
    for cat in sorted(groups):
        leads = []
        negative = 0
        for event in groups[cat]:
            lead_days = (event.event_time_utc - event.first_mentioned_at).total_seconds() / 86400.0
            if lead_days < 0:
                negative += 1
            else:
                leads.append(lead_days)
        leads.sort()
        n = len(leads)
        fractions = tuple((i + 1) / n for i in range(n))
        out[cat] = LeadTimeCdf(
            category=cat,
            lead_days=tuple(leads),
            cumulative_fraction=fractions,
            negative_lead_count=negative,
        )
    return out


# -- forecaster feature export -------------------------------------------------

# Table-derived metadata columns, in stable export order
EVENT_FEATURE_COLUMNS = (
    "event_date",
    "event_time",
    "event_time_utc",
    "description",
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


@dataclass(frozen=True)
class FeatureRow:
    """One (event, network) training/forecast row."""

    network_id: str
    window_start: object
    window_end: object
    event_id: str
    features: dict  # EVENT_FEATURE_COLUMNS -> value (region-resolved relevances)
    signature: Optional[tuple]  # cluster id per level, or None
    target_peak_z: Optional[float]


def feature_header(levels: Sequence[int]) -> List[str]:
    return (
        ["network_id", "window_start", "window_end", "event_id"]
        + list(EVENT_FEATURE_COLUMNS)
        + [f"sig_k{k}" for k in levels]
        + ["target_peak_z"]
    )


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def export_features(
    events: Sequence[EventAbstraction],
    z_by_network: Mapping[str, ZSeries],
    network_regions: Mapping[str, Mapping[str, str]],
    levels: Sequence[int],
    window_days: int = DEFAULT_FEATURE_WINDOW_DAYS,
    networks: Optional[Sequence[str]] = None,
) -> Tuple[List[str], List[List[str]]]:
    """Flatten events into one row per (event, network).

    The window is window_days wide, centered on the event's UTC time.
    Relevance maps resolve to the network's configured country/continent;
    the semantic signature expands to one integer column per level. The
    target is the peak observed Z inside the window, absent when the
    window has no observed traffic. Rows come back as formatted strings
    with a stable column order, ready for CSV.
    """
    if window_days <= 0:
        raise ValueError("window_days must be positive")
    if networks is None:
        networks = sorted(set(z_by_network) | set(network_regions))
    half = timedelta(days=window_days) / 2

    header = feature_header(levels)
    rows = []
    for event in sorted(events, key=lambda e: (e.date, e.event_id)):
        if event.event_time_utc is None:
            logger.warning("event %s has no derivable timestamp; skipped in export",
                           event.event_id)
            continue
        signature = event.semantic_signature
        if signature is None:
            logger.warning("event %s has no semantic signature; emitting empty signature columns",
                           event.event_id)
            sig: Sequence = [None] * len(levels)
        elif signature.levels != tuple(int(k) for k in levels):
            logger.warning("event %s signature levels %s do not match export levels %s; "
                           "emitting empty signature columns",
                           event.event_id, signature.levels, tuple(levels))
            sig = [None] * len(levels)
        else:
            sig = list(signature.cluster_ids)
        win_start = event.event_time_utc - half
        win_end = event.event_time_utc + half
        for network_id in networks:
            region = network_regions.get(network_id, {})
            continent = region.get("continent", "")
            country = region.get("country", "")
            cont_rel = None
            if event.continent_relevance is not None:
                cont_rel = event.continent_relevance.get(continent, 0.0)
            nat_rel = None
            if event.nation_relevance is not None:
                nat_rel = event.nation_relevance.get(country, 0.0)
            features = {
                "event_date": event.date,
                "event_time": event.time,
                "event_time_utc": utc_to_iso(event.event_time_utc),
                "description": event.description,
                "category": event.category,
                "entities": "|".join(event.entities) if event.entities is not None else None,
                "platforms": "|".join(event.platforms) if event.platforms is not None else None,
                "data_per_user_mb": event.data_per_user_mb,
                "audience_size": event.audience_size,
                "continent_relevance": cont_rel,
                "nation_relevance": nat_rel,
                "spike_duration_hours": event.spike_duration_hours,
                "likelihood": event.likelihood,
            }
            target = _peak_z_in_window(z_by_network.get(network_id), win_start, win_end)
            row = (
                [network_id, utc_to_iso(win_start), utc_to_iso(win_end), event.event_id]
                + [_fmt(features[c]) for c in EVENT_FEATURE_COLUMNS]
                + [_fmt(s) for s in sig]
                + [_fmt(target)]
            )
            rows.append(row)
    return header, rows


def _peak_z_in_window(z: Optional[ZSeries], win_start, win_end) -> Optional[float]:
    if z is None:
        return None
    step = timedelta(seconds=z.step_seconds)
    series_end = z.start + step * len(z.z_values)
    if win_end < z.start or win_start > series_end:
        return None  # future (or pre-history) window: no observed target
    peak = None
    ts = z.start
    for value in z.z_values:
        if win_start <= ts <= win_end and not math.isnan(value):
            peak = value if peak is None else max(peak, value)
        ts = ts + step
    return peak
