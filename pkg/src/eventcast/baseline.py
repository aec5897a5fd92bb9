"""Context-unaware traffic baseline: rolling weekly statistics and spikes.

The baseline is a per-(weekday, time-of-day bin) mean/std computed over a
trailing window of weeks, which captures the weekly cycle without any
knowledge of real-world events. Subtracting it yields residual Z-scores,
and maximal above-threshold runs become spike records.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import timedelta
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .model import SpikeRecord, TrafficSeries, ensure_utc, utc_from_iso, utc_to_iso

MINUTES_PER_DAY = 1440
STD_EPS = 1e-6  # absolute floor; guards flat history


class ConfigError(ValueError):
    """Invalid detection or fitting configuration."""


class InsufficientHistoryError(ValueError):
    """Series too short to estimate the weekly seasonal baseline."""


class UnpopulatedBinsError(ValueError):
    """Scoring touched (weekday, bin) slots the model has no data for."""

    def __init__(self, missing: Sequence[Tuple[int, int]]):
        self.missing = list(missing)
        preview = ", ".join(f"(wd={w}, bin={b})" for w, b in self.missing[:8])
        more = "" if len(self.missing) <= 8 else f" and {len(self.missing) - 8} more"
        super().__init__(f"baseline has no data for slots: {preview}{more}")


@dataclass(frozen=True)
class BaselineModel:
    """Per-(weekday, bin-of-day) trailing-window mean/std of throughput."""

    network_id: str
    bin_minutes: int
    window_weeks: int
    stats: Mapping  # (weekday, bin) -> (mean, std, count)

    def __post_init__(self):
        if MINUTES_PER_DAY % self.bin_minutes != 0:
            raise ConfigError(f"bin_minutes={self.bin_minutes} must divide 1440")
        for slot, (mean, std, count) in self.stats.items():
            if count < 1 or std < 0:
                raise ConfigError(f"slot {slot}: count must be >= 1 and std >= 0")

    def bins_per_day(self) -> int:
        return MINUTES_PER_DAY // self.bin_minutes

    def lookup(self, slot: Tuple[int, int]) -> Optional[Tuple[float, float, int]]:
        return self.stats.get(slot)

    def to_dict(self) -> dict:
        return {
            "network_id": self.network_id,
            "bin_minutes": self.bin_minutes,
            "window_weeks": self.window_weeks,
            "stats": {f"{w},{b}": [m, s, c] for (w, b), (m, s, c) in sorted(self.stats.items())},
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "BaselineModel":
        stats = {}
        for key, (m, s, c) in d["stats"].items():
            w, b = key.split(",")
            stats[(int(w), int(b))] = (float(m), float(s), int(c))
        return cls(d["network_id"], d["bin_minutes"], d["window_weeks"], stats)


@dataclass(frozen=True)
class ZSeries:
    """Residual Z-scores aligned sample-for-sample with the scored series."""

    network_id: str
    start: object
    step_seconds: int
    z_values: tuple

    def __post_init__(self):
        object.__setattr__(self, "start", ensure_utc(self.start, "ZSeries", "start"))
        vals = tuple(float(v) for v in self.z_values)
        if not vals:
            raise ConfigError("ZSeries.z_values must be non-empty")
        for i, v in enumerate(vals):
            # NaN marks a missing input sample; anything else must be finite
            if not math.isnan(v) and not math.isfinite(v):
                raise ConfigError(f"ZSeries.z_values[{i}] is {v!r}; must be finite")
        object.__setattr__(self, "z_values", vals)

    def __len__(self):
        return len(self.z_values)

    def time_at(self, index: int):
        return self.start + timedelta(seconds=index * self.step_seconds)


def _slot_of(ts, bin_minutes: int) -> Tuple[int, int]:
    return ts.weekday(), (ts.hour * 60 + ts.minute) // bin_minutes


def fit_baseline(
    series: TrafficSeries, window_weeks: int = 4, bin_minutes: int = 5
) -> BaselineModel:
    """Fit per-(weekday, bin) mean/std over the trailing window_weeks.

    Each calendar day contributes one occurrence of its slots; for every
    slot only the last ``window_weeks`` occurrences with data are pooled.
    NaN samples are excluded. Slots with no data stay unpopulated.
    """
    if window_weeks < 1:
        raise ConfigError("window_weeks must be >= 1")
    if bin_minutes < 1 or MINUTES_PER_DAY % bin_minutes != 0:
        raise ConfigError(f"bin_minutes={bin_minutes} must be a positive divisor of 1440")
    span_seconds = len(series) * series.step_seconds
    if span_seconds < 7 * 86400:
        raise InsufficientHistoryError(
            f"series spans {span_seconds / 86400:.2f} days; need at least one full week"
        )

    # slot -> day ordinal -> samples
    per_slot: Dict[Tuple[int, int], Dict[int, List[float]]] = {}
    ts = series.start
    step = timedelta(seconds=series.step_seconds)
    for v in series.values:
        if not math.isnan(v):
            slot = _slot_of(ts, bin_minutes)
            day = ts.date().toordinal()
            per_slot.setdefault(slot, {}).setdefault(day, []).append(v)
        ts = ts + step

    stats = {}
    for slot, by_day in per_slot.items():
        trailing_days = sorted(by_day)[-window_weeks:]
        pooled = np.array([v for d in trailing_days for v in by_day[d]], dtype=float)
        stats[slot] = (float(pooled.mean()), float(pooled.std()), int(pooled.size))
    return BaselineModel(series.network_id, bin_minutes, window_weeks, stats)


def zscore_series(
    model: BaselineModel, series: TrafficSeries, std_floor_fraction: float = 0.05
) -> ZSeries:
    """Score a series against the baseline: z = (x - mean) / floored std.

    The denominator is max(std, std_floor_fraction * mean, 1e-6), so flat
    history cannot produce infinite scores. NaN input samples yield NaN
    scores. Raises UnpopulatedBinsError listing every missing slot.
    """
    if std_floor_fraction < 0:
        raise ConfigError("std_floor_fraction must be >= 0")
    missing = []
    seen = set()
    ts = series.start
    step = timedelta(seconds=series.step_seconds)
    slots = []
    for _ in series.values:
        slot = _slot_of(ts, model.bin_minutes)
        slots.append(slot)
        if slot not in model.stats and slot not in seen:
            seen.add(slot)
            missing.append(slot)
        ts = ts + step
    if missing:
        raise UnpopulatedBinsError(sorted(missing))

    z = []
    for v, slot in zip(series.values, slots):
        if math.isnan(v):
            z.append(float("nan"))
            continue
        mean, std, _ = model.stats[slot]
        denom = max(std, std_floor_fraction * mean, STD_EPS)
        z.append((v - mean) / denom)
    return ZSeries(series.network_id, series.start, series.step_seconds, tuple(z))


def detect_spikes(
    z: ZSeries,
    z_threshold: float = 2.0,
    min_duration_minutes: float = 20.0,
    merge_gap_minutes: float = 5.0,
) -> List[SpikeRecord]:
    """Extract maximal above-threshold runs as disjoint spike records.

    Runs separated by sub-threshold gaps shorter than merge_gap_minutes
    are merged (a NaN gap never merges: missing data breaks contiguity).
    Intervals end one step after their last sample; those shorter than
    min_duration_minutes are discarded. peak_z/mean_z are computed over
    the above-threshold samples only.
    """
    if z_threshold <= 0 or min_duration_minutes <= 0 or merge_gap_minutes <= 0:
        raise ConfigError("thresholds and durations must be positive")

    zv = np.asarray(z.z_values, dtype=float)
    step_min = z.step_seconds / 60.0
    above = np.zeros(len(zv), dtype=bool)
    finite = ~np.isnan(zv)
    above[finite] = zv[finite] >= z_threshold

    # maximal runs of consecutive above-threshold samples
    runs: List[Tuple[int, int]] = []  # [first, last] sample indices
    padded = np.concatenate(([False], above, [False]))
    edges = np.flatnonzero(padded[1:] != padded[:-1])
    for a, b in zip(edges[::2], edges[1::2]):
        runs.append((int(a), int(b - 1)))

    # merge runs across short, NaN-free gaps
    merged: List[Tuple[int, int]] = []
    for first, last in runs:
        if merged:
            prev_first, prev_last = merged[-1]
            gap_samples = first - prev_last - 1
            gap_minutes = gap_samples * step_min
            gap_clean = not np.isnan(zv[prev_last + 1:first]).any()
            if gap_minutes < merge_gap_minutes and gap_clean:
                merged[-1] = (prev_first, last)
                continue
        merged.append((first, last))

    spikes = []
    for first, last in merged:
        duration = (last - first + 1) * step_min
        if duration < min_duration_minutes:
            continue
        window = zv[first:last + 1]
        mask = ~np.isnan(window)
        mask[mask] = window[mask] >= z_threshold
        above_vals = window[mask]
        spikes.append(
            SpikeRecord(
                network_id=z.network_id,
                start=z.time_at(first),
                end=z.time_at(last + 1),
                peak_z=float(above_vals.max()),
                mean_z=float(above_vals.mean()),
                duration_minutes=duration,
            )
        )
    return spikes


def spike_frequency(spikes: Sequence[SpikeRecord], z_bins: Sequence[float]) -> Dict[float, int]:
    """Count spikes with peak_z >= threshold, for each threshold."""
    bins = [float(b) for b in z_bins]
    if not bins:
        raise ConfigError("z_bins must be non-empty")
    if any(b2 <= b1 for b1, b2 in zip(bins, bins[1:])):
        raise ConfigError("z_bins must be strictly increasing")
    return {b: sum(1 for s in spikes if s.peak_z >= b) for b in bins}


# -- traffic CSV interface ----------------------------------------------------

TRAFFIC_CSV_HEADER = ["timestamp_utc", "network_id", "bits_per_second"]


def write_traffic_csv(path, series_list: Sequence[TrafficSeries]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAFFIC_CSV_HEADER)
        for series in series_list:
            ts = series.start
            step = timedelta(seconds=series.step_seconds)
            for v in series.values:
                value = "" if math.isnan(v) else repr(v)
                writer.writerow([utc_to_iso(ts), series.network_id, value])
                ts = ts + step


def read_traffic_csv(path) -> Dict[str, TrafficSeries]:
    """Load per-network uniform series from the documented CSV format.

    Rows must be time-ordered per network with a uniform step; an empty
    bits_per_second field marks a missing sample.
    """
    rows: Dict[str, List[Tuple[object, float]]] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != TRAFFIC_CSV_HEADER:
            raise ConfigError(
                f"traffic CSV header must be {','.join(TRAFFIC_CSV_HEADER)}, got {reader.fieldnames}"
            )
        for row in reader:
            raw = row["bits_per_second"].strip()
            value = float("nan") if raw == "" else float(raw)
            rows.setdefault(row["network_id"], []).append((utc_from_iso(row["timestamp_utc"]), value))

    out = {}
    for network_id, samples in rows.items():
        samples.sort(key=lambda p: p[0])
        if len(samples) < 2:
            raise ConfigError(f"network {network_id}: need at least 2 samples")
        step = (samples[1][0] - samples[0][0]).total_seconds()
        for (t0, _), (t1, _) in zip(samples, samples[1:]):
            if abs((t1 - t0).total_seconds() - step) > 1e-9:
                raise ConfigError(f"network {network_id}: non-uniform step near {utc_to_iso(t1)}")
        out[network_id] = TrafficSeries(
            network_id=network_id,
            start=samples[0][0],
            step_seconds=int(step),
            values=tuple(v for _, v in samples),
        )
    return out
