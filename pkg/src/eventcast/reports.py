"""Plot-ready report tables: spike frequency, coverage, lead-time CDFs."""

from __future__ import annotations

import csv
import io
import json
from typing import Dict, List, Mapping, Sequence, Tuple

from .correlate import CoverageReport, LeadTimeCdf


def spike_frequency_table(histogram: Mapping[float, int]) -> Tuple[List[str], List[List[str]]]:
    header = ["z_threshold", "spike_count"]
    rows = [[repr(float(t)), str(histogram[t])] for t in sorted(histogram)]
    return header, rows


def coverage_table(report: CoverageReport) -> Tuple[List[str], List[List[str]]]:
    header = ["network_id", "event_driven_spikes", "covered", "coverage"]
    rows = []
    for net, (covered, driven, fraction) in sorted(report.per_network.items()):
        rows.append([net, str(driven), str(covered), repr(fraction)])
    if report.overall is not None:
        total_driven = sum(t for _, t, _ in report.per_network.values())
        total_covered = sum(c for c, _, _ in report.per_network.values())
        rows.append(["ALL", str(total_driven), str(total_covered), repr(report.overall)])
    return header, rows


def lead_time_table(cdfs: Dict[str, LeadTimeCdf]) -> Tuple[List[str], List[List[str]]]:
    header = ["category", "lead_days", "cumulative_fraction"]
    rows = []
    for cat in sorted(cdfs):
        cdf = cdfs[cat]
        for lead, frac in zip(cdf.lead_days, cdf.cumulative_fraction):
            rows.append([cat, repr(lead), repr(frac)])
        if cdf.negative_lead_count:
            rows.append([cat, "negative", str(cdf.negative_lead_count)])
    return header, rows


def render_table(header: Sequence[str], rows: Sequence[Sequence[str]], format: str = "csv") -> str:
    """Serialize a table as CSV text or a JSON array of objects."""
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return buf.getvalue()
    if format == "json":
        payload = [dict(zip(header, row)) for row in rows]
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    raise ValueError(f"unknown report format {format!r}; expected csv or json")
