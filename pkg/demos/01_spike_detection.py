"""Detect event-driven spikes against a context-unaware weekly baseline.

Synthesizes five weeks of traffic for one network with two planted
surges, fits the per-(weekday, time-bin) rolling baseline on the first
four weeks, scores the final week, and extracts spikes. Saves a plot to
spike_detection.png when matplotlib is available.
"""

from datetime import datetime, timedelta, timezone

from eventcast import detect_spikes, fit_baseline, spike_frequency, zscore_series
from eventcast.synth import PlantedEvent, Scenario, SynthNetwork, synth_traffic

START = datetime(2025, 6, 2, tzinfo=timezone.utc)
EVAL_START = START + timedelta(weeks=4)

scenario = Scenario(
    seed=11,
    duration_weeks=5,
    networks=(SynthNetwork("demo-net", country="DE", continent="EU", base_mbps=750),),
    planted_events=(
        PlantedEvent(
            name="derby", headline="City derby kickoff", category="Sports",
            event_time=EVAL_START + timedelta(days=1, hours=19),
            magnitude_z=5.0, duration_min=110, lead_time_days=3.0,
            network_id="demo-net",
        ),
        PlantedEvent(
            name="finale", headline="Series finale drop", category="TV & Film",
            event_time=EVAL_START + timedelta(days=4, hours=21),
            magnitude_z=3.5, duration_min=80, lead_time_days=30.0,
            network_id="demo-net",
        ),
    ),
    start=START,
)

series_by_net, labels = synth_traffic(scenario)
series = series_by_net["demo-net"]
print(f"synthesized {len(series)} samples "
      f"({scenario.duration_weeks} weeks at {series.step_seconds}s)")

# fit on the four-week history, score the final week
boundary = 4 * 7 * 86400 // series.step_seconds
model = fit_baseline(series.slice(0, boundary), window_weeks=4, bin_minutes=5)
print(f"baseline fitted: {len(model.stats)} (weekday, bin) slots")

z = zscore_series(model, series.slice(boundary))
spikes = detect_spikes(z, z_threshold=2.0, min_duration_minutes=20, merge_gap_minutes=5)

print(f"\n{len(spikes)} spikes detected in the scored week:")
for s in spikes:
    print(f"  {s.start:%a %H:%M} - {s.end:%H:%M}  "
          f"peak_z={s.peak_z:5.2f}  mean_z={s.mean_z:5.2f}  {s.duration_minutes:.0f} min")

print("\nplanted ground truth:")
for label in labels:
    print(f"  {label['event_name']}: {label['start']} -> {label['end']}")

histogram = spike_frequency(spikes, [2, 3, 5])
print("\nspike frequency (peak_z >= threshold):")
for threshold, count in sorted(histogram.items()):
    print(f"  Z >= {threshold:.0f}: {count}")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    hours = [i * series.step_seconds / 3600 for i in range(boundary, len(series))]
    week = series.values[boundary:]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(11, 6), sharex=True)
    ax1.plot(hours, [v / 1e9 for v in week], lw=0.6, color="tab:blue")
    ax1.set_ylabel("traffic (Gbit/s)")
    ax2.plot(hours, z.z_values, lw=0.6, color="tab:gray")
    ax2.axhline(2.0, color="tab:red", ls="--", lw=0.8, label="Z = 2")
    for s in spikes:
        lo = (s.start - series.time_at(boundary)).total_seconds() / 3600
        ax2.axvspan(lo, lo + s.duration_minutes / 60, color="tab:red", alpha=0.25)
    ax2.set_xlabel("hours into scored week")
    ax2.set_ylabel("Z-score")
    ax2.legend()
    fig.tight_layout()
    fig.savefig("spike_detection.png", dpi=120)
    print("\nplot saved to spike_detection.png")
except ImportError:
    print("\n(matplotlib not installed; skipping the plot)")
