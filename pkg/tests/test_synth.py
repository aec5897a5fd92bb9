from __future__ import annotations

from datetime import datetime, timedelta, timezone

import pytest

from eventcast.baseline import detect_spikes, fit_baseline, zscore_series
from eventcast.inference.backends import StubLlmBackend
from eventcast.inference.extract import extract_events
from eventcast.ingest import FilterConfig, assemble_content_record, list_posts
from eventcast.synth import (
    PlantedEvent,
    Scenario,
    SynthNetwork,
    default_scenario,
    synth_corpus,
    synth_traffic,
)

UTC = timezone.utc
START = datetime(2025, 6, 2, tzinfo=UTC)


def one_event_scenario(magnitude=5.0, duration=60, lead_days=5.0, n_posts=1, seed=3):
    eval_start = START + timedelta(weeks=4)
    event = PlantedEvent(
        name="solo", headline="Championship final stream", category="Sports",
        community="matchday", entities=("Alpha", "Beta"), platforms=("StreamArena",),
        event_time=eval_start + timedelta(days=2, hours=18),
        magnitude_z=magnitude, duration_min=duration, lead_time_days=lead_days,
        network_id="net-1", continent_relevance={"EU": 0.8},
        nation_relevance={"DE": 0.7}, n_posts=n_posts,
    )
    return Scenario(
        seed=seed, duration_weeks=5,
        networks=(SynthNetwork("net-1", "DE", "EU", 800.0),),
        planted_events=(event,), start=START,
    )


class TestScenarioValidation:
    def test_event_outside_eval_span_rejected(self):
        eval_start = START + timedelta(weeks=4)
        stray = PlantedEvent(
            name="early", headline="x", category="Sports",
            event_time=START + timedelta(days=1),  # inside the fitting span
            magnitude_z=5.0, duration_min=60, lead_time_days=2.0, network_id="net-1",
        )
        with pytest.raises(ValueError, match="scored span"):
            Scenario(seed=1, duration_weeks=5,
                     networks=(SynthNetwork("net-1", "DE", "EU"),),
                     planted_events=(stray,), start=START)

    def test_weak_event_must_be_marked_sub_threshold(self):
        eval_start = START + timedelta(weeks=4)
        weak = PlantedEvent(
            name="weak", headline="x", category="Sports",
            event_time=eval_start + timedelta(days=1),
            magnitude_z=1.0, duration_min=60, lead_time_days=2.0, network_id="net-1",
        )
        with pytest.raises(ValueError, match="detection rule"):
            Scenario(seed=1, duration_weeks=5,
                     networks=(SynthNetwork("net-1", "DE", "EU"),),
                     planted_events=(weak,), start=START)

    def test_unknown_network_rejected(self):
        eval_start = START + timedelta(weeks=4)
        event = PlantedEvent(
            name="lost", headline="x", category="Sports",
            event_time=eval_start + timedelta(days=1),
            magnitude_z=5.0, duration_min=60, lead_time_days=2.0, network_id="net-9",
        )
        with pytest.raises(ValueError, match="unknown network"):
            Scenario(seed=1, duration_weeks=5,
                     networks=(SynthNetwork("net-1", "DE", "EU"),),
                     planted_events=(event,), start=START)

    def test_round_trip(self):
        scenario = one_event_scenario()
        again = Scenario.from_dict(scenario.to_dict())
        assert again == scenario


class TestSynthTraffic:
    def test_same_seed_identical(self):
        series1, labels1 = synth_traffic(one_event_scenario(seed=11))
        series2, labels2 = synth_traffic(one_event_scenario(seed=11))
        assert series1["net-1"].values == series2["net-1"].values
        assert labels1 == labels2

    def test_no_events_zero_noise_detects_nothing(self):
        scenario = Scenario(
            seed=1, duration_weeks=5,
            networks=(SynthNetwork("net-1", "DE", "EU"),),
            planted_events=(), noise_std_fraction=0.0, start=START,
        )
        series, labels = synth_traffic(scenario)
        assert labels == []
        spikes = _detect(scenario, series["net-1"])
        assert spikes == []

    def test_planted_bump_detected_with_overlap(self):
        scenario = one_event_scenario(magnitude=5.0, duration=60)
        series, labels = synth_traffic(scenario)
        spikes = _detect(scenario, series["net-1"])
        assert labels[0]["event_name"] == "solo"
        event = scenario.planted_events[0]
        covered = 0.0
        for spike in spikes:
            lo = max(spike.start, event.event_time)
            hi = min(spike.end, event.end_time)
            covered += max(0.0, (hi - lo).total_seconds())
        assert covered / (event.duration_min * 60) >= 0.8

    def test_detected_magnitude_near_planted(self):
        scenario = one_event_scenario(magnitude=5.0, duration=120)
        series, _ = synth_traffic(scenario)
        spikes = _detect(scenario, series["net-1"])
        assert spikes and max(s.peak_z for s in spikes) == pytest.approx(5.0, rel=0.4)


def _detect(scenario, series):
    boundary = scenario.history_weeks * 7 * 86400 // series.step_seconds
    model = fit_baseline(series.slice(0, boundary), window_weeks=scenario.history_weeks)
    z = zscore_series(model, series.slice(boundary))
    return detect_spikes(z)


class TestSynthCorpus:
    def test_posts_cover_non_spontaneous_events(self):
        scenario = default_scenario(seed=7)
        posts, _, _ = synth_corpus(scenario)
        non_spont = [e for e in scenario.planted_events if not e.spontaneous]
        for event in non_spont:
            assert any(p.post_id.startswith(event.name + "-p") for p in posts)

    def test_spontaneous_events_have_no_posts(self):
        scenario = default_scenario(seed=7)
        posts, _, _ = synth_corpus(scenario)
        spont = [e.name for e in scenario.planted_events if e.spontaneous]
        assert spont  # scenario plants some
        for name in spont:
            assert not any(p.post_id.startswith(name + "-p") for p in posts)

    def test_posts_pass_the_documented_filter(self):
        scenario = default_scenario(seed=7)
        posts, _, _ = synth_corpus(scenario)
        communities = sorted({e.community for e in scenario.planted_events if not e.spontaneous})
        filter_config = FilterConfig(search_terms=("premiere", "kickoff"),
                                     communities=tuple(communities), min_engagement=25)

        class Injected:
            def __init__(self, posts):
                self.posts = posts
                from eventcast.ingest import SkipReport
                self.skip_report = SkipReport()

            def list_raw(self):
                return (p.to_dict() for p in self.posts)

        kept = list_posts(Injected(posts), filter_config)
        event_posts = [p for p in posts if not p.post_id.startswith("distractor")]
        kept_ids = {p.post_id for p in kept}
        assert all(p.post_id in kept_ids for p in event_posts)
        assert "distractor-lowscore" not in kept_ids
        assert "distractor-offtopic" not in kept_ids

    def test_first_mention_matches_lead_time(self):
        scenario = one_event_scenario(lead_days=30.0)
        posts, fixtures, _ = synth_corpus(scenario)
        event = scenario.planted_events[0]
        post = next(p for p in posts if p.post_id == "solo-p0")
        assert post.created_at == event.event_time - timedelta(days=30)

    def test_extraction_fixture_round_trip(self):
        scenario = one_event_scenario()
        posts, fixtures, _ = synth_corpus(scenario)
        post = next(p for p in posts if p.post_id == "solo-p0")
        record = assemble_content_record(post)
        llm = StubLlmBackend(fixtures)
        drafts = extract_events(record, llm)
        assert len(drafts) == 1
        assert drafts[0].headline == "Championship final stream"
        assert drafts[0].date == scenario.planted_events[0].event_time.date().isoformat()

    def test_duplicate_announcement_gets_two_posts_and_merge_fixtures(self):
        scenario = one_event_scenario(n_posts=2)
        posts, fixtures, _ = synth_corpus(scenario)
        dup_posts = [p for p in posts if p.post_id.startswith("solo-p")]
        assert len(dup_posts) == 2
        # fixture map carries both pre-merge chains and the post-merge
        # re-inference chain: strictly more keys than a single-post scenario
        single_fixtures = synth_corpus(one_event_scenario(n_posts=1))[1]
        assert len(fixtures) > len(single_fixtures)

    def test_retriever_fixtures_cover_entities(self):
        scenario = one_event_scenario()
        _, _, retriever_fixtures = synth_corpus(scenario)
        assert set(retriever_fixtures) == {"Alpha", "Beta"}


class TestDefaultScenario:
    def test_shape(self):
        scenario = default_scenario(seed=7)
        assert len(scenario.planted_events) == 20
        spont = [e for e in scenario.planted_events if e.spontaneous]
        assert len(spont) == 2  # 10% deliberately spontaneous
        assert len(scenario.networks) == 3
        targeted = {e.network_id for e in scenario.planted_events}
        assert targeted == {n.network_id for n in scenario.networks}

    def test_long_and_short_lead_categories(self):
        scenario = default_scenario(seed=7)
        tv = [e.lead_time_days for e in scenario.planted_events if e.category == "TV & Film"]
        sports = [e.lead_time_days for e in scenario.planted_events if e.category == "Sports"]
        assert min(tv) >= 30.0
        assert max(sports) < 30.0
