from __future__ import annotations

from datetime import datetime, timezone

import pytest

from eventcast.ingest import RawPost
from eventcast.model import ContentRecord, EventAbstraction, TrafficSeries

UTC = timezone.utc
MONDAY = datetime(2025, 6, 2, tzinfo=UTC)  # aligned week start


def make_series(values, start=MONDAY, step_seconds=300, network_id="net-test"):
    return TrafficSeries(network_id=network_id, start=start,
                         step_seconds=step_seconds, values=tuple(values))


def week_of_samples(level=100.0, weeks=4, step_seconds=300, start=MONDAY):
    n = int(weeks * 7 * 86400 // step_seconds)
    return make_series([level] * n, start=start, step_seconds=step_seconds)


def make_record(record_id="rec-1", body="A discussion about an upcoming match.",
                created_at=MONDAY, title="Upcoming match thread", comments=(),
                engagement=50):
    return ContentRecord(
        record_id=record_id,
        source="forum_thread",
        url=f"https://forum.example/{record_id}",
        created_at=created_at,
        fetched_at=created_at,
        title=title,
        body_text=body,
        comments=tuple(comments),
        engagement=engagement,
        linked_texts=(),
    )


def make_event(event_id="evt-1", date="2025-07-02", time="19:00",
               description="Continental Cup semi-final", record_id="rec-1",
               first_mentioned_at=MONDAY, **extra):
    return EventAbstraction(
        event_id=event_id,
        date=date,
        time=time,
        description=description,
        source_records=(record_id,),
        first_mentioned_at=first_mentioned_at,
        event_time_utc=datetime.fromisoformat(f"{date}T{time}:00+00:00") if time != "unknown" else None,
        **extra,
    )


def make_post(post_id="p1", community="matchday", title="Cup final announced",
              body="The cup final kicks off next Saturday.", score=80,
              outbound_urls=(), comments=(), created_at=MONDAY):
    return RawPost(
        post_id=post_id, community=community, title=title, body=body,
        score=score, outbound_urls=tuple(outbound_urls),
        comments_raw=tuple(comments), created_at=created_at,
        url=f"https://forum.example/{post_id}",
    )


@pytest.fixture
def tmp_store_dir(tmp_path):
    return tmp_path / "stores"
