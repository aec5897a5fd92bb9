"""Filter discussion posts and assemble cleaned content records.

Builds a small JSONL corpus on disk, applies an engagement/community
filter through the file connector, cleans markup, and compiles one
content record per surviving thread.
"""

import json
import tempfile
from datetime import datetime, timezone
from pathlib import Path

from eventcast import FilterConfig, assemble_content_record, clean_text, list_posts
from eventcast.ingest import FileCorpusConnector

NOW = datetime(2025, 6, 20, 12, 0, tzinfo=timezone.utc).isoformat()

corpus = [
    {
        "post_id": "cup-final", "community": "matchday",
        "title": "Cup final confirmed for July 5",
        "body": "Official: the **cup final** kicks off July 5 at 20:00 UTC. "
                "[Venue details](https://stadium.example/final)",
        "score": 84,
        "outbound_urls": ["https://stadium.example/final"],
        "comments": [
            {"text": "Finally! Watching with the whole family.", "score": 31},
            {"text": "The stream buckled last year, hope they scaled up.", "score": 55},
            {"text": "first", "score": 1},
        ],
        "created_at": NOW,
        "url": "https://forum.example/matchday/cup-final",
    },
    {
        "post_id": "low-effort", "community": "matchday",
        "title": "anyone awake?", "body": "bored", "score": 2,
        "outbound_urls": [], "comments": [], "created_at": NOW,
    },
    {
        "post_id": "off-topic", "community": "aquariums",
        "title": "Best filter for a 60l tank", "body": "Sponge or canister?",
        "score": 77, "outbound_urls": [], "comments": [], "created_at": NOW,
    },
]

with tempfile.TemporaryDirectory() as tmp:
    corpus_path = Path(tmp) / "posts.jsonl"
    corpus_path.write_text("\n".join(json.dumps(p) for p in corpus) + "\n")

    connector = FileCorpusConnector(corpus_path)
    filter_config = FilterConfig(
        search_terms=("cup final",),
        communities=("matchday",),
        min_engagement=25,
    )
    posts = list_posts(connector, filter_config)
    print(f"{len(posts)} of {len(corpus)} posts pass the filter "
          f"(min score 25, community or term match):")
    for post in posts:
        print(f"  {post.post_id} (score {post.score}, r/{post.community})")

    print("\nhtml cleaning keeps prose, drops chrome:")
    page = ('<nav><a href="/">Home</a><a href="/a">News</a></nav>'
            "<h1>Stadium doubles uplink capacity</h1>"
            "<p>The venue upgraded its peering ahead of the final.</p>")
    print(" ", clean_text(page, "html"))

    print("\nassembled content records:")
    for post in posts:
        record = assemble_content_record(post, top_k_comments=2)
        print(f"  {record.record_id}: title={record.title!r}")
        print(f"    body: {record.body_text}")
        print(f"    top comments ({len(record.comments)}): {list(record.comments)}")
        print(f"    engagement: {record.engagement}")
