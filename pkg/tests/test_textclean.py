from __future__ import annotations

from pathlib import Path

import pytest

from eventcast.textclean import clean_text

DATA = Path(__file__).parent / "data"


class TestHtml:
    def test_tag_strip(self):
        assert clean_text("<p>Hello <b>world</b></p>", "html") == "Hello world"

    def test_scripts_dropped(self):
        html = "<p>keep me</p><script>alert('x')</script><p>and me</p>"
        assert clean_text(html, "html") == "keep me and me"

    def test_navigation_chrome_dropped(self):
        html = '<nav><a href="/">Home</a><a href="/there">There</a></nav><p>story text here</p>'
        assert clean_text(html, "html") == "story text here"

    def test_link_dense_block_dropped(self):
        html = ('<p><a href="/a">One link</a> <a href="/b">Two link</a></p>'
                "<p>A real paragraph with plenty of prose and few links.</p>")
        assert clean_text(html, "html") == "A real paragraph with plenty of prose and few links."

    def test_golden_news_page(self):
        # hand-cleaned expectation: headline + article paragraphs only
        raw = (DATA / "news_page.html").read_text(encoding="utf-8")
        expected = (DATA / "news_page_clean.txt").read_text(encoding="utf-8").strip()
        assert clean_text(raw, "html") == expected

    def test_entities_unescaped(self):
        assert clean_text("<p>Fish &amp; Chips</p>", "html") == "Fish & Chips"


class TestMarkdown:
    def test_syntax_removed(self):
        md = "# Title\n\nSome **bold** and *italic* text with [a link](https://x.example)."
        assert clean_text(md, "markdown") == "Title Some bold and italic text with a link."

    def test_code_fences_dropped(self):
        md = "before\n```python\nprint('hi')\n```\nafter"
        assert clean_text(md, "markdown") == "before after"

    def test_bullets(self):
        md = "- one\n- two\n- three"
        assert clean_text(md, "markdown") == "one two three"


class TestPlain:
    def test_identity_modulo_whitespace(self):
        assert clean_text("hello   world\n\nagain", "plain") == "hello world again"

    def test_already_clean(self):
        assert clean_text("nothing to do", "plain") == "nothing to do"


def test_length_cap_truncates_tail():
    text = "word " * 100
    out = clean_text(text, "plain", max_chars=23)
    assert out == "word word word word wor"


def test_unknown_format_rejected():
    with pytest.raises(ValueError, match="format"):
        clean_text("x", "rtf")


def test_none_input_is_empty():
    assert clean_text(None, "plain") == ""


def test_invalid_markup_degrades_to_strip():
    # mismatched, hostile markup must not raise
    out = clean_text("<p><b>broken<i></p> text </zzz>", "html")
    assert "broken" in out and "text" in out
