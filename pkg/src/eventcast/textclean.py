"""Best-effort markup stripping for discussion posts and linked pages."""

from __future__ import annotations

import re
from html import unescape
from html.parser import HTMLParser

DEFAULT_MAX_CHARS = 60_000

# blocks dominated by link text are navigation chrome, not content
LINK_DENSITY_LIMIT = 0.3

_BLOCK_TAGS = {
    "p", "h1", "h2", "h3", "h4", "h5", "h6", "li", "td", "th",
    "blockquote", "pre", "title", "figcaption", "dt", "dd",
}
_SKIP_TAGS = {"script", "style", "nav", "header", "footer", "aside", "noscript", "template", "form"}


class _BlockExtractor(HTMLParser):
    """Collect text per block element, tracking how much of it is link text."""

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.blocks = []  # (text, link_chars)
        self._parts = []
        self._link_chars = 0
        self._skip_depth = 0
        self._link_depth = 0

    def handle_starttag(self, tag, attrs):
        if tag in _SKIP_TAGS:
            self._skip_depth += 1
        elif tag == "a":
            self._link_depth += 1
        elif tag in _BLOCK_TAGS or tag in ("div", "section", "article", "ul", "ol", "table", "tr", "body", "br"):
            self._flush()

    def handle_endtag(self, tag):
        if tag in _SKIP_TAGS:
            self._skip_depth = max(0, self._skip_depth - 1)
        elif tag == "a":
            self._link_depth = max(0, self._link_depth - 1)
        elif tag in _BLOCK_TAGS:
            self._flush()

    def handle_data(self, data):
        if self._skip_depth:
            return
        self._parts.append(data)
        if self._link_depth:
            self._link_chars += len(data.strip())

    def _flush(self):
        text = _normalize_ws("".join(self._parts))
        if text:
            self.blocks.append((text, self._link_chars))
        self._parts = []
        self._link_chars = 0

    def close(self):
        super().close()
        self._flush()


def _normalize_ws(text: str) -> str:
    return re.sub(r"\s+", " ", text).strip()


def _clean_html(raw: str) -> str:
    parser = _BlockExtractor()
    try:
        parser.feed(raw)
        parser.close()
    except Exception:
        # invalid markup: fall back to a crude tag strip
        return _normalize_ws(re.sub(r"<[^>]+>", " ", unescape(raw)))
    kept = []
    for text, link_chars in parser.blocks:
        density = link_chars / max(len(text), 1)
        if density < LINK_DENSITY_LIMIT:
            kept.append(text)
    return _normalize_ws(" ".join(kept))


_MD_PATTERNS = [
    (re.compile(r"```.*?```", re.S), " "),          # fenced code
    (re.compile(r"`([^`]*)`"), r"\1"),              # inline code
    (re.compile(r"!\[([^\]]*)\]\([^)]*\)"), r"\1"),  # images -> alt text
    (re.compile(r"\[([^\]]+)\]\([^)]*\)"), r"\1"),  # links -> anchor text
    (re.compile(r"^\s{0,3}#{1,6}\s*", re.M), ""),   # headings
    (re.compile(r"^\s{0,3}>\s?", re.M), ""),        # blockquotes
    (re.compile(r"^\s*[-*+]\s+", re.M), ""),        # bullets
    (re.compile(r"(\*\*|__)(.*?)\1", re.S), r"\2"),  # bold
    (re.compile(r"(\*|_)(.*?)\1", re.S), r"\2"),    # italics
    (re.compile(r"^\s*([-*_]\s*){3,}$", re.M), " "),  # horizontal rules
]


def _clean_markdown(raw: str) -> str:
    text = raw
    for pattern, repl in _MD_PATTERNS:
        text = pattern.sub(repl, text)
    return _normalize_ws(text)


def clean_text(raw: str, format: str = "plain", max_chars: int = DEFAULT_MAX_CHARS) -> str:
    """Strip markup and normalize whitespace; truncate the tail at max_chars.

    html input keeps headline and paragraph text while dropping scripts
    and link-dense navigation blocks; markdown strips syntax; plain only
    normalizes whitespace. Invalid markup degrades to a plain strip.
    """
    if raw is None:
        return ""
    if format == "html":
        cleaned = _clean_html(raw)
    elif format == "markdown":
        cleaned = _clean_markdown(raw)
    elif format == "plain":
        cleaned = _normalize_ws(raw)
    else:
        raise ValueError(f"unknown format {format!r}; expected html, markdown, or plain")
    if max_chars is not None and len(cleaned) > max_chars:
        cleaned = cleaned[:max_chars].rstrip()
    return cleaned
