"""Boilerplate removal with the jusText block classifier.

Pages are cut into blocks at block-level elements, each block is classified
context-free from its length, link density and stopword density, and the
borderline classes (short, near-good) are then resolved from their
neighbours. Only blocks ending up ``good`` are kept.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field, replace
from html.parser import HTMLParser
from importlib import resources
from typing import FrozenSet, Iterable, List, Optional

GOOD, BAD, SHORT, NEAR_GOOD = "good", "bad", "short", "near-good"

BLOCK_TAGS = frozenset({
    "body", "blockquote", "caption", "center", "col", "colgroup", "dd",
    "div", "dl", "dt", "fieldset", "form", "legend", "optgroup", "option",
    "p", "pre", "table", "td", "textarea", "tfoot", "th", "thead", "tr",
    "ul", "li", "h1", "h2", "h3", "h4", "h5", "h6",
})
# dropped together with their content
KILL_TAGS = frozenset({"script", "style", "head", "title", "applet", "button", "input",
                       "select", "textarea", "svg", "math"})
# dropped, content kept
UNWRAP_TAGS = frozenset({"form", "iframe", "embed", "layer", "object", "param"})
VOID_TAGS = frozenset({"area", "base", "br", "col", "embed", "hr", "img", "input", "keygen",
                       "link", "meta", "param", "source", "track", "wbr"})

_HEADINGS = {f"h{i}" for i in range(1, 7)}
_P_CLOSERS = {"address", "article", "aside", "blockquote", "center", "dir", "div", "dl",
              "fieldset", "footer", "form", "header", "hr", "li", "menu", "nav", "ol", "p",
              "pre", "section", "table", "ul", "dd", "dt"} | _HEADINGS
# element -> start tags that implicitly close it when it is the current node
AUTO_CLOSE = {
    "p": _P_CLOSERS,
    "li": {"li"},
    "dt": {"dt", "dd"},
    "dd": {"dt", "dd"},
    "td": {"td", "th", "tr", "tbody", "thead", "tfoot"},
    "th": {"td", "th", "tr", "tbody", "thead", "tfoot"},
    "tr": {"tr", "tbody", "thead", "tfoot"},
    "thead": {"tbody", "tfoot"},
    "tbody": {"tbody", "tfoot"},
    "option": {"option", "optgroup"},
    "a": {"a"},
    **{h: _HEADINGS for h in _HEADINGS},
}

_WS = re.compile(r"\s+")
_HEADING_PATH = re.compile(r"\bh\d\b")


def _collapse(match: re.Match) -> str:
    text = match.group()
    return "\n" if "\n" in text or "\r" in text else " "


def normalize_whitespace(text: str) -> str:
    """Runs of whitespace become one space, or one newline if the run held a line break."""
    return _WS.sub(_collapse, text)


@dataclass
class BoilerplateParams:
    max_link_density: float = 0.2
    length_low: int = 70
    length_high: int = 200
    stopwords_low: float = 0.30
    stopwords_high: float = 0.32
    max_heading_distance: int = 200

    def __post_init__(self):
        if self.stopwords_low > self.stopwords_high:
            raise ValueError("stopwords_low must not exceed stopwords_high")
        if self.length_low > self.length_high:
            raise ValueError("length_low must not exceed length_high")


@dataclass(frozen=True)
class StopwordList:
    language: str
    words: FrozenSet[str]

    def __post_init__(self):
        if not self.words:
            raise ValueError(f"stopword list {self.language!r} is empty")
        bad = [w for w in self.words if w != w.lower()]
        if bad:
            raise ValueError(f"stopword list {self.language!r} has non-lowercase entries: {bad[:3]}")

    def __contains__(self, word: str) -> bool:
        return word in self.words

    @classmethod
    def from_file(cls, path: str, language: Optional[str] = None) -> "StopwordList":
        with open(path, encoding="utf-8") as fh:
            words = frozenset(line.strip().lower() for line in fh if line.strip())
        return cls(language or path, words)

    @classmethod
    def bundled(cls, language: str) -> "StopwordList":
        ref = resources.files("harvest") / "data" / "stopwords" / f"{language}.txt"
        if not ref.is_file():
            raise FileNotFoundError(f"no bundled stopword list for {language!r}")
        words = frozenset(w.strip().lower() for w in ref.read_text("utf-8").splitlines()
                          if w.strip())
        return cls(language, words)


def derive_stopwords(texts: Iterable[str], top_n: int = 2000, min_count: int = 2) -> List[str]:
    """Most frequent lowercase words (punctuation stripped), ties broken alphabetically."""
    counts: Counter = Counter()
    for text in texts:
        for word in text.split():
            word = word.strip(".,;:!?\"'()[]{}«»„“”‘’–—-…").lower()
            if word and any(ch.isalpha() for ch in word):
                counts[word] += 1
    ranked = sorted((w for w, c in counts.items() if c >= min_count),
                    key=lambda w: (-counts[w], w))
    return ranked[:top_n]


@dataclass
class Block:
    text_nodes: List[str] = field(default_factory=list)
    dom_path: str = ""
    link_chars: int = 0
    stopword_density: float = 0.0
    cf_class: Optional[str] = None
    final_class: Optional[str] = None
    _text: Optional[str] = field(default=None, repr=False, compare=False)

    @property
    def text(self) -> str:
        if self._text is None:
            self._text = normalize_whitespace("".join(self.text_nodes).strip())
        return self._text

    @property
    def char_count(self) -> int:
        return len(self.text)

    @property
    def link_density(self) -> float:
        return self.link_chars / max(self.char_count, 1)

    @property
    def is_heading(self) -> bool:
        return bool(_HEADING_PATH.search(self.dom_path))

    @property
    def words(self) -> List[str]:
        return self.text.split()


def stopword_density(text: str, stopwords: StopwordList) -> float:
    words = text.split()
    if not words:
        return 0.0
    return sum(w.lower() in stopwords for w in words) / len(words)


class _Segmenter(HTMLParser):
    """Streams tag events into blocks without building a tree.

    Unclosed elements are closed by the usual HTML implied-end rules and stray
    end tags are ignored, so malformed input never raises.
    """

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.blocks: List[Block] = []
        self.stack: List[str] = []
        self.kill_depth = 0
        self.kill_tag: Optional[str] = None
        self.link = False
        self.br = False
        self.pending: List[str] = []
        self.block = Block(dom_path="")

    # paragraph bookkeeping -------------------------------------------
    def _new_block(self):
        self._flush()
        if self.block.text_nodes:
            self.block._text = None
            self.blocks.append(self.block)
        self.block = Block(dom_path=".".join(self.stack))

    def _flush(self):
        if not self.pending:
            return
        content = "".join(self.pending)
        self.pending = []
        if not content or content.isspace():
            return
        text = normalize_whitespace(content)
        self.block.text_nodes.append(text)
        if self.link:
            self.block.link_chars += len(text)
        self.br = False

    def _start(self, tag: str):
        self._flush()
        self.stack.append(tag)
        if tag in BLOCK_TAGS or (tag == "br" and self.br):
            self._new_block()
        else:
            self.br = tag == "br"
            if self.br:
                self.block.text_nodes.append(" ")
            elif tag == "a":
                self.link = True

    def _end(self, tag: str):
        self._flush()
        self.stack.pop()
        if tag in BLOCK_TAGS:
            self._new_block()
        if tag == "a":
            self.link = False

    # HTMLParser hooks ---------------------------------------------------
    def handle_starttag(self, tag, attrs):
        if self.kill_tag == "head" and tag == "body":
            self.kill_tag = None
        if self.kill_tag is not None:
            if tag == self.kill_tag:
                self.kill_depth += 1
            return
        if tag in KILL_TAGS:
            if tag not in VOID_TAGS:
                self.kill_tag, self.kill_depth = tag, 1
            return
        if tag in UNWRAP_TAGS:
            return
        while self.stack and tag in AUTO_CLOSE.get(self.stack[-1], ()):
            self._end(self.stack[-1])
        self._start(tag)
        if tag in VOID_TAGS:
            self._end(tag)

    def handle_startendtag(self, tag, attrs):
        if tag in VOID_TAGS or tag in KILL_TAGS or tag in UNWRAP_TAGS:
            self.handle_starttag(tag, attrs)
        else:
            self.handle_starttag(tag, attrs)
            self.handle_endtag(tag)

    def handle_endtag(self, tag):
        if self.kill_tag is not None:
            if tag == self.kill_tag:
                self.kill_depth -= 1
                if self.kill_depth == 0:
                    self.kill_tag = None
            return
        if tag in UNWRAP_TAGS or tag in VOID_TAGS:
            return
        self._close(tag)

    def _close(self, tag: str):
        if tag not in self.stack:
            return
        while self.stack:
            top = self.stack[-1]
            self._end(top)
            if top == tag:
                break

    def handle_data(self, data):
        if self.kill_tag is None:
            self.pending.append(data)

    def close(self):
        super().close()
        if self.kill_tag == "head":
            self.kill_tag = None
        while self.stack:
            self._end(self.stack[-1])
        self._new_block()


def segment(html: str, stopwords: Optional[StopwordList] = None) -> List[Block]:
    parser = _Segmenter()
    parser.feed(html)
    parser.close()
    blocks = parser.blocks
    if stopwords is not None:
        for b in blocks:
            b.stopword_density = stopword_density(b.text, stopwords)
    return blocks


def classify_context_free(block: Block, params: BoilerplateParams,
                          stopwords: StopwordList) -> str:
    block.stopword_density = stopword_density(block.text, stopwords)
    text = block.text
    length = len(text)
    if block.link_density > params.max_link_density:
        return BAD
    if "\xa9" in text or "&copy" in text:
        return BAD
    if length < params.length_low:
        return BAD if block.link_chars > 0 else SHORT
    if block.stopword_density >= params.stopwords_high:
        return GOOD if length > params.length_high else NEAR_GOOD
    if block.stopword_density >= params.stopwords_low:
        return NEAR_GOOD
    return BAD


def _neighbour(classes: List[str], i: int, step: int, ignore_near_good: bool) -> str:
    i += step
    while 0 <= i < len(classes):
        c = classes[i]
        if c in (GOOD, BAD):
            return c
        if c == NEAR_GOOD and not ignore_near_good:
            return c
        i += step
    return BAD


def _good_within(blocks: List[Block], classes: List[str], i: int, max_distance: int) -> bool:
    distance = 0
    j = i + 1
    while j < len(blocks) and distance <= max_distance:
        if classes[j] == GOOD:
            return True
        distance += len(blocks[j].text)
        j += 1
    return False


def classify_context_sensitive(blocks: List[Block], params: BoilerplateParams) -> List[Block]:
    """Resolve short and near-good blocks; returns new blocks with ``final_class`` set.

    Starts from ``cf_class`` every time, so applying it twice changes nothing.
    """
    classes = [b.cf_class for b in blocks]
    if any(c is None for c in classes):
        raise ValueError("every block needs a cf_class before the context-sensitive pass")

    # The reference implementation (jusText 3.x) also has a pre-pass promoting
    # short headings to near-good, but it inspects classes it has not copied
    # yet and never fires; it is omitted so block verdicts stay identical.
    updates = {}
    for i, c in enumerate(classes):
        if c != SHORT:
            continue
        prev = _neighbour(classes, i, -1, True)
        nxt = _neighbour(classes, i, 1, True)
        if prev == GOOD and nxt == GOOD:
            updates[i] = GOOD
        elif prev == BAD and nxt == BAD:
            updates[i] = BAD
        elif (prev == BAD and _neighbour(classes, i, -1, False) == NEAR_GOOD) or \
                (nxt == BAD and _neighbour(classes, i, 1, False) == NEAR_GOOD):
            updates[i] = GOOD
        else:
            updates[i] = BAD
    for i, c in updates.items():
        classes[i] = c

    for i, c in enumerate(classes):
        if c != NEAR_GOOD:
            continue
        prev = _neighbour(classes, i, -1, True)
        nxt = _neighbour(classes, i, 1, True)
        classes[i] = BAD if (prev, nxt) == (BAD, BAD) else GOOD

    for i, b in enumerate(blocks):
        if b.is_heading and classes[i] == BAD and b.cf_class != BAD and \
                _good_within(blocks, classes, i, params.max_heading_distance):
            classes[i] = GOOD

    return [replace(b, final_class=c) for b, c in zip(blocks, classes)]


def classify(html: str, params: BoilerplateParams, stopwords: StopwordList) -> List[Block]:
    blocks = segment(html)
    for b in blocks:
        b.cf_class = classify_context_free(b, params, stopwords)
    return classify_context_sensitive(blocks, params)


def extract_clean_text(html: str, params: Optional[BoilerplateParams] = None,
                       stopwords: Optional[StopwordList] = None) -> List[str]:
    """One line per good block, whitespace collapsed to single spaces."""
    params = params or BoilerplateParams()
    stopwords = stopwords or StopwordList.bundled("is")
    lines = []
    for b in classify(html, params, stopwords):
        if b.final_class == GOOD:
            line = " ".join(b.text.split())
            if line:
                lines.append(line)
    return lines
