"""Filtering-funnel accounting and vocabulary overlap between two corpora."""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import asdict, dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Dict, Iterable, Iterator, List, Sequence, Tuple, Union

import regex

from .document import Document

log = logging.getLogger(__name__)

DEFAULT_MIN_COUNT = 5
FUNNEL_STAGES = ("tld", "lang+boilerplate", "dedup-document", "dedup-window")
CAVEAT = ("note: token counts depend on the tokenizer and will not reproduce "
          "published unique-token figures numerically")

# a run of letters/marks/digits, or any single other non-space character
_TOKEN = regex.compile(r"[\p{L}\p{M}\p{N}]+|[^\p{L}\p{M}\p{N}\s]")


def tokenize(text: str) -> List[str]:
    return _TOKEN.findall(text)


@dataclass
class Vocab:
    counts: Dict[str, int]
    min_count: int = DEFAULT_MIN_COUNT

    def __len__(self) -> int:
        return len(self.counts)

    def __contains__(self, token: str) -> bool:
        return token in self.counts


def count_tokens(texts: Iterable[str]) -> Counter:
    c: Counter = Counter()
    for text in texts:
        c.update(tokenize(text))
    return c


def vocab(corpus: Iterable[Union[Document, str]], min_count: int = DEFAULT_MIN_COUNT) -> Vocab:
    """Exact token counts over the corpus, thresholded only after counting."""
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    texts = (d.text if isinstance(d, Document) else d for d in corpus)
    counts = count_tokens(texts)
    return Vocab({t: n for t, n in counts.items() if n >= min_count}, min_count)


def merge_counts(shards: Sequence[Counter]) -> Counter:
    """Order-independent merge of per-worker counts."""
    total: Counter = Counter()
    for shard in shards:
        total.update(shard)
    return total


@dataclass(frozen=True)
class VocabReport:
    min_count: int
    unique_a: int
    unique_b: int
    shared: int
    only_a: int
    only_b: int

    def __post_init__(self):
        if self.unique_a != self.shared + self.only_a or self.unique_b != self.shared + self.only_b:
            raise AssertionError(f"inconsistent vocabulary report: {self}")

    def to_dict(self) -> Dict:
        return asdict(self)


def compare_vocab(a: Vocab, b: Vocab) -> VocabReport:
    if a.min_count != b.min_count:
        raise ValueError(f"vocabularies built with different min_count ({a.min_count} vs {b.min_count})")
    ka, kb = a.counts.keys(), b.counts.keys()
    shared = len(ka & kb)
    return VocabReport(a.min_count, len(ka), len(kb), shared, len(ka - kb), len(kb - ka))


def read_corpus(path: str) -> Iterator[str]:
    """Texts from a corpus JSON-lines file."""
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield json.loads(line)["text"]
            except (ValueError, KeyError) as exc:
                raise ValueError(f"{path}:{n}: not a corpus line ({exc})") from None


def render_vocab(report: VocabReport, labels: Tuple[str, str] = ("A", "B")) -> str:
    a, b = labels
    rows = [(f"unique tokens in {a}", report.unique_a), (f"unique tokens in {b}", report.unique_b),
            ("shared", report.shared), (f"only in {a}", report.only_a),
            (f"only in {b}", report.only_b)]
    width = max(len(r[0]) for r in rows)
    out = [f"vocabulary comparison (tokens with count >= {report.min_count})"]
    out += [f"  {name:<{width}}  {value:>12,}" for name, value in rows]
    out.append(CAVEAT)
    return "\n".join(out)


# -- funnel -------------------------------------------------------------------

def two_sig_figs(value: Decimal) -> str:
    """Round to two significant figures without switching to exponent form."""
    if value == 0:
        return "0"
    places = 1 - value.adjusted()
    rounded = value.quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP)
    if rounded.adjusted() != value.adjusted():  # 9.96 -> 10: one fewer decimal
        places -= 1
        rounded = value.quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP)
    if places <= 0:
        return str(int(rounded))
    return f"{rounded:.{places}f}"


@dataclass(frozen=True)
class FunnelStage:
    name: str
    bytes: int
    percent: str


@dataclass
class FunnelReport:
    stages: List[FunnelStage]
    warnings: List[str] = field(default_factory=list)

    @property
    def monotone(self) -> bool:
        return not self.warnings

    def to_dict(self) -> Dict:
        return {"stages": [asdict(s) for s in self.stages], "warnings": list(self.warnings)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def render(self) -> str:
        width = max([len("Filtering step")] + [len(s.name) for s in self.stages])
        lines = [f"{'Filtering step':<{width}}  {'Size':>10}  {'%':>6}"]
        for s in self.stages:
            lines.append(f"{s.name:<{width}}  {human_bytes(s.bytes):>10}  {s.percent + '%':>6}")
        lines += [f"warning: {w}" for w in self.warnings]
        return "\n".join(lines) + "\n"


def funnel(counts: Sequence[Union[int, float, Tuple[str, Union[int, float]]]]) -> FunnelReport:
    """Percent-of-first-stage report; accepts bare numbers or (name, bytes) pairs."""
    pairs = []
    for i, item in enumerate(counts):
        if isinstance(item, tuple):
            pairs.append(item)
        else:
            name = FUNNEL_STAGES[i] if i < len(FUNNEL_STAGES) else f"stage {i}"
            pairs.append((name, item))
    if not pairs or pairs[0][1] <= 0:
        raise ValueError("funnel stage 0 must have a positive byte count")
    base = Decimal(str(pairs[0][1]))
    stages, warnings = [], []
    for i, (name, n) in enumerate(pairs):
        if n < 0:
            raise ValueError(f"negative byte count for stage {name!r}")
        if i and n > pairs[i - 1][1]:
            warnings.append(f"stage {name!r} ({n} bytes) exceeds the previous stage "
                            f"({pairs[i - 1][1]} bytes)")
        stages.append(FunnelStage(name, int(n), two_sig_figs(Decimal(str(n)) * 100 / base)))
    for w in warnings:
        log.warning("funnel not monotone: %s", w)
    return FunnelReport(stages, warnings)


def human_bytes(n: int) -> str:
    if n < 1000:
        return f"{n}B"
    value = float(n)
    for unit in ("KB", "MB", "GB", "TB"):
        value /= 1000
        if value < 1000 or unit == "TB":
            break
    return f"{value:.2g}{unit}" if value < 10 else f"{value:.0f}{unit}"
