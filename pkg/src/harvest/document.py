from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional


@dataclass
class Document:
    """Extracted page text, one entry per retained block, in source order."""

    id: str
    url: str
    timestamp: str
    lines: List[str] = field(default_factory=list)
    lang_score: float = 0.0
    lang: Optional[str] = None
    # canonical position of the source record; not part of the corpus output
    source: Optional[Dict] = None

    @staticmethod
    def make_id(digest: str, timestamp: str, url: str) -> str:
        return f"{digest}|{timestamp}|{url}"

    @property
    def text(self) -> str:
        return "\n".join(self.lines)

    def byte_size(self) -> int:
        return len(self.text.encode("utf-8"))

    def to_corpus_dict(self) -> Dict:
        return {"id": self.id, "url": self.url, "timestamp": self.timestamp,
                "lang_score": round(self.lang_score, 6), "text": self.text}

    def to_json(self) -> str:
        d = self.to_corpus_dict()
        d["lines"] = self.lines
        del d["text"]
        if self.lang is not None:
            d["lang"] = self.lang
        if self.source is not None:
            d["source"] = self.source
        return json.dumps(d, ensure_ascii=False)

    @classmethod
    def from_json(cls, line: str) -> "Document":
        d = json.loads(line)
        lines = d["lines"] if "lines" in d else [ln for ln in d.get("text", "").split("\n") if ln]
        return cls(d["id"], d.get("url", ""), d.get("timestamp", ""), lines,
                   float(d.get("lang_score", 0.0)), d.get("lang"), d.get("source"))


def corpus_line(doc: Document) -> str:
    return json.dumps(doc.to_corpus_dict(), ensure_ascii=False)
