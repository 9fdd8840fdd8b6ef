"""Language identification with a hashed character n-gram softmax classifier.

The bundled model distinguishes Icelandic, English and Danish. Any object
with a ``classify(text) -> LangVerdict`` method can stand in for it; a
fastText ``.bin`` model is wrapped by :class:`FastTextClassifier` when the
``fasttext`` package is installed.
"""

from __future__ import annotations

import io
import logging
import random
import struct
import zlib
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from typing import Dict, Iterable, List, Optional, Protocol, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.optimize import minimize

from .document import Document

log = logging.getLogger(__name__)

MAGIC = b"LIDM"
FORMAT_VERSION = 1
UNDETERMINED = "und"
MIN_SAMPLES_PER_LABEL = 100


@dataclass(frozen=True)
class LangVerdict:
    label: str
    score: float


class LanguageClassifier(Protocol):
    def classify(self, text: str) -> LangVerdict: ...


def char_ngrams(text: str, max_n: int = 3) -> Counter:
    text = " " + " ".join(text.lower().split()) + " "
    grams: Counter = Counter()
    for n in range(1, max_n + 1):
        for i in range(len(text) - n + 1):
            grams[text[i:i + n]] += 1
    return grams


def featurize(texts: Sequence[str], hash_bits: int, max_n: int = 3) -> sparse.csr_matrix:
    """L2-normalised hashed n-gram counts, one row per text."""
    dim = 1 << hash_bits
    mask = dim - 1
    indptr, indices, values = [0], [], []
    for text in texts:
        row: Dict[int, float] = {}
        for gram, count in char_ngrams(text, max_n).items():
            h = zlib.crc32(gram.encode("utf-8")) & mask
            row[h] = row.get(h, 0.0) + count
        cols = sorted(row)
        vals = np.array([row[c] for c in cols], dtype=np.float64)
        norm = np.sqrt((vals ** 2).sum()) or 1.0
        indices.extend(cols)
        values.extend(vals / norm)
        indptr.append(len(indices))
    return sparse.csr_matrix((values, indices, indptr), shape=(len(texts), dim))


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


@dataclass
class LangModel:
    labels: List[str]
    weights: np.ndarray  # (n_labels, 2**hash_bits) float32
    bias: np.ndarray  # (n_labels,) float32
    hash_bits: int = 15
    max_n: int = 3

    def __post_init__(self):
        if len(self.labels) < 2:
            raise ValueError("a language model needs at least two labels")
        self.weights = np.ascontiguousarray(self.weights, dtype="<f4")
        self.bias = np.ascontiguousarray(self.bias, dtype="<f4")
        if self.weights.shape != (len(self.labels), 1 << self.hash_bits):
            raise ValueError(f"weight shape {self.weights.shape} does not match labels/hash space")

    def probabilities(self, texts: Sequence[str]) -> np.ndarray:
        x = featurize(texts, self.hash_bits, self.max_n)
        logits = np.asarray(x @ self.weights.T.astype(np.float64)) + self.bias.astype(np.float64)
        return _softmax(logits)

    def classify(self, text: str) -> LangVerdict:
        if not text or not text.strip():
            return LangVerdict(UNDETERMINED, 0.0)
        p = self.probabilities([text])[0]
        k = int(np.argmax(p))
        return LangVerdict(self.labels[k], float(p[k]))

    # -- persistence ----------------------------------------------------
    def to_bytes(self) -> bytes:
        buf = io.BytesIO()
        buf.write(MAGIC)
        buf.write(struct.pack("<HHBB", FORMAT_VERSION, len(self.labels), self.hash_bits, self.max_n))
        for label in self.labels:
            raw = label.encode("utf-8")
            buf.write(struct.pack("<B", len(raw)) + raw)
        buf.write(self.bias.tobytes())
        buf.write(self.weights.tobytes())
        body = buf.getvalue()
        return body + struct.pack("<I", zlib.crc32(body))

    @classmethod
    def from_bytes(cls, data: bytes) -> "LangModel":
        if data[:4] != MAGIC:
            raise ValueError("not a language model file (bad magic)")
        if len(data) < 14:
            raise ValueError("language model file truncated")
        body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
        if zlib.crc32(body) != crc:
            raise ValueError("language model checksum mismatch")
        version, n_labels, hash_bits, max_n = struct.unpack_from("<HHBB", body, 4)
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {version}")
        pos = 10
        labels = []
        for _ in range(n_labels):
            (n,) = struct.unpack_from("<B", body, pos)
            labels.append(body[pos + 1:pos + 1 + n].decode("utf-8"))
            pos += 1 + n
        dim = 1 << hash_bits
        expected = pos + 4 * n_labels * (dim + 1)
        if len(body) != expected:
            raise ValueError(f"language model payload is {len(body)} bytes, expected {expected}")
        bias = np.frombuffer(body, "<f4", n_labels, pos)
        weights = np.frombuffer(body, "<f4", n_labels * dim, pos + 4 * n_labels).reshape(n_labels, dim)
        return cls(labels, weights.copy(), bias.copy(), hash_bits, max_n)

    def save(self, path: str) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path: str) -> "LangModel":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


def train(samples: Sequence[Tuple[str, str]], hash_bits: int = 15, max_n: int = 3,
          l2: float = 1e-5, max_iter: int = 500, seed: int = 0) -> LangModel:
    """Fit a multinomial logistic regression over hashed n-grams with L-BFGS.

    Needs at least two labels with 100 samples each. The optimiser starts from
    zero and the sample order is shuffled with ``seed``, so identical inputs
    give identical weights.
    """
    counts = Counter(label for _, label in samples)
    if len(counts) < 2:
        raise ValueError(f"need at least two labels, got {sorted(counts)}")
    thin = {k: v for k, v in counts.items() if v < MIN_SAMPLES_PER_LABEL}
    if thin:
        raise ValueError(f"labels with fewer than {MIN_SAMPLES_PER_LABEL} samples: {thin}")

    labels = sorted(counts)
    order = list(range(len(samples)))
    random.Random(seed).shuffle(order)
    texts = [samples[i][0] for i in order]
    y = np.array([labels.index(samples[i][1]) for i in order])
    x = featurize(texts, hash_bits, max_n)
    n, dim = x.shape
    k = len(labels)
    onehot = np.zeros((n, k))
    onehot[np.arange(n), y] = 1.0

    def objective(theta):
        w = theta[:k * dim].reshape(k, dim)
        b = theta[k * dim:]
        p = _softmax(np.asarray(x @ w.T) + b)
        loss = -np.log(p[np.arange(n), y] + 1e-12).mean() + 0.5 * l2 * (w * w).sum()
        g = (p - onehot) / n
        grad_w = np.asarray((x.T @ g).T) + l2 * w
        return loss, np.concatenate([grad_w.ravel(), g.sum(axis=0)])

    res = minimize(objective, np.zeros(k * dim + k), jac=True, method="L-BFGS-B",
                   options={"maxiter": max_iter, "gtol": 1e-6})
    log.info("langid training: %s after %d iterations, loss %.4f", res.message, res.nit, res.fun)
    theta = res.x
    return LangModel(labels, theta[:k * dim].reshape(k, dim), theta[k * dim:], hash_bits, max_n)


def read_seed_dir(directory) -> List[Tuple[str, str]]:
    """``<code>.txt`` files, one sample per non-empty line."""
    samples = []
    for path in sorted(directory.iterdir(), key=lambda p: p.name):
        if path.name.endswith(".txt"):
            label = path.name[:-4]
            samples += [(line.strip(), label) for line in path.read_text("utf-8").splitlines()
                        if line.strip()]
    return samples


def seed_samples() -> List[Tuple[str, str]]:
    return read_seed_dir(resources.files("harvest") / "data" / "seed")


def split_holdout(samples: Sequence[Tuple[str, str]], fraction: float = 0.3,
                  seed: int = 0) -> Tuple[List[Tuple[str, str]], List[Tuple[str, str]]]:
    """Stratified split: the same fraction of every label goes to the held-out side."""
    rng = random.Random(seed)
    train_set, held = [], []
    for label in sorted({lab for _, lab in samples}):
        group = [s for s in samples if s[1] == label]
        rng.shuffle(group)
        cut = int(round(len(group) * fraction))
        held += group[:cut]
        train_set += group[cut:]
    return train_set, held


def accuracy(model: LanguageClassifier, samples: Iterable[Tuple[str, str]]) -> float:
    samples = list(samples)
    hits = sum(model.classify(text).label == label for text, label in samples)
    return hits / len(samples)


_bundled: Optional[LangModel] = None


def bundled_model() -> LangModel:
    global _bundled
    if _bundled is None:
        ref = resources.files("harvest") / "data" / "langid.lidm"
        _bundled = LangModel.from_bytes(ref.read_bytes())
    return _bundled


class FastTextClassifier:
    """Adapter for a pretrained fastText language-ID model (e.g. lid.176.bin)."""

    def __init__(self, path: str):
        import fasttext  # optional dependency

        self.model = fasttext.load_model(path)

    def classify(self, text: str) -> LangVerdict:
        text = " ".join(text.split())
        if not text:
            return LangVerdict(UNDETERMINED, 0.0)
        (label,), (score,) = self.model.predict(text, k=1)
        return LangVerdict(label.replace("__label__", ""), float(min(max(score, 0.0), 1.0)))


def load_classifier(path: Optional[str] = None) -> LanguageClassifier:
    if path is None:
        return bundled_model()
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == MAGIC:
        return LangModel.load(path)
    return FastTextClassifier(path)


def filter_language(doc: Document, model: LanguageClassifier, threshold: float = 0.8,
                    target: str = "is") -> bool:
    """Keep iff the whole document is ``target`` with score >= threshold.

    The verdict is written onto ``doc.lang`` / ``doc.lang_score``.
    """
    verdict = model.classify(doc.text)
    doc.lang = verdict.label
    doc.lang_score = verdict.score
    return verdict.label == target and verdict.score >= threshold
