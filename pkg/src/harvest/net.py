"""Shared HTTP plumbing: sessions, retry with exponential backoff and full jitter."""

from __future__ import annotations

import logging
import random
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, TypeVar

import requests

log = logging.getLogger(__name__)

T = TypeVar("T")

USER_AGENT = "harvest/0.1 (corpus construction; polite ranged fetches)"


class RetryableError(Exception):
    """A transient failure worth another attempt (5xx, timeouts, bad status)."""


class RetriesExhausted(Exception):
    def __init__(self, attempts: int, last: BaseException):
        self.attempts = attempts
        self.last = last
        super().__init__(f"gave up after {attempts} attempts: {last}")


@dataclass
class RetryPolicy:
    """Exponential backoff: delay before retry k is uniform in [0, base * factor**k]."""

    base: float = 1.0
    factor: float = 2.0
    max_attempts: int = 5
    max_delay: float = 60.0
    seed: Optional[int] = None
    sleep: Callable[[float], None] = time.sleep
    _rng: random.Random = field(init=False, repr=False)
    _lock: threading.Lock = field(init=False, repr=False, default_factory=threading.Lock)

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        self._rng = random.Random(self.seed)

    def delay(self, attempt: int) -> float:
        cap = min(self.max_delay, self.base * self.factor ** attempt)
        with self._lock:
            return self._rng.uniform(0.0, cap)

    def call(self, fn: Callable[[], T], what: str = "request") -> T:
        last: Optional[BaseException] = None
        for attempt in range(self.max_attempts):
            try:
                return fn()
            except (RetryableError, requests.ConnectionError, requests.Timeout) as exc:
                last = exc
                if attempt + 1 == self.max_attempts:
                    break
                wait = self.delay(attempt)
                log.debug("%s failed (%s); retry %d in %.2fs", what, exc, attempt + 1, wait)
                self.sleep(wait)
        raise RetriesExhausted(self.max_attempts, last)


_local = threading.local()


def session() -> requests.Session:
    """One session per thread; requests sessions are not safe to share."""
    s = getattr(_local, "session", None)
    if s is None:
        s = requests.Session()
        s.headers["User-Agent"] = USER_AGENT
        _local.session = s
    return s
