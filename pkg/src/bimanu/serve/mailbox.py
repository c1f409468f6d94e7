"""Single-slot latest-wins mailbox: the only state shared between the
server's receiver and its inference worker."""

from __future__ import annotations

import threading


class LatestMailbox:
    """Replace-on-write, take-on-read. A new put overwrites an unprocessed
    value, so at most one observation is ever pending."""

    def __init__(self):
        self._lock = threading.Condition()
        self._value = None
        self._has_value = False
        self._closed = False

    def put(self, value) -> None:
        with self._lock:
            self._value = value
            self._has_value = True
            self._lock.notify()

    def take(self, timeout: float | None = None):
        """Blocks until a value arrives or the mailbox closes; returns None
        on close/timeout."""
        with self._lock:
            while not self._has_value and not self._closed:
                if not self._lock.wait(timeout=timeout):
                    return None
            if self._has_value:
                self._has_value = False
                value = self._value
                self._value = None
                return value
            return None

    def try_take(self):
        with self._lock:
            if not self._has_value:
                return None
            self._has_value = False
            value = self._value
            self._value = None
            return value

    def close(self) -> None:
        with self._lock:
            self._closed = True
            self._lock.notify_all()
