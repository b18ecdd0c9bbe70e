"""Cached, metered membership queries against a black-box acceptor.

The acceptor is an external command that reads a candidate program on
standard input and exits with status 0 to accept it.  For in-process use a
plain ``str -> bool`` callable can stand in for the command.
"""

from __future__ import annotations

import hashlib
import logging
import os
import shlex
import subprocess
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT_MS = 10_000


class OracleError(RuntimeError):
    pass


class OracleSpawnError(OracleError):
    """The acceptor command could not be started."""


class OracleTimeout(OracleError):
    """A query exceeded the timeout; recorded and treated as a reject."""


def string_key(s: str) -> str:
    return hashlib.sha256(s.encode("utf-8")).hexdigest()


class OracleClient:
    def __init__(self, command: Sequence[str] | str | None = None, *,
                 func: Callable[[str], bool] | None = None,
                 timeout_ms: int = DEFAULT_TIMEOUT_MS,
                 cache_file: str | os.PathLike | None = None,
                 workers: int = 1) -> None:
        if (command is None) == (func is None):
            raise ValueError("give exactly one of command or func")
        if timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")
        if isinstance(command, str):
            command = shlex.split(command)
        self.command = list(command) if command is not None else None
        self.func = func
        self.timeout_ms = timeout_ms
        self.workers = max(1, workers)
        self.cache: dict[str, bool] = {}
        self._persisted: dict[str, bool] = {}
        self.calls_total = 0
        self.calls_external = 0
        self.timeouts = 0
        self._lock = threading.Lock()
        self.cache_file = cache_file
        if cache_file is not None and os.path.exists(cache_file):
            self._load_cache(cache_file)

    @classmethod
    def from_grammar(cls, g, **kwargs) -> OracleClient:
        from .earley import EarleyRecognizer

        return cls(func=EarleyRecognizer(g).accepts, **kwargs)

    def _load_cache(self, path) -> None:
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                digest, _, verdict = line.partition("\t")
                self._persisted[digest] = verdict == "true"

    def save_cache(self, path=None) -> None:
        path = path or self.cache_file
        if path is None:
            return
        with self._lock:
            entries = dict(self._persisted)
            entries.update((string_key(s), v) for s, v in self.cache.items())
        with open(path, "w", encoding="utf-8") as fh:
            for digest in sorted(entries):
                fh.write(f"{digest}\t{'true' if entries[digest] else 'false'}\n")

    def _lookup(self, s: str) -> bool | None:
        if s in self.cache:
            return self.cache[s]
        if self._persisted:
            v = self._persisted.get(string_key(s))
            if v is not None:
                self.cache[s] = v
            return v
        return None

    def _invoke(self, s: str) -> bool:
        if self.func is not None:
            return bool(self.func(s))
        try:
            proc = subprocess.run(self.command, input=s.encode("utf-8"),
                                  stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL,
                                  timeout=self.timeout_ms / 1000)
        except subprocess.TimeoutExpired:
            with self._lock:
                self.timeouts += 1
            log.warning("oracle timeout after %d ms on %r", self.timeout_ms, s[:80])
            return False
        except OSError as exc:
            raise OracleSpawnError(f"cannot run oracle {self.command!r}: {exc}") from exc
        return proc.returncode == 0

    def accepts(self, s: str) -> bool:
        with self._lock:
            self.calls_total += 1
            hit = self._lookup(s)
        if hit is not None:
            return hit
        verdict = self._invoke(s)
        with self._lock:
            if s not in self.cache:
                self.calls_external += 1
                self.cache[s] = verdict
            return self.cache[s]

    def accepts_all(self, strings: Iterable[str]) -> bool:
        """True iff every string is accepted; stops at the first reject."""
        strings = list(strings)
        if self.workers == 1 or len(strings) < 2:
            return all(self.accepts(s) for s in strings)
        with ThreadPoolExecutor(self.workers) as pool:
            return all(pool.map(self.accepts, strings))

    def stats(self) -> dict[str, int]:
        with self._lock:
            return {
                "calls_total": self.calls_total,
                "calls_external": self.calls_external,
                "cache_size": len(self.cache),
                "timeouts": self.timeouts,
            }
