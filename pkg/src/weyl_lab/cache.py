"""Content-addressed cache for operator matrices.

Keys hash the operation name and its inputs; entries are written with an
atomic rename so a reader never sees a partial file.
"""

import hashlib
import json
import logging
import os

from .io import atomic_write, operator_bytes, operator_from_bytes

log = logging.getLogger(__name__)
CACHE_ENV = "WEYL_LAB_CACHE"


def cache_key(operation, **inputs):
    payload = json.dumps({"operation": operation, "inputs": inputs}, sort_keys=True, default=repr)
    return hashlib.sha256(payload.encode()).hexdigest()


class OperatorCache:
    """Directory of ``<key>.wlop`` operator containers."""

    def __init__(self, directory, enabled=True):
        self.directory = os.fspath(directory)
        self.enabled = enabled
        self.hits = 0
        self.misses = 0

    def path(self, key):
        return os.path.join(self.directory, f"{key}.wlop")

    def get(self, key):
        if not self.enabled:
            return None
        p = self.path(key)
        if not os.path.exists(p):
            self.misses += 1
            return None
        try:
            with open(p, "rb") as fh:
                op = operator_from_bytes(fh.read())
        except Exception as exc:  # corrupt entry: drop it and recompute
            log.warning("discarding corrupt cache entry %s: %s", p, exc)
            os.unlink(p)
            self.misses += 1
            return None
        self.hits += 1
        return op

    def put(self, key, op):
        if self.enabled:
            atomic_write(self.path(key), operator_bytes(op))
        return op

    def fetch(self, key, compute):
        """Cached value for ``key`` or ``compute()`` stored under it."""
        op = self.get(key)
        return op if op is not None else self.put(key, compute())


def resolve_cache_dir(flag=None, configured=None, default=".weyl_lab_cache"):
    """Flag, then environment variable, then config file, then default."""
    return flag or os.environ.get(CACHE_ENV) or configured or default
