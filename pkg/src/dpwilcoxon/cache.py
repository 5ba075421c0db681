"""On-disk cache of reference distributions.

Each entry is one ``.npz`` file holding the sorted draws and a JSON header
with the key ``(n, epsilon, c, seed, noise_rows)``, the cache format version
and the package version. Files are written to a temporary name and renamed
into place; a per-key file lock ensures that concurrent requests for the same
key generate it once.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import warnings
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np
from filelock import FileLock

from . import __version__
from .inference import ReferenceDistribution, simulate_reference

FORMAT_VERSION = 1

log = logging.getLogger(__name__)


class ReferenceKey(NamedTuple):
    n: int
    epsilon: float
    c: int
    seed: int
    noise_rows: int

    @classmethod
    def of(cls, ref: ReferenceDistribution) -> "ReferenceKey":
        return cls(ref.n, ref.epsilon, ref.c, ref.seed, ref.noise_rows)

    def header(self) -> dict:
        return {
            "n": int(self.n),
            "epsilon": repr(float(self.epsilon)),
            "c": int(self.c),
            "seed": int(self.seed),
            "noise_rows": int(self.noise_rows),
            "format_version": FORMAT_VERSION,
            "code_version": __version__,
        }

    def filename(self) -> str:
        digest = hashlib.sha256(json.dumps(self.header(), sort_keys=True).encode()).hexdigest()[:24]
        return f"ref-v{FORMAT_VERSION}-n{self.n}-c{self.c}-{digest}.npz"


def cache_reference(ref: ReferenceDistribution, directory) -> Path:
    """Write ``ref`` atomically; returns the final path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    key = ReferenceKey.of(ref)
    path = directory / key.filename()
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".npz")
    try:
        with os.fdopen(fd, "wb") as fh:
            np.savez(fh, draws=ref.draws, header=np.array(json.dumps(key.header(), sort_keys=True)))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def load_reference(key: ReferenceKey, directory) -> ReferenceDistribution | None:
    """Return the cached reference for ``key``, or None on a miss.

    A file that exists but cannot be read or fails validation is reported
    with a warning and treated as a miss.
    """
    path = Path(directory) / key.filename()
    if not path.exists():
        return None
    try:
        with np.load(path, allow_pickle=False) as data:
            header = json.loads(str(data["header"]))
            draws = np.array(data["draws"], dtype=np.float64)
    except Exception as exc:  # corrupt or truncated file
        warnings.warn(f"ignoring unreadable reference cache file {path.name}: {exc}", RuntimeWarning)
        return None
    if header != key.header():
        warnings.warn(f"reference cache file {path.name} has a mismatched header; ignoring", RuntimeWarning)
        return None
    if draws.shape != (key.c,) or not np.all(draws[1:] >= draws[:-1]):
        warnings.warn(f"reference cache file {path.name} failed validation; ignoring", RuntimeWarning)
        return None
    return ReferenceDistribution(key.n, key.epsilon, key.c, key.seed, draws, key.noise_rows)


Builder = Callable[[ReferenceKey], ReferenceDistribution]


def _build(key: ReferenceKey) -> ReferenceDistribution:
    return simulate_reference(key.n, key.epsilon, key.c, key.seed, noise_rows=key.noise_rows)


class ReferenceCache:
    """Get-or-create access to a cache directory."""

    def __init__(self, directory, builder: Builder = _build, timeout: float = -1):
        self.directory = Path(directory)
        self.builder = builder
        self.timeout = timeout

    def get(self, key: ReferenceKey) -> ReferenceDistribution:
        self.directory.mkdir(parents=True, exist_ok=True)
        lock = FileLock(str(self.directory / (key.filename() + ".lock")), timeout=self.timeout)
        with lock:
            ref = load_reference(key, self.directory)
            if ref is None:
                log.info("generating reference n=%d eps=%r c=%d", key.n, key.epsilon, key.c)
                ref = self.builder(key)
                cache_reference(ref, self.directory)
        return ref

    def provider(self, n: int, epsilon: float, c: int, seed: int, noise_rows: int) -> ReferenceDistribution:
        """Signature-compatible with the experiments ``ref_provider`` hook."""
        return self.get(ReferenceKey(int(n), float(epsilon), int(c), int(seed), int(noise_rows)))

    def prune(self) -> int:
        """Delete entries written under other format versions; returns the count."""
        removed = 0
        for path in self.directory.glob("ref-v*.npz"):
            if not path.name.startswith(f"ref-v{FORMAT_VERSION}-"):
                path.unlink()
                removed += 1
        return removed
