"""Utility functions shared by the simulation and CLI layers."""
from __future__ import annotations

import hashlib
import os
from typing import Iterable, List, Optional

import numpy as np
from loguru import logger

from glpp.core import SEED_ENV_VAR


def warn_once(msg: str) -> None:
    """Emit a loguru warning only once per process tree."""
    key = "GLPP_WARNED_" + hashlib.md5(msg.encode()).hexdigest()[:12]
    if not os.environ.get(key):
        os.environ[key] = "1"
        logger.warning(msg)


def resolve_seed(seed: Optional[int]) -> int:
    """Return `seed`, else the GLPP_SEED environment value, else 0."""
    if seed is not None:
        return int(seed)
    env = os.environ.get(SEED_ENV_VAR)
    if env:
        try:
            return int(env)
        except ValueError:
            logger.warning(f"Ignoring non-integer {SEED_ENV_VAR}={env!r}")
    return 0


def make_rng(seed: int | np.random.SeedSequence) -> np.random.Generator:
    return np.random.default_rng(seed)


def spawn_seeds(seed: int, n: int) -> List[np.random.SeedSequence]:
    """Independent child seed sequences for replica runs."""
    return np.random.SeedSequence(seed).spawn(n)


class UniformStream:
    """Block-buffered uniform draws from one generator."""

    def __init__(self, rng: np.random.Generator, block: int = 1 << 16):
        self._rng = rng
        self._block = block
        self._buf: List[float] = []
        self._pos = 0

    def next(self) -> float:
        if self._pos >= len(self._buf):
            self._buf = self._rng.random(self._block).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u


def batch_means(values: Iterable[float], n_batches: int = 50) -> tuple[float, float]:
    """Mean and batch-means standard error of a correlated series."""
    arr = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=float)
    if arr.size < 2 * n_batches:
        return float(arr.mean()) if arr.size else float("nan"), float("nan")
    usable = arr.size - arr.size % n_batches
    means = arr[:usable].reshape(n_batches, -1).mean(axis=1)
    return float(arr.mean()), float(means.std(ddof=1) / np.sqrt(n_batches))
