"""Per-cell uniform draws shared by the chain, growth and PCA engines.

Cells are addressed by (row, index). Rows are generated strictly in order
from a single generator, so the value of a cell does not depend on the order
in which cells are requested. Rows below a released floor are dropped and
can no longer be read.
"""

from __future__ import annotations

from typing import Dict

import numpy as np

from glpp.core import ConfigError, NotMaterialized


class UniformField:
    """Lazily generated rows of uniforms, one row per lattice row."""

    def __init__(self, seed: int | np.random.SeedSequence, width: int):
        if width < 1:
            raise ConfigError(f"row width must be positive, got {width}")
        self.width = width
        self._rng = np.random.default_rng(seed)
        self._rows: Dict[int, np.ndarray] = {}
        self._next = 0
        self._floor = 0

    @property
    def floor(self) -> int:
        """Lowest row still readable."""
        return self._floor

    @property
    def stored(self) -> int:
        return len(self._rows)

    def row(self, y: int) -> np.ndarray:
        if y < 0:
            raise NotMaterialized(f"negative row {y}")
        if y < self._floor:
            raise NotMaterialized(f"row {y} was released (rows kept from {self._floor})")
        while self._next <= y:
            values = self._rng.random(self.width)
            if self._next >= self._floor:
                self._rows[self._next] = values
            self._next += 1
        return self._rows[y]

    def at(self, y: int, index: int) -> float:
        return float(self.row(y)[index])

    def grid(self, n_rows: int) -> np.ndarray:
        """Rows 0..n_rows-1 stacked as an (n_rows, width) array."""
        return np.stack([self.row(y) for y in range(n_rows)])

    def cylinder(self, x: int, y: int) -> float:
        """Uniform of cylinder cell (x, y); the L cells of row y have distinct x // 2."""
        return self.at(y, (x % (2 * self.width)) // 2)

    def release(self, below: int) -> None:
        """Drop every row under ``below``; rows not generated yet are drawn and discarded in order."""
        for y in range(self._floor, min(below, self._next)):
            del self._rows[y]
        self._floor = max(self._floor, below)
