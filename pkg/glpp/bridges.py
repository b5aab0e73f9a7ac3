"""Front-line combinatorics: bridges, timed bridges and their extrema.

Positions are 0-based internally. Edge ``i`` pairs with edge ``i + 1 mod 2L``
and an extremum sits at the left index of its pair; reports convert to the
1-based ``(i, i + 1)`` pair notation through :func:`pair_label`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from glpp.core import DEFAULT_BRIDGE_CAP, CapExceeded, ConfigError, StateSpaceTooLarge

UP = 1
DOWN = -1
_SYMBOL = {UP: "+", DOWN: "-"}
_STEP = {"+": UP, "-": DOWN}

MAX_TIMED_L = 3
MAX_TIMED_CAP = 60
MAX_TIMED_STATES = 250_000


def pair_label(i: int, size: int) -> Tuple[int, int]:
    """1-based label of the cyclic pair starting at 0-based edge ``i``."""
    return (i % size + 1, (i + 1) % size + 1)


@dataclass(frozen=True)
class Bridge:
    """Cyclic ±1 sequence of length 2L summing to zero."""

    steps: Tuple[int, ...]

    def __post_init__(self):
        steps = tuple(int(s) for s in self.steps)
        if not steps or len(steps) % 2:
            raise ConfigError(f"bridge length must be a positive even number, got {len(steps)}")
        if any(s not in (UP, DOWN) for s in steps):
            raise ConfigError(f"bridge steps must be +1 or -1: {steps}")
        if sum(steps) != 0:
            raise ConfigError(f"bridge steps must sum to zero: {steps}")
        object.__setattr__(self, "steps", steps)

    @property
    def L(self) -> int:
        return len(self.steps) // 2

    @property
    def size(self) -> int:
        return len(self.steps)

    @property
    def code(self) -> str:
        return "".join(_SYMBOL[s] for s in self.steps)

    @classmethod
    def from_code(cls, code: str) -> "Bridge":
        try:
            return cls(tuple(_STEP[c] for c in code.strip()))
        except KeyError as err:
            raise ConfigError(f"bridge code may only contain '+' and '-': {code!r}") from err

    @classmethod
    def alternating(cls, L: int) -> "Bridge":
        """(+1, -1, ..., +1, -1): the front line of a freshly started cylinder."""
        return cls((UP, DOWN) * L)

    def rotate(self, k: int) -> "Bridge":
        n = self.size
        return Bridge(tuple(self.steps[(i + k) % n] for i in range(n)))

    def __getitem__(self, i: int) -> int:
        return self.steps[i % self.size]

    def __len__(self) -> int:
        return self.size

    def __str__(self) -> str:
        return self.code


@dataclass(frozen=True)
class ExtremaIndex:
    """Interleaved local maxima (b_i=+1, b_{i+1}=-1) and minima (b_i=-1, b_{i+1}=+1)."""

    maxima: Tuple[int, ...]
    minima: Tuple[int, ...]

    @property
    def k(self) -> int:
        return len(self.maxima)


def local_extrema(b: Bridge) -> ExtremaIndex:
    n = b.size
    maxima = tuple(i for i in range(n) if b[i] == UP and b[i + 1] == DOWN)
    minima = tuple(i for i in range(n) if b[i] == DOWN and b[i + 1] == UP)
    return ExtremaIndex(maxima=maxima, minima=minima)


@dataclass(frozen=True)
class Violation:
    """First broken age constraint, with its 1-based pair."""

    pair: Tuple[int, int]
    rule: str


@dataclass(frozen=True)
class TimedCheck:
    ok: bool
    violation: Optional[Violation] = None

    def __bool__(self) -> bool:
        return self.ok


def validate_timed(b: Bridge, t: Sequence[float]) -> TimedCheck:
    """Check the ordering constraints that make (b, t) a realizable front line."""
    n = b.size
    if len(t) != n:
        raise ConfigError(f"ages have length {len(t)}, bridge has {n} edges")
    if any(a < 0 for a in t):
        i = next(i for i, a in enumerate(t) if a < 0)
        return TimedCheck(False, Violation(pair_label(i, n), "t_i >= 0"))
    for i in range(n):
        j = (i + 1) % n
        bi, bj = b[i], b[j]
        if bi == UP and bj == UP and not t[i] < t[j]:
            return TimedCheck(False, Violation(pair_label(i, n), "t_i < t_{i+1}"))
        if bi == DOWN and bj == DOWN and not t[i] > t[j]:
            return TimedCheck(False, Violation(pair_label(i, n), "t_i > t_{i+1}"))
        if bi == DOWN and bj == UP and t[i] != t[j]:
            return TimedCheck(False, Violation(pair_label(i, n), "t_i = t_{i+1}"))
    return TimedCheck(True)


@dataclass(frozen=True)
class TimedBridge:
    """A bridge together with its edge ages."""

    bridge: Bridge
    ages: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "ages", tuple(self.ages))

    @property
    def L(self) -> int:
        return self.bridge.L

    def check(self) -> TimedCheck:
        return validate_timed(self.bridge, self.ages)

    def to_dict(self) -> Dict[str, object]:
        return {"b": self.bridge.code, "t": list(self.ages)}

    @classmethod
    def from_dict(cls, payload: Dict[str, object]) -> "TimedBridge":
        return cls(Bridge.from_code(str(payload["b"])), tuple(payload["t"]))  # type: ignore[arg-type]

    @classmethod
    def parse(cls, code: str, ages: str) -> "TimedBridge":
        """Build from ``"+-+-"`` and ``"0,1,1,0"``."""
        values = tuple(float(a) if "." in a else int(a) for a in ages.split(",") if a.strip())
        return cls(Bridge.from_code(code), values)

    @property
    def ages_text(self) -> str:
        return ",".join(str(a) for a in self.ages)

    @property
    def key(self) -> Tuple[str, Tuple[float, ...]]:
        return (self.bridge.code, self.ages)


def enumerate_bridges(L: int, cap: int = DEFAULT_BRIDGE_CAP) -> List[Bridge]:
    """All C(2L, L) bridges in lexicographic order of their codes ('+' before '-')."""
    if L < 1:
        raise ConfigError(f"L must be positive, got {L}")
    if L > cap:
        raise CapExceeded(f"L={L} exceeds the bridge enumeration cap {cap}")
    n = 2 * L
    bridges = []
    for ups in itertools.combinations(range(n), L):
        up = set(ups)
        bridges.append(Bridge(tuple(UP if i in up else DOWN for i in range(n))))
    bridges.sort(key=lambda br: br.code)
    return bridges


def count_bridges(L: int) -> int:
    return math.comb(2 * L, L)


def _timed_ages(b: Bridge, t_cap: int) -> Iterator[Tuple[int, ...]]:
    n = b.size
    ages: List[int] = [0] * n

    def admissible(i: int, prev: int) -> range:
        bp, bi = b[i - 1], b[i]
        if bp == UP and bi == UP:
            return range(prev + 1, t_cap + 1)
        if bp == DOWN and bi == DOWN:
            return range(0, prev)
        if bp == DOWN and bi == UP:
            return range(prev, prev + 1)
        return range(0, t_cap + 1)

    def extend(i: int) -> Iterator[Tuple[int, ...]]:
        if i == n:
            bl, bf = b[n - 1], b[0]
            last, first = ages[n - 1], ages[0]
            if bl == UP and bf == UP and not last < first:
                return
            if bl == DOWN and bf == DOWN and not last > first:
                return
            if bl == DOWN and bf == UP and last != first:
                return
            yield tuple(ages)
            return
        for a in admissible(i, ages[i - 1]):
            ages[i] = a
            yield from extend(i + 1)

    for a0 in range(t_cap + 1):
        ages[0] = a0
        yield from extend(1)


def enumerate_timed_truncated(
    L: int, t_cap: int, max_states: int = MAX_TIMED_STATES
) -> List[TimedBridge]:
    """All valid timed bridges with every age at most ``t_cap``.

    Raises:
        StateSpaceTooLarge: when L or the cap are beyond the guard, or the count exceeds ``max_states``.
    """
    if L > MAX_TIMED_L or t_cap > MAX_TIMED_CAP or t_cap < 0:
        raise StateSpaceTooLarge(f"L={L}, T_cap={t_cap} outside the guard (L<={MAX_TIMED_L}, T_cap<={MAX_TIMED_CAP})")
    states: List[TimedBridge] = []
    for b in enumerate_bridges(L):
        for ages in _timed_ages(b, t_cap):
            states.append(TimedBridge(b, ages))
            if len(states) > max_states:
                raise StateSpaceTooLarge(f"more than {max_states} timed bridges for L={L}, T_cap={t_cap}")
    return states


def random_timed(L: int, rng: np.random.Generator, max_start: int = 10, max_step: int = 3) -> TimedBridge:
    """A uniformly chosen bridge with random ages satisfying its ordering constraints.

    Each minimum gets a common age in [0, max_start]; ages then grow by
    steps in [1, max_step] along the up run to its right and along the down
    run to its left.
    """
    n = 2 * L
    ups = set(int(i) for i in rng.choice(n, size=L, replace=False))
    b = Bridge(tuple(UP if i in ups else DOWN for i in range(n)))
    ages = [0] * n
    for i in local_extrema(b).minima:
        j = (i + 1) % n
        ages[i] = ages[j] = int(rng.integers(0, max_start + 1))
        while b[j + 1] == UP:
            ages[(j + 1) % n] = ages[j] + int(rng.integers(1, max_step + 1))
            j = (j + 1) % n
        k = i
        while b[k - 1] == DOWN:
            ages[(k - 1) % n] = ages[k] + int(rng.integers(1, max_step + 1))
            k = (k - 1) % n
    return TimedBridge(b, tuple(ages))
