"""Arrival-time fields on the cylinder and on the quarter-plane.

Cylinder cells (x, y) with x + y even and x taken mod 2L: row 0 arrives at
time 0 and every other cell arrives at the later of its two predecessors
(x - 1, y - 1), (x + 1, y - 1) plus a waiting time drawn from the law
indexed by their arrival gap. Row ``y`` is stored as an array of length L
where index k holds the cell x = 2k + (y mod 2).

Quarter-plane cells (x, y) with 0 <= x, y <= N: the boundary row and column
arrive at time 0; an interior cell waits after (x - 1, y) and (x, y - 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from glpp.bridges import DOWN, UP, Bridge, TimedBridge
from glpp.chain import SharedDrawDecider, iterate_chain
from glpp.core import BoxExhausted, ConfigError, Geometry, NotMaterialized, ParityViolation
from glpp.draws import UniformField
from glpp.measures import (
    MeasureFamily,
    check_cond_subadd,
    is_constant_family,
    is_geometric_like,
    sample_by_gap,
)
from glpp.utils import resolve_seed, spawn_seeds, warn_once

SHAPE_RATIO_RANGE = (0.25, 4.0)


@dataclass
class GrowthField:
    """Materialized arrival times τ.

    Attributes:
        geometry: cylinder or quarter-plane.
        size: L for the cylinder, N for the quarter-plane box.
        family: label of the waiting-time family.
        clock: every cell with τ <= clock is materialized.
        rows: kept cylinder rows, ``rows[k][j]`` is τ of x = 2j + y % 2 in row y = offset + k.
        grid: quarter-plane array, ``grid[y, x]`` is τ of (x, y), NaN where not materialized.
        offset: index of the first kept cylinder row; rows below it were evicted.
    """

    geometry: Geometry
    size: int
    family: str
    clock: float
    seed: Optional[int] = None
    rows: List[np.ndarray] = field(default_factory=list, repr=False)
    grid: Optional[np.ndarray] = field(default=None, repr=False)
    offset: int = 0
    _stacked: Optional[np.ndarray] = field(default=None, init=False, repr=False)
    _stacked_key: Tuple[int, int] = field(default=(-1, -1), init=False, repr=False)

    def stacked_rows(self) -> np.ndarray:
        """Kept cylinder rows as one (rows, L) array, rebuilt only when rows were added or evicted."""
        key = (self.offset, len(self.rows))
        if self._stacked is None or self._stacked_key != key:
            self._stacked = np.stack(self.rows)
            self._stacked_key = key
        return self._stacked

    @property
    def n_rows(self) -> int:
        """Rows grown so far, evicted ones included."""
        return self.offset + len(self.rows) if self.geometry is Geometry.CYLINDER else self.size + 1

    def tau(self, x: int, y: int) -> int:
        if self.geometry is Geometry.QUARTER_PLANE:
            if not (0 <= x <= self.size and 0 <= y <= self.size):
                raise NotMaterialized(f"cell ({x}, {y}) lies outside the {self.size}x{self.size} box")
            value = self.grid[y, x]
            if np.isnan(value):
                raise NotMaterialized(f"cell ({x}, {y}) arrives after t={self.clock}")
            return int(value)
        if (x + y) % 2:
            raise ParityViolation(f"cylinder cell ({x}, {y}) has odd parity")
        if y < self.offset:
            raise NotMaterialized(f"row {y} was evicted (rows kept from {self.offset})")
        if y >= self.n_rows:
            raise NotMaterialized(f"row {y} not materialized ({self.n_rows} rows)")
        return int(self.rows[y - self.offset][(x % (2 * self.size)) // 2])

    def diagonal_ratio(self) -> Optional[float]:
        """τ(m, m) / m at the farthest materialized diagonal cell of the quarter-plane, None at the origin."""
        if self.geometry is not Geometry.QUARTER_PLANE:
            raise ConfigError("diagonal ratios are taken on the quarter-plane")
        m = int(np.flatnonzero(~np.isnan(np.diagonal(self.grid)))[-1])
        return float(self.grid[m, m]) / m if m > 0 else None

    def evict_below(self, y: int) -> None:
        """Forget cylinder rows under ``y``."""
        drop = min(y, self.n_rows - 1) - self.offset
        if drop > 0:
            del self.rows[:drop]
            self.offset += drop

    def to_frame(self) -> pd.DataFrame:
        """Long table (x, y, tau) of every materialized cell."""
        if self.geometry is Geometry.QUARTER_PLANE:
            ys, xs = np.indices(self.grid.shape)
            known = ~np.isnan(self.grid)
            return pd.DataFrame({"x": xs[known], "y": ys[known], "tau": self.grid[known].astype(np.int64)})
        frames = []
        for k, row in enumerate(self.rows):
            y = self.offset + k
            xs = 2 * np.arange(self.size) + y % 2
            frames.append(pd.DataFrame({"x": xs, "y": y, "tau": row}))
        return pd.concat(frames, ignore_index=True)

    @classmethod
    def cylinder_from_cells(cls, L: int, cells: dict, clock: float, family: str = "injected") -> "GrowthField":
        """Build a cylinder field from explicit {(x, y): τ} values, rows 1.. as given."""
        n_rows = 1 + max(y for _, y in cells)
        rows = [np.zeros(L, dtype=np.int64)]
        for y in range(1, n_rows):
            row = np.empty(L, dtype=np.int64)
            for k in range(L):
                x = 2 * k + y % 2
                if (x, y) not in cells:
                    raise NotMaterialized(f"missing cell ({x}, {y})")
                row[k] = cells[(x, y)]
            rows.append(row)
        return cls(Geometry.CYLINDER, L, family, clock, rows=rows)


def _next_cylinder_row(prev: np.ndarray, y: int, fam: MeasureFamily, us: np.ndarray) -> np.ndarray:
    if y % 2:
        left, right = prev, np.roll(prev, -1)
    else:
        left, right = np.roll(prev, 1), prev
    return np.maximum(left, right) + sample_by_gap(fam, np.abs(left - right), us)


class CylinderGrowth:
    """Resumable cylinder growth that can evict rows the front has left behind.

    ``advance`` grows rows until every cell with τ <= the horizon is known.
    With ``band`` set, ``evict(n)`` drops the rows lying more than ``band``
    rows under the lowest column top at time n, together with their
    uniforms, so front lines stay available from time n on.
    """

    def __init__(
        self,
        L: int,
        fam: MeasureFamily,
        seed: Optional[int] = None,
        draws: Optional[UniformField] = None,
        band: Optional[int] = None,
    ):
        if L < 1:
            raise ConfigError(f"L must be positive, got {L}")
        if band is not None and band < 2:
            raise ConfigError(f"eviction band must be at least 2 rows, got {band}")
        self.fam = fam
        self.band = band
        self.seed = resolve_seed(seed) if draws is None else seed
        self.draws = draws or UniformField(self.seed, L)
        self.field = GrowthField(Geometry.CYLINDER, L, fam.label, 0.0, seed=self.seed, rows=[np.zeros(L, dtype=np.int64)])
        self._grown = False

    def advance(self, until_time: float) -> GrowthField:
        if until_time < 0:
            raise ConfigError("until_time must be non-negative")
        if self._grown and until_time < self.field.clock:
            raise ConfigError(f"growth is already at t={self.field.clock}, cannot go back to {until_time}")
        rows = self.field.rows
        while rows[-1].min() <= until_time:
            y = self.field.n_rows
            rows.append(_next_cylinder_row(rows[-1], y, self.fam, self.draws.row(y)))
        self.field.clock = until_time
        self._grown = True
        return self.field

    def evict(self, n: float) -> int:
        """Drop rows no front line at time >= n can reach; returns the new first kept row."""
        if self.band is None:
            return self.field.offset
        floor = int(_column_tops(self.field, n).min()) - self.band
        if floor > self.field.offset:
            self.field.evict_below(floor)
            self.draws.release(self.field.offset)
        return self.field.offset


def grow_cylinder(
    L: int,
    fam: MeasureFamily,
    until_time: float,
    seed: Optional[int] = None,
    draws: Optional[UniformField] = None,
    band: Optional[int] = None,
) -> GrowthField:
    """Grow the cylinder of circumference 2L until every cell with τ <= until_time is known.

    Args:
        L: half the circumference.
        fam: discrete waiting-time family.
        until_time: materialization horizon.
        seed: seed for the per-cell uniforms (ignored when ``draws`` is given).
        draws: shared per-cell uniforms, row y feeding cylinder row y.
        band: when set, keep only the rows within ``band`` of the front at ``until_time``.

    Returns:
        The field; its last row lies entirely after ``until_time``.
    """
    growth = CylinderGrowth(L, fam, seed=seed, draws=draws, band=band)
    field_ = growth.advance(until_time)
    growth.evict(until_time)
    logger.debug(f"grow_cylinder L={L} until={until_time}: {field_.n_rows} rows, kept from {field_.offset}")
    return field_


def _column_tops(field: GrowthField, n: float) -> np.ndarray:
    """Highest arrived row of every column at time n, searched among the kept rows.

    Odd columns sit at row -1 until their first cell arrives.
    """
    stacked = field.stacked_rows()
    tops = np.empty(2 * field.size, dtype=np.int64)
    for x in range(2 * field.size):
        start = (x - field.offset) % 2
        column = stacked[start::2, x // 2]
        arrived = int(np.searchsorted(column, n, side="right"))
        if arrived == 0 and field.offset > 0:
            raise NotMaterialized(f"column {x} at time {n} lies in evicted rows (kept from {field.offset})")
        tops[x] = field.offset + start + 2 * (arrived - 1)
    return tops


def front_line(field: GrowthField, n: int) -> TimedBridge:
    """Front line at time n with ages t_i = n - τ(arrived face adjacent to edge i).

    Edge i separates columns i and i + 1; it steps down (b_i = +1) when
    column i is ahead.
    """
    if field.geometry is not Geometry.CYLINDER:
        raise ConfigError("front lines are defined on the cylinder")
    if n < 0 or n > field.clock:
        raise NotMaterialized(f"time {n} outside the materialized range [0, {field.clock}]")
    size = 2 * field.size
    tops = _column_tops(field, n)
    steps, ages = [], []
    for i in range(size):
        j = (i + 1) % size
        if tops[i] > tops[j]:
            steps.append(UP)
            ages.append(int(n - field.tau(i, int(tops[i]))))
        else:
            steps.append(DOWN)
            ages.append(int(n - field.tau(j, int(tops[j]))))
    return TimedBridge(Bridge(tuple(steps)), tuple(ages))


def edge_residence_times(field: GrowthField, edge: int = 0) -> np.ndarray:
    """Successive times ζ the front spends on each position of one edge track.

    The faces adjacent to edge i alternate between columns i and i + 1, one
    per row; ζ is the difference of consecutive arrival times along them,
    over the kept rows.
    """
    if field.geometry is not Geometry.CYLINDER:
        raise ConfigError("edge tracks are defined on the cylinder")
    if len(field.rows) < 2:
        raise NotMaterialized("need at least two rows")
    size = 2 * field.size
    i = edge % size
    taus = np.array(
        [field.tau(i if i % 2 == y % 2 else (i + 1) % size, y) for y in range(field.offset, field.n_rows)],
        dtype=np.int64,
    )
    return np.diff(taus)


def first_chain_mismatch(
    L: int,
    fam: MeasureFamily,
    steps: int,
    seed: Optional[int] = None,
    chunk: int = 256,
    band: int = 4,
) -> Optional[int]:
    """Run the front-line chain and the growth on the same per-cell uniforms.

    Growth advances ``chunk`` time units ahead of the chain and evicts rows
    behind the front as the chain passes them.

    Returns:
        The first time n <= steps at which the chain state differs from the
        front line of the growth field, or None when they agree throughout.
    """
    if chunk < 1:
        raise ConfigError(f"chunk must be positive, got {chunk}")
    seed = resolve_seed(seed)
    draws = UniformField(seed, L)
    growth = CylinderGrowth(L, fam, draws=draws, seed=seed, band=band)
    decider = SharedDrawDecider(fam, draws, L)
    for n, state in enumerate(iterate_chain(fam, decider, steps, L=L)):
        if n == 0 or n > growth.field.clock:
            if n > 0:
                growth.evict(n - 1)
            growth.advance(min(n + chunk, steps))
        if state.timed != front_line(growth.field, n):
            logger.debug(f"chain and growth differ at n={n}: {state.timed.to_dict()}")
            return n
    return None


def phi_map(x: int, y: int) -> Tuple[int, int]:
    """Space-time point (x, y) to the cylinder cell (2x + y, y)."""
    return (2 * x + y, y)


def phi_inv(cell: Tuple[int, int]) -> Tuple[int, int]:
    cx, cy = cell
    if (cx + cy) % 2:
        raise ParityViolation(f"cell {cell} has odd parity")
    return ((cx - cy) // 2, cy)


# =============================================================================
# Quarter-plane
# =============================================================================


def _grow_box(fam: MeasureFamily, uniforms: np.ndarray, until_time: Optional[float] = None) -> Tuple[np.ndarray, int]:
    """τ over a box with zero boundary row and column, one anti-diagonal at a time.

    With ``until_time`` growth stops after the first anti-diagonal whose
    interior cells all arrive later; every cell beyond it arrives later too.

    Returns:
        τ, zero past the last computed anti-diagonal, and that diagonal's index.
    """
    height, width = uniforms.shape
    tau = np.zeros((height, width), dtype=np.int64)
    last = height + width - 2
    for d in range(2, height + width - 1):
        ys = np.arange(max(1, d - width + 1), min(height - 1, d - 1) + 1)
        if ys.size == 0:
            continue
        xs = d - ys
        below, left = tau[ys - 1, xs], tau[ys, xs - 1]
        gaps = np.abs(below - left)
        tau[ys, xs] = np.maximum(below, left) + sample_by_gap(fam, gaps, uniforms[ys, xs])
        if until_time is not None and (tau[ys, xs] > until_time).all():
            last = d
            break
    return tau, last


def grow_quarter_plane(
    N: int, fam: MeasureFamily, until_time: Optional[float] = None, seed: Optional[int] = None
) -> GrowthField:
    """Grow the (N + 1) x (N + 1) box; ``until_time=None`` keeps the whole box.

    With a horizon only the cells with τ <= until_time are kept; the others
    are NaN in the grid and raise NotMaterialized on lookup.

    Raises:
        BoxExhausted: a cell of the last row or column arrived by ``until_time``.
    """
    if N < 1:
        raise ConfigError(f"box size must be positive, got {N}")
    if until_time is not None and until_time < 0:
        raise ConfigError("until_time must be non-negative")
    seed = resolve_seed(seed)
    uniforms = UniformField(seed, N + 1).grid(N + 1)
    tau, last = _grow_box(fam, uniforms, until_time)
    grid = tau.astype(float)
    if until_time is None:
        clock = float(tau.max())
    else:
        clock = until_time
        ys, xs = np.indices(grid.shape)
        boundary = (xs == 0) | (ys == 0)
        grid[~boundary & ((xs + ys > last) | (tau > until_time))] = np.nan
        if (grid[N, 1:] <= until_time).any() or (grid[1:, N] <= until_time).any():
            raise BoxExhausted(f"front left the {N}x{N} box before t={until_time}")
    logger.debug(f"grow_quarter_plane N={N} seed={seed}: {int(np.count_nonzero(~np.isnan(grid)))} cells kept")
    return GrowthField(Geometry.QUARTER_PLANE, N, fam.label, clock, seed=seed, grid=grid)


def geometric_shape(x, y, p: float, zero_support: bool = False):
    """Limit shape of classical LPP with geometric(p) weights.

    Weights on {1, 2, ...} give (x + y + 2√((1-p)xy)) / p; weights on
    {0, 1, ...} give ((1-p)(x + y) + 2√((1-p)xy)) / p.
    """
    q = 1.0 - p
    linear = q if zero_support else 1.0
    return (linear * (np.asarray(x) + np.asarray(y)) + 2.0 * np.sqrt(q * np.asarray(x) * np.asarray(y))) / p


def exponential_shape(x, y, lam: float = 1.0):
    return (np.sqrt(x) + np.sqrt(y)) ** 2 / lam


@dataclass
class ShapeProfile:
    """Front of {τ <= n} as a staircase, scaled by n."""

    n: float
    points: pd.DataFrame
    reference: Optional[str] = None
    deviation: Optional[float] = None


def shape_profile(field: GrowthField, n: float, fam: Optional[MeasureFamily] = None) -> ShapeProfile:
    """Normalized front polyline; with a classical geometric family, its sup deviation from the limit shape.

    The deviation is max |shape(x, y) / n - 1| over front points with
    y / x in [1/4, 4]; shape is 1-homogeneous so this is the relative
    radial distance to the reference curve.
    """
    if field.geometry is not Geometry.QUARTER_PLANE:
        raise ConfigError("shape profiles are computed on the quarter-plane")
    if n > field.clock:
        raise NotMaterialized(f"profile time {n} is past the growth horizon {field.clock}")
    below = field.grid <= n
    # columns are monotone in y, so the count of arrived cells gives the height
    heights = below.sum(axis=0) - 1
    xs = np.arange(field.size + 1)
    scale = n if n > 0 else 1.0
    reached = heights >= 0
    points = pd.DataFrame(
        {
            "x": xs[reached],
            "y": heights[reached],
            "x_scaled": xs[reached] / scale,
            "y_scaled": heights[reached] / scale,
        }
    )
    profile = ShapeProfile(n=n, points=points)
    if fam is not None and n > 0 and is_constant_family(fam) and is_geometric_like(fam.at(0)):
        p = fam.at(0).mass(1)
        keep = (xs > 0) & (heights > 0)
        ratio = np.where(keep, heights / np.maximum(xs, 1), 0.0)
        keep &= (ratio >= SHAPE_RATIO_RANGE[0]) & (ratio <= SHAPE_RATIO_RANGE[1])
        if keep.any():
            values = geometric_shape(xs[keep], heights[keep], p) / n
            profile.reference = f"geometric:{p:g}"
            profile.deviation = float(np.max(np.abs(values - 1.0)))
    return profile


@dataclass(frozen=True)
class SuperadditivityReport:
    replicas: int
    violations: int
    mean_slack: float
    min_slack: float

    @property
    def violation_fraction(self) -> float:
        return self.violations / self.replicas if self.replicas else math.nan


def superadditivity_probe(
    fam: MeasureFamily,
    z1: Tuple[int, int],
    z2: Tuple[int, int],
    replicas: int = 100,
    seed: Optional[int] = None,
) -> SuperadditivityReport:
    """Pathwise comparison of τ(z₁ + z₂) with τ(z₁) + τ'(z₂).

    τ' is regrown on the box whose boundary passes through z₁, reusing every
    cell's uniform, so waiting times are coupled through the inverse cdf.
    A negative slack τ(z₁ + z₂) - τ(z₁) - τ'(z₂) is a violation.
    """
    cert = check_cond_subadd(fam, delta_max=10, n_max=10)
    if not cert.passed:
        warn_once(f"{fam.label}: subadditivity condition fails on the grid; violations may occur")
    (x1, y1), (x2, y2) = z1, z2
    if min(x1, y1, x2, y2) < 0:
        raise ConfigError("coupling points must have non-negative coordinates")
    width, height = x1 + x2 + 1, y1 + y2 + 1
    slacks = np.empty(replicas, dtype=np.int64)
    for r, child in enumerate(spawn_seeds(resolve_seed(seed), replicas)):
        uniforms = UniformField(child, width).grid(height)
        tau, _ = _grow_box(fam, uniforms)
        shifted, _ = _grow_box(fam, uniforms[y1:, x1:])
        slacks[r] = tau[y1 + y2, x1 + x2] - tau[y1, x1] - shifted[y2, x2]
    return SuperadditivityReport(
        replicas=replicas,
        violations=int((slacks < 0).sum()),
        mean_slack=float(slacks.mean()),
        min_slack=float(slacks.min()),
    )
