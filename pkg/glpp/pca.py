"""The cellular-automaton view of the growth: one row of L values updated at a time.

Row y + 1 is drawn from row y with the local rule
T(a, b; c) = μ_{|b-a|}(c - max(a, b)). For an integrable family the pair of
one-step kernels M⁻(s; u) ∝ g(u - s) α^{u-s}, M⁺(u; t) ∝ g(u - t) α^{t-u}
(g = √μ₀) gives an invariant zigzag measure, and the checks below evaluate
the local identities that characterize it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from glpp.bridges import DOWN, UP, Bridge, TimedBridge, local_extrema
from glpp.draws import UniformField
from glpp.exact import SqrtProfile
from glpp.growth import CylinderGrowth
from glpp.measures import DiscreteMeasure, IntegrableFamily, MeasureFamily, make_integrable_family, sample_by_gap
from glpp.utils import resolve_seed

STABLE_TOL = 1e-10
BELYAEV_TOL = 1e-12


@dataclass(frozen=True)
class IdentityReport:
    """Largest relative residual of an identity over a finite grid."""

    identity: str
    grid: Dict[str, int]
    max_residual: float
    witness: Optional[Dict[str, int]]
    tolerance: float
    extra: Dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tolerance

    def to_dict(self) -> Dict[str, object]:
        return {
            "identity": self.identity,
            "grid": self.grid,
            "max_residual": self.max_residual,
            "witness": self.witness,
            "passed": self.passed,
            **self.extra,
        }


def _relative(lhs: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    scale = np.maximum(np.abs(lhs), np.abs(rhs))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(scale > 0, np.abs(lhs - rhs) / scale, 0.0)


class PcaTransition:
    """T(a, b; c) for a measure family."""

    def __init__(self, fam: MeasureFamily):
        self.fam = fam

    def __call__(self, a: int, b: int, c: int) -> float:
        top = max(a, b)
        if c <= top:
            return 0.0
        return self.fam.at(abs(b - a)).mass(c - top)

    def tensor(self, ab_max: int, c_max: int) -> np.ndarray:
        """T[a, b, c] for 0 <= a, b <= ab_max and 0 <= c <= c_max."""
        out = np.zeros((ab_max + 1, ab_max + 1, c_max + 1))
        c = np.arange(c_max + 1)
        for a in range(ab_max + 1):
            for b in range(ab_max + 1):
                top = max(a, b)
                out[a, b] = np.where(c > top, self.fam.at(abs(b - a)).mass(np.maximum(c - top, 0)), 0.0)
        return out

    def stochasticity_residual(self, ab_max: int) -> float:
        """max |Σ_c T(a, b; c) - 1| over the grid."""
        worst = 0.0
        for a in range(ab_max + 1):
            for b in range(ab_max + 1):
                law = self.fam.at(abs(b - a))
                total = math.fsum(law.pmf) + law.remainder
                worst = max(worst, abs(total - 1.0))
        return worst


class IntegrableKernels:
    """M⁻, M⁺ and their products, indexed by differences only."""

    def __init__(self, mu0: DiscreteMeasure | SqrtProfile, alpha: float = 1.0):
        self.profile = mu0 if isinstance(mu0, SqrtProfile) else SqrtProfile(mu0)
        self.alpha = float(alpha)
        self.c_minus = self.profile.total_alpha(self.alpha)
        self.c_plus = self.profile.total_alpha(1.0 / self.alpha)

    def minus(self, s: int, u: int) -> float:
        d = u - s
        return self.profile.g(d) * self.alpha**d / self.c_minus if d > 0 else 0.0

    def plus(self, u: int, t: int) -> float:
        d = u - t
        return self.profile.g(d) * self.alpha**-d / self.c_plus if d > 0 else 0.0

    def product_mm(self, s: int, t: int) -> float:
        """(M⁻M⁺)(s; t) = Σ_{u > max(s, t)} M⁻(s; u) M⁺(u; t)."""
        top = max(s, t)
        return self.alpha ** (t - s) * self.profile.pair_sum(top - s, top - t) / (self.c_minus * self.c_plus)

    def product_pm(self, s: int, t: int) -> float:
        """(M⁺M⁻)(s; t) = Σ_{u < min(s, t)} M⁺(s; u) M⁻(u; t)."""
        low = min(s, t)
        return self.alpha ** (t - s) * self.profile.pair_sum(s - low, t - low) / (self.c_minus * self.c_plus)


def stable_identity_sides(
    kernels: IntegrableKernels, transition: PcaTransition, s: int, t: int, u: int
) -> Tuple[float, float]:
    """((M⁻M⁺)(s; t) T(s, t; u), M⁻(s; u) M⁺(u; t))."""
    return kernels.product_mm(s, t) * transition(s, t, u), kernels.minus(s, u) * kernels.plus(u, t)


def check_stable_identity(
    mu0: DiscreteMeasure, st_max: int = 10, u_max: int = 30, alpha: float = 1.0
) -> IdentityReport:
    """Residual of (M⁻M⁺)(s; t) T(s, t; u) = M⁻(s; u) M⁺(u; t) over s, t <= st_max < u <= u_max."""
    kernels = IntegrableKernels(mu0, alpha)
    transition = PcaTransition(make_integrable_family(mu0))
    worst, witness = 0.0, None
    commute = 0.0
    for s in range(st_max + 1):
        for t in range(st_max + 1):
            mm, pm = kernels.product_mm(s, t), kernels.product_pm(s, t)
            if max(mm, pm) > 0:
                commute = max(commute, abs(mm - pm) / max(mm, pm))
            for u in range(max(s, t) + 1, u_max + 1):
                lhs, rhs = stable_identity_sides(kernels, transition, s, t, u)
                scale = max(abs(lhs), abs(rhs))
                if scale == 0:
                    continue
                residual = abs(lhs - rhs) / scale
                if residual > worst:
                    worst, witness = residual, {"s": s, "t": t, "u": u}
    logger.debug(f"stable identity for {mu0.label}: residual {worst:.3g}, commutation {commute:.3g}")
    return IdentityReport(
        identity="stable",
        grid={"st_max": st_max, "u_max": u_max},
        max_residual=worst,
        witness=witness,
        tolerance=STABLE_TOL,
        extra={"commutation_residual": commute, "alpha": alpha},
    )


def check_belyaev(fam: MeasureFamily, st_max: int = 6, u_max: int = 20, tolerance: float = BELYAEV_TOL) -> IdentityReport:
    """Residual of the eight-factor exchange identity

        T(s,t;u) T(s',t';u) T(s',t;u') T(s,t';u') = T(s',t';u') T(s,t;u') T(s,t';u) T(s',t;u)

    over s, t, s', t' <= st_max and u, u' <= u_max.
    """
    T = PcaTransition(fam).tensor(st_max, u_max)
    ab = np.arange(st_max + 1)
    c = np.arange(u_max + 1)
    s, t, s2, t2, u, u2 = np.ix_(ab, ab, ab, ab, c, c)
    lhs = T[s, t, u] * T[s2, t2, u] * T[s2, t, u2] * T[s, t2, u2]
    rhs = T[s2, t2, u2] * T[s, t, u2] * T[s, t2, u] * T[s2, t, u]
    residual = _relative(lhs, rhs)
    flat = int(np.argmax(residual))
    worst = float(residual.flat[flat])
    witness = None
    if worst > 0:
        idx = np.unravel_index(flat, residual.shape)
        witness = dict(zip(("s", "t", "s_prime", "t_prime", "u", "u_prime"), (int(i) for i in idx)))
    return IdentityReport(
        identity="exchange",
        grid={"st_max": st_max, "u_max": u_max},
        max_residual=worst,
        witness=witness,
        tolerance=tolerance,
    )


def derive_cond_int(fam: MeasureFamily, mu0: DiscreteMeasure, delta_max: int = 5, v_max: int = 10) -> IdentityReport:
    """Residual of μ₀(Δ+1) μ₀(1) μ_Δ(v)² = μ₀(v) μ₀(Δ+v) μ_Δ(1)².

    This is the exchange identity at s = t = 0, s' = t' = Δ, u = Δ + 1,
    u' = Δ + v; it pins μ_Δ(v) ∝ √(μ₀(v) μ₀(Δ+v)).
    """
    worst, witness = 0.0, None
    for delta in range(delta_max + 1):
        law = fam.at(delta)
        for v in range(1, v_max + 1):
            lhs = mu0.mass(delta + 1) * mu0.mass(1) * law.mass(v) ** 2
            rhs = mu0.mass(v) * mu0.mass(delta + v) * law.mass(1) ** 2
            scale = max(lhs, rhs)
            residual = abs(lhs - rhs) / scale if scale > 0 else 0.0
            if residual > worst:
                worst, witness = residual, {"delta": delta, "v": v}
    return IdentityReport(
        identity="integrable_family",
        grid={"delta_max": delta_max, "v_max": v_max},
        max_residual=worst,
        witness=witness,
        tolerance=1e-11,
    )


# =============================================================================
# Space-time iteration
# =============================================================================


def iterate_space_time(
    L: int,
    fam: MeasureFamily,
    rows: int,
    seed: Optional[int] = None,
    draws: Optional[UniformField] = None,
) -> np.ndarray:
    """η[y, x] for y < rows, started from the zero line.

    η(x, y) takes its uniform from cylinder row y at index (x + y // 2) mod L,
    the index of the cell (2x + y, y), so shared draws reproduce the growth field.
    """
    draws = draws or UniformField(resolve_seed(seed), L)
    eta = np.zeros((rows, L), dtype=np.int64)
    x = np.arange(L)
    for y in range(1, rows):
        a = eta[y - 1]
        b = np.roll(a, -1)
        us = draws.row(y)[(x + y // 2) % L]
        eta[y] = np.maximum(a, b) + sample_by_gap(fam, np.abs(b - a), us)
    return eta


def space_time_matches_growth(L: int, fam: MeasureFamily, rows: int = 50, seed: Optional[int] = None) -> bool:
    """Replay the cylinder growth through Φ⁻¹ and compare with the iteration under shared draws."""
    seed = resolve_seed(seed)
    eta = iterate_space_time(L, fam, rows, draws=UniformField(seed, L))
    growth = CylinderGrowth(L, fam, seed=seed, draws=UniformField(seed, L))
    field_ = growth.advance(0)
    while field_.n_rows < rows:
        field_ = growth.advance(2 * field_.clock + 1)
    for y in range(rows):
        replay = np.array([field_.tau(2 * x + y, y) for x in range(L)])
        if not np.array_equal(replay, eta[y]):
            logger.debug(f"space-time row {y} differs from the growth field")
            return False
    return True


# =============================================================================
# Zigzag weights along bridges
# =============================================================================


def hzmm_bridge_weight(b: Bridge, values: Sequence[int], kernels: IntegrableKernels) -> float:
    """∏_{b_i = +1} M⁺(η_i, η_{i+1}) ∏_{b_i = -1} M⁻(η_i, η_{i+1}) around the cyclic bridge."""
    n = b.size
    weight = 1.0
    for i in range(n):
        a, c = int(values[i]), int(values[(i + 1) % n])
        weight *= kernels.plus(a, c) if b[i] == UP else kernels.minus(a, c)
    return weight


def front_line_vertex_values(timed: TimedBridge, n: int) -> Tuple[Optional[int], ...]:
    """Space-time values at the bridge vertices seen by the front at time n.

    Vertex i precedes edge i. It carries n - t_i after a down step,
    n - t_{i-1} after two up steps, and is hidden (None) below a maximum.
    """
    b, t = timed.bridge, timed.ages
    out = []
    for i in range(b.size):
        if b[i] == UP:
            out.append(n - int(t[i]))
        elif b[i - 1] == DOWN:
            out.append(n - int(t[i - 1]))
        else:
            out.append(None)
    return tuple(out)


def hzmm_front_weight(timed: TimedBridge, kernels: IntegrableKernels, n: int = 0) -> float:
    """Zigzag measure of the visible front vertices, hidden vertices summed out."""
    b = timed.bridge
    size = b.size
    values = front_line_vertex_values(timed, n)
    weight = 1.0
    for i in range(size):
        j = (i + 1) % size
        if values[j] is None or values[i] is None:
            continue
        a, c = values[i], values[j]
        weight *= kernels.plus(a, c) if b[i] == UP else kernels.minus(a, c)
    for i in local_extrema(b).maxima:
        hidden = (i + 1) % size
        weight *= kernels.product_pm(values[i], values[(hidden + 1) % size])
    return weight


def survival_factors(timed: TimedBridge, fam: IntegrableFamily) -> float:
    """∏ over maxima of the probability that the pending cell has not arrived."""
    b, t = timed.bridge, timed.ages
    out = 1.0
    for i in local_extrema(b).maxima:
        a, c = int(t[i]), int(t[(i + 1) % b.size])
        out *= fam.at(abs(a - c)).tail(min(a, c) + 1)
    return out
