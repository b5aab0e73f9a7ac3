"""Waiting-time laws and the gap-indexed families built from them.

A family maps the gap Δ between the arrival times of a cell's two
predecessors to a probability measure on {1, 2, ...}. Discrete measures are
stored as a pmf head over 1..cap plus a certified remainder; closed-form
measures also keep their log-pmf and survival function so values beyond the
cap stay exact.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy import integrate, optimize, special, stats

from glpp.core import (
    DEFAULT_ZETA_CAP,
    LOG_SPACE_BELOW,
    MIN_GEOMETRIC_CAP,
    QUADRATURE_TOL,
    UNDERFLOW_MASS,
    ConfigError,
    DivergentSqrtSum,
    EmptyGrid,
    FamilyKind,
    QuadratureFailure,
    TailUnderflow,
)
from glpp.utils import warn_once

_SUM_TOL = 1e-9


# =============================================================================
# Closed-form helpers (module level so measures stay picklable)
# =============================================================================


def _geometric_logpmf(p: float, i: np.ndarray) -> np.ndarray:
    return math.log(p) + (np.asarray(i, dtype=float) - 1.0) * math.log1p(-p)


def _geometric_sf(p: float, t: int) -> float:
    return float((1.0 - p) ** max(t - 1, 0))


def _geometric_tail_sum(p: float, n: int) -> float:
    return float((1.0 - p) ** max(n - 1, 0) / p)


def _poisson_logpmf(lam: float, shift: int, log_norm: float, i: np.ndarray) -> np.ndarray:
    return stats.poisson.logpmf(np.asarray(i) - shift, lam) - log_norm


def _poisson_sf(lam: float, shift: int, log_norm: float, t: int) -> float:
    # P(X >= t) = sf(t - 1 - shift) for the underlying Poisson variable
    return float(stats.poisson.sf(t - 1 - shift, lam) * math.exp(-log_norm))


def _poisson_tail_sum(lam: float, shift: int, log_norm: float, n: int) -> float:
    # Σ_{m>=n} P(X >= m) = E[(Y - k)^+] for the underlying Poisson Y, k = n - 1 - shift
    k = max(n - 1 - shift, 0)
    ratio = lam / (k + 2)
    if ratio < 1.0:
        head = float(stats.poisson.pmf(k + 1, lam))
        return head / (1.0 - ratio) ** 2 * math.exp(-log_norm)
    excess = lam * stats.poisson.sf(k - 1, lam) - k * stats.poisson.sf(k, lam)
    return float(excess) * math.exp(-log_norm)


def _zeta_logpmf(alpha: float, i: np.ndarray) -> np.ndarray:
    return stats.zipf.logpmf(np.asarray(i), alpha)


def _zeta_sf(alpha: float, t: int) -> float:
    return float(special.zeta(alpha, max(t, 1)) / special.zeta(alpha, 1))


def _zeta_tail_sum(alpha: float, n: int) -> float:
    # Σ_{v>=n} (v - n + 1) v^{-α} <= Σ_{v>=n} v^{1-α}
    if alpha <= 2.0:
        return math.inf
    return float(special.zeta(alpha - 1.0, n) / special.zeta(alpha, 1))


def _integrable_logpmf(mu0: "DiscreteMeasure", delta: int, log_norm: float, i: np.ndarray) -> np.ndarray:
    i = np.asarray(i)
    return 0.5 * (mu0.log_mass(i) + mu0.log_mass(i + delta)) - log_norm


def _ratio_tail_bound(next_mass: float, ratio: float) -> float:
    """Bound Σ_{i>cap} √pmf(i) when pmf(i+1)/pmf(i) <= ratio < 1 beyond the cap."""
    if ratio >= 1.0:
        return math.inf
    return math.sqrt(next_mass) / (1.0 - math.sqrt(ratio))


# =============================================================================
# Discrete measures
# =============================================================================


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Probability measure on the positive integers.

    Attributes:
        pmf: masses of 1..cap (``pmf[i - 1]`` is the mass of ``i``).
        remainder: certified mass beyond the cap.
        sqrt_remainder: certified bound on Σ_{i>cap} √pmf(i), ``inf`` when unknown.
        label: human-readable description used in reports.
        logpmf_fn: exact log-pmf, used beyond the cap when available.
        sf_fn: exact survival P(X >= t), used beyond the cap when available.
        tail_sum_fn: certified bound on Σ_{m>=n} P(X >= m) for n beyond the cap.
        finite_support: True for tables that deliberately lack full support.
    """

    pmf: np.ndarray
    remainder: float = 0.0
    sqrt_remainder: float = 0.0
    label: str = "table"
    logpmf_fn: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)
    sf_fn: Optional[Callable[[int], float]] = field(default=None, repr=False)
    tail_sum_fn: Optional[Callable[[int], float]] = field(default=None, repr=False)
    finite_support: bool = False

    def __post_init__(self):
        pmf = np.asarray(self.pmf, dtype=float)
        if pmf.ndim != 1 or pmf.size == 0:
            raise ConfigError(f"{self.label}: pmf must be a non-empty vector")
        if np.any(pmf < 0) or self.remainder < 0:
            raise ConfigError(f"{self.label}: negative mass")
        total = math.fsum(pmf) + self.remainder
        if abs(total - 1.0) > _SUM_TOL:
            raise ConfigError(f"{self.label}: masses sum to {total!r}, expected 1")
        if not self.finite_support and np.any(pmf == 0):
            raise ConfigError(f"{self.label}: measure must charge every integer up to its cap")
        pmf.setflags(write=False)
        # tails[j] = P(X >= j + 1); accumulated from the small end
        tails = np.concatenate([np.cumsum(pmf[::-1])[::-1], [0.0]]) + self.remainder
        tails.setflags(write=False)
        cdf = np.cumsum(pmf)
        cdf.setflags(write=False)
        object.__setattr__(self, "pmf", pmf)
        object.__setattr__(self, "_tails", tails)
        object.__setattr__(self, "_cdf", cdf)

    # ------------------------------------------------------------------ access
    @property
    def cap(self) -> int:
        return int(self.pmf.size)

    def mass(self, i):
        """Mass of ``i`` (scalar or array); zero off the support."""
        arr = np.asarray(i)
        scalar = arr.ndim == 0
        arr = np.atleast_1d(arr).astype(np.int64)
        out = np.zeros(arr.shape, dtype=float)
        inside = (arr >= 1) & (arr <= self.cap)
        out[inside] = self.pmf[arr[inside] - 1]
        beyond = arr > self.cap
        if beyond.any() and self.logpmf_fn is not None:
            out[beyond] = np.exp(self.logpmf_fn(arr[beyond]))
        return float(out[0]) if scalar else out

    def log_mass(self, i):
        """Log-mass of ``i``; exact log-pmf where a closed form exists."""
        arr = np.asarray(i)
        scalar = arr.ndim == 0
        arr = np.atleast_1d(arr).astype(np.int64)
        if self.logpmf_fn is not None:
            out = np.full(arr.shape, -np.inf)
            ok = arr >= 1
            out[ok] = self.logpmf_fn(arr[ok])
        else:
            with np.errstate(divide="ignore"):
                out = np.log(self.mass(arr))
        return float(out[0]) if scalar else out

    def tail(self, t: int) -> float:
        """Σ_{s >= t} pmf(s)."""
        t = int(t)
        if t <= 1:
            return float(self._tails[0])
        if t <= self.cap:
            return float(self._tails[t - 1])
        if self.sf_fn is not None:
            return float(self.sf_fn(t))
        if self.logpmf_fn is not None:
            window = np.arange(t, t + 2 * self.cap + 1)
            return math.fsum(np.exp(self.logpmf_fn(window)))
        return 0.0

    def cdf(self, t: int) -> float:
        """Σ_{s <= t} pmf(s)."""
        t = int(t)
        if t < 1:
            return 0.0
        if t <= self.cap:
            return float(self._cdf[t - 1])
        return 1.0 - self.tail(t + 1)

    def hazard(self, m: int) -> float:
        """P(X = m + 1 | X > m)."""
        tail = self.tail(m + 1)
        if tail < UNDERFLOW_MASS:
            raise TailUnderflow(f"{self.label}: tail beyond {m} is {tail:.3g}")
        return self.mass(m + 1) / tail

    def tail_sum(self, n: int) -> float:
        """Σ_{m >= n} P(X >= m), exact up to the cap and certified beyond it; ``inf`` when uncertified."""
        n = max(int(n), 1)
        head = math.fsum(self._tails[n - 1 : self.cap]) if n <= self.cap else 0.0
        if self.remainder == 0.0:
            return head
        if self.tail_sum_fn is None:
            return math.inf
        return head + float(self.tail_sum_fn(max(n, self.cap + 1)))

    def sqrt_sum(self) -> float:
        return math.fsum(np.sqrt(self.pmf)) + self.sqrt_remainder

    def mean(self) -> float:
        head = math.fsum(self.pmf * np.arange(1, self.cap + 1))
        if self.logpmf_fn is not None:
            window = np.arange(self.cap + 1, 4 * self.cap + 1)
            head += math.fsum(window * np.exp(self.logpmf_fn(window)))
        return head

    def to_dict(self, upto: Optional[int] = None) -> Dict[str, object]:
        n = self.cap if upto is None else min(upto, self.cap)
        return {
            "label": self.label,
            "cap": self.cap,
            "remainder": self.remainder,
            "pmf": {str(i + 1): float(self.pmf[i]) for i in range(n)},
        }

    # --------------------------------------------------------------- builders
    @classmethod
    def geometric(cls, p: float, cap: Optional[int] = None) -> "DiscreteMeasure":
        """Geometric law p(1-p)^{i-1} on {1, 2, ...}."""
        if not 0.0 < p < 1.0:
            raise ConfigError(f"geometric parameter must lie in (0, 1), got {p}")
        q = 1.0 - p
        if cap is None:
            cap = max(MIN_GEOMETRIC_CAP, int(math.ceil(math.log(1e-17) / math.log(q))))
        pmf = stats.geom(p).pmf(np.arange(1, cap + 1))
        return cls(
            pmf=pmf,
            remainder=q**cap,
            sqrt_remainder=math.sqrt(p) * q ** (cap / 2.0) / (1.0 - math.sqrt(q)),
            label=f"geometric:{p:g}",
            logpmf_fn=partial(_geometric_logpmf, p),
            sf_fn=partial(_geometric_sf, p),
            tail_sum_fn=partial(_geometric_tail_sum, p),
        )

    @classmethod
    def poisson(cls, lam: float, cap: Optional[int] = None, shifted: bool = False) -> "DiscreteMeasure":
        """Poisson law moved onto {1, 2, ...}.

        By default the law is conditioned on {X >= 1}; ``shifted=True`` gives 1 + Poisson(λ).
        """
        if lam <= 0:
            raise ConfigError(f"poisson parameter must be positive, got {lam}")
        shift = 1 if shifted else 0
        log_norm = 0.0 if shifted else math.log(-math.expm1(-lam))
        logpmf = partial(_poisson_logpmf, lam, shift, log_norm)
        if cap is None:
            cap = int(max(2.0 * lam + 2, lam + 10))
            while logpmf(np.array([cap]))[0] > math.log(LOG_SPACE_BELOW) and cap < 100_000:
                cap += 8
        i = np.arange(1, cap + 1)
        pmf = np.exp(logpmf(i))
        remainder = float(stats.poisson.sf(cap - shift, lam) * math.exp(-log_norm))
        ratio = lam / (cap + 2 - shift)
        next_mass = float(np.exp(logpmf(np.array([cap + 1]))[0]))
        name = "poisson_shifted" if shifted else "poisson"
        return cls(
            pmf=pmf,
            remainder=remainder,
            sqrt_remainder=_ratio_tail_bound(next_mass, ratio),
            label=f"{name}:{lam:g}",
            logpmf_fn=logpmf,
            sf_fn=partial(_poisson_sf, lam, shift, log_norm),
            tail_sum_fn=partial(_poisson_tail_sum, lam, shift, log_norm),
        )

    @classmethod
    def zeta(cls, alpha: float, cap: int = DEFAULT_ZETA_CAP) -> "DiscreteMeasure":
        """Zeta law i^{-α}/ζ(α)."""
        if alpha <= 1.0:
            raise ConfigError(f"zeta exponent must exceed 1, got {alpha}")
        norm = float(special.zeta(alpha, 1))
        pmf = stats.zipf.pmf(np.arange(1, cap + 1), alpha)
        remainder = float(special.zeta(alpha, cap + 1)) / norm
        if alpha > 2.0:
            sqrt_rem = float(special.zeta(alpha / 2.0, cap + 1)) / math.sqrt(norm)
        else:
            sqrt_rem = math.inf
        return cls(
            pmf=pmf,
            remainder=remainder,
            sqrt_remainder=sqrt_rem,
            label=f"zeta:{alpha:g}",
            logpmf_fn=partial(_zeta_logpmf, alpha),
            sf_fn=partial(_zeta_sf, alpha),
            tail_sum_fn=partial(_zeta_tail_sum, alpha),
        )

    @classmethod
    def table(cls, masses: Sequence[float] | Dict[int, float], label: str = "table") -> "DiscreteMeasure":
        """Explicit finite table; ``masses`` lists the masses of 1, 2, ... or maps i to mass."""
        if isinstance(masses, dict):
            keys = [int(k) for k in masses]
            if not keys or min(keys) < 1:
                raise ConfigError("table support must be a non-empty subset of {1, 2, ...}")
            pmf = np.zeros(max(keys))
            for k, v in masses.items():
                pmf[int(k) - 1] = float(v)
        else:
            pmf = np.asarray(list(masses), dtype=float)
        finite = bool(np.any(pmf == 0))
        if finite:
            warn_once(f"{label}: finite-support table lacks full support; allowed in test mode only")
        return cls(pmf=pmf, remainder=0.0, sqrt_remainder=0.0, label=label, finite_support=True)


# =============================================================================
# Sampling
# =============================================================================


def sample(measure: DiscreteMeasure, u: float, given_more_than: int = 0) -> int:
    """Inverse-cdf draw from ``measure`` (or from its residual law beyond ``given_more_than``).

    Args:
        measure: the waiting-time law.
        u: a uniform draw in [0, 1).
        given_more_than: m; the result is distributed as X conditioned on X > m.

    Returns:
        The sampled positive integer.
    """
    m = int(given_more_than)
    base = measure.tail(m + 1)
    if base < UNDERFLOW_MASS:
        raise TailUnderflow(f"{measure.label}: conditioning event X > {m} has mass {base:.3g}")
    target = base * (1.0 - u)
    tails = measure._tails
    j = int(np.searchsorted(-tails, -target, side="left"))
    if j > measure.cap:
        return _sample_beyond_cap(measure, target, m)
    return max(j, m + 1)


def sample_many(measure: DiscreteMeasure, us: np.ndarray) -> np.ndarray:
    """Vectorized unconditional :func:`sample`; identical results element by element."""
    us = np.asarray(us, dtype=float)
    target = measure._tails[0] * (1.0 - us)
    j = np.searchsorted(-measure._tails, -target, side="left")
    out = np.maximum(j, 1).astype(np.int64)
    spill = j > measure.cap
    if spill.any():
        out[spill] = [_sample_beyond_cap(measure, t, 0) for t in target[spill]]
    return out


def sample_by_gap(fam: "MeasureFamily", gaps: np.ndarray, us: np.ndarray) -> np.ndarray:
    """Waiting times for a batch of cells, each drawn from the law of its gap."""
    xi = np.empty(gaps.shape, dtype=np.int64)
    for gap in np.unique(gaps):
        mask = gaps == gap
        xi[mask] = sample_many(fam.at(int(gap)), us[mask])
    return xi


def _sample_beyond_cap(measure: DiscreteMeasure, target: float, m: int) -> int:
    k = max(measure.cap, m + 1)
    if measure.sf_fn is None and measure.logpmf_fn is None:
        warn_once(f"{measure.label}: draw fell in the certified remainder; clamped to cap + 1")
        return measure.cap + 1
    while measure.tail(k + 1) > target:
        k += 1
        if k > 1000 * measure.cap:
            raise TailUnderflow(f"{measure.label}: inverse cdf did not terminate")
    return k


# =============================================================================
# Families
# =============================================================================


class MeasureFamily:
    """Map Δ -> μ_Δ with a lazily filled, lock-guarded cache."""

    kind: FamilyKind = FamilyKind.CUSTOM_TABLE

    def __init__(self, label: str):
        self.label = label
        self._cache: Dict[int, DiscreteMeasure] = {}
        self._lock = threading.Lock()

    def __getstate__(self):
        state = self.__dict__.copy()
        state["_lock"] = None
        state["_cache"] = {}
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._lock = threading.Lock()

    def at(self, delta: int) -> DiscreteMeasure:
        delta = int(delta)
        if delta < 0:
            raise ConfigError(f"gap must be nonnegative, got {delta}")
        cached = self._cache.get(delta)
        if cached is not None:
            return cached
        with self._lock:
            if delta not in self._cache:
                self._cache[delta] = self._materialize(delta)
            return self._cache[delta]

    def prematerialize(self, upto: int) -> None:
        for delta in range(upto + 1):
            self.at(delta)

    def _materialize(self, delta: int) -> DiscreteMeasure:
        raise NotImplementedError

    @property
    def is_constant(self) -> bool:
        return self.kind is FamilyKind.CONSTANT

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.label!r})"


class ConstantFamily(MeasureFamily):
    """Classical LPP: the same law whatever the gap."""

    kind = FamilyKind.CONSTANT

    def __init__(self, mu0: DiscreteMeasure):
        super().__init__(f"constant({mu0.label})")
        self.mu0 = mu0

    def _materialize(self, delta: int) -> DiscreteMeasure:
        return self.mu0


class IntegrableFamily(MeasureFamily):
    """μ_Δ(t) = √(μ₀(t)μ₀(t+Δ)) / N(Δ)."""

    kind = FamilyKind.INTEGRABLE

    def __init__(self, mu0: DiscreteMeasure, sqrt_mu0_sum: float):
        super().__init__(f"integrable({mu0.label})")
        self.mu0 = mu0
        self.sqrt_mu0_sum = sqrt_mu0_sum
        self._norms: Dict[int, Tuple[float, float]] = {}

    def normalizer(self, delta: int) -> float:
        """N(Δ) = Σ_s √(μ₀(s)μ₀(s+Δ))."""
        self.at(delta)
        return self._norms[int(delta)][0]

    def normalizer_bound(self, delta: int) -> float:
        """Certified bound on the part of N(Δ) beyond the cap."""
        self.at(delta)
        return self._norms[int(delta)][1]

    def _materialize(self, delta: int) -> DiscreteMeasure:
        mu0 = self.mu0
        if delta == 0:
            self._norms[0] = (1.0, 0.0)
            return mu0
        t = np.arange(1, mu0.cap + 1)
        log_terms = 0.5 * (mu0.log_mass(t) + mu0.log_mass(t + delta))
        terms = np.exp(log_terms)
        head = math.fsum(terms)
        if head <= 0:
            raise TailUnderflow(f"{self.label}: N({delta}) underflows")
        # beyond the cap: Cauchy-Schwarz, or domination by the decreasing tail
        rem_bound = min(mu0.remainder, mu0.sqrt_remainder * math.sqrt(mu0.mass(mu0.cap + 1 + delta)))
        self._norms[delta] = (head, rem_bound)
        logger.debug(f"{self.label}: N({delta}) = {head:.15g} (+<= {rem_bound:.2g})")
        pmf = terms / head
        if mu0.finite_support:
            return DiscreteMeasure(pmf=pmf, label=f"{self.label}@{delta}", finite_support=True)
        return DiscreteMeasure(
            pmf=pmf,
            remainder=rem_bound / head,
            sqrt_remainder=math.inf,
            label=f"{self.label}@{delta}",
            logpmf_fn=partial(_integrable_logpmf, mu0, delta, math.log(head)) if mu0.logpmf_fn else None,
        )


class EdgeLppFamily(MeasureFamily):
    """Gap-conditioned law of max(ζ₁ - Δ, ζ₂) for two independent μ draws."""

    kind = FamilyKind.EDGE_LPP

    def __init__(self, mu: DiscreteMeasure):
        super().__init__(f"edge_lpp({mu.label})")
        self.mu = mu

    def _materialize(self, delta: int) -> DiscreteMeasure:
        mu = self.mu
        i = np.arange(1, mu.cap + 1)
        cdf_prev = np.array([mu.cdf(k - 1) for k in i])
        cdf_shift = np.array([mu.cdf(k - 1 + delta) for k in i])
        m_i = mu.mass(i)
        m_shift = mu.mass(i + delta)
        pmf = m_shift * cdf_prev + m_i * cdf_shift + m_i * m_shift
        if mu.finite_support:
            return DiscreteMeasure(pmf=pmf, label=f"{self.label}@{delta}", finite_support=True)
        return DiscreteMeasure(
            pmf=pmf,
            remainder=max(0.0, 1.0 - math.fsum(pmf)),
            sqrt_remainder=math.inf,
            label=f"{self.label}@{delta}",
        )


class TableFamily(MeasureFamily):
    """Explicit per-gap tables; gaps beyond the last entry reuse the last table."""

    kind = FamilyKind.CUSTOM_TABLE

    def __init__(self, tables: Dict[int, DiscreteMeasure], label: str = "table"):
        super().__init__(label)
        if 0 not in tables:
            raise ConfigError("a table family needs an entry for gap 0")
        self.tables = dict(tables)

    def _materialize(self, delta: int) -> DiscreteMeasure:
        if delta in self.tables:
            return self.tables[delta]
        return self.tables[max(self.tables)]


class PerturbedFamily(MeasureFamily):
    """A family with one pmf entry of one gap scaled by (1 + ε), then renormalized."""

    def __init__(self, base: MeasureFamily, eps: float = 1e-2, delta: int = 1, index: int = 1):
        super().__init__(f"perturbed({base.label}, eps={eps:g}, gap={delta}, i={index})")
        self.kind = base.kind
        self.base = base
        self.eps = eps
        self.delta = delta
        self.index = index

    def _materialize(self, delta: int) -> DiscreteMeasure:
        law = self.base.at(delta)
        if delta != self.delta:
            return law
        pmf = law.pmf.copy()
        pmf[self.index - 1] *= 1.0 + self.eps
        total = math.fsum(pmf) + law.remainder
        return DiscreteMeasure(
            pmf=pmf / total,
            remainder=law.remainder / total,
            sqrt_remainder=math.inf,
            label=f"{self.label}@{delta}",
            finite_support=law.finite_support,
        )


def make_integrable_family(mu0: DiscreteMeasure) -> IntegrableFamily:
    """Build the integrable family from μ₀.

    Raises:
        DivergentSqrtSum: when Σ√μ₀ cannot be certified finite at the cap.
    """
    s = mu0.sqrt_sum()
    if not math.isfinite(s):
        raise DivergentSqrtSum(f"Σ√μ₀ cannot be certified finite for {mu0.label}")
    if mu0.finite_support:
        warn_once(f"{mu0.label}: integrable family built from a finite-support table")
    logger.debug(f"integrable({mu0.label}): Σ√μ₀ = {s:.15g}")
    return IntegrableFamily(mu0, s)


def make_constant_family(mu0: DiscreteMeasure) -> ConstantFamily:
    return ConstantFamily(mu0)


def make_edge_lpp_family(mu: DiscreteMeasure) -> EdgeLppFamily:
    if mu.finite_support:
        warn_once(f"{mu.label}: edge-LPP family from a finite-support table (test mode)")
    return EdgeLppFamily(mu)


def perturb_family(fam: MeasureFamily, eps: float = 1e-2, delta: int = 1, index: int = 1) -> PerturbedFamily:
    return PerturbedFamily(fam, eps=eps, delta=delta, index=index)


# =============================================================================
# Certificates
# =============================================================================


@dataclass(frozen=True)
class CertificateReport:
    """Outcome of a grid check; never a claim over an infinite index set."""

    name: str
    passed: bool
    value: float
    witness: Optional[Dict[str, object]] = None
    grid: Dict[str, object] = field(default_factory=dict)
    notes: Tuple[str, ...] = ()
    extra: Dict[str, object] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, object]:
        return {
            "name": self.name,
            "passed": self.passed,
            "value": self.value,
            "witness": self.witness,
            "grid": self.grid,
            "notes": list(self.notes),
            **self.extra,
        }


def _hazard_grid(law: DiscreteMeasure, t_max: int) -> np.ndarray:
    t = np.arange(1, t_max + 1)
    tails = np.array([law.tail(k) for k in t])
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(tails > 0, law.mass(t) / tails, np.nan)


def check_cond3(mu0: DiscreteMeasure, t_max: int) -> CertificateReport:
    """Grid infimum of μ₀(t) / Σ_{s>=t} μ₀(s)."""
    if t_max < 1:
        raise EmptyGrid("t_max must be at least 1")
    ratios = _hazard_grid(mu0, t_max)
    k = int(np.nanargmin(ratios))
    value = float(ratios[k])
    return CertificateReport(
        name="mu0_hazard",
        passed=value > 0,
        value=value,
        witness={"t": k + 1},
        grid={"t_max": t_max},
        notes=("grid certificate",),
    )


def check_cond_conv(fam: MeasureFamily, delta_max: int, t_max: int) -> CertificateReport:
    """Grid infimum of the hazard ratio μ_Δ(t) / Σ_{s>=t} μ_Δ(s)."""
    if delta_max < 0 or t_max < 1:
        raise EmptyGrid(f"empty grid: delta_max={delta_max}, t_max={t_max}")
    best = (math.inf, 0, 1)
    for delta in range(delta_max + 1):
        ratios = _hazard_grid(fam.at(delta), t_max)
        k = int(np.nanargmin(ratios))
        if ratios[k] < best[0]:
            best = (float(ratios[k]), delta, k + 1)
    notes = ["grid certificate, not a proof over all gaps and ages"]
    extra: Dict[str, object] = {}
    if isinstance(fam, IntegrableFamily):
        cond3 = check_cond3(fam.mu0, t_max)
        implied = best[0] >= cond3.value - 1e-12
        extra["mu0_hazard_bound"] = cond3.value
        extra["mu0_bound_carries_over"] = implied
        notes.append("a hazard bound on μ₀ carries over to the family with the same constant")
        if not implied:
            logger.warning(f"{fam.label}: family hazard infimum {best[0]:.6g} below the μ₀ bound {cond3.value:.6g}")
    return CertificateReport(
        name="cond_conv",
        passed=best[0] > 0,
        value=best[0],
        witness={"delta": best[1], "t": best[2]},
        grid={"delta_max": delta_max, "t_max": t_max},
        notes=tuple(notes),
        extra=extra,
    )


def check_cond_subadd(fam: MeasureFamily, delta_max: int, n_max: int) -> CertificateReport:
    """μ_Δ([0,n]) <= μ_{Δ+1}([0,n]) <= μ_Δ([0,n+1]) on the grid."""
    if delta_max < 0 or n_max < 1:
        raise EmptyGrid(f"empty grid: delta_max={delta_max}, n_max={n_max}")
    left_ok = right_ok = True
    first: Optional[Dict[str, object]] = None
    for delta in range(delta_max + 1):
        lo, hi = fam.at(delta), fam.at(delta + 1)
        for n in range(1, n_max + 1):
            a, b, c = lo.cdf(n), hi.cdf(n), lo.cdf(n + 1)
            for side, ok in (("left", a <= b + 1e-12), ("right", b <= c + 1e-12)):
                if ok:
                    continue
                if side == "left":
                    left_ok = False
                else:
                    right_ok = False
                if first is None:
                    first = {"delta": delta, "n": n, "side": side}
    return CertificateReport(
        name="cond_subadd",
        passed=left_ok and right_ok,
        value=0.0 if first is None else 1.0,
        witness=first,
        grid={"delta_max": delta_max, "n_max": n_max},
        notes=("grid certificate",),
        extra={"left": left_ok, "right": right_ok},
    )


def is_geometric_like(mu0: DiscreteMeasure, n: int = 20, tol: float = 1e-10) -> bool:
    """True when μ₀(i+1)/μ₀(i) is constant on 1..n."""
    i = np.arange(1, n + 1)
    ratios = mu0.mass(i + 1) / mu0.mass(i)
    return bool(np.max(np.abs(ratios - ratios[0])) <= tol)


def is_constant_family(fam: MeasureFamily, delta_max: int = 20, tol: float = 1e-10) -> bool:
    """True when μ_Δ = μ₀ entrywise for Δ <= delta_max."""
    base = fam.at(0)
    n = min(base.cap, 200)
    ref = base.mass(np.arange(1, n + 1))
    for delta in range(1, delta_max + 1):
        law = fam.at(delta)
        if np.max(np.abs(law.mass(np.arange(1, n + 1)) - ref)) > tol:
            return False
    return True


# =============================================================================
# Continuous densities
# =============================================================================


class DensityFamily:
    """Gap-indexed densities on (0, ∞) for the continuous-time chain."""

    def __init__(self, f0, kind: FamilyKind = FamilyKind.CONSTANT, label: Optional[str] = None):
        self.f0 = f0
        self.kind = kind
        self.label = label or f"{kind.value}({f0.dist.name})"
        self._norms: Dict[float, float] = {}
        self._lock = threading.Lock()

    def __getstate__(self):
        state = self.__dict__.copy()
        state["_lock"] = None
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._lock = threading.Lock()

    @classmethod
    def exponential(cls, lam: float = 1.0) -> "DensityFamily":
        if lam <= 0:
            raise ConfigError(f"exponential rate must be positive, got {lam}")
        return cls(stats.expon(scale=1.0 / lam), label=f"exp:{lam:g}")

    @classmethod
    def halfnormal(cls, sigma: float = 1.0) -> "DensityFamily":
        if sigma <= 0:
            raise ConfigError(f"half-normal scale must be positive, got {sigma}")
        return cls(stats.halfnorm(scale=sigma), label=f"halfnormal:{sigma:g}")

    @property
    def closed_form(self) -> bool:
        """Exponential seeds give f(Δ, ·) = f₀ for every Δ."""
        return self.kind is FamilyKind.CONSTANT or self.f0.dist.name == "expon"

    @property
    def rate(self) -> Optional[float]:
        if self.f0.dist.name != "expon":
            return None
        return 1.0 / float(self.f0.kwds.get("scale", 1.0))

    def normalizer(self, delta: float) -> float:
        """∫ √(f₀(s) f₀(s+Δ)) ds."""
        if self.closed_form:
            lam = self.rate
            return 1.0 if lam is None else math.exp(-lam * delta / 2.0)
        key = round(float(delta), 12)
        cached = self._norms.get(key)
        if cached is not None:
            return cached
        value, err = integrate.quad(
            lambda s: math.exp(0.5 * (self.f0.logpdf(s) + self.f0.logpdf(s + delta))),
            0.0,
            np.inf,
            epsabs=1e-13,
            epsrel=1e-12,
            limit=200,
        )
        if err > QUADRATURE_TOL * max(value, 1.0):
            raise QuadratureFailure(f"{self.label}: N({delta}) error {err:.2g}")
        with self._lock:
            self._norms[key] = value
        return value

    def pdf(self, delta: float, x):
        """f(Δ, x)."""
        x = np.asarray(x, dtype=float)
        if self.closed_form:
            return self.f0.pdf(x)
        n = self.normalizer(delta)
        return np.exp(0.5 * (self.f0.logpdf(x) + self.f0.logpdf(x + delta))) / n

    def _quad(self, delta: float, a: float, b: float) -> float:
        value, err = integrate.quad(lambda s: float(self.pdf(delta, s)), a, b, epsabs=1e-13, epsrel=1e-11, limit=200)
        if err > QUADRATURE_TOL:
            raise QuadratureFailure(f"{self.label}: integral on [{a}, {b}] error {err:.2g}")
        return value

    def cdf(self, delta: float, x: float) -> float:
        if x <= 0:
            return 0.0
        if self.closed_form:
            return float(self.f0.cdf(x))
        return min(1.0, self._quad(delta, 0.0, x))

    def sf(self, delta: float, x: float) -> float:
        if x <= 0:
            return 1.0
        if self.closed_form:
            return float(self.f0.sf(x))
        return max(0.0, self._quad(delta, x, np.inf))

    def ppf(self, delta: float, u: float) -> float:
        """Inverse cdf of f(Δ, ·)."""
        if self.closed_form:
            return float(self.f0.ppf(u))
        hi = 1.0
        while self.cdf(delta, hi) < u:
            hi *= 2.0
            if hi > 1e12:
                raise QuadratureFailure(f"{self.label}: inverse cdf bracket diverged")
        return float(optimize.brentq(lambda x: self.cdf(delta, x) - u, 0.0, hi, xtol=1e-13))

    def sample(self, delta: float, u: float) -> float:
        """Inverse-cdf draw of the waiting time for gap ``delta``."""
        lam = self.rate
        if lam is not None:
            return -math.log1p(-u) / lam
        return self.ppf(delta, u)

    def hazard(self, delta: float, m: float) -> float:
        tail = self.sf(delta, m)
        if tail <= 0:
            raise QuadratureFailure(f"{self.label}: tail integral beyond {m} vanished")
        return float(self.pdf(delta, m)) / tail


def make_integrable_density_family(seed: DensityFamily) -> DensityFamily:
    """Integrable density family f(Δ,x) ∝ √(f₀(x) f₀(x+Δ)) built from ``seed``'s f₀."""
    value, err = integrate.quad(lambda s: math.sqrt(float(seed.f0.pdf(s))), 0.0, np.inf, limit=200)
    if not math.isfinite(value):
        raise DivergentSqrtSum(f"∫√f₀ diverges for {seed.label}")
    if err > QUADRATURE_TOL * max(value, 1.0):
        raise QuadratureFailure(f"∫√f₀ for {seed.label} not certified (error {err:.2g})")
    fam = DensityFamily(seed.f0, kind=FamilyKind.INTEGRABLE, label=f"integrable({seed.label})")
    logger.debug(f"{fam.label}: ∫√f₀ = {value:.12g}")
    return fam


def check_noexplosion(fam: DensityFamily, eps: float, delta_max: float, n_grid: int = 21) -> CertificateReport:
    """Grid supremum over Δ of μ_Δ([0, ε]); the chain cannot explode when it stays below 1."""
    if eps <= 0:
        warn_once("no-explosion check with ε <= 0 is degenerate")
        return CertificateReport(
            name="noexplosion", passed=True, value=0.0, grid={"eps": eps}, notes=("degenerate ε",)
        )
    deltas = np.linspace(0.0, float(delta_max), n_grid) if delta_max > 0 else np.array([0.0])
    values = np.array([fam.cdf(d, eps) for d in deltas])
    k = int(np.argmax(values))
    sup = float(values[k])
    return CertificateReport(
        name="noexplosion",
        passed=sup < 1.0,
        value=sup,
        witness={"delta": float(deltas[k])},
        grid={"eps": eps, "delta_max": delta_max, "points": int(deltas.size)},
        notes=("grid certificate",),
        extra={"alpha": sup},
    )


def check_cond_conv_continuous(fam: DensityFamily, delta_max: float, t_max: float, n_grid: int = 21) -> CertificateReport:
    """Grid infimum of the continuous hazard f_Δ(t) / ∫_t^∞ f_Δ."""
    if t_max <= 0:
        raise EmptyGrid("t_max must be positive")
    deltas = np.linspace(0.0, float(delta_max), n_grid) if delta_max > 0 else np.array([0.0])
    ts = np.linspace(0.0, float(t_max), n_grid)
    best = (math.inf, 0.0, 0.0)
    for d in deltas:
        for t in ts:
            h = fam.hazard(d, t)
            if h < best[0]:
                best = (h, float(d), float(t))
    return CertificateReport(
        name="cond_conv_continuous",
        passed=best[0] > 0,
        value=best[0],
        witness={"delta": best[1], "t": best[2]},
        grid={"delta_max": delta_max, "t_max": t_max},
        notes=("grid certificate",),
    )
