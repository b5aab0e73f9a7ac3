"""Stationary weights, partition functions and speeds of the integrable front line.

Everything is expressed through g = √μ₀. For a timed bridge (b, t) the
collapsed weight is

    W(b, t) = ∏_{b_i = b_{i+1}} g(|t_{i+1} - t_i|) · ∏_{maxima} Σ_{s>=1} g(s + t_i) g(s + t_{i+1}),

and sums over all admissible ages are traces of products of age-indexed
transfer matrices taken around the cyclic bridge.
"""

from __future__ import annotations

import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy import integrate

from glpp.bridges import (
    DOWN,
    UP,
    Bridge,
    TimedBridge,
    enumerate_bridges,
    enumerate_timed_truncated,
    local_extrema,
)
from glpp.chain import successors
from glpp.core import (
    QUADRATURE_TOL,
    ConfigError,
    DivergentSqrtSum,
    QuadratureFailure,
    TruncationNotConverged,
    WeightForm,
)
from glpp.measures import DensityFamily, DiscreteMeasure, IntegrableFamily, make_integrable_family
from glpp.utils import make_rng, resolve_seed

MAX_EXACT_L = 6
DEFAULT_T_CAP = 40


# =============================================================================
# √μ₀ and the weight forms
# =============================================================================


class SqrtProfile:
    """g(i) = √μ₀(i) with the sums the weights are built from."""

    def __init__(self, mu0: DiscreteMeasure, span: int = DEFAULT_T_CAP):
        total = mu0.sqrt_sum()
        if not math.isfinite(total):
            raise DivergentSqrtSum(f"Σ√μ₀ cannot be certified finite for {mu0.label}")
        self.mu0 = mu0
        self.total = total
        self._extend(span)
        self._pairs: Dict[Tuple[int, int], float] = {}

    def _extend(self, span: int) -> None:
        size = self.mu0.cap + span + 2
        self.values = np.sqrt(np.asarray(self.mu0.mass(np.arange(size)), dtype=float))

    def g(self, k: int) -> float:
        if k <= 0:
            return 0.0
        if k >= self.values.size:
            return math.sqrt(self.mu0.mass(k))
        return float(self.values[k])

    def pair_sum(self, a: int, b: int) -> float:
        """Σ_{s>=1} g(s + a) g(s + b)."""
        key = (a, b) if a <= b else (b, a)
        value = self._pairs.get(key)
        if value is None:
            lo, hi = key
            if hi + self.mu0.cap + 1 > self.values.size:
                self._extend(hi)
            s = np.arange(1, self.mu0.cap + 1)
            value = self._pairs[key] = math.fsum(self.values[s + lo] * self.values[s + hi])
        return value

    def overlap(self, delta: int) -> float:
        """N(Δ) = Σ_{s>=1} g(s) g(s + Δ)."""
        return self.pair_sum(0, abs(delta))

    def total_alpha(self, alpha: float) -> float:
        """Σ_v g(v) α^v over the stored range."""
        if alpha == 1.0:
            return self.total
        v = np.arange(self.values.size)
        terms = self.values * alpha**v
        if terms[-1] > 1e-12 * terms.max():
            logger.warning(f"α={alpha:g}: Σ g(v) α^v has not converged on the stored range")
        return math.fsum(terms)


def _pair_kind(b: Bridge, i: int) -> Tuple[int, int]:
    return b[i], b[i + 1]


def weight_W(
    timed: TimedBridge,
    mu0: DiscreteMeasure | SqrtProfile,
    form: int | WeightForm = WeightForm.COLLAPSED,
    log: bool = False,
    family: Optional[IntegrableFamily] = None,
) -> float:
    """Stationary weight of a timed bridge in one of its three writings.

    Args:
        timed: a valid timed bridge.
        mu0: the base law, or a prepared :class:`SqrtProfile`.
        form: 3 collapses each maximum into Σ g(s+t_i) g(s+t_{i+1}); 2 keeps
            it as N(Δ) times the residual mass of μ_Δ; 1 is form 2 divided by
            (Σ g)^{2L}.
        log: return the natural log of the weight.
        family: integrable family for form 2 (built from μ₀ when omitted).

    Returns:
        The weight, or its log.
    """
    form = WeightForm.coerce(form)
    profile = mu0 if isinstance(mu0, SqrtProfile) else SqrtProfile(mu0)
    b, t = timed.bridge, timed.ages
    if not timed.check():
        raise ConfigError(f"not a valid timed bridge: {timed.to_dict()}")
    if form is not WeightForm.COLLAPSED and family is None:
        family = make_integrable_family(profile.mu0)
    logs: List[float] = []
    for i in range(b.size):
        left, right = _pair_kind(b, i)
        a, c = int(t[i]), int(t[(i + 1) % b.size])
        if left == right:
            value = profile.g(abs(c - a))
        elif left == UP:
            if form is WeightForm.COLLAPSED:
                value = profile.pair_sum(a, c)
            else:
                value = profile.overlap(abs(a - c)) * family.at(abs(a - c)).tail(min(a, c) + 1)
        else:
            continue
        if value <= 0:
            return -math.inf if log else 0.0
        logs.append(math.log(value))
    if form is WeightForm.NORMALIZED:
        logs.append(-2 * b.L * math.log(profile.total))
    total = math.fsum(logs)
    return total if log else math.exp(total)


# =============================================================================
# Transfer kernels
# =============================================================================


@dataclass
class TransferKernel:
    """Age-indexed factors over ages 0..cap.

    ``factor`` returns the matrix for a pair of consecutive steps:
    strictly increasing ages for (+1, +1), strictly decreasing for (-1, -1),
    the max-pair sum for (+1, -1) and the identity for a minimum. With
    ``alpha`` != 1 entries are multiplied by α^{a-b}, which leaves every
    trace unchanged.
    """

    profile: SqrtProfile
    cap: int
    alpha: float = 1.0
    up: np.ndarray = field(init=False, repr=False)
    down: np.ndarray = field(init=False, repr=False)
    max_pair: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.profile._extend(self.cap)
        g = self.profile.values
        idx = np.arange(self.cap + 1)
        diff = np.subtract.outer(idx, idx)
        self.up = np.where(diff < 0, g[np.clip(-diff, 0, None)], 0.0)
        self.down = np.where(diff > 0, g[np.clip(diff, 0, None)], 0.0)
        s = np.arange(1, self.pair_cap + 1)
        shifted = g[np.add.outer(idx, s)]
        self.max_pair = shifted @ shifted.T
        self._identity = np.eye(self.cap + 1)
        self._deform = float(self.alpha) ** diff if self.alpha != 1.0 else None

    @property
    def pair_cap(self) -> int:
        """Last s kept in the max-pair sums Σ_s g(s + a) g(s + c)."""
        return self.profile.mu0.cap

    def factor(self, left: int, right: int) -> np.ndarray:
        if left == UP and right == UP:
            mat = self.up
        elif left == DOWN and right == DOWN:
            mat = self.down
        elif left == UP:
            mat = self.max_pair
        else:
            return self._identity
        return mat if self._deform is None else mat * self._deform


def _bridge_trace(kernel: TransferKernel, b: Bridge, cap: int) -> Tuple[float, np.ndarray]:
    """log-scale and scaled product of the factors around ``b`` restricted to ages <= cap."""
    product = np.eye(cap + 1)
    log_scale = 0.0
    for i in range(b.size):
        product = product @ kernel.factor(*_pair_kind(b, i))[: cap + 1, : cap + 1]
        top = product.max()
        if top > 0:
            product /= top
            log_scale += math.log(top)
    return log_scale, product


def _mountains(b: Bridge) -> List[Tuple[int, int]]:
    """(up-run length, down-run length) per maximum, cyclically, starting after a minimum."""
    start = (local_extrema(b).minima[0] + 1) % b.size
    runs: List[int] = []
    previous = None
    for j in range(b.size):
        step = b[(start + j) % b.size]
        if step == previous:
            runs[-1] += 1
        else:
            runs.append(1)
        previous = step
    return list(zip(runs[0::2], runs[1::2]))


class TailEnvelope:
    """Certified upper bounds on the weight a bridge carries outside a truncation.

    With e(n) = √P(X >= n) and G = Σ_{k>=1} g(k), Cauchy-Schwarz gives
    Σ_s g(s + a) g(s + c) <= e(a + 1) e(c + 1), which splits every maximum
    into an up-side and a down-side factor. Summing the monotone steps of a
    run of r ages costs at most G^{r-1} and leaves its top at least r - 1
    above the minimum it starts from, so the whole cycle is dominated by a
    product over minima of

        J(x, y) = Σ_{m>=0} e(m + x) e(m + y)

    for the run lengths x, y meeting there. Restricting one top beyond a cap
    N floors the matching argument at N + 2.
    """

    def __init__(self, profile: SqrtProfile):
        self.mu0 = profile.mu0
        self.G = profile.total
        self._e: Dict[int, float] = {}

    def e(self, n: int) -> float:
        value = self._e.get(n)
        if value is None:
            value = self._e[n] = math.sqrt(self.mu0.tail(n))
        return value

    def pair(self, x: int, y: int, floor_x: int = 0, floor_y: int = 0) -> float:
        """Bound on Σ_{m>=0} e(max(m + x, floor_x)) e(max(m + y, floor_y))."""
        head_len = max(floor_x - x, floor_y - y, 0)
        head = math.fsum(self.e(max(m + x, floor_x)) * self.e(max(m + y, floor_y)) for m in range(head_len))
        rest = math.sqrt(self.mu0.tail_sum(head_len + x) * self.mu0.tail_sum(head_len + y))
        return head + rest

    def beyond(self, b: Bridge, outer: int, pair_cap: int) -> float:
        """Weight of ``b`` missed by a contraction over ages <= ``outer`` whose max-pair sums stop at ``pair_cap``."""
        runs = _mountains(b)
        k = len(runs)
        # minimum j joins the down-run of mountain j - 1 to the up-run of mountain j
        meets = [(runs[j - 1][1], runs[j][0]) for j in range(k)]
        full = [self.pair(x, y) for x, y in meets]

        def others(*skip: int) -> float:
            return math.prod(v for i, v in enumerate(full) if i not in skip)

        floor = outer + 2
        terms = []
        for j, (x, y) in enumerate(meets):
            rest = others(j)
            terms.append(self.pair(x, y, floor_y=floor) * rest)
            terms.append(self.pair(x, y, floor_x=floor) * rest)
        for j in range(k):
            nxt = (j + 1) % k
            if k == 1:
                terms.append(self.pair(meets[0][0] + pair_cap, meets[0][1] + pair_cap))
            else:
                left = self.pair(meets[j][0], meets[j][1] + pair_cap)
                right = self.pair(meets[nxt][0] + pair_cap, meets[nxt][1])
                terms.append(left * right * others(j, nxt))
        return self.G ** (b.size - 2 * k) * math.fsum(terms)


@dataclass(frozen=True)
class BridgeSum:
    """Σ_t W(b, t) over ages <= cap, a certified bound on the rest and its t₁ marginal."""

    code: str
    k: int
    total: float
    bound: float
    marginal: np.ndarray = field(repr=False)


def _sum_bridge(kernel: TransferKernel, envelope: TailEnvelope, b: Bridge, cap: int) -> BridgeSum:
    """Contract at ``cap``; the bound adds the layers up to ``kernel.cap`` and the envelope beyond."""
    log_scale, product = _bridge_trace(kernel, b, cap)
    marginal = math.exp(log_scale) * np.diag(product)
    total = math.fsum(marginal)
    outer_scale, outer = _bridge_trace(kernel, b, kernel.cap)
    layers = max(math.exp(outer_scale) * math.fsum(np.diag(outer)) - total, 0.0)
    beyond = envelope.beyond(b, kernel.cap, kernel.pair_cap)
    if not math.isfinite(beyond):
        raise TruncationNotConverged(f"{b.code}: {envelope.mu0.label} has no certified tail beyond the cap")
    rounding = 4 * b.size * np.finfo(float).eps * (total + layers)
    return BridgeSum(b.code, local_extrema(b).k, total, layers + beyond + rounding, marginal)


@dataclass
class ExactLaw:
    """Truncated exact stationary law.

    ``Z`` and the bridge sums are in the collapsed writing; ``bound`` is a
    certified upper bound on the weight beyond the age cap, so the untruncated
    partition function lies in [Z, Z + bound].
    """

    L: int
    mu0: str
    T_cap: int
    Z: float
    bound: float
    bridge_sums: Dict[str, BridgeSum]
    profile: SqrtProfile = field(repr=False)

    @property
    def nu(self) -> Dict[str, float]:
        return {code: s.total / self.Z for code, s in self.bridge_sums.items()}

    def nu_bound(self, code: str) -> float:
        s = self.bridge_sums[code]
        return (s.bound + s.total * self.bound / self.Z) / self.Z

    def nu_tilde(self, timed: TimedBridge) -> float:
        return weight_W(timed, self.profile, WeightForm.COLLAPSED) / self.Z

    def t1_marginal(self) -> np.ndarray:
        """ν̃(t₁ = a) for a = 0..T_cap."""
        return sum(s.marginal for s in self.bridge_sums.values()) / self.Z

    def Z_form(self, form: int | WeightForm) -> float:
        if WeightForm.coerce(form) is WeightForm.NORMALIZED:
            return self.Z * self.profile.total ** (-2 * self.L)
        return self.Z

    def to_dict(self) -> Dict[str, object]:
        return {
            "L": self.L,
            "mu0": self.mu0,
            "T_cap": self.T_cap,
            "Z": self.Z,
            "Z_bound": self.bound,
            "nu": {code: {"p": p, "bound": self.nu_bound(code)} for code, p in self.nu.items()},
        }


def stationary_law(
    L: int,
    mu0: DiscreteMeasure,
    T_cap: int = DEFAULT_T_CAP,
    tol: Optional[float] = None,
    alpha: float = 1.0,
    jobs: int = 1,
) -> ExactLaw:
    """ν_L over every bridge by kernel contraction over ages <= T_cap.

    The layers T_cap < age <= 2 T_cap are contracted exactly and everything
    further out is covered by :class:`TailEnvelope`.

    Raises:
        TruncationNotConverged: when μ₀ has no certified tail or the bound exceeds ``tol`` relative to Z.
    """
    if not 1 <= L <= MAX_EXACT_L:
        raise ConfigError(f"exact summation supports 1 <= L <= {MAX_EXACT_L}, got {L}")
    if T_cap < 3:
        raise ConfigError("T_cap must be at least 3")
    profile = SqrtProfile(mu0, T_cap)
    kernel = TransferKernel(profile, 2 * T_cap, alpha)
    envelope = TailEnvelope(profile)
    bridges = enumerate_bridges(L)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            sums = list(pool.map(lambda b: _sum_bridge(kernel, envelope, b, T_cap), bridges))
    else:
        sums = [_sum_bridge(kernel, envelope, b, T_cap) for b in bridges]
    Z = math.fsum(s.total for s in sums)
    bound = math.fsum(s.bound for s in sums)
    logger.debug(f"stationary_law L={L} {mu0.label} T_cap={T_cap}: Z={Z:.15g} ± {bound:.3g}")
    if tol is not None and bound > tol * Z:
        raise TruncationNotConverged(f"tail bound {bound:.3g} exceeds {tol:g}·Z at T_cap={T_cap}")
    return ExactLaw(L, mu0.label, T_cap, Z, bound, {s.code: s for s in sums}, profile)


def partition_Z(
    L: int,
    mu0: DiscreteMeasure,
    T_cap: int = DEFAULT_T_CAP,
    tol: Optional[float] = None,
    form: int | WeightForm = WeightForm.COLLAPSED,
) -> Tuple[float, float]:
    """(Z_L, tail bound) in the requested writing of the weights."""
    law = stationary_law(L, mu0, T_cap, tol)
    scale = law.Z_form(form) / law.Z
    return law.Z * scale, law.bound * scale


def invariance_residual(law: ExactLaw, t_check: Optional[int] = None) -> float:
    """max |(ν̃P)(s) - ν̃(s)| over states whose ages stay below ``t_check``.

    ν̃ is pushed through the one-step kernel from every state with ages <= T_cap;
    the residual is bounded by the ν̃-mass beyond the cap.
    """
    fam = make_integrable_family(law.profile.mu0)
    cap = law.T_cap
    t_check = cap // 2 if t_check is None else t_check
    states = enumerate_timed_truncated(law.L, cap)
    weight = {s.key: law.nu_tilde(s) for s in states}
    pushed: Dict[tuple, float] = defaultdict(float)
    for state in states:
        w = weight[state.key]
        for nxt, p in successors(state, fam):
            pushed[nxt.key] += w * p
    residual = 0.0
    for state in states:
        if max(state.ages) <= t_check:
            residual = max(residual, abs(pushed[state.key] - weight[state.key]))
    return residual


# =============================================================================
# Speed
# =============================================================================


def _alt_speed(profile: SqrtProfile, L: int, window: int) -> float:
    t = np.arange(-window, window + 1)
    v = np.array([profile.g(int(k)) for k in t])
    overlaps = np.array([profile.overlap(d) for d in range(2 * window + 1)])
    toeplitz = overlaps[np.abs(np.subtract.outer(t, t))]
    u = np.linalg.matrix_power(toeplitz, L - 1) @ v
    return float(np.dot(v, u) / np.dot(t * v, u))


@dataclass(frozen=True)
class SpeedReport:
    """Exact growth speed by two routes plus the size-biased diagnostic."""

    L: int
    c_renewal: float
    renewal_bound: float
    c_alt: float
    alt_bound: float
    size_biased: float
    size_biased_bound: float

    @property
    def agree(self) -> bool:
        return abs(self.c_renewal - self.c_alt) <= self.renewal_bound + self.alt_bound + 1e-12

    def to_dict(self) -> Dict[str, object]:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["agree"] = self.agree
        return out


def speed_exact(L: int, mu0: DiscreteMeasure, T_cap: int = DEFAULT_T_CAP, window: Optional[int] = None) -> SpeedReport:
    """c_L = ν̃(t₁ = 0), the same value from the open-chain route, and 1/(2E[t₁] + 1).

    Args:
        L: half the circumference.
        mu0: base law.
        T_cap: age cap for the kernel contraction.
        window: half-width of the integer window of the open-chain route
            (default T_cap); its error is the change on doubling the window.
    """
    law = stationary_law(L, mu0, T_cap)
    marginal = law.t1_marginal()
    rel = law.bound / law.Z
    c = float(marginal[0])
    ages = np.arange(marginal.size)
    mean_t1 = float(np.dot(ages, marginal))
    size_biased = 1.0 / (2.0 * mean_t1 + 1.0)
    window = window or T_cap
    coarse = _alt_speed(law.profile, L, window)
    fine = _alt_speed(law.profile, L, 2 * window)
    return SpeedReport(
        L=L,
        c_renewal=c,
        renewal_bound=rel,
        c_alt=fine,
        alt_bound=abs(fine - coarse),
        size_biased=size_biased,
        size_biased_bound=size_biased * (2 * T_cap + 3) * rel,
    )


# =============================================================================
# Geometric closed forms and the combinatorial identities behind them
# =============================================================================


def _as_fraction(p: float | Fraction | str) -> Fraction:
    return p if isinstance(p, Fraction) else Fraction(str(p))


def geometric_closed_form(L: int, p: float | Fraction | str) -> Dict[str, Fraction]:
    """ν_L(b) ∝ (1 - p)^{-k_b} for the classical geometric cylinder, exactly."""
    p = _as_fraction(p)
    if not 0 < p < 1:
        raise ConfigError(f"p must lie in (0, 1), got {p}")
    q = 1 - p
    weights = {b.code: q ** -local_extrema(b).k for b in enumerate_bridges(L)}
    Z = sum(weights.values())
    return {code: w / Z for code, w in weights.items()}


def lemma_comb(k: int, q: float) -> float:
    """Σ_{i>=k} C(i-1, k-1) q^i = (q / (1 - q))^k; 1 for k = 0."""
    if not 0 < q < 1:
        raise ConfigError(f"q must lie in (0, 1), got {q}")
    return (q / (1.0 - q)) ** k


def lemma_comb_partial(k: int, q: float, upto: int) -> float:
    return math.fsum(math.comb(i - 1, k - 1) * q**i for i in range(k, upto + 1))


def lemma_sumcomb(n: int, k: int) -> int:
    """Σ_{j=k}^{n} C(j, k) = C(n + 1, k + 1)."""
    if k > n:
        raise ConfigError(f"need k <= n, got k={k}, n={n}")
    return math.comb(n + 1, k + 1)


def lemma_sumcomb_direct(n: int, k: int) -> int:
    return sum(math.comb(j, k) for j in range(k, n + 1))


def _runs(b: Bridge) -> List[int]:
    """Lengths of the maximal constant runs of the cyclic bridge."""
    n = b.size
    start = next(i for i in range(n) if b[i] != b[i - 1])
    runs, length = [], 1
    for i in range(start + 1, start + n):
        if b[i] == b[i - 1]:
            length += 1
        else:
            runs.append(length)
            length = 1
    runs.append(length)
    return runs


def geometric_bridge_sum(b: Bridge, p: float) -> float:
    """Σ_t W(b, t) for geometric μ₀, assembled run by run.

    Each run of r + 1 equal steps contributes the sum over its r strictly
    ordered gaps; the whole bridge reduces to ((1 - p)/p)^L (1 - p)^{-k_b}.
    """
    q = 1.0 - p
    k = local_extrema(b).k
    prefactor = (p / q) ** b.L * (q / p) ** k * p**-k
    return prefactor * math.prod(lemma_comb(r - 1, q) for r in _runs(b))


def geometric_partition(L: int, p: float) -> float:
    return math.fsum(geometric_bridge_sum(b, p) for b in enumerate_bridges(L))


# =============================================================================
# Continuous densities
# =============================================================================


def _sqrt_f0(fam: DensityFamily, x: float) -> float:
    if x <= 0:
        return 0.0
    lam = fam.rate
    if lam is not None:
        return math.sqrt(lam) * math.exp(-lam * x / 2.0)
    return math.exp(0.5 * float(fam.f0.logpdf(x)))


def sqrt_integral(fam: DensityFamily) -> float:
    """∫₀^∞ √f₀(x) dx.

    Raises:
        DivergentSqrtSum: when quadrature cannot certify a finite value.
    """
    lam = fam.rate
    if lam is not None:
        return 2.0 / math.sqrt(lam)
    value, err = integrate.quad(lambda x: _sqrt_f0(fam, x), 0.0, np.inf, limit=200)
    if not math.isfinite(value) or err > QUADRATURE_TOL * max(value, 1.0):
        raise DivergentSqrtSum(f"∫√f₀ cannot be certified finite for {fam.label}")
    return value


def _max_pair_integral(fam: DensityFamily, a: float, c: float) -> float:
    lam = fam.rate
    if lam is not None:
        return math.exp(-lam * (a + c) / 2.0)
    value, err = integrate.quad(lambda s: _sqrt_f0(fam, s + a) * _sqrt_f0(fam, s + c), 0.0, np.inf, limit=200)
    if err > QUADRATURE_TOL * max(value, 1.0):
        raise QuadratureFailure(f"{fam.label}: max-pair integral error {err:.2g}")
    return value


def continuous_density_g(b: Bridge, t: Sequence[float], fam: DensityFamily) -> float:
    """Unnormalized stationary density of (b, t) against the free-coordinate Lebesgue measure."""
    n = b.size
    value = 1.0
    for i in range(n):
        left, right = _pair_kind(b, i)
        a, c = float(t[i]), float(t[(i + 1) % n])
        if left == right:
            if (left == UP and not a < c) or (left == DOWN and not a > c):
                return 0.0
            value *= _sqrt_f0(fam, abs(c - a))
        elif left == UP:
            value *= _max_pair_integral(fam, a, c)
        elif a != c:
            return 0.0
    return value


def _free_layout(b: Bridge) -> Tuple[Bridge, List[int]]:
    """Rotate ``b`` so edge 0 is free; edges right of a minimum copy their left neighbour's age."""
    n = b.size
    shift = next(i for i in range(n) if not (b[i - 1] == DOWN and b[i] == UP))
    rotated = b.rotate(shift)
    free = [i for i in range(n) if not (rotated[i - 1] == DOWN and rotated[i] == UP)]
    return rotated, free


def _expand(b: Bridge, free: List[int], coords: Sequence[float]) -> List[float]:
    t: List[float] = []
    it = iter(coords)
    for i in range(b.size):
        t.append(next(it) if i in free else t[i - 1])
    return t


def _age_horizon(fam: DensityFamily, L: int) -> float:
    return 2.0 * L * float(fam.f0.isf(1e-18))


def _bridge_integral(b: Bridge, fam: DensityFamily) -> Tuple[float, float]:
    rotated, free = _free_layout(b)
    m = len(free)
    n = rotated.size
    horizon = _age_horizon(fam, b.L)

    def bounds(j: int, rest: Sequence[float]) -> Tuple[float, float]:
        lo, hi = 0.0, horizon
        i = free[j]
        if j >= 1:
            prev = rest[0]
            kind = _pair_kind(rotated, i - 1)
            if kind == (UP, UP):
                lo = max(lo, prev)
            elif kind == (DOWN, DOWN):
                hi = min(hi, prev)
        if j == m - 1 and m >= 2:
            first = rest[-1]
            kind = _pair_kind(rotated, n - 1)
            if kind == (UP, UP):
                hi = min(hi, first)
            elif kind == (DOWN, DOWN):
                lo = max(lo, first)
        return (lo, max(lo, hi))

    ranges = [(lambda *rest, j=m - 1 - k: bounds(j, rest)) for k in range(m)]

    def integrand(*xs: float) -> float:
        return continuous_density_g(rotated, _expand(rotated, free, xs[::-1]), fam)

    value, err = integrate.nquad(integrand, ranges, opts={"epsabs": 1e-14, "epsrel": 1e-11, "limit": 100})
    if err > QUADRATURE_TOL * max(value, 1.0):
        raise QuadratureFailure(f"{b.code}: nested quadrature error {err:.2g}")
    return value, err


def _bridge_monte_carlo(b: Bridge, fam: DensityFamily, n_samples: int, rng: np.random.Generator) -> Tuple[float, float]:
    rotated, free = _free_layout(b)
    rate = 1.0 / (b.L * float(fam.f0.mean()))
    coords = rng.exponential(1.0 / rate, size=(n_samples, len(free)))
    proposal = np.prod(rate * np.exp(-rate * coords), axis=1)
    values = np.array([continuous_density_g(rotated, _expand(rotated, free, row), fam) for row in coords])
    ratios = values / proposal
    return float(ratios.mean()), float(ratios.std(ddof=1) / math.sqrt(n_samples))


@dataclass(frozen=True)
class ContinuousLaw:
    L: int
    family: str
    Z: float
    error: float
    bridge_integrals: Dict[str, float]
    method: str

    @property
    def nu(self) -> Dict[str, float]:
        return {code: v / self.Z for code, v in self.bridge_integrals.items()}


def continuous_law(
    L: int, fam: DensityFamily, n_samples: int = 200_000, seed: Optional[int] = None
) -> ContinuousLaw:
    """Z and the bridge marginal of the continuous stationary density.

    Nested quadrature for L <= 2, importance-sampled Monte Carlo (error =
    one standard error, summed over bridges) for L = 3.

    Raises:
        DivergentSqrtSum: when ∫√f₀ is not certified finite.
    """
    if L > 3:
        raise ConfigError(f"continuous integration supports L <= 3, got {L}")
    sqrt_integral(fam)
    integrals, errors = {}, []
    if L <= 2:
        method = "quadrature"
        for b in enumerate_bridges(L):
            integrals[b.code], err = _bridge_integral(b, fam)
            errors.append(err)
    else:
        method = "monte_carlo"
        rng = make_rng(resolve_seed(seed))
        for b in enumerate_bridges(L):
            integrals[b.code], err = _bridge_monte_carlo(b, fam, n_samples, rng)
            errors.append(err)
    Z = math.fsum(integrals.values())
    logger.debug(f"continuous_law L={L} {fam.label} ({method}): Z={Z:.12g}")
    return ContinuousLaw(L, fam.label, Z, math.fsum(errors), integrals, method)


def continuous_Z(L: int, fam: DensityFamily, **kwargs) -> Tuple[float, float]:
    """(Z_L, its error) for a density family with a certified finite ∫√f₀."""
    law = continuous_law(L, fam, **kwargs)
    return law.Z, law.error
