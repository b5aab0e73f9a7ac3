"""The front-line Markov chain: one-step dynamics, simulation and ergodic estimators.

Discrete time: every edge ages by one per step, except that each local
maximum (b_i=+1, b_{i+1}=-1) independently flips to a local minimum with
ages (0, 0) with probability p_m^δ, where m is the smaller of its two ages and
δ their difference. Continuous time is event driven: when a maximum forms,
one waiting time is drawn from f(δ, ·) and the flip is scheduled.
"""

from __future__ import annotations

import heapq
import itertools
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial, reduce
from typing import Dict, Iterator, List, Optional, Protocol, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from glpp.bridges import DOWN, UP, Bridge, TimedBridge, local_extrema
from glpp.core import (
    CertificateFailure,
    ConfigError,
    EventBudgetExceeded,
    InsufficientSamples,
    TimeMode,
)
from glpp.draws import UniformField
from glpp.measures import (
    DensityFamily,
    MeasureFamily,
    check_cond_conv_continuous,
    check_noexplosion,
    sample,
)
from glpp.utils import UniformStream, batch_means, make_rng, resolve_seed, spawn_seeds, warn_once

N_BATCHES = 50


# =============================================================================
# State and one-step kernel
# =============================================================================


@dataclass(frozen=True)
class FrontChainState:
    timed: TimedBridge
    clock: float = 0
    mode: TimeMode = TimeMode.DISCRETE

    @classmethod
    def initial(cls, L: int, mode: TimeMode = TimeMode.DISCRETE) -> "FrontChainState":
        """Alternating bridge with zero ages: row 0 of the cylinder has just arrived."""
        zero = 0.0 if mode is TimeMode.CONTINUOUS else 0
        return cls(TimedBridge(Bridge.alternating(L), (zero,) * (2 * L)), zero, mode)


def flip_probability(m: int, delta: int, fam: MeasureFamily) -> float:
    """p_m^δ = μ_δ(1+m) / Σ_{s>=1} μ_δ(s+m)."""
    return fam.at(delta).hazard(m)


class HazardTable:
    """Memoized p_m^δ for one family."""

    def __init__(self, fam: MeasureFamily):
        self.fam = fam
        self._values: Dict[Tuple[int, int], float] = {}

    def __call__(self, m: int, delta: int) -> float:
        key = (m, delta)
        value = self._values.get(key)
        if value is None:
            value = self._values[key] = flip_probability(m, delta, self.fam)
        return value


class FlipDecider(Protocol):
    def decide(self, i: int, m: int, delta: int) -> bool: ...

    def flipped(self, i: int) -> None: ...


class HazardDecider:
    """Flip the maximum at edge ``i`` when a fresh uniform falls below p_m^δ."""

    def __init__(self, fam: MeasureFamily, rng: np.random.Generator | UniformStream):
        self.hazard = HazardTable(fam)
        self.stream = rng if isinstance(rng, UniformStream) else UniformStream(rng)

    def decide(self, i: int, m: int, delta: int) -> bool:
        return self.stream.next() < self.hazard(m, delta)

    def flipped(self, i: int) -> None:
        pass


class SharedDrawDecider:
    """Decide flips from the per-cell uniforms the growth engine uses.

    The pending cell of the maximum at edges (i, i+1) sits in column i+1, two
    rows above that column's top arrived cell. Its waiting time is the
    inverse-cdf draw of that cell's uniform; the flip happens exactly when
    the elapsed minimum age reaches it.
    """

    def __init__(self, fam: MeasureFamily, draws: UniformField, L: int):
        self.fam = fam
        self.draws = draws
        self.size = 2 * L
        self.tops = [0 if x % 2 == 0 else -1 for x in range(self.size)]

    def decide(self, i: int, m: int, delta: int) -> bool:
        col = (i + 1) % self.size
        u = self.draws.cylinder(col, self.tops[col] + 2)
        return sample(self.fam.at(delta), u) == m + 1

    def flipped(self, i: int) -> None:
        self.tops[(i + 1) % self.size] += 2


def _as_decider(randomness, fam: MeasureFamily) -> FlipDecider:
    if hasattr(randomness, "decide"):
        return randomness
    return HazardDecider(fam, randomness)


def _max_pair_stats(t: Tuple[int, ...], i: int, j: int) -> Tuple[int, int]:
    ti, tj = t[i], t[j]
    return (ti if ti < tj else tj), abs(ti - tj)


def step_discrete(state: FrontChainState, fam: MeasureFamily, randomness) -> FrontChainState:
    """Advance the discrete chain by one step.

    Args:
        state: current state (discrete mode).
        fam: waiting-time family.
        randomness: a numpy Generator, a UniformStream or a FlipDecider.

    Returns:
        The state one step later.
    """
    decider = _as_decider(randomness, fam)
    b = state.timed.bridge
    t = state.timed.ages
    n = b.size
    new_b = list(b.steps)
    new_t = [a + 1 for a in t]
    for i in local_extrema(b).maxima:
        j = (i + 1) % n
        m, delta = _max_pair_stats(t, i, j)
        if decider.decide(i, m, delta):
            new_b[i], new_b[j] = DOWN, UP
            new_t[i] = new_t[j] = 0
            decider.flipped(i)
    timed = TimedBridge(Bridge(tuple(new_b)), tuple(new_t))
    assert timed.check(), f"invalid front line after step: {timed.to_dict()}"
    return FrontChainState(timed, state.clock + 1, TimeMode.DISCRETE)


def iterate_chain(
    fam: MeasureFamily, randomness, steps: int, state: Optional[FrontChainState] = None, L: int = 1
) -> Iterator[FrontChainState]:
    """Yield the states at clocks 0, 1, ..., steps."""
    state = state or FrontChainState.initial(L)
    decider = _as_decider(randomness, fam)
    yield state
    for _ in range(steps):
        state = step_discrete(state, fam, decider)
        yield state


def successors(timed: TimedBridge, fam: MeasureFamily) -> List[Tuple[TimedBridge, float]]:
    """All one-step successors with their probabilities (2^k for k maxima)."""
    b, t = timed.bridge, timed.ages
    n = b.size
    maxima = local_extrema(b).maxima
    probs = []
    for i in maxima:
        m, delta = _max_pair_stats(t, i, (i + 1) % n)
        probs.append(flip_probability(m, delta, fam))
    out = []
    for pattern in itertools.product((False, True), repeat=len(maxima)):
        new_b = list(b.steps)
        new_t = [a + 1 for a in t]
        prob = 1.0
        for flip, i, p in zip(pattern, maxima, probs):
            if flip:
                j = (i + 1) % n
                new_b[i], new_b[j] = DOWN, UP
                new_t[i] = new_t[j] = 0
                prob *= p
            else:
                prob *= 1.0 - p
        out.append((TimedBridge(Bridge(tuple(new_b)), tuple(new_t)), prob))
    return out


def transition_prob(src: TimedBridge, dst: TimedBridge, fam: MeasureFamily) -> float:
    """Exact one-step probability; zero when ``dst`` is not reachable from ``src``."""
    b, t = src.bridge, src.ages
    n = b.size
    if dst.bridge.size != n:
        return 0.0
    maxima = local_extrema(b).maxima
    in_max = {i for i in maxima} | {(i + 1) % n for i in maxima}
    for e in range(n):
        if e in in_max:
            continue
        if dst.bridge[e] != b[e] or dst.ages[e] != t[e] + 1:
            return 0.0
    prob = 1.0
    for i in maxima:
        j = (i + 1) % n
        m, delta = _max_pair_stats(t, i, j)
        p = flip_probability(m, delta, fam)
        if (dst.bridge[i], dst.bridge[j]) == (DOWN, UP) and dst.ages[i] == 0 and dst.ages[j] == 0:
            prob *= p
        elif (dst.bridge[i], dst.bridge[j]) == (UP, DOWN) and dst.ages[i] == t[i] + 1 and dst.ages[j] == t[j] + 1:
            prob *= 1.0 - p
        else:
            return 0.0
    return prob


def foster_drift(timed: TimedBridge, fam: MeasureFamily) -> float:
    """E[l(next)] - l(now) for the Lyapunov function l(b, t) = Σ t_i."""
    now = sum(timed.ages)
    return sum(p * sum(nxt.ages) for nxt, p in successors(timed, fam)) - now


# =============================================================================
# Discrete simulation
# =============================================================================


@dataclass
class Trajectory:
    """Streaming statistics of one discrete run (post burn-in)."""

    L: int
    family: str
    seed: int
    steps: int
    burn_in: int
    bridge_counts: Dict[str, int]
    t1: np.ndarray
    arrivals: np.ndarray
    final: Optional[FrontChainState] = None
    log: Optional[pd.DataFrame] = field(default=None, repr=False)

    @property
    def samples(self) -> int:
        return int(self.t1.size)

    def bridge_law(self) -> Dict[str, float]:
        total = sum(self.bridge_counts.values())
        return {code: count / total for code, count in sorted(self.bridge_counts.items())}

    def merge(self, other: "Trajectory") -> "Trajectory":
        """Pool two replicas of the same configuration."""
        if (self.L, self.family) != (other.L, other.family):
            raise ConfigError("cannot merge trajectories of different configurations")
        counts = Counter(self.bridge_counts)
        counts.update(other.bridge_counts)
        return replace(
            self,
            steps=self.steps + other.steps,
            burn_in=self.burn_in + other.burn_in,
            bridge_counts=dict(counts),
            t1=np.concatenate([self.t1, other.t1]),
            arrivals=np.concatenate([self.arrivals, other.arrivals]),
            final=other.final,
            log=None,
        )


def simulate_discrete(
    L: int,
    fam: MeasureFamily,
    steps: int,
    burn_in: Optional[int] = None,
    seed: Optional[int] = None,
    record: bool = False,
) -> Trajectory:
    """Run the discrete chain from the alternating zero-age state.

    Args:
        L: half the cylinder circumference.
        fam: waiting-time family.
        steps: total number of steps.
        burn_in: discarded leading steps (default 10% of ``steps``).
        seed: reproducibility seed (falls back to GLPP_SEED, then 0).
        record: keep a per-step log (step, bridge, t1, flips).

    Returns:
        The run's streaming statistics.
    """
    if burn_in is None:
        burn_in = steps // 10
    if steps < 1 or not 0 <= burn_in < steps:
        raise ConfigError(f"need steps > burn_in >= 0, got steps={steps}, burn_in={burn_in}")
    seed = resolve_seed(seed)
    stream = UniformStream(make_rng(seed))
    hazard = HazardTable(fam)
    n = 2 * L
    b = [UP, DOWN] * L
    t = [0] * n
    kept = steps - burn_in
    t1 = np.empty(kept, dtype=np.int64)
    arrivals = np.empty(kept, dtype=np.int16)
    counts: Counter = Counter()
    rows: List[Tuple[int, str, int, int]] = []
    pairs = [(i, (i + 1) % n) for i in range(n)]
    logger.debug(f"simulate_discrete L={L} family={fam.label} steps={steps} burn_in={burn_in} seed={seed}")
    for step in range(1, steps + 1):
        new_b = b[:]
        new_t = [a + 1 for a in t]
        flips = 0
        for i, j in pairs:
            if b[i] == UP and b[j] == DOWN:
                ti, tj = t[i], t[j]
                if ti < tj:
                    m, delta = ti, tj - ti
                else:
                    m, delta = tj, ti - tj
                if stream.next() < hazard(m, delta):
                    new_b[i] = DOWN
                    new_b[j] = UP
                    new_t[i] = new_t[j] = 0
                    flips += 1
        b, t = new_b, new_t
        if step > burn_in:
            k = step - burn_in - 1
            counts[tuple(b)] += 1
            t1[k] = t[0]
            arrivals[k] = flips
            if record:
                rows.append((step, Bridge(tuple(b)).code, t[0], flips))
    final = FrontChainState(TimedBridge(Bridge(tuple(b)), tuple(t)), steps)
    log = pd.DataFrame(rows, columns=["step", "bridge", "t1", "flips"]) if record else None
    return Trajectory(
        L=L,
        family=fam.label,
        seed=seed,
        steps=steps,
        burn_in=burn_in,
        bridge_counts={Bridge(k).code: v for k, v in counts.items()},
        t1=t1,
        arrivals=arrivals,
        final=final,
        log=log,
    )


def _replica_seed(child: np.random.SeedSequence) -> int:
    return int(child.generate_state(1)[0])


def simulate_replicas(
    L: int,
    fam: MeasureFamily,
    steps: int,
    replicas: int,
    burn_in: Optional[int] = None,
    seed: Optional[int] = None,
    jobs: int = 1,
) -> Trajectory:
    """Independent runs from seeds spawned off ``seed``, pooled in replica order."""
    if replicas < 1:
        raise ConfigError("replicas must be positive")
    seed = resolve_seed(seed)
    seeds = [_replica_seed(child) for child in spawn_seeds(seed, replicas)]
    if jobs > 1 and replicas > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, replicas)) as pool:
            runs = list(pool.map(partial(simulate_discrete, L, fam, steps, burn_in), seeds))
    else:
        runs = [simulate_discrete(L, fam, steps, burn_in, s) for s in seeds]
    pooled = reduce(Trajectory.merge, runs)
    return replace(pooled, seed=seed)


@dataclass(frozen=True)
class SpeedEstimate:
    """Growth-speed estimates from one trajectory, with batch-means standard errors."""

    c_from_ages: float
    se_ages: float
    c_from_growth: float
    se_growth: float
    size_biased: float
    se_size_biased: float
    mean_t1: float
    se_mean_t1: float
    samples: int

    def agree(self, z: float = 3.0) -> bool:
        spread = math.hypot(self.se_ages, self.se_growth)
        return abs(self.c_from_ages - self.c_from_growth) <= z * spread + 1e-12

    def to_dict(self) -> Dict[str, float]:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def estimate_speed(traj: Trajectory) -> SpeedEstimate:
    """Renewal and growth estimates of c_L, plus the size-biased 1/(2E[T₁]+1) diagnostic.

    Raises:
        InsufficientSamples: fewer than two samples per batch.
    """
    if traj.samples < 2 * N_BATCHES:
        raise InsufficientSamples(f"{traj.samples} post burn-in steps; need at least {2 * N_BATCHES}")
    c_ages, se_ages = batch_means((traj.t1 == 0).astype(float), N_BATCHES)
    growth, se_growth = batch_means(traj.arrivals.astype(float), N_BATCHES)
    mean_t1, se_t1 = batch_means(traj.t1.astype(float), N_BATCHES)
    size_biased = 1.0 / (2.0 * mean_t1 + 1.0)
    return SpeedEstimate(
        c_from_ages=c_ages,
        se_ages=se_ages,
        c_from_growth=growth / traj.L,
        se_growth=se_growth / traj.L,
        size_biased=size_biased,
        se_size_biased=2.0 * se_t1 * size_biased**2,
        mean_t1=mean_t1,
        se_mean_t1=se_t1,
        samples=traj.samples,
    )


# =============================================================================
# Continuous time
# =============================================================================


def flip_rate(m: float, delta: float, fam: DensityFamily) -> float:
    """β_m^δ = f_δ(m) / ∫ f_δ(s + m) ds."""
    return fam.hazard(delta, m)


@dataclass
class ContinuousTrajectory:
    L: int
    family: str
    seed: int
    horizon: float
    burn_in: float
    sample_every: float
    bridge_time: Dict[str, float]
    sampled_bridges: Dict[str, int]
    t1_samples: np.ndarray
    events: int
    max_rate: float
    event_log: Optional[pd.DataFrame] = field(default=None, repr=False)

    def occupancy(self) -> Dict[str, float]:
        total = sum(self.bridge_time.values())
        return {code: v / total for code, v in sorted(self.bridge_time.items())}


def _certify_continuous(fam: DensityFamily, force: bool) -> None:
    cert = check_noexplosion(fam, eps=0.1, delta_max=10.0)
    if cert.passed:
        logger.debug(f"{fam.label}: no-explosion certificate sup={cert.value:.6g} at ε=0.1")
        return
    conv = check_cond_conv_continuous(fam, delta_max=10.0, t_max=10.0)
    if conv.passed:
        warn_once(f"{fam.label}: only the hazard lower bound is certified; running without a no-explosion certificate")
        return
    if not force:
        raise CertificateFailure(f"{fam.label}: no-explosion certificate failed (sup={cert.value:.6g})")
    warn_once(f"{fam.label}: certificates failed; continuing because force was requested")


def simulate_continuous(
    L: int,
    fam: DensityFamily,
    horizon: float,
    seed: Optional[int] = None,
    burn_in: Optional[float] = None,
    sample_every: float = 1.0,
    max_events: Optional[int] = None,
    force: bool = False,
    record_events: bool = False,
) -> ContinuousTrajectory:
    """Event-driven continuous-time chain up to ``horizon``.

    Each maximum draws its absolute waiting time once, when it forms; between
    events all ages grow linearly. Ages and bridges are also sampled every
    ``sample_every`` time units after ``burn_in``.

    Raises:
        CertificateFailure: when neither condition can be certified and ``force`` is unset.
        EventBudgetExceeded: when more than ``max_events`` flips occur.
    """
    if horizon <= 0:
        raise ConfigError("horizon must be positive")
    _certify_continuous(fam, force)
    seed = resolve_seed(seed)
    if burn_in is None:
        burn_in = 0.1 * horizon
    if max_events is None:
        max_events = int(100 * L * (horizon + 10))
    stream = UniformStream(make_rng(seed))
    n = 2 * L
    b = [UP, DOWN] * L
    birth = [0.0] * n
    heap: List[Tuple[float, int]] = []

    def schedule(i: int, now: float) -> None:
        j = (i + 1) % n
        delta = abs(birth[i] - birth[j])
        heapq.heappush(heap, (now + fam.sample(delta, stream.next()), i))

    for i in range(0, n, 2):
        schedule(i, 0.0)

    code = Bridge(tuple(b)).code
    bridge_time: Dict[str, float] = Counter()
    sampled: Counter = Counter()
    t1: List[float] = []
    log: List[Tuple[float, int]] = []
    bins: Counter = Counter()
    events = 0
    now = 0.0
    next_sample = burn_in
    last_time = -1.0

    def advance(until: float) -> None:
        nonlocal next_sample
        lo = max(now, burn_in)
        if until > lo:
            bridge_time[code] += until - lo
        while next_sample <= until:
            sampled[code] += 1
            t1.append(next_sample - birth[0])
            next_sample += sample_every

    while heap and heap[0][0] <= horizon:
        time, i = heapq.heappop(heap)
        if time == last_time:
            logger.debug(f"simultaneous flips at t={time}; edge {i} after lower indices")
        advance(time)
        j = (i + 1) % n
        b[i], b[j] = DOWN, UP
        birth[i] = birth[j] = time
        code = Bridge(tuple(b)).code
        events += 1
        bins[int(time)] += 1
        if record_events:
            log.append((time, i))
        if events > max_events:
            raise EventBudgetExceeded(f"{events} flips before t={time:.6g}; the family may explode")
        formed = set()
        left = (i - 1) % n
        if b[left] == UP:
            formed.add(left)
        if b[(j + 1) % n] == DOWN:
            formed.add(j)
        for k in sorted(formed):
            schedule(k, time)
        now = last_time = time
    advance(horizon)
    max_rate = float(max(bins.values())) if bins else 0.0
    logger.debug(f"simulate_continuous: {events} events, peak {max_rate:.0f} per unit time")
    return ContinuousTrajectory(
        L=L,
        family=fam.label,
        seed=seed,
        horizon=horizon,
        burn_in=burn_in,
        sample_every=sample_every,
        bridge_time=dict(bridge_time),
        sampled_bridges=dict(sampled),
        t1_samples=np.asarray(t1),
        events=events,
        max_rate=max_rate,
        event_log=pd.DataFrame(log, columns=["time", "edge"]) if record_events else None,
    )
