"""Brute-force reference values: truncated transition matrices, power iteration and distances.

Nothing here touches the closed-form machinery; transition probabilities are
recomputed from the flip rule of the chain and tail sums of the family.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Mapping, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger
from scipy import sparse, stats

from glpp.bridges import DOWN, UP, Bridge, MAX_TIMED_CAP, MAX_TIMED_L, enumerate_timed_truncated
from glpp.chain import HazardTable
from glpp.core import (
    ClosurePolicy,
    ExcessLeak,
    NoConvergence,
    StateSpaceTooLarge,
    SupportMismatch,
)
from glpp.measures import DiscreteMeasure, MeasureFamily

StateKey = Tuple[Tuple[int, ...], Tuple[int, ...]]

MAX_ORACLE_STATES = 500_000
LEAK_TOL = 1e-8


def _transitions(key: StateKey, hazard: HazardTable, clip: int | None) -> Iterator[Tuple[StateKey, float]]:
    steps, ages = key
    n = len(steps)
    maxima = [i for i in range(n) if steps[i] == UP and steps[(i + 1) % n] == DOWN]
    probs = []
    for i in maxima:
        a, c = ages[i], ages[(i + 1) % n]
        probs.append(hazard(min(a, c), abs(a - c)))
    for pattern in itertools.product((False, True), repeat=len(maxima)):
        new_steps = list(steps)
        new_ages = [a + 1 for a in ages]
        prob = 1.0
        for flip, i, p in zip(pattern, maxima, probs):
            if flip:
                j = (i + 1) % n
                new_steps[i], new_steps[j] = DOWN, UP
                new_ages[i] = new_ages[j] = 0
                prob *= p
            else:
                prob *= 1.0 - p
        if clip is not None:
            new_ages = [min(a, clip) for a in new_ages]
        yield (tuple(new_steps), tuple(new_ages)), prob


@dataclass
class TruncatedChain:
    """Row-stochastic matrix over an enumerated set of timed bridges.

    Attributes:
        states: (steps, ages) keys; rows and columns follow this order.
        matrix: CSR matrix, ``matrix[i, j]`` = P(state i -> state j).
        leak: mass per row that left the enumerated set before renormalization.
        in_cap: mask of states whose ages all lie within the cap.
    """

    L: int
    T_cap: int
    policy: ClosurePolicy
    family: str
    states: List[StateKey]
    matrix: sparse.csr_matrix = field(repr=False)
    leak: np.ndarray = field(repr=False)
    in_cap: np.ndarray = field(repr=False)

    @property
    def n_states(self) -> int:
        return len(self.states)

    def to_frame(self) -> pd.DataFrame:
        """Coordinate list (source, target, probability) with bridge/age labels."""
        coo = self.matrix.tocoo()
        label = [f"{Bridge(s).code}|{','.join(map(str, a))}" for s, a in self.states]
        return pd.DataFrame(
            {
                "source": [label[i] for i in coo.row],
                "target": [label[j] for j in coo.col],
                "probability": coo.data,
            }
        )


def truncated_transition_matrix(
    L: int,
    fam: MeasureFamily,
    T_cap: int,
    policy: ClosurePolicy = ClosurePolicy.LEAK_AND_RENORMALIZE,
    max_states: int = MAX_ORACLE_STATES,
) -> TruncatedChain:
    """Exact one-step kernel restricted to ages <= T_cap.

    With ``LEAK_AND_RENORMALIZE`` mass leaving the cap is dropped and each row
    renormalized. With ``REFLECT_TO_CAP`` ages above the cap are clipped to
    T_cap + 1 and the clipped states are added to the space; for memoryless
    families this lumping is exact.

    Raises:
        StateSpaceTooLarge: outside L <= 3, T_cap <= 60, or beyond ``max_states``.
    """
    if L > MAX_TIMED_L or T_cap > MAX_TIMED_CAP:
        raise StateSpaceTooLarge(f"oracle supports L <= {MAX_TIMED_L}, T_cap <= {MAX_TIMED_CAP}")
    hazard = HazardTable(fam)
    states: List[StateKey] = [(s.bridge.steps, tuple(int(a) for a in s.ages)) for s in enumerate_timed_truncated(L, T_cap)]
    index: Dict[StateKey, int] = {key: i for i, key in enumerate(states)}
    clip = T_cap + 1 if policy is ClosurePolicy.REFLECT_TO_CAP else None
    rows: List[int] = []
    cols: List[int] = []
    vals: List[float] = []
    leak: List[float] = []
    i = 0
    while i < len(states):
        lost = 0.0
        for key, prob in _transitions(states[i], hazard, clip):
            j = index.get(key)
            if j is None:
                if clip is None:
                    lost += prob
                    continue
                j = index[key] = len(states)
                states.append(key)
                if len(states) > max_states:
                    raise StateSpaceTooLarge(f"more than {max_states} states in the closure")
            rows.append(i)
            cols.append(j)
            vals.append(prob)
        leak.append(lost)
        i += 1
    leak_arr = np.asarray(leak)
    values = np.asarray(vals)
    if clip is None:
        values = values / (1.0 - leak_arr[np.asarray(rows, dtype=np.int64)])
    n = len(states)
    matrix = sparse.csr_matrix((values, (rows, cols)), shape=(n, n))
    in_cap = np.array([max(a) <= T_cap for _, a in states])
    logger.debug(f"oracle L={L} T_cap={T_cap} {policy.value}: {n} states, {matrix.nnz} transitions, max row leak {leak_arr.max():.3g}")
    return TruncatedChain(L, T_cap, policy, fam.label, states, matrix, leak_arr, in_cap)


@dataclass(frozen=True)
class PowerIteration:
    vector: np.ndarray
    iterations: int
    residual: float


def stationarity_residual(matrix, vector: np.ndarray) -> float:
    """‖vK - v‖₁."""
    return float(np.abs(matrix.T @ vector - vector).sum())


def power_iterate_stationary(matrix, tol: float = 1e-12, max_iters: int = 10_000) -> PowerIteration:
    """Left fixed point of a row-stochastic matrix by repeated multiplication.

    Raises:
        NoConvergence: when ‖πK - π‖₁ stays above ``tol`` after ``max_iters`` steps.
    """
    mat = sparse.csr_matrix(matrix)
    transposed = mat.T.tocsr()
    n = mat.shape[0]
    pi = np.full(n, 1.0 / n)
    for it in range(1, max_iters + 1):
        nxt = transposed @ pi
        nxt /= nxt.sum()
        diff = float(np.abs(nxt - pi).sum())
        pi = nxt
        if diff <= tol:
            return PowerIteration(pi, it, stationarity_residual(mat, pi))
    raise NoConvergence(f"power iteration did not reach {tol:g} in {max_iters} iterations (last change {diff:.3g})")


@dataclass
class OracleLaw:
    chain: TruncatedChain
    pi: np.ndarray
    iterations: int
    residual: float

    @property
    def stationary_leak(self) -> float:
        """Σ_i π_i leak_i."""
        return float(np.dot(self.pi, self.chain.leak))

    def in_cap_law(self) -> Dict[StateKey, float]:
        """π restricted to states with ages <= T_cap, renormalized."""
        mask = self.chain.in_cap
        total = math.fsum(self.pi[mask])
        return {key: float(p) / total for key, p, keep in zip(self.chain.states, self.pi, mask) if keep}

    def bridge_marginal(self) -> Dict[str, float]:
        out: Dict[str, float] = {}
        for (steps, _), p in zip(self.chain.states, self.pi):
            code = Bridge(steps).code
            out[code] = out.get(code, 0.0) + float(p)
        return dict(sorted(out.items()))

    def to_dict(self) -> Dict[str, object]:
        return {
            "L": self.chain.L,
            "family": self.chain.family,
            "T_cap": self.chain.T_cap,
            "policy": self.chain.policy.value,
            "states": self.chain.n_states,
            "iterations": self.iterations,
            "residual": self.residual,
            "stationary_leak": self.stationary_leak,
            "nu": self.bridge_marginal(),
        }


def oracle_stationary(
    L: int,
    fam: MeasureFamily,
    T_cap: int,
    policy: ClosurePolicy = ClosurePolicy.LEAK_AND_RENORMALIZE,
    tol: float = 1e-12,
    max_iters: int = 10_000,
    leak_tol: float = LEAK_TOL,
) -> OracleLaw:
    """Stationary vector of the truncated chain.

    Raises:
        ExcessLeak: under leak-and-renormalize, when the stationary leak exceeds ``leak_tol``.
    """
    chain = truncated_transition_matrix(L, fam, T_cap, policy)
    result = power_iterate_stationary(chain.matrix, tol=tol, max_iters=max_iters)
    law = OracleLaw(chain, result.vector, result.iterations, result.residual)
    if policy is ClosurePolicy.LEAK_AND_RENORMALIZE and law.stationary_leak > leak_tol:
        raise ExcessLeak(f"stationary leak {law.stationary_leak:.3g} exceeds {leak_tol:g}; raise T_cap or reflect")
    logger.debug(f"oracle stationary after {result.iterations} iterations, residual {result.residual:.3g}")
    return law


# =============================================================================
# Edge LPP by enumeration
# =============================================================================


def edge_lpp_enumeration(mu: DiscreteMeasure, delta: int) -> np.ndarray:
    """Law of max(ζ₁, Δ + ζ₂) - Δ over 1..cap by summing every pair of the support of μ."""
    out = np.zeros(mu.cap)
    for i in range(1, mu.cap + 1):
        for j in range(1, mu.cap + 1):
            value = max(i, delta + j) - delta
            if value <= mu.cap:
                out[value - 1] += mu.mass(i) * mu.mass(j)
    return out


# =============================================================================
# Distances
# =============================================================================


def tv_distance(p: Mapping | Sequence[float], q: Mapping | Sequence[float], fill_missing: bool = False) -> float:
    """Total variation ½ Σ |p - q| between two laws on the same finite support."""
    if isinstance(p, Mapping) and isinstance(q, Mapping):
        keys = set(p) | set(q)
        if not fill_missing and set(p) != set(q):
            raise SupportMismatch(f"supports differ on {len(set(p) ^ set(q))} points")
        return 0.5 * math.fsum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)
    a, b = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    if a.shape != b.shape:
        raise SupportMismatch(f"vectors of shapes {a.shape} and {b.shape}")
    return 0.5 * math.fsum(np.abs(a - b))


def ks_statistic(samples: Sequence[float], cdf) -> float:
    """Kolmogorov-Smirnov distance between the empirical law of ``samples`` and ``cdf``."""
    return float(stats.kstest(np.asarray(samples, dtype=float), cdf).statistic)
