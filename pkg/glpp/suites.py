"""Named verification suites: each criterion cross-checks two independent routes.

``desk`` runs every criterion at full size; ``quick`` shrinks sample sizes
and caps so the whole suite finishes in well under a minute, with
tolerances widened to match.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np
from loguru import logger
from scipy import stats

from glpp.bridges import Bridge, TimedBridge, enumerate_bridges, random_timed
from glpp.chain import estimate_speed, simulate_continuous, simulate_discrete
from glpp.core import ClosurePolicy, ConfigError, GLPPError, WeightForm
from glpp.exact import (
    SqrtProfile,
    geometric_closed_form,
    lemma_comb,
    lemma_comb_partial,
    speed_exact,
    stationary_law,
    weight_W,
)
from glpp.growth import first_chain_mismatch, geometric_shape, grow_quarter_plane
from glpp.measures import (
    DensityFamily,
    DiscreteMeasure,
    check_noexplosion,
    make_constant_family,
    make_edge_lpp_family,
    make_integrable_family,
    perturb_family,
)
from glpp.oracle import edge_lpp_enumeration, ks_statistic, oracle_stationary, tv_distance
from glpp.pca import (
    IntegrableKernels,
    check_belyaev,
    check_stable_identity,
    hzmm_front_weight,
    space_time_matches_growth,
    survival_factors,
)
from glpp.utils import make_rng, resolve_seed, spawn_seeds


@dataclass(frozen=True)
class SuiteScale:
    oracle_ps: tuple = (0.3, 0.5, 0.7)
    oracle_cap: int = 40
    speed_steps: int = 1_000_000
    speed_tol: float = 0.005
    marginal_steps: int = 1_000_000
    marginal_burn_in: int = 100_000
    marginal_tol: float = 0.01
    bridges_per_family: int = 1000
    shape_n: int = 500
    shape_seeds: int = 20
    shape_tol: float = 0.05
    continuous_horizon: float = 100_000.0
    ks_tol: float = 0.02
    coupling_steps: int = 10_000


SCALES: Dict[str, SuiteScale] = {
    "desk": SuiteScale(),
    "quick": SuiteScale(
        oracle_ps=(0.5,),
        oracle_cap=20,
        speed_steps=200_000,
        speed_tol=0.015,
        marginal_steps=200_000,
        marginal_burn_in=20_000,
        marginal_tol=0.02,
        bridges_per_family=100,
        shape_n=150,
        shape_seeds=4,
        shape_tol=0.08,
        continuous_horizon=20_000.0,
        ks_tol=0.03,
        coupling_steps=1_000,
    ),
}


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    value: float
    threshold: str
    details: Dict[str, object] = field(default_factory=dict)
    seconds: float = 0.0
    error: Optional[str] = None

    def to_dict(self) -> Dict[str, object]:
        return {
            "number": self.number,
            "name": self.name,
            "passed": self.passed,
            "value": self.value,
            "threshold": self.threshold,
            "seconds": round(self.seconds, 3),
            "error": self.error,
            "details": self.details,
        }


@dataclass
class SuiteReport:
    suite: str
    seed: int
    results: List[CriterionResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_dict(self) -> Dict[str, object]:
        return {
            "suite": self.suite,
            "seed": self.seed,
            "passed": self.passed,
            "criteria": [r.to_dict() for r in self.results],
        }


def _geometric(p: float) -> DiscreteMeasure:
    return DiscreteMeasure.geometric(p)


def _relative_gap(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale > 0 else 0.0


def closed_form_cap(p: float, floor: int = 40, resolution: float = 1e-14) -> int:
    """Age cap at which the geometric(p) tail beyond the cap drops below ``resolution``."""
    return max(floor, math.ceil(math.log(resolution) / math.log1p(-p)) + 2)


# =============================================================================
# Criteria
# =============================================================================


def exact_vs_oracle_tv(L: int, p: float, T_cap: int) -> float:
    """TV between the truncated exact law and the reflected oracle, both renormalized on ages <= T_cap."""
    mu0 = _geometric(p)
    law = stationary_law(L, mu0, T_cap)
    oracle = oracle_stationary(L, make_integrable_family(mu0), T_cap, policy=ClosurePolicy.REFLECT_TO_CAP)
    in_cap = oracle.in_cap_law()
    weights = {key: law.nu_tilde(TimedBridge(Bridge(key[0]), key[1])) for key in in_cap}
    total = math.fsum(weights.values())
    exact = {key: w / total for key, w in weights.items()}
    return tv_distance(exact, in_cap)


def _c1_exact_vs_oracle(scale: SuiteScale, seed: int) -> CriterionResult:
    tvs = {f"L={L},p={p:g}": exact_vs_oracle_tv(L, p, scale.oracle_cap) for L in (1, 2) for p in scale.oracle_ps}
    worst = max(tvs.values())
    return CriterionResult(1, "exact vs oracle", worst <= 1e-8, worst, "TV <= 1e-8", {"tv": tvs, "T_cap": scale.oracle_cap})


def _c2_classical_cylinder(scale: SuiteScale, seed: int) -> CriterionResult:
    worst, details = 0.0, {}
    for L in (2, 3):
        for p in (0.3, 0.5, 0.7):
            nu = stationary_law(L, _geometric(p), T_cap=closed_form_cap(p)).nu
            closed = geometric_closed_form(L, p)
            gap = max(abs(nu[code] - float(closed[code])) for code in closed)
            details[f"L={L},p={p:g}"] = gap
            worst = max(worst, gap)
    return CriterionResult(2, "classical cylinder law", worst <= 1e-10, worst, "max |ν - closed form| <= 1e-10", details)


def _c3_speed(scale: SuiteScale, seed: int) -> CriterionResult:
    p = 0.5
    target = p / (2.0 - p)
    report = speed_exact(1, _geometric(p))
    traj = simulate_discrete(1, make_integrable_family(_geometric(p)), scale.speed_steps, seed=seed)
    est = estimate_speed(traj)
    gaps = {
        "exact_size_biased": _relative_gap(report.size_biased, target),
        "simulated_size_biased": _relative_gap(est.size_biased, target),
    }
    routes = abs(report.c_renewal - report.c_alt)
    worst = max(gaps.values())
    passed = worst <= scale.speed_tol and routes <= 1e-10 and abs(report.c_renewal - p) <= 1e-10
    return CriterionResult(
        3,
        "speed triangulation",
        passed,
        worst,
        f"relative gap to 1/3 <= {scale.speed_tol:g}; routes agree to 1e-10",
        {
            **gaps,
            "c_renewal": report.c_renewal,
            "c_alt": report.c_alt,
            "route_gap": routes,
            "simulated_c_from_ages": est.c_from_ages,
            "simulated_size_biased": est.size_biased,
        },
    )


def _c4_sim_vs_exact(scale: SuiteScale, seed: int) -> CriterionResult:
    mu0 = _geometric(0.5)
    exact = stationary_law(2, mu0).nu
    traj = simulate_discrete(2, make_integrable_family(mu0), scale.marginal_steps, scale.marginal_burn_in, seed)
    tv = tv_distance(traj.bridge_law(), exact, fill_missing=True)
    return CriterionResult(4, "simulation vs exact", tv <= scale.marginal_tol, tv, f"TV <= {scale.marginal_tol:g}")


def _c5_pca(scale: SuiteScale, seed: int) -> CriterionResult:
    laws = {"geometric:0.5": _geometric(0.5), "poisson:1": DiscreteMeasure.poisson(1.0), "zeta:6": DiscreteMeasure.zeta(6.0)}
    details: Dict[str, float] = {}
    for name, mu0 in laws.items():
        details[f"stable {name}"] = check_stable_identity(mu0).max_residual
        details[f"belyaev {name}"] = check_belyaev(make_integrable_family(mu0), tolerance=1e-10).max_residual
    control = check_belyaev(perturb_family(make_integrable_family(laws["geometric:0.5"])), tolerance=1e-10)
    worst = max(details.values())
    details["perturbed control"] = control.max_residual
    passed = worst <= 1e-10 and control.max_residual >= 1e-3
    return CriterionResult(5, "PCA identities", passed, worst, "residual <= 1e-10; control >= 1e-3", details)


def _c6_weight_forms(scale: SuiteScale, seed: int) -> CriterionResult:
    laws = {
        "geometric:0.3": _geometric(0.3),
        "geometric:0.5": _geometric(0.5),
        "geometric:0.7": _geometric(0.7),
        "poisson:1": DiscreteMeasure.poisson(1.0),
        "zeta:6": DiscreteMeasure.zeta(6.0),
    }
    details: Dict[str, float] = {}
    for child, (name, mu0) in zip(spawn_seeds(seed, len(laws)), laws.items()):
        rng = make_rng(child)
        profile = SqrtProfile(mu0)
        fam = make_integrable_family(mu0)
        kernels = IntegrableKernels(profile)
        worst = 0.0
        for _ in range(scale.bridges_per_family):
            timed = random_timed(int(rng.integers(1, 4)), rng)
            w1 = weight_W(timed, profile, WeightForm.NORMALIZED, family=fam)
            w2 = weight_W(timed, profile, WeightForm.FACTORED, family=fam)
            w3 = weight_W(timed, profile, WeightForm.COLLAPSED)
            scaled = w2 * profile.total ** (-2 * timed.L)
            hat = hzmm_front_weight(timed, kernels) * survival_factors(timed, fam)
            worst = max(worst, _relative_gap(w2, w3), _relative_gap(w1, scaled), _relative_gap(w1, hat))
        details[name] = worst
    value = max(details.values())
    return CriterionResult(6, "weight-form coherence", value <= 1e-12, value, "relative gap <= 1e-12", details)


def _c7_edge_lpp(scale: SuiteScale, seed: int) -> CriterionResult:
    details: Dict[str, float] = {}
    for masses in ([0.25, 0.75], [0.5, 0.5]):
        mu = DiscreteMeasure.table(masses, label=f"table{masses}")
        fam = make_edge_lpp_family(mu)
        gap = max(float(np.max(np.abs(fam.at(d).pmf - edge_lpp_enumeration(mu, d)))) for d in range(6))
        details[f"enumeration {masses}"] = gap
    fam = make_edge_lpp_family(_geometric(0.5))
    mass_gap = max(abs(math.fsum(fam.at(d).pmf) - 1.0) for d in range(21))
    details["geometric mass defect"] = mass_gap
    exact_gap = max(v for k, v in details.items() if k.startswith("enumeration"))
    passed = exact_gap <= 1e-15 and mass_gap <= 1e-9
    return CriterionResult(7, "edge LPP", passed, max(exact_gap, mass_gap), "enumeration exact; mass 1 within 1e-9", details)


def _c8_shape(scale: SuiteScale, seed: int) -> CriterionResult:
    p, n = 0.5, scale.shape_n
    fam = make_constant_family(_geometric(p))
    ratios = [
        grow_quarter_plane(n, fam, seed=int(child.generate_state(1)[0])).tau(n, n) / n
        for child in spawn_seeds(seed, scale.shape_seeds)
    ]
    target = float(geometric_shape(1.0, 1.0, p))
    mean = float(np.mean(ratios))
    gap = _relative_gap(mean, target)
    zero_support = float(geometric_shape(1.0, 1.0, p, zero_support=True))
    passed = gap <= scale.shape_tol and abs(zero_support - (1.0 + math.sqrt(2.0)) * 2.0) <= 1e-12
    return CriterionResult(
        8,
        "quarter-plane shape",
        passed,
        gap,
        f"relative gap of mean τ(n,n)/n <= {scale.shape_tol:g}",
        {"n": n, "seeds": scale.shape_seeds, "mean": mean, "target": target, "sd": float(np.std(ratios, ddof=1))},
    )


def _c9_continuous(scale: SuiteScale, seed: int) -> CriterionResult:
    fam = DensityFamily.exponential(1.0)
    two = simulate_continuous(2, fam, scale.continuous_horizon, seed=seed, sample_every=10.0)
    codes = [b.code for b in enumerate_bridges(2)]
    observed = np.array([two.sampled_bridges.get(code, 0) for code in codes], dtype=float)
    chi = stats.chisquare(observed)
    one = simulate_continuous(1, fam, scale.continuous_horizon, seed=seed + 1)
    ks = ks_statistic(one.t1_samples, stats.expon().cdf)
    cert = check_noexplosion(fam, eps=0.1, delta_max=10.0)
    cert_gap = abs(cert.value - (1.0 - math.exp(-0.1)))
    passed = chi.pvalue > 0.01 and ks <= scale.ks_tol and cert.passed and cert_gap <= 1e-9
    return CriterionResult(
        9,
        "continuous time",
        passed,
        ks,
        f"chi-square p > 0.01; KS <= {scale.ks_tol:g}; certificate 1 - e^-0.1",
        {"chi2_pvalue": float(chi.pvalue), "ks": ks, "certificate": cert.value, "events": two.events + one.events},
    )


def _c10_coupling(scale: SuiteScale, seed: int) -> CriterionResult:
    fam = make_integrable_family(_geometric(0.5))
    mismatch = first_chain_mismatch(2, fam, scale.coupling_steps, seed)
    pca = space_time_matches_growth(3, fam, rows=50, seed=seed)
    comb = max(
        abs(lemma_comb_partial(k, q, 400) - lemma_comb(k, q)) for k in range(1, 6) for q in (0.25, 0.5, 0.75)
    )
    passed = mismatch is None and pca and comb <= 1e-12
    return CriterionResult(
        10,
        "coupling equalities",
        passed,
        comb,
        "identical front lines and rows; comb sums within 1e-12",
        {"first_mismatch": mismatch, "space_time_matches": pca, "comb_gap": comb},
    )


CRITERIA: List[Callable[[SuiteScale, int], CriterionResult]] = [
    _c1_exact_vs_oracle,
    _c2_classical_cylinder,
    _c3_speed,
    _c4_sim_vs_exact,
    _c5_pca,
    _c6_weight_forms,
    _c7_edge_lpp,
    _c8_shape,
    _c9_continuous,
    _c10_coupling,
]


def run_suite(name: str = "desk", seed: Optional[int] = None, only: Optional[List[int]] = None) -> SuiteReport:
    """Run the named suite; a criterion that raises counts as failed.

    Raises:
        ConfigError: for an unknown suite name.
    """
    if name not in SCALES:
        raise ConfigError(f"unknown suite {name!r}; choose from {', '.join(SCALES)}")
    scale = SCALES[name]
    seed = resolve_seed(seed)
    results = []
    for number, criterion in enumerate(CRITERIA, start=1):
        if only and number not in only:
            continue
        start = time.perf_counter()
        try:
            result = criterion(scale, seed)
        except GLPPError as err:
            result = CriterionResult(number, criterion.__name__.split("_", 2)[-1], False, math.nan, "", error=str(err))
        result.seconds = time.perf_counter() - start
        level = "INFO" if result.passed else "WARNING"
        logger.log(level, f"criterion {number} ({result.name}): {'pass' if result.passed else 'FAIL'} in {result.seconds:.1f}s")
        results.append(result)
    return SuiteReport(name, seed, results)
