"""Tests for glpp.measures module."""

import math

import numpy as np
import pytest
from scipy import special

from glpp.core import ConfigError, DivergentSqrtSum, EmptyGrid, FamilyKind
from glpp.measures import (
    DensityFamily,
    DiscreteMeasure,
    TableFamily,
    check_cond3,
    check_cond_conv,
    check_cond_conv_continuous,
    check_cond_subadd,
    check_noexplosion,
    is_constant_family,
    is_geometric_like,
    make_constant_family,
    make_edge_lpp_family,
    make_integrable_density_family,
    make_integrable_family,
    perturb_family,
    sample,
    sample_by_gap,
    sample_many,
)


class TestDiscreteMeasure:
    """Tests for the closed-form and table laws."""

    def test_geometric_masses(self, geometric_half):
        """p(1-p)^{i-1}, total mass one, constant hazard p."""
        assert geometric_half.mass(1) == pytest.approx(0.5)
        assert geometric_half.mass(3) == pytest.approx(0.125)
        assert geometric_half.tail(1) == pytest.approx(1.0)
        assert geometric_half.tail(4) == pytest.approx(0.125)
        for m in (0, 3, 10):
            assert geometric_half.hazard(m) == pytest.approx(0.5)

    def test_geometric_beyond_cap(self, geometric_half):
        """Values past the stored head come from the closed form."""
        i = geometric_half.cap + 5
        assert geometric_half.mass(i) == pytest.approx(0.5**i, rel=1e-12)
        assert geometric_half.tail(i) == pytest.approx(0.5 ** (i - 1), rel=1e-12)

    def test_poisson_conditioned_and_shifted(self):
        """The default Poisson law is conditioned on X >= 1; shifted moves it by one."""
        conditioned = DiscreteMeasure.poisson(1.0)
        shifted = DiscreteMeasure.poisson(1.0, shifted=True)
        assert conditioned.mass(1) == pytest.approx(1.0 / (math.e - 1.0))
        assert shifted.mass(1) == pytest.approx(math.exp(-1.0))
        assert shifted.mean() == pytest.approx(2.0, rel=1e-9)

    def test_zeta(self):
        """ζ(6) normalizes i^{-6}."""
        mu = DiscreteMeasure.zeta(6.0)
        assert mu.mass(1) == pytest.approx(945.0 / math.pi**6)
        assert math.isfinite(mu.sqrt_sum())

    def test_table(self):
        """Tables accept lists or dicts."""
        a = DiscreteMeasure.table([0.25, 0.75])
        b = DiscreteMeasure.table({1: 0.25, 2: 0.75})
        assert a.cdf(1) == pytest.approx(0.25)
        assert np.array_equal(a.pmf, b.pmf)

    def test_tail_sums(self, geometric_half):
        """Σ_{m>=1} P(X >= m) is the mean, past the cap included."""
        assert geometric_half.tail_sum(1) == pytest.approx(2.0, rel=1e-12)
        assert geometric_half.tail_sum(geometric_half.cap + 3) == pytest.approx(0.5 ** (geometric_half.cap + 2) / 0.5, rel=1e-12)
        poisson = DiscreteMeasure.poisson(1.0)
        mean = 1.0 / (1.0 - math.exp(-1.0))
        assert poisson.tail_sum(1) >= mean - 1e-12
        assert poisson.tail_sum(1) == pytest.approx(mean, rel=1e-9)
        zeta = DiscreteMeasure.zeta(6.0)
        ratio = float(special.zeta(5.0, 1) / special.zeta(6.0, 1))
        assert zeta.tail_sum(1) >= ratio - 1e-12
        assert zeta.tail_sum(1) == pytest.approx(ratio, rel=1e-6)

    def test_uncertified_tail_sum_edge(self):
        """Heavy or unknown tails give no finite tail sum."""
        assert DiscreteMeasure.zeta(2.0).tail_sum(1) == math.inf
        head = DiscreteMeasure(pmf=np.array([0.5, 0.25]), remainder=0.25, sqrt_remainder=1.0)
        assert head.tail_sum(1) == math.inf
        assert DiscreteMeasure.table([0.25, 0.75]).tail_sum(2) == pytest.approx(0.75)

    @pytest.mark.parametrize(
        "factory",
        [
            lambda: DiscreteMeasure.table([0.5, 0.4]),
            lambda: DiscreteMeasure.geometric(1.0),
            lambda: DiscreteMeasure.poisson(-1.0),
            lambda: DiscreteMeasure.zeta(1.0),
        ],
    )
    def test_invalid_laws_edge(self, factory):
        """Bad parameters and non-normalized tables are configuration errors."""
        with pytest.raises(ConfigError):
            factory()


class TestSampling:
    """Inverse-cdf sampling."""

    def test_inverse_cdf(self, geometric_half):
        """u below 1/2 gives 1, just above gives 2."""
        assert sample(geometric_half, 0.4) == 1
        assert sample(geometric_half, 0.6) == 2

    def test_conditioned_draw(self, geometric_half):
        """Given X > 3, the same uniform gives 4 (memoryless law)."""
        assert sample(geometric_half, 0.4, given_more_than=3) == 4

    def test_vectorized_matches_scalar(self):
        """sample_many agrees with sample element by element."""
        mu = DiscreteMeasure.poisson(2.0)
        us = np.random.default_rng(0).random(200)
        assert sample_many(mu, us).tolist() == [sample(mu, u) for u in us]

    def test_empirical_mean(self, geometric_half):
        """Sample mean of geometric(1/2) is close to 2."""
        us = np.random.default_rng(1).random(50_000)
        assert sample_many(geometric_half, us).mean() == pytest.approx(2.0, abs=0.03)

    def test_by_gap_matches_per_law(self, poisson_family):
        """Each cell is drawn from the law of its own gap."""
        rng = np.random.default_rng(2)
        gaps = rng.integers(0, 4, size=60)
        us = rng.random(60)
        xi = sample_by_gap(poisson_family, gaps, us)
        assert xi.tolist() == [sample(poisson_family.at(int(g)), u) for g, u in zip(gaps, us)]

    def test_by_gap_constant_family(self, classical_geometric, geometric_half):
        """A constant family ignores the gaps."""
        us = np.random.default_rng(3).random(40)
        gaps = np.arange(40) % 5
        assert np.array_equal(sample_by_gap(classical_geometric, gaps, us), sample_many(geometric_half, us))


class TestFamilies:
    """Tests for the gap-indexed families."""

    def test_integrable_geometric_is_constant(self, geometric_family):
        """√(μ₀(t)μ₀(t+Δ)) renormalized is again geometric."""
        assert geometric_family.kind is FamilyKind.INTEGRABLE
        assert is_constant_family(geometric_family)
        assert geometric_family.normalizer(2) == pytest.approx(0.5, rel=1e-12)

    def test_integrable_poisson_depends_on_gap(self, poisson_family):
        """The Poisson family changes with the gap and each law sums to one."""
        assert not is_constant_family(poisson_family)
        law = poisson_family.at(3)
        assert math.fsum(law.pmf) + law.remainder == pytest.approx(1.0)

    def test_divergent_sqrt_sum(self):
        """Σ√μ₀ diverges for ζ(1.5)."""
        with pytest.raises(DivergentSqrtSum):
            make_integrable_family(DiscreteMeasure.zeta(1.5))

    def test_edge_lpp_gap_zero(self):
        """At gap 0 the edge-LPP law is that of max(ζ₁, ζ₂)."""
        fam = make_edge_lpp_family(DiscreteMeasure.table([0.5, 0.5]))
        assert fam.at(0).mass(1) == pytest.approx(0.25)
        assert fam.at(0).mass(2) == pytest.approx(0.75)

    def test_constant_family(self, geometric_half):
        """The classical family ignores the gap."""
        fam = make_constant_family(geometric_half)
        assert fam.at(7) is geometric_half
        assert fam.is_constant

    def test_table_family_reuses_last_gap(self):
        """Gaps beyond the table reuse its last entry."""
        t0, t1 = DiscreteMeasure.table([0.5, 0.5]), DiscreteMeasure.table([0.25, 0.75])
        fam = TableFamily({0: t0, 1: t1})
        assert fam.at(5) is t1

    def test_table_family_needs_gap_zero_edge(self):
        """Gap 0 must be present."""
        with pytest.raises(ConfigError):
            TableFamily({1: DiscreteMeasure.table([1.0])})

    def test_negative_gap_edge(self, geometric_family):
        """Gaps are non-negative."""
        with pytest.raises(ConfigError):
            geometric_family.at(-1)

    def test_perturbation_touches_one_gap(self, geometric_family):
        """Only μ_1(1) is scaled before renormalizing."""
        fam = perturb_family(geometric_family, eps=0.01)
        assert fam.at(0).mass(1) == pytest.approx(0.5)
        assert fam.at(1).mass(1) > geometric_family.at(1).mass(1)
        assert math.fsum(fam.at(1).pmf) + fam.at(1).remainder == pytest.approx(1.0)


class TestCertificates:
    """Grid certificates."""

    def test_cond3_geometric(self, geometric_half):
        """The hazard of geometric(p) is p everywhere."""
        report = check_cond3(geometric_half, 20)
        assert report.passed
        assert report.value == pytest.approx(0.5)

    def test_cond_conv_integrable(self, poisson_family):
        """A hazard bound on μ₀ carries over to the integrable family."""
        report = check_cond_conv(poisson_family, 5, 10)
        assert report.passed
        assert report.extra["mu0_bound_carries_over"]

    def test_cond_subadd_classical(self, classical_geometric):
        """A constant family satisfies the sandwich trivially."""
        assert check_cond_subadd(classical_geometric, 5, 10).passed

    def test_empty_grid_edge(self, geometric_half):
        """Empty grids are refused."""
        with pytest.raises(EmptyGrid):
            check_cond3(geometric_half, 0)

    def test_geometric_like(self, geometric_half):
        """Constant ratios identify geometric laws."""
        assert is_geometric_like(geometric_half)
        assert not is_geometric_like(DiscreteMeasure.poisson(1.0))


class TestDensities:
    """Continuous families."""

    def test_exponential_hazard(self):
        """Exp(λ) has hazard λ."""
        fam = DensityFamily.exponential(2.0)
        assert fam.hazard(0.0, 1.3) == pytest.approx(2.0)
        assert fam.sample(0.0, 1.0 - math.exp(-2.0)) == pytest.approx(1.0)

    def test_integrable_exponential_normalizer(self):
        """∫√(f₀(s)f₀(s+Δ)) = e^{-λΔ/2} for the exponential seed."""
        fam = make_integrable_density_family(DensityFamily.exponential(1.0))
        assert fam.kind is FamilyKind.INTEGRABLE
        assert fam.normalizer(2.0) == pytest.approx(math.exp(-1.0))

    def test_halfnormal_inverse_cdf(self):
        """ppf inverts cdf for a non-closed-form family."""
        fam = make_integrable_density_family(DensityFamily.halfnormal(1.0))
        x = fam.ppf(1.5, 0.3)
        assert fam.cdf(1.5, x) == pytest.approx(0.3, abs=1e-8)

    def test_noexplosion_exponential(self):
        """μ([0, 0.1]) = 1 - e^{-0.1} for Exp(1)."""
        report = check_noexplosion(DensityFamily.exponential(1.0), eps=0.1, delta_max=10.0)
        assert report.passed
        assert report.value == pytest.approx(1.0 - math.exp(-0.1))

    def test_bad_rate_edge(self):
        """Rates must be positive."""
        with pytest.raises(ConfigError):
            DensityFamily.exponential(0.0)

    def test_cond_conv_continuous_exponential(self):
        """The integrable exponential family has constant hazard λ."""
        fam = make_integrable_density_family(DensityFamily.exponential(1.5))
        report = check_cond_conv_continuous(fam, delta_max=4.0, t_max=6.0, n_grid=7)
        assert report.passed
        assert report.name == "cond_conv_continuous"
        assert report.value == pytest.approx(1.5, rel=1e-8)
        assert set(report.witness) == {"delta", "t"}

    def test_cond_conv_continuous_empty_grid_edge(self):
        """A time grid needs a positive horizon."""
        with pytest.raises(EmptyGrid):
            check_cond_conv_continuous(DensityFamily.exponential(1.0), delta_max=1.0, t_max=0.0)
