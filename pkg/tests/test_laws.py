"""Laws in all three sectors: exact discrete, gaussian, mixture, mixed."""
import math
from fractions import Fraction

import numpy as np
import pytest

from chaincert.errors import BudgetTooSmall, LawError, SingularCovariance, ZeroMassFiber
from chaincert.laws import (
    LOG_2PI,
    DiscreteLaw,
    GaussianLaw,
    GaussianMixture,
    MixedLaw,
    random_gaussian,
    random_mixed_law,
    random_rational_law,
    random_spd_matrix,
    reference_measure,
    tv_distance,
)
from chaincert.structures import (
    ContinuousObservable,
    DiscreteObservable,
    ProductObservable,
    euclidean_observable,
    partition_lattice,
)

FOUR = DiscreteObservable(((0,), (1,), (2,), (3,)))
PAIRS = DiscreteObservable(((0, 1), (2, 3)))


class TestDiscreteLaw:
    def test_exact_weights_stay_fractions(self):
        law = DiscreteLaw(FOUR, [Fraction(1, 2), Fraction(1, 4), Fraction(1, 8), Fraction(1, 8)])
        assert law.exact
        marg = law.marginalize(PAIRS)
        assert marg.weights == (Fraction(3, 4), Fraction(1, 4))

    def test_weight_validation(self):
        with pytest.raises(LawError):
            DiscreteLaw(FOUR, [Fraction(1, 2), Fraction(1, 2), Fraction(0), Fraction(1, 4)])
        with pytest.raises(LawError):
            DiscreteLaw(FOUR, [0.5, 0.5, 0.25, -0.25])
        with pytest.raises(LawError):
            DiscreteLaw(FOUR, [0.5, 0.5])

    def test_condition_restricts_and_renormalizes(self):
        law = DiscreteLaw(FOUR, [Fraction(1, 2), Fraction(1, 4), Fraction(1, 8), Fraction(1, 8)])
        cond = law.condition(PAIRS, 0)
        assert cond.weights == (Fraction(2, 3), Fraction(1, 3), Fraction(0), Fraction(0))
        assert cond.observable.same_observable(FOUR)

    def test_zero_mass_fiber(self):
        law = DiscreteLaw.point_mass(FOUR, 0)
        with pytest.raises(ZeroMassFiber):
            law.condition(PAIRS, 1)

    def test_chain_rule_exact_by_construction(self):
        # marginal times conditional reassembles the law, in exact arithmetic
        rng = np.random.default_rng(7)
        for _ in range(25):
            law = random_rational_law(FOUR, rng)
            marg = law.marginalize(PAIRS)
            total = [Fraction(0)] * 4
            for y in marg.support:
                cond = law.condition(PAIRS, y)
                for i, w in enumerate(cond.weights):
                    total[i] += marg.weights[y] * w
            assert tuple(total) == law.weights

    def test_sample_frequencies(self):
        law = DiscreteLaw(FOUR, [Fraction(1, 2), Fraction(1, 4), Fraction(1, 8), Fraction(1, 8)])
        draws = law.sample(20_000, np.random.default_rng(0))
        freq = np.bincount(draws, minlength=4) / 20_000
        assert np.abs(freq - law.float_weights()).max() < 0.02

    def test_weights_key_requires_exact(self):
        law = DiscreteLaw(FOUR, [0.5, 0.25, 0.125, 0.125], exact=False)
        with pytest.raises(LawError):
            law.weights_key()


class TestGaussianLaw:
    def test_entropy_closed_form(self):
        for d in range(1, 7):
            law = GaussianLaw(euclidean_observable(d), np.zeros(d), np.eye(d))
            expect = 0.5 * d * (LOG_2PI + 1.0)
            assert abs(law.entropy() - expect) < 1e-12

    def test_logpdf_matches_dense_formula(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            d = int(rng.integers(1, 5))
            cov = random_spd_matrix(rng, d)
            mean = rng.standard_normal(d)
            law = GaussianLaw(euclidean_observable(d), mean, cov)
            pts = rng.standard_normal((6, d))
            diff = pts - mean
            quad = np.einsum("ni,ij,nj->n", diff, np.linalg.inv(cov), diff)
            expect = -0.5 * (quad + d * LOG_2PI + np.linalg.slogdet(cov)[1])
            assert np.abs(law.logpdf(pts) - expect).max() < 1e-10

    def test_marginal_moments(self):
        rng = np.random.default_rng(5)
        cov = random_spd_matrix(rng, 3)
        mean = rng.standard_normal(3)
        law = GaussianLaw(euclidean_observable(3), mean, cov)
        axes = ContinuousObservable(np.eye(3)[:, [0, 2]])
        marg = law.marginalize(axes)
        assert np.allclose(marg.mean, mean[[0, 2]])
        assert np.allclose(marg.cov, cov[np.ix_([0, 2], [0, 2])])

    def test_condition_matches_schur_complement(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            d = int(rng.integers(2, 6))
            cov = random_spd_matrix(rng, d)
            mean = rng.standard_normal(d)
            law = GaussianLaw(euclidean_observable(d), mean, cov)
            k = int(rng.integers(1, d))
            axes = list(range(k))
            rest = list(range(k, d))
            obs = ContinuousObservable(np.eye(d)[:, axes])
            x = rng.standard_normal(k)
            cond = law.condition(obs, x)
            # classic block formulas on the (rest | axes) split
            caa = cov[np.ix_(axes, axes)]
            cra = cov[np.ix_(rest, axes)]
            crr = cov[np.ix_(rest, rest)]
            gain = cra @ np.linalg.inv(caa)
            mean_expect = mean[rest] + gain @ (x - mean[axes])
            cov_expect = crr - gain @ cra.T
            assert np.allclose(cond.mean[axes], x, atol=1e-9)
            assert np.allclose(cond.mean[rest], mean_expect, atol=1e-9)
            assert np.allclose(cond.cov[np.ix_(rest, rest)], cov_expect, atol=1e-9)
            # conditioned axes carry no variance
            assert np.abs(cond.cov[np.ix_(axes, axes)]).max() < 1e-9

    def test_conditional_family_shape_is_constant(self):
        rng = np.random.default_rng(17)
        law = GaussianLaw(euclidean_observable(3), rng.standard_normal(3),
                          random_spd_matrix(rng, 3))
        obs = ContinuousObservable(np.eye(3)[:, [1]])
        family = law.disintegrate(obs)
        assert family.constant_shape
        c1 = family.conditional([0.3])
        c2 = family.conditional([-1.2])
        assert np.allclose(c1.cov, c2.cov)
        assert not np.allclose(c1.mean, c2.mean)

    def test_singular_covariance_demotes_to_carrier(self):
        rng = np.random.default_rng(19)
        factor = rng.standard_normal((5, 2))
        law = GaussianLaw(euclidean_observable(5), np.zeros(5), factor @ factor.T)
        assert law.carrier_dim == 2
        # density vanishes off the carrier
        off_point = np.ones(5) * 10.0
        if np.isfinite(law.logpdf(off_point)):
            off_point = off_point + rng.standard_normal(5)
        assert law.logpdf(off_point) == -np.inf

    def test_conditioning_spanning_axes_gives_point_mass(self):
        # a rank-2 law conditioned on two axes that see the whole carrier
        # must collapse to carrier dimension 0, not keep float residue
        rng = np.random.default_rng(23)
        for _ in range(10):
            factor = rng.standard_normal((6, 2))
            law = GaussianLaw(euclidean_observable(6), rng.standard_normal(6),
                              factor @ factor.T)
            obs = ContinuousObservable(np.eye(6)[:, [0, 1, 2, 3]])
            marginal = law.marginalize(obs)
            x = marginal.sample(1, rng)[0]
            cond = law.condition(obs, x)
            assert cond.carrier_dim == 0

    def test_negative_eigenvalue_rejected(self):
        with pytest.raises(SingularCovariance):
            GaussianLaw(euclidean_observable(2), np.zeros(2),
                        np.array([[1.0, 0.0], [0.0, -0.5]]))

    def test_asymmetric_covariance_rejected(self):
        with pytest.raises(LawError):
            GaussianLaw(euclidean_observable(2), np.zeros(2),
                        np.array([[1.0, 0.5], [0.1, 1.0]]))

    def test_sample_moments(self):
        rng = np.random.default_rng(29)
        cov = random_spd_matrix(rng, 2)
        law = GaussianLaw(euclidean_observable(2), np.array([1.0, -2.0]), cov)
        draws = law.sample(60_000, rng)
        assert np.abs(draws.mean(axis=0) - law.mean).max() < 0.05
        assert np.abs(np.cov(draws.T) - cov).max() < 0.1


class TestGaussianMixture:
    def _random_mixture(self, rng, d, k):
        obs = euclidean_observable(d)
        comps = [
            GaussianLaw(obs, rng.standard_normal(d) * 2.0, random_spd_matrix(rng, d))
            for _ in range(k)
        ]
        w = rng.uniform(0.2, 1.0, size=k)
        return GaussianMixture(obs, comps, w / w.sum())

    def test_logpdf_is_logsumexp_of_components(self):
        rng = np.random.default_rng(31)
        for _ in range(10):
            d = int(rng.integers(1, 4))
            k = int(rng.integers(2, 5))
            mix = self._random_mixture(rng, d, k)
            pts = rng.standard_normal((8, d))
            stack = np.stack([c.logpdf(pts) for c in mix.components])
            expect = np.log(np.exp(stack + np.log(mix.weights)[:, None]).sum(axis=0))
            assert np.abs(mix.logpdf(pts) - expect).max() < 1e-10

    def test_posterior_entropy_matches_direct(self):
        rng = np.random.default_rng(37)
        mix = self._random_mixture(rng, 2, 4)
        pts = rng.standard_normal((50, 2))
        _, ent = mix.logpdf_and_posterior_entropy(pts)
        stack = np.stack([c.logpdf(pts) for c in mix.components]).T
        logs = stack + np.log(mix.weights)
        post = np.exp(logs - logs.max(axis=1, keepdims=True))
        post /= post.sum(axis=1, keepdims=True)
        direct = -(post * np.log(np.where(post > 0, post, 1.0))).sum(axis=1)
        assert np.abs(ent - direct).max() < 1e-10

    def test_isotropic_equals_explicit_components(self):
        rng = np.random.default_rng(41)
        centers = rng.standard_normal((30, 2))
        h = 0.3
        obs = euclidean_observable(2)
        iso = GaussianMixture.isotropic(obs, centers, h)
        explicit = GaussianMixture(
            obs,
            [GaussianLaw(obs, c, h * h * np.eye(2)) for c in centers],
            np.full(30, 1.0 / 30),
        )
        pts = rng.standard_normal((40, 2))
        assert np.abs(iso.logpdf(pts) - explicit.logpdf(pts)).max() < 1e-10
        assert iso._iso_h == h and explicit._iso_h is not None

    def test_zero_weight_components_dropped(self):
        rng = np.random.default_rng(43)
        obs = euclidean_observable(1)
        comps = [GaussianLaw(obs, [0.0], [[1.0]]), GaussianLaw(obs, [5.0], [[1.0]])]
        mix = GaussianMixture(obs, comps, [1.0, 0.0])
        assert mix.n_components == 1

    def test_marginalize_iso_stays_iso(self):
        rng = np.random.default_rng(47)
        centers = rng.standard_normal((20, 3))
        mix = GaussianMixture.isotropic(euclidean_observable(3), centers, 0.5)
        marg = mix.marginalize(ContinuousObservable(np.eye(3)[:, [0, 2]]))
        assert marg._iso_h == 0.5
        assert np.allclose(marg._means, centers[:, [0, 2]])

    def test_sample_mean_matches_mixture_mean(self):
        rng = np.random.default_rng(53)
        mix = self._random_mixture(rng, 2, 3)
        draws = mix.sample(60_000, rng)
        expect = (mix.weights[:, None] * mix._means).sum(axis=0)
        assert np.abs(draws.mean(axis=0) - expect).max() < 0.06

    def test_posterior_weights_follow_bayes(self):
        rng = np.random.default_rng(59)
        mix = self._random_mixture(rng, 2, 3)
        obs = ContinuousObservable(np.eye(2)[:, [0]])
        fam = mix.disintegrate(obs)
        x = np.array([0.4])
        post = fam.posterior_weights(x)
        logs = np.array([
            float(c.marginalize(obs).logpdf(x)) for c in mix.components
        ]) + np.log(mix.weights)
        expect = np.exp(logs - logs.max())
        expect /= expect.sum()
        assert np.abs(post - expect).max() < 1e-10
        assert abs(post.sum() - 1.0) < 1e-12

    def test_mixture_weight_validation(self):
        obs = euclidean_observable(1)
        comp = GaussianLaw(obs, [0.0], [[1.0]])
        with pytest.raises(LawError):
            GaussianMixture(obs, [comp, comp], [0.7, 0.7])
        with pytest.raises(LawError):
            GaussianMixture.isotropic(obs, np.zeros((2, 1)), -0.1)


class TestMixedLaw:
    def _law(self, seed=61):
        rng = np.random.default_rng(seed)
        disc = DiscreteObservable(((0,), (1,), (2,)))
        obs = ProductObservable(euclidean_observable(2), disc)
        return random_mixed_law(obs, rng), obs

    def test_log_density_splits(self):
        law, _ = self._law()
        x = np.array([0.5, -0.3])
        for y in law.support:
            expect = math.log(float(law.p.weights[y])) + float(
                law.conditionals[y].logpdf(x)
            )
            assert abs(law.log_density(x, y) - expect) < 1e-12

    def test_marginal_mixture_density_is_sum(self):
        law, _ = self._law()
        mix = law.marginal_mixture()
        pts = np.random.default_rng(67).standard_normal((10, 2))
        direct = np.zeros(10)
        for y in law.support:
            direct += float(law.p.weights[y]) * np.exp(law.conditionals[y].logpdf(pts))
        assert np.abs(np.exp(mix.logpdf(pts)) - direct).max() < 1e-10

    def test_sample_discrete_frequencies(self):
        law, _ = self._law()
        xs, ys = law.sample(30_000, np.random.default_rng(71))
        assert xs.shape == (30_000, 2)
        freq = np.bincount(ys, minlength=3) / 30_000
        assert np.abs(freq - law.p.float_weights()).max() < 0.02

    def test_posterior_rows_normalize(self):
        law, _ = self._law()
        pts = np.random.default_rng(73).standard_normal((20, 2))
        post = law.posterior_weights(pts)
        assert post.shape == (20, 3)
        assert np.abs(post.sum(axis=1) - 1.0).max() < 1e-12

    def test_marginalize_identifies_sectors(self):
        law, obs = self._law()
        to_disc = ProductObservable(
            ContinuousObservable(np.zeros((2, 0))), obs.discrete_part
        )
        to_cont = ProductObservable(
            obs.continuous_part, DiscreteObservable(((0, 1, 2),))
        )
        assert isinstance(law.marginalize(to_disc), DiscreteLaw)
        assert isinstance(law.marginalize(to_cont), GaussianMixture)

    def test_condition_on_discrete_returns_conditional(self):
        law, _ = self._law()
        y = law.support[0]
        assert law.condition_on_discrete(y) is law.conditionals[y]

    def test_condition_on_continuous_matches_posterior(self):
        law, _ = self._law()
        x = np.array([0.2, 0.8])
        cond = law.condition_on_continuous(x)
        assert np.abs(
            cond.float_weights() - law.posterior_weights(x)[0]
        ).max() < 1e-12

    def test_conditional_mass_mismatch_rejected(self):
        _, obs = self._law()
        p = DiscreteLaw(obs.discrete_part,
                        [Fraction(1, 2), Fraction(1, 2), Fraction(0)])
        cont = obs.continuous_part
        g = GaussianLaw(cont, np.zeros(2), np.eye(2))
        MixedLaw(obs, p, (g, g, None))  # fine: zero-mass outcome may lack one
        with pytest.raises(LawError):
            MixedLaw(obs, p, (g, None, None))


class TestTvDistance:
    def test_discrete_exact(self):
        a = DiscreteLaw(FOUR, [Fraction(1, 2), Fraction(1, 4), Fraction(1, 8), Fraction(1, 8)])
        b = DiscreteLaw.uniform(FOUR)
        expect = 0.5 * sum(
            abs(float(x) - float(y)) for x, y in zip(a.weights, b.weights)
        )
        est = tv_distance(a, b)
        assert est.std_error == 0.0
        assert abs(est.value - expect) < 1e-15

    def test_gaussian_shift_against_closed_form(self):
        # equal-variance gaussians: TV = erf(|mu1 - mu2| / (2 sqrt(2) sigma))
        obs = euclidean_observable(1)
        f = GaussianLaw(obs, [0.0], [[1.0]])
        g = GaussianLaw(obs, [0.1], [[1.0]])
        expect = math.erf(0.05 / math.sqrt(2.0))
        est = tv_distance(f, g, budget=100_000, seed=0)
        assert abs(est.value - expect) <= 3.0 * est.std_error + 1e-4

    def test_identical_laws_give_zero(self):
        obs = euclidean_observable(2)
        f = GaussianLaw(obs, np.zeros(2), np.eye(2))
        est = tv_distance(f, f, budget=2_000, seed=1)
        assert est.value < 1e-12

    def test_budget_floor(self):
        obs = euclidean_observable(1)
        f = GaussianLaw(obs, [0.0], [[1.0]])
        with pytest.raises(BudgetTooSmall):
            tv_distance(f, f, budget=10)


class TestRandomFactories:
    def test_random_spd_is_spd(self):
        rng = np.random.default_rng(79)
        for _ in range(20):
            d = int(rng.integers(1, 7))
            m = random_spd_matrix(rng, d)
            assert np.allclose(m, m.T)
            assert np.linalg.eigvalsh(m).min() > 0

    def test_random_rational_law_is_exact(self):
        rng = np.random.default_rng(83)
        finest = partition_lattice(4).objects[0]
        for _ in range(20):
            law = random_rational_law(finest, rng)
            assert law.exact
            assert sum(law.weights) == 1

    def test_random_gaussian_full_rank(self):
        rng = np.random.default_rng(89)
        law = random_gaussian(euclidean_observable(3), rng)
        assert law.full_rank()

    def test_reference_measure_kinds(self):
        rng = np.random.default_rng(97)
        disc = DiscreteLaw.uniform(FOUR)
        gauss = random_gaussian(euclidean_observable(2), rng)
        obs = ProductObservable(euclidean_observable(2), FOUR)
        mixed = random_mixed_law(obs, rng)
        assert reference_measure(disc).kind == "counting"
        assert reference_measure(gauss).kind == "lebesgue"
        assert reference_measure(mixed).kind == "product-sum"
