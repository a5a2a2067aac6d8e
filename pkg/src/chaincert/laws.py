"""Probability laws on observables, and the operations the checks build on.

Four law families:

* :class:`DiscreteLaw` - weights over a partition's blocks, either exact
  rationals (`fractions.Fraction`, closed under every operation here) or
  floats.
* :class:`GaussianLaw` - mean and positive-semidefinite covariance in the
  coordinates of a subspace observable. The *carrier* is the affine span of
  the mass: a rank-deficient covariance is not an error, the law is silently
  demoted to the smaller carrier and its density/entropy are taken with
  respect to Lebesgue measure there.
* :class:`GaussianMixture` - finitely many gaussian components on one
  observable with positive weights.
* :class:`MixedLaw` - a law on a product observable <X, Y>, stored as the
  discrete marginal p(y) together with one gaussian (or mixture) conditional
  per outcome; the joint density is r(x, y) = p(y) g_y(x).

Marginalization pushes a law along an arrow (block sums, linear projection of
mean/covariance, componentwise for products). Disintegration inverts it:
conditioning a discrete law renormalizes a fiber, conditioning a gaussian is
the Schur-complement conditional (covariance independent of the conditioning
point), and conditioning a mixed law on its continuous value yields the
posterior over the discrete outcomes,
rho_x(y) = p(y) g_y(x) / sum_y' p(y') g_y'(x).

Total variation distance is exact for discrete pairs and otherwise estimated
by importance sampling from the balanced mixture (f+g)/2, where the integrand
is |tanh((log f - log g)/2)| and therefore bounded.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels
from .errors import (
    BudgetTooSmall,
    InvalidArrow,
    InvalidSector,
    LawError,
    SingularCovariance,
    ZeroMassFiber,
)
from .reporting import Estimate
from .seeding import derived_rng
from .structures import (
    ContinuousObservable,
    DiscreteObservable,
    ProductObservable,
    is_coarser,
)

LOG_2PI = float(np.log(2.0 * np.pi))
MIN_MC_BUDGET = 1000
_RANK_TOL = 1e-12


def _require_budget(budget: int) -> int:
    budget = int(budget)
    if budget < MIN_MC_BUDGET:
        raise BudgetTooSmall(f"budget {budget} below the floor {MIN_MC_BUDGET}")
    return budget


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return derived_rng(int(seed))


# ---------------------------------------------------------------------------
# discrete laws
# ---------------------------------------------------------------------------

class DiscreteLaw:
    """Weights over the blocks of a partition observable.

    Exact mode keeps `Fraction` weights and stays exact under marginalization
    and conditioning; float mode is ordinary float64. Mixing the two in one
    law is rejected.
    """

    __slots__ = ("observable", "weights", "exact")

    def __init__(self, observable: DiscreteObservable, weights, exact: bool | None = None):
        if len(weights) != observable.n_outcomes:
            raise LawError("weight count does not match outcome count")
        ws = list(weights)
        if exact is None:
            exact = all(isinstance(w, (Fraction, int)) for w in ws)
        if exact:
            ws = [Fraction(w) for w in ws]
            if any(w < 0 for w in ws):
                raise LawError("negative weight")
            if sum(ws) != 1:
                raise LawError(f"exact weights sum to {sum(ws)}, not 1")
        else:
            ws = [float(w) for w in ws]
            if any(w < -1e-12 for w in ws):
                raise LawError("negative weight")
            ws = [max(w, 0.0) for w in ws]
            total = sum(ws)
            if abs(total - 1.0) > 1e-9:
                raise LawError(f"weights sum to {total}, not 1")
        self.observable = observable
        self.weights = tuple(ws)
        self.exact = bool(exact)

    @classmethod
    def uniform(cls, observable: DiscreteObservable) -> "DiscreteLaw":
        k = observable.n_outcomes
        return cls(observable, [Fraction(1, k)] * k)

    @classmethod
    def point_mass(cls, observable: DiscreteObservable, outcome: int) -> "DiscreteLaw":
        ws = [Fraction(0)] * observable.n_outcomes
        ws[outcome] = Fraction(1)
        return cls(observable, ws)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, w in enumerate(self.weights) if w > 0)

    def float_weights(self) -> np.ndarray:
        return np.array([float(w) for w in self.weights])

    def weights_key(self) -> tuple:
        """Hashable exact representation; exact mode only."""
        if not self.exact:
            raise LawError("weights_key needs exact-rational weights")
        return tuple((w.numerator, w.denominator) for w in self.weights)

    def marginalize(self, target: DiscreteObservable) -> "DiscreteLaw":
        mapping = self.observable.coarsen_map(target)
        zero = Fraction(0) if self.exact else 0.0
        out = [zero] * target.n_outcomes
        for i, w in enumerate(self.weights):
            out[mapping[i]] += w
        return DiscreteLaw(target, out, exact=self.exact)

    def condition(self, target: DiscreteObservable, outcome: int) -> "DiscreteLaw":
        """The law given {target = outcome}: fiber restricted, renormalized.

        The result lives on the *same* observable with shrunken support.
        """
        mapping = self.observable.coarsen_map(target)
        mass = sum((w for i, w in enumerate(self.weights) if mapping[i] == outcome),
                   Fraction(0) if self.exact else 0.0)
        if mass == 0:
            raise ZeroMassFiber(f"outcome {outcome} of {target.label!r} has zero mass")
        zero = Fraction(0) if self.exact else 0.0
        ws = [w / mass if mapping[i] == outcome else zero
              for i, w in enumerate(self.weights)]
        return DiscreteLaw(self.observable, ws, exact=self.exact)

    def sample(self, n: int, rng) -> np.ndarray:
        rng = _as_rng(rng)
        return rng.choice(self.observable.n_outcomes, size=n, p=self.float_weights())

    def __repr__(self) -> str:
        return f"DiscreteLaw({self.observable.label!r}, {list(self.weights)!r})"


@dataclass(frozen=True)
class DiscreteDisintegration:
    """Conditionals of a discrete law along one arrow, zero-mass fibers dropped."""

    marginal: DiscreteLaw
    conditionals: tuple  # (outcome, mass, DiscreteLaw) triples

    index_kind = "discrete"

    def items(self):
        return self.conditionals

    def conditional(self, outcome: int) -> DiscreteLaw:
        for y, _, law in self.conditionals:
            if y == outcome:
                return law
        raise ZeroMassFiber(f"outcome {outcome} carries no mass")


# ---------------------------------------------------------------------------
# gaussian laws
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AffineCarrier:
    """An affine subspace origin + span(basis columns), in observable coords."""

    origin: np.ndarray
    basis: np.ndarray  # (d, k), orthonormal columns

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def same_carrier(self, other: "AffineCarrier", tol: float = 1e-8) -> bool:
        if self.dim != other.dim:
            return False
        proj_self = self.basis @ self.basis.T
        if not np.allclose(proj_self, other.basis @ other.basis.T, atol=tol):
            return False
        gap = other.origin - self.origin
        return bool(np.linalg.norm(gap - proj_self @ gap) <= tol * (1.0 + np.linalg.norm(gap)))


class GaussianLaw:
    """A gaussian on a subspace observable, demoted to its carrier if singular.

    ``rank_scale`` feeds the demotion cutoff: eigenvalues are dropped when
    they are tiny relative to max(own largest eigenvalue, rank_scale).
    Operations that derive one gaussian from another (marginals, Schur
    conditionals) pass the parent's scale through, so a conditional that is
    mathematically a point mass does not keep a phantom carrier made of
    floating-point residue.
    """

    __slots__ = (
        "observable", "mean", "cov", "cov_scale",
        "carrier_basis", "carrier_evals", "carrier_dim", "logdet_cov",
    )

    def __init__(self, observable: ContinuousObservable, mean, cov,
                 rank_scale: float | None = None):
        d = observable.dim
        mean = np.asarray(mean, dtype=np.float64).reshape(d)
        cov = np.asarray(cov, dtype=np.float64).reshape(d, d)
        if not np.allclose(cov, cov.T, atol=1e-10 * max(1.0, float(np.abs(cov).max(initial=0.0)))):
            raise LawError("covariance must be symmetric")
        cov = 0.5 * (cov + cov.T)
        if d:
            evals, evecs = np.linalg.eigh(cov)
            scale = max(float(evals[-1]), 0.0)
            ref = max(scale, rank_scale or 0.0)
            floor = _RANK_TOL * max(ref, 1e-300)
            if evals[0] < -1e-8 * max(ref, 1.0):
                raise SingularCovariance(f"negative covariance eigenvalue {evals[0]:.3e}")
            keep = evals > floor
            carrier_basis = evecs[:, keep]
            carrier_evals = evals[keep]
        else:
            ref = rank_scale or 0.0
            carrier_basis = np.zeros((0, 0))
            carrier_evals = np.zeros(0)
        self.observable = observable
        self.mean = mean
        self.cov = cov
        self.cov_scale = float(max(ref, 0.0))
        self.carrier_basis = carrier_basis
        self.carrier_evals = carrier_evals
        self.carrier_dim = int(carrier_evals.shape[0])
        self.logdet_cov = float(np.log(carrier_evals).sum()) if self.carrier_dim else 0.0

    @property
    def dim(self) -> int:
        """Dimension of the carrier (the rank of the covariance)."""
        return self.carrier_dim

    @property
    def carrier(self) -> AffineCarrier:
        return AffineCarrier(self.mean, self.carrier_basis)

    def full_rank(self) -> bool:
        return self.carrier_dim == self.observable.dim

    def entropy(self) -> float:
        k = self.carrier_dim
        return 0.5 * self.logdet_cov + 0.5 * k * (LOG_2PI + 1.0)

    def precision(self) -> np.ndarray:
        """Pseudo-inverse of the covariance (exact inverse when full rank)."""
        if self.carrier_dim == 0:
            return np.zeros_like(self.cov)
        u = self.carrier_basis
        return u @ np.diag(1.0 / self.carrier_evals) @ u.T

    def logpdf(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        squeeze = points.ndim == 1
        pts = np.atleast_2d(points)
        diff = pts - self.mean
        reduced = diff @ self.carrier_basis
        quad = (reduced * reduced / self.carrier_evals).sum(axis=1) if self.carrier_dim else np.zeros(len(pts))
        out = -0.5 * (quad + self.carrier_dim * LOG_2PI + self.logdet_cov)
        if self.carrier_dim < self.observable.dim:
            # density vanishes off the affine carrier
            recon = reduced @ self.carrier_basis.T
            off = np.linalg.norm(diff - recon, axis=1)
            out = np.where(off > 1e-8 * (1.0 + np.linalg.norm(self.mean)), -np.inf, out)
        return out[0] if squeeze else out

    def sample(self, n: int, rng) -> np.ndarray:
        rng = _as_rng(rng)
        z = rng.standard_normal((n, self.carrier_dim))
        return self.mean + (z * np.sqrt(self.carrier_evals)) @ self.carrier_basis.T

    def marginalize(self, target: ContinuousObservable) -> "GaussianLaw":
        proj = self.observable.coord_map(target)
        return GaussianLaw(
            target, proj @ self.mean, proj @ self.cov @ proj.T,
            rank_scale=self.cov_scale,
        )

    def condition(self, target: ContinuousObservable, outcome) -> "GaussianLaw":
        """The conditional given {projection onto target = outcome}.

        ``outcome`` is in target coordinates. The result lives on the source
        observable, concentrated on the fiber; its covariance does not depend
        on the outcome (only the mean does).
        """
        gain, cond_cov, marginal = self._conditional_pieces(target)
        outcome = np.asarray(outcome, dtype=np.float64).reshape(target.dim)
        gap = outcome - marginal.mean
        # conditioning at a point outside the marginal carrier hits a
        # zero-probability fiber
        if marginal.carrier_dim < target.dim:
            u = marginal.carrier_basis
            off = gap - u @ (u.T @ gap)
            if np.linalg.norm(off) > 1e-8 * (1.0 + np.linalg.norm(outcome)):
                raise ZeroMassFiber("conditioning point lies off the marginal carrier")
        return GaussianLaw(
            self.observable, self.mean + gain @ gap, cond_cov,
            rank_scale=self.cov_scale,
        )

    def _conditional_pieces(self, target: ContinuousObservable):
        proj = self.observable.coord_map(target)
        marginal = self.marginalize(target)
        cross = self.cov @ proj.T
        gain = cross @ marginal.precision()
        cond_cov = self.cov - gain @ cross.T
        cond_cov = 0.5 * (cond_cov + cond_cov.T)
        return gain, cond_cov, marginal

    def disintegrate(self, target: ContinuousObservable) -> "GaussianConditionalFamily":
        gain, cond_cov, marginal = self._conditional_pieces(target)
        return GaussianConditionalFamily(self, target, marginal, gain, cond_cov)

    def __repr__(self) -> str:
        return (
            f"GaussianLaw(dim={self.observable.dim}, carrier_dim={self.carrier_dim})"
        )


@dataclass(frozen=True, eq=False)
class GaussianConditionalFamily:
    """Disintegration of a gaussian along one arrow.

    The conditional covariance is one fixed matrix; only the conditional mean
    moves (affinely) with the conditioning outcome.
    """

    source: GaussianLaw
    target: ContinuousObservable
    marginal: GaussianLaw
    gain: np.ndarray
    cond_cov: np.ndarray

    index_kind = "continuous"
    constant_shape = True

    def conditional(self, outcome) -> GaussianLaw:
        outcome = np.asarray(outcome, dtype=np.float64).reshape(self.target.dim)
        mean = self.source.mean + self.gain @ (outcome - self.marginal.mean)
        return GaussianLaw(
            self.source.observable, mean, self.cond_cov,
            rank_scale=self.source.cov_scale,
        )


# ---------------------------------------------------------------------------
# gaussian mixtures
# ---------------------------------------------------------------------------

class GaussianMixture:
    """Positive-weight gaussian components on one observable.

    Components must share a carrier: always true at full rank, and verified
    explicitly for demoted components. Log densities route through
    :mod:`chaincert.kernels`, with a dedicated fast path when every component
    has covariance h^2 I (the kernel-density case).
    """

    __slots__ = (
        "observable", "weights", "_components", "_means",
        "_iso_h", "_precs", "_logcs", "_reduce_basis", "_reduce_origin",
    )

    def __init__(self, observable: ContinuousObservable, components, weights):
        components = list(components)
        weights = np.asarray(weights, dtype=np.float64)
        if len(components) != weights.shape[0] or not components:
            raise LawError("component/weight count mismatch")
        if np.any(weights < 0):
            raise LawError("negative mixture weight")
        total = weights.sum()
        if not np.isfinite(total) or abs(total - 1.0) > 1e-9:
            raise LawError(f"mixture weights sum to {total}, not 1")
        keep = weights > 0
        components = [c for c, k in zip(components, keep) if k]
        weights = weights[keep]
        weights = weights / weights.sum()
        for comp in components:
            if not comp.observable.same_observable(observable):
                raise InvalidSector("component lives on a different observable")
        self.observable = observable
        self.weights = weights
        self._components = tuple(components)
        self._means = np.array([c.mean for c in components])
        self._iso_h = None
        self._reduce_basis = None
        self._reduce_origin = None
        d = observable.dim
        if all(c.full_rank() for c in components):
            self._precs = np.array([c.precision() for c in components])
            self._logcs = (
                np.log(weights)
                - 0.5 * np.array([c.logdet_cov for c in components])
                - 0.5 * d * LOG_2PI
            )
            hs = [c.carrier_evals for c in components]
            if d and all(np.allclose(h, hs[0][0]) for h in hs) and np.allclose(
                components[0].cov, hs[0][0] * np.eye(d)
            ):
                self._iso_h = float(np.sqrt(hs[0][0]))
        else:
            base = components[0].carrier
            for comp in components[1:]:
                if not base.same_carrier(comp.carrier):
                    raise LawError("mixture components must share one carrier")
            self._reduce_basis = base.basis
            self._reduce_origin = base.origin
            k = base.dim
            red_means = (self._means - base.origin) @ base.basis
            red_covs = [base.basis.T @ c.cov @ base.basis for c in components]
            self._means = red_means
            self._precs = np.array([np.linalg.inv(c) for c in red_covs]) if k else np.zeros((len(components), 0, 0))
            logdets = [float(np.linalg.slogdet(c)[1]) if k else 0.0 for c in red_covs]
            self._logcs = np.log(weights) - 0.5 * np.array(logdets) - 0.5 * k * LOG_2PI

    @classmethod
    def isotropic(
        cls,
        observable: ContinuousObservable,
        centers: np.ndarray,
        h: float,
        weights=None,
    ) -> "GaussianMixture":
        """Uniform (or given) weights, covariance h^2 I at each center.

        Built without materializing per-component law objects, so fitting a
        density estimate with 1e4 centers stays cheap.
        """
        if h <= 0:
            raise LawError("bandwidth must be positive")
        mixture = cls.__new__(cls)
        centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
        k, d = centers.shape
        if d != observable.dim:
            raise InvalidSector("centers do not match observable dimension")
        if weights is None:
            weights = np.full(k, 1.0 / k)
        else:
            weights = np.asarray(weights, dtype=np.float64)
            if abs(weights.sum() - 1.0) > 1e-9 or np.any(weights < 0):
                raise LawError("bad isotropic mixture weights")
        mixture.observable = observable
        mixture.weights = weights
        mixture._components = None
        mixture._means = centers
        mixture._iso_h = float(h)
        mixture._precs = None
        mixture._logcs = np.log(weights) - d * np.log(h) - 0.5 * d * LOG_2PI
        mixture._reduce_basis = None
        mixture._reduce_origin = None
        return mixture

    @property
    def components(self) -> tuple:
        if self._components is None:
            eye = np.eye(self.observable.dim)
            cov = (self._iso_h ** 2) * eye
            self._components = tuple(
                GaussianLaw(self.observable, m, cov) for m in self._means
            )
        return self._components

    @property
    def n_components(self) -> int:
        return self._means.shape[0]

    @property
    def carrier_dim(self) -> int:
        if self._reduce_basis is not None:
            return self._reduce_basis.shape[1]
        return self.observable.dim

    def component_logdets(self) -> np.ndarray:
        if self._iso_h is not None:
            d = self.observable.dim
            return np.full(self.n_components, 2.0 * d * np.log(self._iso_h))
        return np.array([c.logdet_cov for c in self.components])

    def _kernel_points(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if self._reduce_basis is None:
            return points
        return (points - self._reduce_origin) @ self._reduce_basis

    def _off_carrier(self, points: np.ndarray) -> np.ndarray | None:
        if self._reduce_basis is None:
            return None
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        diff = points - self._reduce_origin
        recon = (diff @ self._reduce_basis) @ self._reduce_basis.T
        return np.linalg.norm(diff - recon, axis=1) > 1e-8

    def logpdf(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        squeeze = points.ndim == 1 and self.observable.dim != 0
        out = kernels.mixture_logpdf(
            self._kernel_points(points),
            self._means,
            precs=self._precs,
            logcs=self._logcs,
            iso_inv_h2=(1.0 / self._iso_h ** 2) if self._iso_h is not None else None,
        )
        off = self._off_carrier(points)
        if off is not None:
            out = np.where(off, -np.inf, out)
        return out[0] if squeeze else out

    def logpdf_and_posterior_entropy(self, points):
        """Fused log m(x) and entropy of the posterior over components."""
        return kernels.mixture_logpdf_entropy(
            self._kernel_points(points),
            self._means,
            precs=self._precs,
            logcs=self._logcs,
            iso_inv_h2=(1.0 / self._iso_h ** 2) if self._iso_h is not None else None,
        )

    def sample(self, n: int, rng) -> np.ndarray:
        rng = _as_rng(rng)
        idx = rng.choice(self.n_components, size=n, p=self.weights)
        if self._iso_h is not None:
            z = rng.standard_normal((n, self.observable.dim))
            return self._means[idx] + self._iso_h * z
        d = self.observable.dim
        out = np.empty((n, d))
        z = rng.standard_normal((n, d))
        comps = self.components
        for j in np.unique(idx):
            sel = idx == j
            comp = comps[j]
            zj = z[sel][:, : comp.carrier_dim]
            out[sel] = comp.mean + (zj * np.sqrt(comp.carrier_evals)) @ comp.carrier_basis.T
        return out

    def marginalize(self, target: ContinuousObservable) -> "GaussianMixture":
        if self._iso_h is not None and target.dim:
            # isotropic stays isotropic under orthogonal coordinate projection
            proj = self.observable.coord_map(target)
            if np.allclose(proj @ proj.T, np.eye(target.dim), atol=1e-12):
                return GaussianMixture.isotropic(
                    target, self._means @ proj.T, self._iso_h, self.weights
                )
        comps = [c.marginalize(target) for c in self.components]
        return GaussianMixture(target, comps, self.weights)

    def disintegrate(self, target: ContinuousObservable) -> "MixturePosteriorFamily":
        marginal = self.marginalize(target)
        families = tuple(c.disintegrate(target) for c in self.components)
        return MixturePosteriorFamily(self, target, marginal, families)

    def __repr__(self) -> str:
        return f"GaussianMixture(k={self.n_components}, dim={self.observable.dim})"


@dataclass(frozen=True, eq=False)
class MixturePosteriorFamily:
    """Disintegration of a mixture: posterior component weights + conditioned parts."""

    source: GaussianMixture
    target: ContinuousObservable
    marginal: GaussianMixture
    component_families: tuple

    index_kind = "continuous"
    constant_shape = False

    def posterior_weights(self, outcome) -> np.ndarray:
        outcome = np.asarray(outcome, dtype=np.float64).reshape(self.target.dim)
        logs = np.array([
            float(fam.marginal.logpdf(outcome)) for fam in self.component_families
        ]) + np.log(self.source.weights)
        top = logs.max()
        if not np.isfinite(top):
            raise ZeroMassFiber("conditioning point has zero mixture density")
        post = np.exp(logs - top)
        return post / post.sum()

    def conditional(self, outcome) -> GaussianMixture:
        post = self.posterior_weights(outcome)
        comps = [fam.conditional(outcome) for fam in self.component_families]
        return GaussianMixture(self.source.observable, comps, post)


# ---------------------------------------------------------------------------
# mixed laws on product observables
# ---------------------------------------------------------------------------

class MixedLaw:
    """p(y) on the discrete part, one continuous conditional per outcome."""

    __slots__ = ("observable", "p", "conditionals")

    def __init__(self, observable: ProductObservable, p: DiscreteLaw, conditionals):
        if not isinstance(observable, ProductObservable):
            raise InvalidSector("MixedLaw needs a product observable")
        if not p.observable.same_observable(observable.discrete_part):
            raise InvalidSector("discrete marginal lives on the wrong observable")
        conditionals = tuple(conditionals)
        if len(conditionals) != p.observable.n_outcomes:
            raise LawError("one conditional per discrete outcome required")
        for i, cond in enumerate(conditionals):
            w = p.weights[i]
            if cond is None:
                if w > 0:
                    raise LawError(f"outcome {i} has mass but no conditional")
                continue
            if not cond.observable.same_observable(observable.continuous_part):
                raise InvalidSector("conditional lives on the wrong continuous observable")
        self.observable = observable
        self.p = p
        self.conditionals = conditionals

    @property
    def support(self) -> tuple[int, ...]:
        return self.p.support

    def gaussian_conditionals(self) -> bool:
        return all(
            isinstance(self.conditionals[i], GaussianLaw) for i in self.support
        )

    def marginal_discrete(self) -> DiscreteLaw:
        return self.p

    def marginal_mixture(self) -> GaussianMixture:
        """Continuous marginal: the p-weighted mixture of the conditionals."""
        comps, weights = [], []
        pf = self.p.float_weights()
        for i in self.support:
            cond = self.conditionals[i]
            if isinstance(cond, GaussianMixture):
                comps.extend(cond.components)
                weights.extend(pf[i] * cond.weights)
            else:
                comps.append(cond)
                weights.append(pf[i])
        return GaussianMixture(self.observable.continuous_part, comps, weights)

    def log_density(self, x, y: int) -> float:
        w = float(self.p.weights[y])
        if w == 0.0:
            return -np.inf
        return float(np.log(w) + self.conditionals[y].logpdf(np.asarray(x)))

    def sample(self, n: int, rng):
        rng = _as_rng(rng)
        ys = self.p.sample(n, rng)
        xs = np.empty((n, self.observable.continuous_part.dim))
        for y in np.unique(ys):
            sel = ys == y
            xs[sel] = self.conditionals[y].sample(int(sel.sum()), rng)
        return xs, ys

    def posterior_weights(self, points) -> np.ndarray:
        """rho_x(y) over discrete outcomes, rows indexed by points."""
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        pf = self.p.float_weights()
        cols = np.full((points.shape[0], self.p.observable.n_outcomes), -np.inf)
        for i in self.support:
            cols[:, i] = np.log(pf[i]) + self.conditionals[i].logpdf(points)
        top = cols.max(axis=1, keepdims=True)
        post = np.exp(cols - top)
        return post / post.sum(axis=1, keepdims=True)

    def condition_on_continuous(self, x) -> DiscreteLaw:
        post = self.posterior_weights(np.asarray(x))[0]
        return DiscreteLaw(self.p.observable, post, exact=False)

    def condition_on_discrete(self, y: int):
        """The continuous conditional at outcome y (a gaussian or mixture)."""
        if float(self.p.weights[y]) == 0.0:
            raise ZeroMassFiber(f"discrete outcome {y} has zero mass")
        return self.conditionals[y]

    def marginalize(self, target: ProductObservable):
        """Push along a product arrow; identifies degenerate targets.

        Returns a DiscreteLaw when the continuous part collapses to the
        terminal subspace, a GaussianMixture when the discrete part collapses
        to the one-block partition, and a MixedLaw otherwise.
        """
        if not is_coarser(self.observable, target):
            raise InvalidArrow("target is not coarser than the law's observable")
        cont_t = target.continuous_part
        disc_t = target.discrete_part
        p_new = self.p.marginalize(disc_t)
        if cont_t.dim == 0:
            return p_new
        mapping = self.p.observable.coarsen_map(disc_t)
        pf = self.p.float_weights()
        new_conditionals: list = []
        for yt in range(disc_t.n_outcomes):
            members = [i for i in self.support if mapping[i] == yt]
            if not members:
                new_conditionals.append(None)
                continue
            comps, weights = [], []
            for i in members:
                cond = self.conditionals[i].marginalize(cont_t)
                if isinstance(cond, GaussianMixture):
                    comps.extend(cond.components)
                    weights.extend(pf[i] * cond.weights)
                else:
                    comps.append(cond)
                    weights.append(pf[i])
            weights = np.asarray(weights)
            weights = weights / weights.sum()
            if len(comps) == 1:
                new_conditionals.append(comps[0])
            else:
                new_conditionals.append(GaussianMixture(cont_t, comps, weights))
        if disc_t.n_outcomes == 1:
            return new_conditionals[0] if isinstance(new_conditionals[0], GaussianMixture) \
                else GaussianMixture(cont_t, [new_conditionals[0]], [1.0])
        return MixedLaw(target, p_new, new_conditionals)

    def condition(self, target: ProductObservable, outcome):
        """Condition on {projection onto target = outcome}, outcome = (x', y')."""
        x_out, y_out = outcome
        law = self
        if target.discrete_part.n_outcomes > 1 or len(self.p.weights) > 1:
            law = law._condition_discrete_part(target.discrete_part, int(y_out))
        if target.continuous_part.dim > 0:
            law = law._condition_continuous_part(target.continuous_part, x_out)
        return law

    def _condition_discrete_part(self, disc_t: DiscreteObservable, y_out: int) -> "MixedLaw":
        p_cond = self.p.condition(disc_t, y_out)
        conds = tuple(
            self.conditionals[i] if float(p_cond.weights[i]) > 0 else None
            for i in range(len(self.conditionals))
        )
        return MixedLaw(self.observable, p_cond, conds)

    def _condition_continuous_part(self, cont_t: ContinuousObservable, x_out) -> "MixedLaw":
        x_out = np.asarray(x_out, dtype=np.float64).reshape(cont_t.dim)
        pf = self.p.float_weights()
        logs = np.full(len(pf), -np.inf)
        new_conds: list = [None] * len(pf)
        for i in self.support:
            cond = self.conditionals[i]
            if isinstance(cond, GaussianMixture):
                fam = cond.disintegrate(cont_t)
                logs[i] = np.log(pf[i]) + float(fam.marginal.logpdf(x_out))
                new_conds[i] = fam.conditional(x_out)
            else:
                fam = cond.disintegrate(cont_t)
                logs[i] = np.log(pf[i]) + float(fam.marginal.logpdf(x_out))
                new_conds[i] = fam.conditional(x_out)
        top = logs.max()
        if not np.isfinite(top):
            raise ZeroMassFiber("continuous conditioning point has zero density")
        post = np.exp(logs - top)
        post = post / post.sum()
        p_new = DiscreteLaw(self.p.observable, post, exact=False)
        conds = tuple(
            new_conds[i] if post[i] > 0 else None for i in range(len(pf))
        )
        return MixedLaw(self.observable, p_new, conds)

    def __repr__(self) -> str:
        return (
            f"MixedLaw(k={len(self.support)}, dim={self.observable.continuous_part.dim})"
        )


# ---------------------------------------------------------------------------
# reference measures (descriptive)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReferenceMeasure:
    """The measure a law's density is taken against.

    kind is "counting" (discrete support), "lebesgue" (an affine carrier of
    the stated dimension), or "product-sum" (one lebesgue carrier per discrete
    outcome, summed).
    """

    kind: str
    carrier_dim: int
    detail: str = ""

    def to_dict(self) -> dict:
        return {"kind": self.kind, "carrier_dim": self.carrier_dim, "detail": self.detail}


def reference_measure(law) -> ReferenceMeasure:
    if isinstance(law, DiscreteLaw):
        return ReferenceMeasure("counting", 0, f"{len(law.support)} atoms")
    if isinstance(law, GaussianLaw):
        return ReferenceMeasure("lebesgue", law.carrier_dim)
    if isinstance(law, GaussianMixture):
        return ReferenceMeasure("lebesgue", law.carrier_dim)
    if isinstance(law, MixedLaw):
        dims = {law.conditionals[i].observable.dim for i in law.support}
        return ReferenceMeasure(
            "product-sum",
            max(dims) if dims else 0,
            f"{len(law.support)} lebesgue carriers",
        )
    raise InvalidSector(f"no reference measure for {type(law).__name__}")


# ---------------------------------------------------------------------------
# module-level operations
# ---------------------------------------------------------------------------

def marginalize(law, target):
    """Push a law along the arrow from its observable to ``target``."""
    if isinstance(law, DiscreteLaw):
        return law.marginalize(target)
    if isinstance(law, (GaussianLaw, GaussianMixture)):
        return law.marginalize(target)
    if isinstance(law, MixedLaw):
        return law.marginalize(target)
    raise InvalidSector(f"cannot marginalize {type(law).__name__}")


def disintegrate(law, target):
    """Conditionals of ``law`` along the arrow to ``target``."""
    if isinstance(law, DiscreteLaw):
        marginal = law.marginalize(target)
        triples = []
        for y in range(target.n_outcomes):
            if marginal.weights[y] > 0:
                triples.append((y, marginal.weights[y], law.condition(target, y)))
        return DiscreteDisintegration(marginal, tuple(triples))
    if isinstance(law, GaussianLaw):
        return law.disintegrate(target)
    if isinstance(law, GaussianMixture):
        return law.disintegrate(target)
    raise InvalidSector(f"cannot disintegrate {type(law).__name__} here")


def log_density(law, outcome) -> float:
    if isinstance(law, DiscreteLaw):
        w = float(law.weights[outcome])
        return float(np.log(w)) if w > 0 else -np.inf
    if isinstance(law, (GaussianLaw, GaussianMixture)):
        return float(law.logpdf(np.asarray(outcome)))
    if isinstance(law, MixedLaw):
        x, y = outcome
        return law.log_density(x, int(y))
    raise InvalidSector(f"no density for {type(law).__name__}")


def density(law, outcome) -> float:
    return float(np.exp(log_density(law, outcome)))


def sample(law, n: int, seed):
    rng = _as_rng(seed)
    return law.sample(n, rng)


def _log_density_batch(law, xs, ys=None) -> np.ndarray:
    if isinstance(law, MixedLaw):
        pf = law.p.float_weights()
        out = np.full(len(ys), -np.inf)
        for y in np.unique(ys):
            sel = ys == y
            if pf[y] > 0:
                out[sel] = np.log(pf[y]) + law.conditionals[y].logpdf(xs[sel])
        return out
    return law.logpdf(xs)


def tv_distance(f, g, budget: int = 100_000, seed: int = 0, target_se: float | None = None) -> Estimate:
    """Total variation distance between two laws on one observable.

    Discrete pairs are summed exactly. Continuous and mixed pairs are
    estimated by sampling the balanced mixture (f+g)/2 and averaging
    |tanh((log f - log g)/2)|, which is bounded by 1, so the standard error
    is honest. Raises BudgetTooSmall when ``target_se`` is requested but not
    reached.
    """
    if isinstance(f, DiscreteLaw) and isinstance(g, DiscreteLaw):
        if not f.observable.same_observable(g.observable):
            raise InvalidSector("laws live on different observables")
        exact = f.exact and g.exact
        total = sum(abs(a - b) for a, b in zip(f.weights, g.weights))
        return Estimate(float(total) / 2.0, 0.0,
                        "exact-rational" if exact else "closed-form")
    if type(f) is not type(g) and not (
        isinstance(f, (GaussianLaw, GaussianMixture))
        and isinstance(g, (GaussianLaw, GaussianMixture))
    ):
        raise InvalidSector("total variation needs laws of comparable kinds")
    budget = _require_budget(budget)
    rng = derived_rng(seed, "tv-distance")
    n_f = budget // 2
    n_g = budget - n_f
    if isinstance(f, MixedLaw):
        xf, yf = f.sample(n_f, rng)
        xg, yg = g.sample(n_g, rng)
        xs = np.vstack([xf, xg])
        ys = np.concatenate([yf, yg])
        log_f = _log_density_batch(f, xs, ys)
        log_g = _log_density_batch(g, xs, ys)
    else:
        xs = np.vstack([np.atleast_2d(f.sample(n_f, rng)), np.atleast_2d(g.sample(n_g, rng))])
        log_f = f.logpdf(xs)
        log_g = g.logpdf(xs)
    with np.errstate(invalid="ignore"):
        integrand = np.abs(np.tanh(0.5 * (log_f - log_g)))
    # points where one density is zero contribute |f-g|/(f+g) = 1
    integrand = np.where(np.isnan(integrand), 1.0, integrand)
    value = float(integrand.mean())
    std_error = float(integrand.std(ddof=1) / np.sqrt(len(integrand)))
    if target_se is not None and std_error > target_se:
        raise BudgetTooSmall(
            f"standard error {std_error:.3e} above requested {target_se:.3e}"
        )
    return Estimate(value, std_error, "mc", budget)


# ---------------------------------------------------------------------------
# random-law helpers for the randomized suites
# ---------------------------------------------------------------------------

def random_rational_law(
    observable: DiscreteObservable, rng, max_denominator: int = 24
) -> DiscreteLaw:
    """Exact-rational law with weights k_i / K, K <= max_denominator."""
    rng = _as_rng(rng)
    k = observable.n_outcomes
    while True:
        numerators = rng.integers(0, max_denominator + 1, size=k)
        total = int(numerators.sum())
        if total > 0:
            break
    return DiscreteLaw(observable, [Fraction(int(n), total) for n in numerators])


def random_spd_matrix(rng, d: int, jitter: float = 0.5) -> np.ndarray:
    """Random symmetric positive-definite matrix with a moderate condition number."""
    rng = _as_rng(rng)
    a = rng.standard_normal((d, d))
    return a @ a.T + jitter * np.eye(d)


def random_gaussian(observable: ContinuousObservable, rng, mean_scale: float = 1.0) -> GaussianLaw:
    rng = _as_rng(rng)
    d = observable.dim
    return GaussianLaw(
        observable,
        mean_scale * rng.standard_normal(d),
        random_spd_matrix(rng, d),
    )


def random_mixed_law(observable: ProductObservable, rng, mean_scale: float = 2.0) -> MixedLaw:
    """Random mixed law with gaussian conditionals on every outcome."""
    rng = _as_rng(rng)
    k = observable.discrete_part.n_outcomes
    raw = rng.uniform(0.2, 1.0, size=k)
    p = DiscreteLaw(observable.discrete_part, raw / raw.sum(), exact=False)
    conds = [
        random_gaussian(observable.continuous_part, rng, mean_scale=mean_scale)
        for _ in range(k)
    ]
    return MixedLaw(observable, p, conds)
