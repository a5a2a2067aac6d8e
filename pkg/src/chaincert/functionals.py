"""Entropy-type functionals and the conditional-average action.

The central object is the three-parameter family

    phi[a,b,c](law) = (a - b/2) * Lbar(law) + c * dim(law)
                      - (b * dim(law) / 2) * log(2 pi e) + b * S(law)

where S is entropy with respect to the law's reference measure, dim is the
carrier dimension of the continuous part (0 for discrete laws), and Lbar is
the mean log-determinant of the gaussian building blocks: the covariance
log-determinant for a single gaussian, the weight-averaged component value
for a mixture, and the p-average over conditionals for a mixed law. On a
plain gaussian the entropy terms cancel and the value collapses to
a * logdet(cov) + c * dim.

Lbar is a property of the presentation, not of the density alone. The
``mixture_rule`` switch picks what a mixture-type law reports:

* ``"lifted"`` keeps the component average (the formula above), which makes
  the chain-rule identity hold for every (a, b, c);
* ``"density"`` drops the Lbar term, i.e. phi = b*S + (c - (b/2) log 2 pi e)*dim,
  which agrees with the lifted value exactly when a = b/2 and otherwise
  breaks the chain rule on mixtures by (a - b/2) * Lbar.

``act(phi, law, index, target)`` is the conditional average
E_{y ~ law|index} [ phi( (law | index=y) marginalized to target ) ], computed
exactly for discrete indexes, in closed form for gaussian laws (the
conditional covariance does not depend on y), through a fused streaming
kernel for the mixed-law posterior case, and by plain Monte Carlo otherwise.
"""
from __future__ import annotations

import numpy as np

from .errors import BudgetTooSmall, DivergentAction, InvalidSector, LawError
from .laws import (
    DiscreteLaw,
    GaussianLaw,
    GaussianMixture,
    LOG_2PI,
    MIN_MC_BUDGET,
    MixedLaw,
    marginalize,
)
from .reporting import Estimate
from .seeding import derived_rng
from .structures import ContinuousObservable, DiscreteObservable, ProductObservable

LOG_2PI_E = LOG_2PI + 1.0


def _floor_budget(budget: int) -> int:
    budget = int(budget)
    if budget < MIN_MC_BUDGET:
        raise BudgetTooSmall(f"budget {budget} below the floor {MIN_MC_BUDGET}")
    return budget


# ---------------------------------------------------------------------------
# entropies
# ---------------------------------------------------------------------------

def discrete_entropy(law: DiscreteLaw) -> float:
    """Shannon entropy in nats; zero-weight outcomes contribute nothing."""
    total = 0.0
    for w in law.weights:
        wf = float(w)
        if wf > 0.0:
            total -= wf * np.log(wf)
    return total


def gaussian_entropy(law: GaussianLaw) -> float:
    """Differential entropy on the carrier; a point mass has entropy zero."""
    return law.entropy()


def joint_entropy_exact(law: MixedLaw) -> float:
    """H(p) + sum_y p(y) S(g_y); requires gaussian conditionals."""
    if not law.gaussian_conditionals():
        raise LawError("exact joint entropy needs gaussian conditionals")
    pf = law.p.float_weights()
    return discrete_entropy(law.p) + sum(
        pf[i] * law.conditionals[i].entropy() for i in law.support
    )


def mixture_entropy(law: GaussianMixture, budget: int = 100_000, seed=0) -> Estimate:
    """Monte Carlo entropy of a mixture: -E[log m(X)], X drawn from m."""
    if law.n_components == 1:
        return Estimate(law.components[0].entropy(), 0.0, "closed-form")
    budget = _floor_budget(budget)
    rng = seed if isinstance(seed, np.random.Generator) else derived_rng(seed, "mix-entropy")
    xs = law.sample(budget, rng)
    neg_log = -law.logpdf(xs)
    return Estimate(
        float(neg_log.mean()),
        float(neg_log.std(ddof=1) / np.sqrt(budget)),
        "mc",
        budget,
    )


def entropy(law, budget: int = 100_000, seed=0) -> Estimate:
    """Entropy of any supported law, exact where a closed form exists."""
    if isinstance(law, DiscreteLaw):
        return Estimate(discrete_entropy(law), 0.0, "closed-form")
    if isinstance(law, GaussianLaw):
        return Estimate(gaussian_entropy(law), 0.0, "closed-form")
    if isinstance(law, GaussianMixture):
        return mixture_entropy(law, budget, seed)
    if isinstance(law, MixedLaw):
        if law.gaussian_conditionals():
            return Estimate(joint_entropy_exact(law), 0.0, "closed-form")
        rng = seed if isinstance(seed, np.random.Generator) else derived_rng(seed, "mixed-entropy")
        pf = law.p.float_weights()
        value = discrete_entropy(law.p)
        var = 0.0
        for i in law.support:
            part = entropy(law.conditionals[i], budget, rng)
            value += pf[i] * part.value
            var += (pf[i] * part.std_error) ** 2
        return Estimate(value, float(np.sqrt(var)), "mc", budget)
    raise InvalidSector(f"no entropy for {type(law).__name__}")


def _carrier_dim(law) -> int:
    if isinstance(law, DiscreteLaw):
        return 0
    if isinstance(law, (GaussianLaw, GaussianMixture)):
        return law.carrier_dim
    if isinstance(law, MixedLaw):
        dims = {_carrier_dim(law.conditionals[i]) for i in law.support}
        if len(dims) != 1:
            raise LawError("mixed-law conditionals have unequal carrier dimensions")
        return dims.pop()
    raise InvalidSector(f"no carrier dimension for {type(law).__name__}")


def _mean_logdet(law) -> float:
    """Weight-averaged log-determinant of the gaussian building blocks."""
    if isinstance(law, DiscreteLaw):
        return 0.0
    if isinstance(law, GaussianLaw):
        return law.logdet_cov
    if isinstance(law, GaussianMixture):
        return float(law.weights @ law.component_logdets())
    if isinstance(law, MixedLaw):
        pf = law.p.float_weights()
        return sum(pf[i] * _mean_logdet(law.conditionals[i]) for i in law.support)
    raise InvalidSector(f"no log-determinant average for {type(law).__name__}")


# ---------------------------------------------------------------------------
# the (a, b, c) cochain family
# ---------------------------------------------------------------------------

class EntropyCochain:
    """One member of the phi[a,b,c] family, with a mixture presentation rule."""

    __slots__ = ("a", "b", "c", "mixture_rule")

    def __init__(self, a: float, b: float, c: float, mixture_rule: str = "lifted"):
        if mixture_rule not in ("lifted", "density"):
            raise ValueError(f"unknown mixture rule {mixture_rule!r}")
        self.a = float(a)
        self.b = float(b)
        self.c = float(c)
        self.mixture_rule = mixture_rule

    @property
    def label(self) -> str:
        return f"phi[a={self.a:g},b={self.b:g},c={self.c:g}]"

    def evaluate(self, law, budget: int = 100_000, seed=0) -> Estimate:
        s = entropy(law, budget, seed)
        d = _carrier_dim(law)
        if self.mixture_rule == "lifted":
            value = (
                (self.a - self.b / 2.0) * _mean_logdet(law)
                + self.c * d
                - 0.5 * self.b * d * LOG_2PI_E
                + self.b * s.value
            )
        else:
            value = self.b * s.value + (self.c - 0.5 * self.b * LOG_2PI_E) * d
        return Estimate(value, abs(self.b) * s.std_error, s.method, s.budget)

    def __repr__(self) -> str:
        return f"EntropyCochain(a={self.a}, b={self.b}, c={self.c}, rule={self.mixture_rule!r})"


def make_cochain(a: float, b: float, c: float, mixture_rule: str = "lifted") -> EntropyCochain:
    return EntropyCochain(a, b, c, mixture_rule)


ENTROPY_COCHAIN = make_cochain(0.0, 1.0, 0.0)
LOGDET_COCHAIN = make_cochain(1.0, 0.0, 0.0)
DIMENSION_COCHAIN = make_cochain(0.0, 0.0, 1.0)


def phi_from_entropy(a: float, b: float, c: float, h: float, dim: int, s: Estimate) -> Estimate:
    """phi[a,b,c] of an isotropic mixture with bandwidth h, from a given entropy.

    All components share covariance h^2 I, so the mean log-determinant is
    2 * dim * log h and the value is pure arithmetic on the entropy estimate:

        2 dim (a - b/2) log h + c dim - (b dim / 2) log(2 pi e) + b * S
    """
    value = (
        2.0 * dim * (a - b / 2.0) * np.log(h)
        + c * dim
        - 0.5 * b * dim * LOG_2PI_E
        + b * s.value
    )
    return Estimate(float(value), abs(b) * s.std_error, s.method, s.budget)


def phi_candidate(
    a: float, b: float, c: float, law: GaussianMixture, budget: int = 100_000, seed=0
) -> Estimate:
    """phi[a,b,c] of an isotropic mixture, estimating the entropy itself."""
    if law._iso_h is None:
        raise LawError("phi_candidate needs an isotropic mixture (shared bandwidth)")
    s = mixture_entropy(law, budget, seed)
    return phi_from_entropy(a, b, c, law._iso_h, law.observable.dim, s)


# ---------------------------------------------------------------------------
# conditional-average action
# ---------------------------------------------------------------------------

def _condition_at(law, index, outcome, family=None):
    if family is not None:
        return family.conditional(outcome)
    if isinstance(law, DiscreteLaw):
        return law.condition(index, int(outcome))
    if isinstance(law, (GaussianLaw, MixedLaw)):
        return law.condition(index, outcome)
    raise InvalidSector(f"cannot condition {type(law).__name__}")


def _is_full_continuous_index(law: MixedLaw, index) -> bool:
    cont = law.observable.continuous_part
    if isinstance(index, ContinuousObservable):
        return index.same_observable(cont)
    if isinstance(index, ProductObservable):
        return (
            index.continuous_part.same_observable(cont)
            and index.discrete_part.n_outcomes == 1
        )
    return False


def _is_discrete_target(law: MixedLaw, target) -> bool:
    disc = law.observable.discrete_part
    if isinstance(target, DiscreteObservable):
        return target.same_observable(disc)
    if isinstance(target, ProductObservable):
        return (
            target.discrete_part.same_observable(disc)
            and target.continuous_part.dim == 0
        )
    return False


def _check_divergence(values: np.ndarray) -> None:
    """Flag prefix means that jump by many standard errors as they grow."""
    n = values.shape[0]
    k = 500
    while 2 * k <= n:
        head = values[:k]
        m1 = float(head.mean())
        se1 = float(head.std(ddof=1) / np.sqrt(k))
        m2 = float(values[: 2 * k].mean())
        if abs(m2 - m1) > 10.0 * se1 + 1e-12:
            raise DivergentAction(
                f"prefix mean moved from {m1:.6g} to {m2:.6g} against a standard"
                f" error of {se1:.3g}; the conditional average looks divergent"
            )
        k *= 2


def act(phi, law, index, target, budget: int = 100_000, seed=0) -> Estimate:
    """Conditional average of phi: condition on the index, marginalize the
    conditional to the target, evaluate, and average over index outcomes.

    Exact for discrete laws; closed-form for gaussians (the conditional
    covariance is outcome-independent and an EntropyCochain only reads the
    covariance); a single fused kernel pass for the mixed-law posterior case;
    Monte Carlo with a divergence tripwire otherwise.
    """
    if isinstance(law, DiscreteLaw):
        marg = law.marginalize(index)
        total = 0.0
        for y in range(index.n_outcomes):
            mass = float(marg.weights[y])
            if mass == 0.0:
                continue
            cond = law.condition(index, y).marginalize(target)
            total += mass * phi.evaluate(cond).value
        return Estimate(total, 0.0, "closed-form")

    if isinstance(law, GaussianLaw) and isinstance(phi, EntropyCochain):
        family = law.disintegrate(index)
        probe = family.conditional(family.marginal.mean).marginalize(target)
        return phi.evaluate(probe)

    if (
        isinstance(law, MixedLaw)
        and isinstance(phi, EntropyCochain)
        and law.gaussian_conditionals()
        and _is_full_continuous_index(law, index)
        and _is_discrete_target(law, target)
    ):
        budget = _floor_budget(budget)
        rng = seed if isinstance(seed, np.random.Generator) else derived_rng(seed, "act-fused")
        mix = law.marginal_mixture()
        xs = mix.sample(budget, rng)
        _, ent = mix.logpdf_and_posterior_entropy(xs)
        return Estimate(
            float(phi.b * ent.mean()),
            float(abs(phi.b) * ent.std(ddof=1) / np.sqrt(budget)),
            "mc-fused",
            budget,
        )

    return _act_mc(phi, law, index, target, budget, seed)


def _act_mc(phi, law, index, target, budget: int, seed) -> Estimate:
    budget = _floor_budget(budget)
    rng = seed if isinstance(seed, np.random.Generator) else derived_rng(seed, "act-mc")
    n_outer = min(budget, 4000)
    inner = max(MIN_MC_BUDGET, budget // n_outer)
    marg = marginalize(law, index)
    if isinstance(marg, MixedLaw):
        xs, ys = marg.sample(n_outer, rng)
        outcomes = [(xs[i], int(ys[i])) for i in range(n_outer)]
    else:
        drawn = marg.sample(n_outer, rng)
        outcomes = [drawn[i] for i in range(n_outer)]
    family = None
    if isinstance(law, GaussianMixture):
        family = law.disintegrate(index)
    values = np.empty(n_outer)
    for i, outcome in enumerate(outcomes):
        cond = _condition_at(law, index, outcome, family)
        reduced = marginalize(cond, target)
        values[i] = phi.evaluate(reduced, budget=inner, seed=rng).value
    _check_divergence(values)
    return Estimate(
        float(values.mean()),
        float(values.std(ddof=1) / np.sqrt(n_outer)),
        "mc",
        n_outer,
    )
