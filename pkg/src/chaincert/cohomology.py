"""Chain-rule certification: does a functional satisfy the cocycle identity?

The identity under test, for a law rho and a pair of observables (X1, X2)
coarser than rho's observable, both living in one structure with the joint
X1 ^ X2:

    phi(rho -> X1 ^ X2) = phi(rho -> X1)
                          + E_{y ~ rho -> X1} [ phi((rho | X1 = y) -> X2) ]

Discrete suites evaluate both sides exactly on random rational laws over
partition lattices. Gaussian suites run on coordinate-subspace lattices,
where all the projections commute and the identity is exact for the
log-determinant and carrier-dimension functionals; residuals are pure
floating-point noise. Mixed suites compare the two evaluation routes for the
continuous marginal of a random mixed law, where the only honest residual is
shared Monte Carlo noise, reported against three standard errors.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import MalformedInput
from .functionals import (
    DIMENSION_COCHAIN,
    ENTROPY_COCHAIN,
    EntropyCochain,
    LOG_2PI_E,
    LOGDET_COCHAIN,
    act,
    discrete_entropy,
)
from .laws import (
    GaussianLaw,
    _require_budget,
    random_gaussian,
    random_mixed_law,
    random_rational_law,
    random_spd_matrix,
)
from .reporting import Estimate, IdentityCase, IdentityReport
from .seeding import derived_rng
from .structures import (
    ContinuousObservable,
    DiscreteObservable,
    InformationStructure,
    ProductObservable,
    euclidean_observable,
    partition_lattice,
)


class CorruptedCochain:
    """Wrapper that doubles the value on one observable; for failure drills.

    A functional that misreports a single non-terminal observable violates
    the chain rule on any pair involving it, so suites run against this
    wrapper must go red.
    """

    def __init__(self, base: EntropyCochain, bad_observable):
        self.base = base
        self.bad_observable = bad_observable

    @property
    def label(self) -> str:
        return f"corrupted({self.base.label})"

    def evaluate(self, law, budget: int = 100_000, seed=0) -> Estimate:
        est = self.base.evaluate(law, budget, seed)
        if law.observable.same_observable(self.bad_observable):
            return Estimate(2.0 * est.value, est.std_error, est.method, est.budget)
        return est


def _case(label: str, lhs: Estimate, rhs: Estimate, tol: float) -> IdentityCase:
    residual = abs(lhs.value - rhs.value)
    return IdentityCase(label, lhs, rhs, residual, tol, residual <= tol)


def _identity_case(structure, law, yi: int, zi: int, phi, tol: float, label: str) -> IdentityCase:
    mi = structure.meet_index(yi, zi)
    objs = structure.objects
    lhs = phi.evaluate(law.marginalize(objs[mi]))
    head = phi.evaluate(law.marginalize(objs[yi]))
    tail = act(phi, law, objs[yi], objs[zi])
    rhs = Estimate(head.value + tail.value, tail.std_error, tail.method, tail.budget)
    return _case(label, lhs, rhs, tol)


def check_cocycle_discrete(
    structure: InformationStructure,
    n_laws: int = 34,
    pairs_per_law: int = 6,
    seed: int = 0,
    tol: float = 1e-9,
    phi=None,
    max_denominator: int = 24,
) -> IdentityReport:
    """Exact-rational laws on the finest observable, random pairs plus the
    trivial pairs (terminal, X) and (X, X)."""
    phi = phi if phi is not None else ENTROPY_COCHAIN
    finest = structure.objects[0]
    n_objects = len(structure)
    term = structure.terminal_index
    cases = []
    for i in range(n_laws):
        rng = derived_rng(seed, "cocycle-discrete", i)
        law = random_rational_law(finest, rng, max_denominator=max_denominator)
        pairs = [
            (int(rng.integers(n_objects)), int(rng.integers(n_objects)))
            for _ in range(pairs_per_law)
        ]
        probe = int(rng.integers(n_objects))
        pairs.extend([(term, probe), (probe, term), (probe, probe)])
        for yi, zi in pairs:
            label = f"law{i}|{structure.objects[yi].label}*{structure.objects[zi].label}"
            cases.append(_identity_case(structure, law, yi, zi, phi, tol, label))
    params = {
        "n_laws": n_laws,
        "pairs_per_law": pairs_per_law,
        "seed": seed,
        "tol": tol,
        "phi": getattr(phi, "label", str(phi)),
        "ground_set_size": len(finest.ground_set),
    }
    return IdentityReport("cocycle-chain-rule", tuple(cases), params)


def discrete_cocycle_suite(
    sizes=(3, 4, 5),
    n_laws: int = 100,
    pairs_per_law: int = 6,
    seed: int = 0,
    tol: float = 1e-9,
    phi=None,
    corrupt: bool = False,
) -> IdentityReport:
    """Partition lattices over the given ground-set sizes, laws split evenly."""
    sizes = tuple(sizes)
    cases = []
    share = [n_laws // len(sizes)] * len(sizes)
    for j in range(n_laws - sum(share)):
        share[j] += 1
    for size, quota in zip(sizes, share):
        lattice = partition_lattice(size)
        suite_phi = phi
        if corrupt and suite_phi is None:
            # double the functional on one fixed non-terminal observable
            bad = lattice.objects[1]
            suite_phi = CorruptedCochain(ENTROPY_COCHAIN, bad)
        report = check_cocycle_discrete(
            lattice,
            n_laws=quota,
            pairs_per_law=pairs_per_law,
            seed=seed + size,
            tol=tol,
            phi=suite_phi,
        )
        prefix = f"n={size}:"
        cases.extend(
            IdentityCase(prefix + c.label, c.lhs, c.rhs, c.residual, c.tolerance, c.passed)
            for c in report.cases
        )
    params = {
        "sizes": list(sizes),
        "n_laws": n_laws,
        "pairs_per_law": pairs_per_law,
        "seed": seed,
        "tol": tol,
        "corrupt": corrupt,
    }
    return IdentityReport("cocycle-chain-rule", tuple(cases), params)


def _random_axis_subset(rng, dim: int) -> tuple[int, ...]:
    while True:
        picks = tuple(int(i) for i in np.flatnonzero(rng.random(dim) < 0.5))
        if picks:
            return picks


def _axes_observable(axes, dim: int) -> ContinuousObservable:
    eye = np.eye(dim)
    return ContinuousObservable(
        eye[:, list(axes)], label="span(" + ",".join(map(str, axes)) + ")"
    )


def check_cocycle_gaussian(
    n_trials: int = 100,
    max_dim: int = 6,
    seed: int = 0,
    tol: float = 1e-10,
    include_singular: bool = True,
) -> IdentityReport:
    """Log-determinant and carrier-dimension chain rules on coordinate pairs.

    Each trial draws a random SPD covariance in dimension 2..max_dim and a
    random pair of coordinate subspaces (overlaps allowed). Every fifth trial
    additionally runs the dimension functional on a rank-deficient
    covariance, where the conditional's carrier must shed exactly the
    conditioned axes.
    """
    cases = []
    for t in range(n_trials):
        rng = derived_rng(seed, "cocycle-gaussian", t)
        d = int(rng.integers(2, max_dim + 1))
        full = euclidean_observable(d)
        law = GaussianLaw(full, rng.standard_normal(d), random_spd_matrix(rng, d))
        axes1 = _random_axis_subset(rng, d)
        axes2 = _random_axis_subset(rng, d)
        obs1 = _axes_observable(axes1, d)
        obs2 = _axes_observable(axes2, d)
        joint = _axes_observable(sorted(set(axes1) | set(axes2)), d)
        for name, phi in (("logdet", LOGDET_COCHAIN), ("dim", DIMENSION_COCHAIN)):
            lhs = phi.evaluate(law.marginalize(joint))
            head = phi.evaluate(law.marginalize(obs1))
            tail = act(phi, law, obs1, obs2)
            rhs = Estimate(head.value + tail.value, tail.std_error, tail.method)
            cases.append(_case(f"trial{t}|{name}", lhs, rhs, tol))
        if include_singular and t % 5 == 0:
            rank = int(rng.integers(1, d + 1))
            factor = rng.standard_normal((d, rank))
            singular = GaussianLaw(full, rng.standard_normal(d), factor @ factor.T)
            lhs = DIMENSION_COCHAIN.evaluate(singular.marginalize(joint))
            head = DIMENSION_COCHAIN.evaluate(singular.marginalize(obs1))
            tail = act(DIMENSION_COCHAIN, singular, obs1, obs2)
            rhs = Estimate(head.value + tail.value, tail.std_error, tail.method)
            cases.append(_case(f"trial{t}|dim-rank{rank}", lhs, rhs, tol))
    params = {
        "n_trials": n_trials,
        "max_dim": max_dim,
        "seed": seed,
        "tol": tol,
        "include_singular": include_singular,
    }
    return IdentityReport("cocycle-chain-rule", tuple(cases), params)


def _singleton_partition(k: int) -> DiscreteObservable:
    return DiscreteObservable(tuple((j,) for j in range(k)), label=f"Y{k}")


def _mixture_identity_case(
    i: int,
    dim_max: int,
    k_max: int,
    budget: int,
    seed: int,
    tol: float,
    phi: EntropyCochain,
):
    rng = derived_rng(seed, "mixture-identity", i)
    d = int(rng.integers(1, dim_max + 1))
    k = int(rng.integers(2, k_max + 1)) if k_max >= 2 else 1
    obs = ProductObservable(euclidean_observable(d), _singleton_partition(k))
    law = random_mixed_law(obs, rng)
    mix = law.marginal_mixture()

    pf = law.p.float_weights()
    h_p = discrete_entropy(law.p)
    logdets = np.array([law.conditionals[j].logdet_cov for j in law.support])
    weights = pf[list(law.support)]
    l_bar = float(weights @ logdets)
    s_parts = float(sum(pf[j] * law.conditionals[j].entropy() for j in law.support))
    s_joint = h_p + s_parts

    if len(law.support) == 1:
        # one component: the marginal mixture is that gaussian, its entropy
        # is closed form, and the posterior is deterministic
        s_hat = law.conditionals[law.support[0]].entropy()
        e_hat = 0.0
        se = 0.0
        method = "closed-form"
    else:
        xs = mix.sample(budget, rng)
        log_m, post_ent = mix.logpdf_and_posterior_entropy(xs)
        s_hat = float(-log_m.mean())
        e_hat = float(post_ent.mean())
        # one stream of per-sample values feeds both sides, so the combined
        # standard error is honest rather than an independence guess
        u = -log_m + post_ent - s_joint
        se = float(u.std(ddof=1) / np.sqrt(budget))
        method = "mc"

    a, b, c = phi.a, phi.b, phi.c
    if phi.mixture_rule == "lifted":
        route_direct = (
            (a - b / 2.0) * l_bar + c * d - 0.5 * b * d * LOG_2PI_E + b * s_hat
        )
    else:
        route_direct = b * s_hat + (c - 0.5 * b * LOG_2PI_E) * d
    route_chain = b * h_p + a * l_bar + c * d - b * e_hat

    label = f"case{i}[d={d},k={k}]"
    two_route = _case(
        label,
        Estimate(route_direct, abs(b) * se, method, budget),
        Estimate(route_chain, 0.0, method, budget),
        3.0 * abs(b) * se + tol,
    )
    integrated = _case(
        label,
        Estimate(-e_hat, se, method, budget),
        Estimate(-h_p - s_parts + s_hat, 0.0, method, budget),
        3.0 * se + tol,
    )
    return two_route, integrated


def mixture_identity_report(
    n_cases: int = 20,
    dim_max: int = 2,
    k_max: int = 5,
    budget: int = 100_000,
    seed: int = 42,
    tol: float = 1e-9,
    phi: EntropyCochain | None = None,
    jobs: int = 1,
) -> dict:
    """Random mixed laws, two reports from one fused sampling pass per case.

    ``two-route-mixture`` compares the direct evaluation of phi on the
    continuous marginal with the chain-rule route through the discrete
    marginal. ``integrated-posterior-identity`` checks that the posterior
    log-mass integral matches sum p log p - sum p(y) S(g_y) + S(mixture).
    """
    if dim_max < 1 or k_max < 1:
        raise MalformedInput("need dim_max >= 1 and k_max >= 1")
    budget = _require_budget(budget)
    phi = phi if phi is not None else EntropyCochain(1.0, 1.0, 0.0)
    args = [(i, dim_max, k_max, budget, seed, tol, phi) for i in range(n_cases)]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda t: _mixture_identity_case(*t), args))
    else:
        results = [_mixture_identity_case(*t) for t in args]
    params = {
        "n_cases": n_cases,
        "dim_max": dim_max,
        "k_max": k_max,
        "budget": budget,
        "seed": seed,
        "tol": tol,
        "phi": phi.label,
        "mixture_rule": phi.mixture_rule,
    }
    return {
        "two-route": IdentityReport(
            "two-route-mixture", tuple(r[0] for r in results), params
        ),
        "integrated": IdentityReport(
            "integrated-posterior-identity", tuple(r[1] for r in results), params
        ),
    }
