"""Cocycle suites: discrete lattices, gaussian subspaces, mixed two-route."""
from fractions import Fraction

import numpy as np
import pytest

from chaincert.cohomology import (
    CorruptedCochain,
    check_cocycle_discrete,
    check_cocycle_gaussian,
    discrete_cocycle_suite,
    mixture_identity_report,
)
from chaincert.errors import BudgetTooSmall, MalformedInput
from chaincert.functionals import ENTROPY_COCHAIN, EntropyCochain, discrete_entropy
from chaincert.laws import DiscreteLaw
from chaincert.structures import partition_lattice


class TestDiscreteCocycle:
    def test_entropy_satisfies_chain_rule_exactly(self):
        report = check_cocycle_discrete(partition_lattice(3), n_laws=10, seed=0)
        assert report.passed
        assert report.max_residual < 1e-12

    def test_suite_spans_requested_sizes(self):
        report = discrete_cocycle_suite(sizes=(3, 4), n_laws=6, seed=1)
        labels = {c.label.split(":")[0] for c in report.cases}
        assert labels == {"n=3", "n=4"}
        assert report.passed

    def test_corrupted_functional_goes_red(self):
        report = discrete_cocycle_suite(sizes=(3,), n_laws=6, seed=2, corrupt=True)
        assert not report.passed
        assert any(c.residual > 1e-6 for c in report.cases)

    def test_corruption_doubles_one_observable(self):
        lattice = partition_lattice(3)
        bad = lattice.objects[1]
        phi = CorruptedCochain(ENTROPY_COCHAIN, bad)
        law = DiscreteLaw.uniform(lattice.objects[0]).marginalize(bad)
        assert abs(
            phi.evaluate(law).value - 2.0 * discrete_entropy(law)
        ) < 1e-12

    def test_deterministic_across_runs(self):
        a = check_cocycle_discrete(partition_lattice(4), n_laws=5, seed=9)
        b = check_cocycle_discrete(partition_lattice(4), n_laws=5, seed=9)
        assert [c.lhs.value for c in a.cases] == [c.lhs.value for c in b.cases]

    def test_seed_changes_laws(self):
        a = check_cocycle_discrete(partition_lattice(3), n_laws=5, seed=0)
        b = check_cocycle_discrete(partition_lattice(3), n_laws=5, seed=1)
        assert [c.lhs.value for c in a.cases] != [c.lhs.value for c in b.cases]


class TestGaussianCocycle:
    def test_logdet_and_dimension_chain_rules(self):
        report = check_cocycle_gaussian(n_trials=25, max_dim=5, seed=0)
        assert report.passed, [c.label for c in report.cases if not c.passed]
        assert report.max_residual < 1e-11

    def test_singular_cases_included(self):
        report = check_cocycle_gaussian(n_trials=10, max_dim=4, seed=3)
        assert any("rank" in c.label for c in report.cases)

    def test_deterministic(self):
        a = check_cocycle_gaussian(n_trials=8, seed=5)
        b = check_cocycle_gaussian(n_trials=8, seed=5)
        assert a.max_residual == b.max_residual


class TestMixtureIdentity:
    def test_two_route_and_integrated_pass(self):
        reports = mixture_identity_report(n_cases=4, budget=20_000, seed=42)
        two = reports["two-route"]
        integ = reports["integrated"]
        assert two.passed, [c.label for c in two.cases if not c.passed]
        assert integ.passed, [c.label for c in integ.cases if not c.passed]
        assert len(two.cases) == 4 and len(integ.cases) == 4

    def test_residual_within_shared_noise(self):
        reports = mixture_identity_report(n_cases=3, budget=20_000, seed=7)
        for case in reports["two-route"].cases:
            assert case.residual <= case.tolerance

    def test_jobs_do_not_change_output(self):
        serial = mixture_identity_report(n_cases=3, budget=10_000, seed=11, jobs=1)
        threaded = mixture_identity_report(n_cases=3, budget=10_000, seed=11, jobs=2)
        for key in ("two-route", "integrated"):
            a = [(c.lhs.value, c.rhs.value) for c in serial[key].cases]
            b = [(c.lhs.value, c.rhs.value) for c in threaded[key].cases]
            assert a == b

    def test_density_rule_breaks_two_route_for_unbalanced_params(self):
        # a != b/2 with the density presentation leaves a systematic gap
        phi = EntropyCochain(1.0, 1.0, 0.0, mixture_rule="density")
        reports = mixture_identity_report(n_cases=3, budget=20_000, seed=13, phi=phi)
        assert not reports["two-route"].passed

    def test_density_rule_balanced_params_pass(self):
        phi = EntropyCochain(0.5, 1.0, 0.0, mixture_rule="density")
        reports = mixture_identity_report(n_cases=3, budget=20_000, seed=17, phi=phi)
        assert reports["two-route"].passed

    def test_params_recorded(self):
        reports = mixture_identity_report(n_cases=2, budget=10_000, seed=19)
        params = reports["two-route"].params
        assert params["seed"] == 19 and params["budget"] == 10_000

    def test_single_component_suite_is_exact(self):
        # k_max = 1 forces one-component mixtures, whose entropy is closed
        # form, so both identities hold to rounding rather than to MC noise
        reports = mixture_identity_report(
            n_cases=5, k_max=1, budget=10_000, seed=23
        )
        for key in ("two-route", "integrated"):
            report = reports[key]
            assert report.passed
            assert report.max_residual <= 1e-9
            assert all(c.lhs.method == "closed-form" for c in report.cases)
            assert all(c.lhs.std_error == 0.0 for c in report.cases)

    def test_rejects_degenerate_shape_bounds(self):
        with pytest.raises(MalformedInput):
            mixture_identity_report(n_cases=1, k_max=0, budget=10_000)
        with pytest.raises(MalformedInput):
            mixture_identity_report(n_cases=1, dim_max=0, budget=10_000)

    def test_budget_floor_enforced(self):
        with pytest.raises(BudgetTooSmall):
            mixture_identity_report(n_cases=1, budget=10)
