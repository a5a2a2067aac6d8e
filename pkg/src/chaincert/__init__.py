"""chaincert: certify chain-rule identities for entropy-type functionals.

The package builds lattices of observables (partitions, coordinate
subspaces, and their products), puts laws on them (exact-rational discrete,
gaussian with carrier demotion, mixtures, mixed laws), and checks that
functionals from the phi[a,b,c] family satisfy the cocycle identity
phi(joint) = phi(first) + conditional average of phi(second). A discrete
nullspace solver measures the full solution space of that identity, and a
KDE harness tracks the same functionals along density-estimation runs.
"""

from .errors import (
    BudgetTooSmall,
    ChainCertError,
    ClosureExplosion,
    DegenerateFit,
    DivergentAction,
    InvalidArrow,
    InvalidSector,
    LawError,
    MalformedInput,
    MeetAbsent,
    NoCommonRefinement,
    SingularCovariance,
    StructureError,
    ZeroMassFiber,
)
from .structures import (
    ContinuousObservable,
    DiscreteObservable,
    InformationStructure,
    ProductObservable,
    common_refinement,
    coordinate_subspace_structure,
    euclidean_observable,
    joint_observable,
    partition_lattice,
    product_structure,
    subspace_sum,
    validate_structure,
)
from .laws import (
    DiscreteLaw,
    GaussianLaw,
    GaussianMixture,
    MixedLaw,
    ReferenceMeasure,
    disintegrate,
    density,
    log_density,
    marginalize,
    reference_measure,
    sample,
    tv_distance,
)
from .functionals import (
    EntropyCochain,
    act,
    discrete_entropy,
    entropy,
    gaussian_entropy,
    make_cochain,
    mixture_entropy,
    phi_candidate,
    phi_from_entropy,
)
from .cohomology import (
    check_cocycle_discrete,
    check_cocycle_gaussian,
    discrete_cocycle_suite,
    mixture_identity_report,
)
from .nullspace import build_closure, denominator_laws, solve_nullspace
from .kde import (
    BandwidthRule,
    kde_fit,
    l1_error,
    parse_bandwidth,
    run_convergence,
    slope_test,
    target_by_name,
)
from .reporting import (
    ConvergenceRow,
    Estimate,
    IdentityCase,
    IdentityReport,
    NullspaceReport,
    SlopeReport,
    ValidationReport,
)

__version__ = "0.1.0"

__all__ = [
    "BandwidthRule",
    "BudgetTooSmall",
    "ChainCertError",
    "ClosureExplosion",
    "ContinuousObservable",
    "ConvergenceRow",
    "DegenerateFit",
    "DiscreteLaw",
    "DiscreteObservable",
    "DivergentAction",
    "EntropyCochain",
    "Estimate",
    "GaussianLaw",
    "GaussianMixture",
    "IdentityCase",
    "IdentityReport",
    "InformationStructure",
    "InvalidArrow",
    "InvalidSector",
    "LawError",
    "MalformedInput",
    "MeetAbsent",
    "MixedLaw",
    "NoCommonRefinement",
    "NullspaceReport",
    "ProductObservable",
    "ReferenceMeasure",
    "SingularCovariance",
    "SlopeReport",
    "StructureError",
    "ValidationReport",
    "ZeroMassFiber",
    "act",
    "build_closure",
    "check_cocycle_discrete",
    "check_cocycle_gaussian",
    "common_refinement",
    "coordinate_subspace_structure",
    "denominator_laws",
    "density",
    "discrete_cocycle_suite",
    "discrete_entropy",
    "disintegrate",
    "entropy",
    "euclidean_observable",
    "gaussian_entropy",
    "joint_observable",
    "kde_fit",
    "l1_error",
    "log_density",
    "make_cochain",
    "marginalize",
    "mixture_entropy",
    "mixture_identity_report",
    "parse_bandwidth",
    "partition_lattice",
    "phi_candidate",
    "phi_from_entropy",
    "product_structure",
    "reference_measure",
    "run_convergence",
    "sample",
    "slope_test",
    "solve_nullspace",
    "subspace_sum",
    "target_by_name",
    "tv_distance",
    "validate_structure",
    "__version__",
]
