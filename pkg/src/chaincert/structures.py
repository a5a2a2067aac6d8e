"""Observables, posets of observables, and their sample-space maps.

An observable here is one of three kinds:

* :class:`DiscreteObservable` - a partition of a finite ground set; its
  outcomes are the partition blocks (indexed 0..k-1 in canonical order).
* :class:`ContinuousObservable` - a linear subspace W of an ambient inner
  product space, carried as an orthonormal basis under the ambient metric M.
  Observing means projecting onto W; outcomes are the points of W.
* :class:`ProductObservable` - a pair (continuous, discrete); outcomes are
  pairs (point, block index).

An :class:`InformationStructure` is a finite poset of same-kind observables.
The arrow X -> Y exists when Y is coarser than X (Y's partition merges X's
blocks; Y's subspace is contained in X's). Along each arrow there is a
canonical outcome map (block containment, metric-orthogonal projection), and
whenever Y and Z are both coarser than some X their joint observable Y ∧ Z
(common refinement, subspace sum) is required to be an object as well. The
poset must contain a terminal observable with a one-point outcome space.

Convention worth spelling out once: *coarser means smaller subspace*. The
joint of two subspace observables is the subspace sum, mirroring the common
refinement of partitions, and the joint's outcome space embeds injectively
into the product of the factors' outcome spaces.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArrow, InvalidSector, MeetAbsent, NoCommonRefinement, StructureError
from .reporting import CheckItem, ValidationReport

_SUBSPACE_TOL = 1e-10


# ---------------------------------------------------------------------------
# observables
# ---------------------------------------------------------------------------

def _canonical_blocks(blocks) -> tuple[tuple, ...]:
    cleaned = []
    for block in blocks:
        items = tuple(sorted(block))
        if not items:
            raise StructureError("empty partition block")
        cleaned.append(items)
    cleaned.sort(key=lambda b: b[0])
    return tuple(cleaned)


@dataclass(frozen=True)
class DiscreteObservable:
    """A partition of a finite ground set; outcomes are block indices."""

    blocks: tuple[tuple, ...]
    label: str = ""

    def __post_init__(self):
        canon = _canonical_blocks(self.blocks)
        object.__setattr__(self, "blocks", canon)
        seen = set()
        for block in canon:
            for element in block:
                if element in seen:
                    raise StructureError(f"element {element!r} appears in two blocks")
                seen.add(element)
        if not self.label:
            object.__setattr__(self, "label", "|".join(
                ",".join(str(e) for e in block) for block in canon))

    @property
    def kind(self) -> str:
        return "discrete"

    @property
    def ground_set(self) -> frozenset:
        return frozenset(e for block in self.blocks for e in block)

    @property
    def n_outcomes(self) -> int:
        return len(self.blocks)

    def block_of(self, element) -> int:
        for i, block in enumerate(self.blocks):
            if element in block:
                return i
        raise StructureError(f"{element!r} not in ground set")

    def refines(self, other: "DiscreteObservable") -> bool:
        """True when every block of self lies inside one block of other."""
        if self.ground_set != other.ground_set:
            return False
        return all(
            any(set(mine) <= set(theirs) for theirs in other.blocks)
            for mine in self.blocks
        )

    def coarsen_map(self, other: "DiscreteObservable") -> np.ndarray:
        """Outcome map along self -> other: fine block index -> coarse index."""
        if not self.refines(other):
            raise InvalidArrow(f"{self.label} does not refine {other.label}")
        out = np.empty(self.n_outcomes, dtype=np.intp)
        for i, block in enumerate(self.blocks):
            out[i] = other.block_of(block[0])
        return out

    def same_observable(self, other) -> bool:
        return isinstance(other, DiscreteObservable) and self.blocks == other.blocks

    def is_terminal(self) -> bool:
        return self.n_outcomes == 1


def common_refinement(a: DiscreteObservable, b: DiscreteObservable) -> DiscreteObservable:
    """Joint observable of two partitions: nonempty pairwise intersections."""
    if a.ground_set != b.ground_set:
        raise InvalidSector("partitions of different ground sets")
    blocks = []
    for p in a.blocks:
        for q in b.blocks:
            inter = sorted(set(p) & set(q))
            if inter:
                blocks.append(tuple(inter))
    return DiscreteObservable(tuple(blocks))


def orthonormalize(columns: np.ndarray, metric: np.ndarray) -> np.ndarray:
    """Orthonormal basis (under metric) of the column span; shape (D, rank)."""
    d = metric.shape[0]
    if columns.size == 0:
        return np.zeros((d, 0))
    w, v = np.linalg.eigh(metric)
    if np.any(w <= 0):
        raise StructureError("metric must be positive definite")
    root = v @ np.diag(np.sqrt(w)) @ v.T
    inv_root = v @ np.diag(1.0 / np.sqrt(w)) @ v.T
    u, s, _ = np.linalg.svd(root @ columns, full_matrices=False)
    rank = int(np.sum(s > _SUBSPACE_TOL * max(s[0], 1.0))) if s.size else 0
    return inv_root @ u[:, :rank]


@dataclass(frozen=True, eq=False)
class ContinuousObservable:
    """A subspace of an ambient space, observed by M-orthogonal projection.

    ``basis`` has M-orthonormal columns spanning the subspace; a (D, 0) basis
    is the terminal observable (one outcome: the origin).
    """

    basis: np.ndarray
    metric: np.ndarray = None
    label: str = ""

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=np.float64)
        if basis.ndim != 2:
            raise StructureError("basis must be a (ambient_dim, dim) matrix")
        metric = self.metric
        if metric is None:
            metric = np.eye(basis.shape[0])
        metric = np.asarray(metric, dtype=np.float64)
        gram = basis.T @ metric @ basis
        if gram.size and not np.allclose(gram, np.eye(basis.shape[1]), atol=1e-8):
            raise StructureError("basis columns must be orthonormal under the metric")
        basis = basis.copy()
        basis.setflags(write=False)
        metric = metric.copy()
        metric.setflags(write=False)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "metric", metric)
        if not self.label:
            object.__setattr__(self, "label", f"subspace(dim={basis.shape[1]})")

    @property
    def kind(self) -> str:
        return "continuous"

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def projection_matrix(self) -> np.ndarray:
        """Ambient-to-ambient M-orthogonal projector onto the subspace."""
        return self.basis @ self.basis.T @ self.metric

    def coords(self, points: np.ndarray) -> np.ndarray:
        """Subspace coordinates of ambient points (projecting first)."""
        return np.asarray(points) @ (self.metric @ self.basis)

    def embed(self, coords: np.ndarray) -> np.ndarray:
        return np.asarray(coords) @ self.basis.T

    def contains(self, other: "ContinuousObservable") -> bool:
        """True when other's subspace sits inside self's (self is finer)."""
        if self.ambient_dim != other.ambient_dim:
            return False
        proj = self.projection_matrix()
        return np.allclose(proj @ other.basis, other.basis, atol=_SUBSPACE_TOL)

    def coord_map(self, other: "ContinuousObservable") -> np.ndarray:
        """Matrix sending self-coordinates to other-coordinates along self -> other."""
        if not self.contains(other):
            raise InvalidArrow("target subspace is not contained in source")
        return other.basis.T @ self.metric @ self.basis

    def same_observable(self, other) -> bool:
        if not isinstance(other, ContinuousObservable):
            return False
        if self.ambient_dim != other.ambient_dim or self.dim != other.dim:
            return False
        return np.allclose(
            self.projection_matrix(), other.projection_matrix(), atol=_SUBSPACE_TOL
        )

    def is_terminal(self) -> bool:
        return self.dim == 0


def subspace_sum(a: ContinuousObservable, b: ContinuousObservable) -> ContinuousObservable:
    """Joint observable of two subspaces: their sum, reorthonormalized."""
    if a.ambient_dim != b.ambient_dim or not np.allclose(a.metric, b.metric):
        raise InvalidSector("subspaces live in different ambient spaces")
    stacked = np.hstack([a.basis, b.basis])
    return ContinuousObservable(orthonormalize(stacked, a.metric), a.metric)


@dataclass(frozen=True, eq=False)
class ProductObservable:
    """A pair (continuous part, discrete part) observed jointly."""

    continuous_part: ContinuousObservable
    discrete_part: DiscreteObservable
    label: str = ""

    def __post_init__(self):
        if not self.label:
            object.__setattr__(
                self,
                "label",
                f"<{self.continuous_part.label};{self.discrete_part.label}>",
            )

    @property
    def kind(self) -> str:
        return "product"

    def same_observable(self, other) -> bool:
        return (
            isinstance(other, ProductObservable)
            and self.continuous_part.same_observable(other.continuous_part)
            and self.discrete_part.same_observable(other.discrete_part)
        )

    def is_terminal(self) -> bool:
        return self.continuous_part.is_terminal() and self.discrete_part.is_terminal()


def is_coarser(fine, coarse) -> bool:
    """True when the arrow fine -> coarse exists (coarse merges/shrinks fine)."""
    if fine.kind != coarse.kind:
        return False
    if fine.kind == "discrete":
        return fine.refines(coarse)
    if fine.kind == "continuous":
        return fine.contains(coarse)
    return is_coarser(fine.continuous_part, coarse.continuous_part) and is_coarser(
        fine.discrete_part, coarse.discrete_part
    )


def joint_observable(a, b):
    """The meet (joint) of two same-kind observables, built from scratch."""
    if a.kind != b.kind:
        raise InvalidSector("cannot join observables of different kinds")
    if a.kind == "discrete":
        return common_refinement(a, b)
    if a.kind == "continuous":
        return subspace_sum(a, b)
    return ProductObservable(
        joint_observable(a.continuous_part, b.continuous_part),
        joint_observable(a.discrete_part, b.discrete_part),
    )


# ---------------------------------------------------------------------------
# information structures
# ---------------------------------------------------------------------------

class InformationStructure:
    """A finite poset of observables with arrow maps and memoized joints."""

    def __init__(self, objects, arrow: np.ndarray | None = None):
        objects = list(objects)
        if not objects:
            raise StructureError("structure needs at least one observable")
        kind = objects[0].kind
        if any(obj.kind != kind for obj in objects):
            raise InvalidSector("structure mixes observable kinds")
        self.objects = objects
        self.kind = kind
        n = len(objects)
        if arrow is None:
            arrow = np.zeros((n, n), dtype=bool)
            for i, fine in enumerate(objects):
                for j, coarse in enumerate(objects):
                    arrow[i, j] = is_coarser(fine, coarse)
        self.arrow = arrow
        self._meet_cache: dict[tuple[int, int], int] = {}
        terminal = None
        for j, obj in enumerate(objects):
            if obj.is_terminal() and bool(arrow[:, j].all()):
                terminal = j
                break
        self.terminal_index = terminal

    def __len__(self) -> int:
        return len(self.objects)

    def index(self, observable) -> int:
        for i, obj in enumerate(self.objects):
            if obj is observable or obj.same_observable(observable):
                return i
        raise StructureError(f"{getattr(observable, 'label', observable)!r} is not an object")

    def has_arrow(self, src: int, dst: int) -> bool:
        return bool(self.arrow[src, dst])

    def coarser_monoid(self, x) -> list:
        """All observables coarser than x (including x and the terminal)."""
        i = x if isinstance(x, (int, np.integer)) else self.index(x)
        return [self.objects[j] for j in np.flatnonzero(self.arrow[i])]

    def meet_index(self, yi: int, zi: int) -> int:
        key = (min(yi, zi), max(yi, zi))
        if key in self._meet_cache:
            hit = self._meet_cache[key]
            if hit < 0:
                raise MeetAbsent(
                    f"joint of {self.objects[yi].label!r} and {self.objects[zi].label!r}"
                    " is not an object"
                )
            return hit
        if not bool((self.arrow[:, yi] & self.arrow[:, zi]).any()):
            raise NoCommonRefinement(
                f"no observable refines both {self.objects[yi].label!r}"
                f" and {self.objects[zi].label!r}"
            )
        candidate = joint_observable(self.objects[yi], self.objects[zi])
        for idx, obj in enumerate(self.objects):
            if obj.same_observable(candidate):
                self._meet_cache[key] = idx
                return idx
        self._meet_cache[key] = -1
        raise MeetAbsent(
            f"joint of {self.objects[yi].label!r} and {self.objects[zi].label!r}"
            " is not an object"
        )

    def meet(self, y, z):
        yi = y if isinstance(y, (int, np.integer)) else self.index(y)
        zi = z if isinstance(z, (int, np.integer)) else self.index(z)
        return self.objects[self.meet_index(yi, zi)]

    def arrow_map(self, src, dst, outcome):
        """Apply the canonical outcome map along src -> dst."""
        si = src if isinstance(src, (int, np.integer)) else self.index(src)
        di = dst if isinstance(dst, (int, np.integer)) else self.index(dst)
        if not self.arrow[si, di]:
            raise InvalidArrow(
                f"no arrow {self.objects[si].label!r} -> {self.objects[di].label!r}"
            )
        return apply_outcome_map(self.objects[si], self.objects[di], outcome)


def apply_outcome_map(fine, coarse, outcome):
    if fine.kind == "discrete":
        return int(fine.coarsen_map(coarse)[outcome])
    if fine.kind == "continuous":
        point = np.asarray(outcome, dtype=np.float64)
        return coarse.projection_matrix() @ point
    x, y = outcome
    return (
        apply_outcome_map(fine.continuous_part, coarse.continuous_part, x),
        apply_outcome_map(fine.discrete_part, coarse.discrete_part, y),
    )


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def _partitions_of(elements: tuple):
    if not elements:
        yield ()
        return
    head, rest = elements[0], elements[1:]
    for smaller in _partitions_of(rest):
        for i in range(len(smaller)):
            yield smaller[:i] + (smaller[i] + (head,),) + smaller[i + 1:]
        yield smaller + ((head,),)


def partition_lattice(elements) -> InformationStructure:
    """Structure holding every partition of a ground set.

    ``elements`` may be an int n (ground set 1..n) or an iterable. Objects are
    ordered finest-first: index 0 is the singleton partition, the last index
    is the terminal single-block partition.
    """
    if isinstance(elements, int):
        elements = tuple(range(1, elements + 1))
    else:
        elements = tuple(elements)
    observables = [DiscreteObservable(p) for p in _partitions_of(elements)]
    observables.sort(key=lambda o: (-o.n_outcomes, o.blocks))
    return InformationStructure(observables)


def euclidean_observable(dim: int, label: str = "") -> ContinuousObservable:
    return ContinuousObservable(np.eye(dim), label=label or f"R^{dim}")


def coordinate_subspace_structure(dim: int) -> InformationStructure:
    """All coordinate subspaces of R^dim under the identity metric.

    Isomorphic to the boolean lattice on the axis set: the joint of two
    coordinate subspaces is again a coordinate subspace, and every pair of
    projections commutes, which is the regime where the chain-rule identity
    for the log-determinant family is exact.
    """
    eye = np.eye(dim)
    observables = []
    axes_sets = sorted(
        (subset for r in range(dim, -1, -1) for subset in itertools.combinations(range(dim), r)),
        key=lambda s: (-len(s), s),
    )
    for axes in axes_sets:
        basis = eye[:, list(axes)] if axes else np.zeros((dim, 0))
        label = "span(" + ",".join(str(a) for a in axes) + ")" if axes else "origin"
        observables.append(ContinuousObservable(basis, label=label))
    return InformationStructure(observables)


def product_structure(
    continuous: InformationStructure, discrete: InformationStructure
) -> InformationStructure:
    """Pairwise product of a continuous-sector and a discrete-sector structure."""
    if continuous.kind != "continuous":
        raise InvalidSector("first factor must be a continuous-sector structure")
    if discrete.kind != "discrete":
        raise InvalidSector("second factor must be a discrete-sector structure")
    objects = [
        ProductObservable(c, d)
        for c in continuous.objects
        for d in discrete.objects
    ]
    arrow = np.kron(continuous.arrow, discrete.arrow)
    return InformationStructure(objects, arrow=arrow)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def _injectivity_ok(structure: InformationStructure, mi: int, yi: int, zi: int) -> bool:
    meet_obs = structure.objects[mi]
    y_obs = structure.objects[yi]
    z_obs = structure.objects[zi]
    if meet_obs.kind == "discrete":
        pairs = set()
        map_y = meet_obs.coarsen_map(y_obs)
        map_z = meet_obs.coarsen_map(z_obs)
        for i in range(meet_obs.n_outcomes):
            pair = (int(map_y[i]), int(map_z[i]))
            if pair in pairs:
                return False
            pairs.add(pair)
        return True
    if meet_obs.kind == "continuous":
        if meet_obs.dim == 0:
            return True
        stacked = np.vstack([
            y_obs.basis.T @ meet_obs.metric @ meet_obs.basis,
            z_obs.basis.T @ meet_obs.metric @ meet_obs.basis,
        ])
        return np.linalg.matrix_rank(stacked, tol=1e-10) == meet_obs.dim
    return _injectivity_ok_product(meet_obs, y_obs, z_obs)


def _injectivity_ok_product(meet_obs, y_obs, z_obs) -> bool:
    # Componentwise injectivity implies injectivity of the pair map.
    cont = InformationStructure(
        [meet_obs.continuous_part, y_obs.continuous_part, z_obs.continuous_part]
    )
    disc = InformationStructure(
        [meet_obs.discrete_part, y_obs.discrete_part, z_obs.discrete_part]
    )
    return _injectivity_ok(cont, 0, 1, 2) and _injectivity_ok(disc, 0, 1, 2)


def validate_structure(structure: InformationStructure) -> ValidationReport:
    """Check the poset and sample-space axioms; returns one item per axiom."""
    items = []
    arrow = structure.arrow
    n = len(structure)

    reflexive = bool(arrow.diagonal().all())
    antisym = all(
        not (arrow[i, j] and arrow[j, i]) or i == j
        for i in range(n)
        for j in range(n)
    )
    closure = (arrow.astype(int) @ arrow.astype(int)) > 0
    transitive = bool((~closure | arrow).all())
    items.append(
        CheckItem(
            "partial-order",
            reflexive and antisym and transitive,
            f"reflexive={reflexive} antisymmetric={antisym} transitive={transitive}",
        )
    )

    ti = structure.terminal_index
    items.append(
        CheckItem(
            "terminal-object",
            ti is not None,
            "missing one-outcome observable coarser than everything"
            if ti is None
            else f"index {ti}",
        )
    )

    missing = []
    consistent = True
    for xi in range(n):
        coarser = np.flatnonzero(arrow[xi])
        for yi, zi in itertools.combinations_with_replacement(coarser, 2):
            try:
                mi = structure.meet_index(int(yi), int(zi))
            except MeetAbsent:
                missing.append((structure.objects[yi].label, structure.objects[zi].label))
                continue
            except NoCommonRefinement:
                consistent = False
                continue
            if not (arrow[xi, mi] and arrow[mi, yi] and arrow[mi, zi]):
                consistent = False
    items.append(
        CheckItem(
            "conditional-meet-closure",
            not missing and consistent,
            f"{len(missing)} missing joints" if missing else "",
        )
    )

    surjective = True
    for si in range(n):
        for di in np.flatnonzero(arrow[si]):
            fine, coarse = structure.objects[si], structure.objects[int(di)]
            if fine.kind == "discrete":
                hit = set(int(v) for v in fine.coarsen_map(coarse))
                surjective &= hit == set(range(coarse.n_outcomes))
            elif fine.kind == "continuous":
                rank = np.linalg.matrix_rank(
                    coarse.basis.T @ coarse.metric @ fine.basis, tol=1e-10
                ) if coarse.dim else 0
                surjective &= rank == coarse.dim
            else:
                pass  # covered by the component structures below
    items.append(CheckItem("arrow-maps-surjective", bool(surjective)))

    injective = True
    for xi in range(n):
        coarser = np.flatnonzero(arrow[xi])
        for yi, zi in itertools.combinations(coarser, 2):
            try:
                mi = structure.meet_index(int(yi), int(zi))
            except (MeetAbsent, NoCommonRefinement):
                continue
            injective &= _injectivity_ok(structure, mi, int(yi), int(zi))
    items.append(CheckItem("joint-embeds-in-product", bool(injective)))

    if structure.kind == "discrete":
        grounds = {obj.ground_set for obj in structure.objects}
        same_spaces = len(grounds) == 1
    elif structure.kind == "continuous":
        same_spaces = (
            len({obj.ambient_dim for obj in structure.objects}) == 1
            and all(
                np.allclose(obj.metric, structure.objects[0].metric)
                for obj in structure.objects
            )
        )
    else:
        same_spaces = True
    items.append(CheckItem("shared-sample-space", bool(same_spaces)))

    return ValidationReport(tuple(items))
