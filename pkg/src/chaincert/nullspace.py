"""Solve for all functionals satisfying the chain rule on a discrete structure.

Unknowns are the values Phi_X(rho), one per (observable, law) pair in the
closure of a seed family under marginalization and conditioning. Every
closure point and every pair (X1, X2) of observables coarser than its home
observable contributes one linear constraint

    Phi_{X1 ^ X2}(rho -> X1^X2) - Phi_{X1}(rho -> X1)
        - sum_y (rho -> X1)(y) * Phi_{X2}((rho | X1=y) -> X2)  =  0

with exact rational coefficients. The solver deduplicates rows, runs a dense
SVD, and reports the nullspace dimension together with the residual of the
entropy vector, which is always a solution.

All laws stay exact: conditioning a law whose weights share denominator D
produces weights k/m with m <= D, so the closure is finite. It can still be
large, and a cap guards against runaway seed families.

The reported dimension is a measured property of the seed family and the
lattice, not a universal constant: tiny seed families over tiny structures
are cut down hard by the point-mass constraints (conditioning along the
identity arrow forces Phi(delta_y) = 0, and pairs against the terminal force
Phi at the terminal to vanish), so pin the number per configuration and watch
it for drift.
"""
from __future__ import annotations

import itertools
from collections import deque
from fractions import Fraction

import numpy as np

from .errors import ClosureExplosion, LawError
from .functionals import discrete_entropy
from .laws import DiscreteLaw
from .reporting import NullspaceReport
from .structures import DiscreteObservable, InformationStructure


def denominator_laws(observable: DiscreteObservable, denominator: int) -> list[DiscreteLaw]:
    """Every exact law on the observable with weights k/denominator."""
    if denominator < 1:
        raise LawError("denominator must be positive")
    k = observable.n_outcomes
    laws = []
    for cuts in itertools.combinations(range(denominator + k - 1), k - 1):
        parts = []
        prev = -1
        for cut in cuts:
            parts.append(cut - prev - 1)
            prev = cut
        parts.append(denominator + k - 2 - prev)
        laws.append(
            DiscreteLaw(observable, [Fraction(p, denominator) for p in parts])
        )
    return laws


def _key(obs_index: int, law: DiscreteLaw) -> tuple:
    return (obs_index, law.weights_key())


def build_closure(
    structure: InformationStructure, seeds, cap: int = 100_000
) -> dict:
    """Closure of the seeds under marginalization and conditioning.

    Returns a dict mapping (obs_index, weights_key) -> DiscreteLaw.
    """
    points: dict = {}
    queue: deque = deque()

    def add(oi: int, law: DiscreteLaw) -> None:
        key = _key(oi, law)
        if key in points:
            return
        if len(points) >= cap:
            raise ClosureExplosion(
                f"closure exceeded the cap of {cap} points; shrink the seed family"
            )
        points[key] = law
        queue.append((oi, law))

    for law in seeds:
        if not law.exact:
            raise LawError("closure needs exact-rational laws")
        add(structure.index(law.observable), law)

    objs = structure.objects
    while queue:
        oi, law = queue.popleft()
        for yi in np.flatnonzero(structure.arrow[oi]):
            yi = int(yi)
            target = objs[yi]
            marg = law.marginalize(target)
            add(yi, marg)
            for outcome in marg.support:
                add(oi, law.condition(target, outcome))
    return points


def chain_rows(structure: InformationStructure, points: dict):
    """Deduplicated constraint rows over the closure points.

    Returns (unknown_keys, rows) where rows are canonical tuples of
    (column, numerator, denominator) triples sorted by column.
    """
    unknown_keys = sorted(points.keys())
    col = {key: j for j, key in enumerate(unknown_keys)}
    objs = structure.objects

    # precompute, per point, the key of each marginal and the conditioning
    # fan-out, so row assembly is pure lookup
    marg_key: dict = {}
    cond_fan: dict = {}
    for key in unknown_keys:
        oi, law = key[0], points[key]
        coarser = [int(j) for j in np.flatnonzero(structure.arrow[oi])]
        margs = {}
        fans = {}
        for yi in coarser:
            marg = law.marginalize(objs[yi])
            margs[yi] = _key(yi, marg)
            fans[yi] = tuple(
                (marg.weights[y], _key(oi, law.condition(objs[yi], y)))
                for y in marg.support
            )
        marg_key[key] = margs
        cond_fan[key] = fans

    rows = set()
    for key in unknown_keys:
        oi = key[0]
        coarser = sorted(marg_key[key].keys())
        for yi, zi in itertools.product(coarser, repeat=2):
            mi = structure.meet_index(yi, zi)
            terms: dict = {}
            terms[col[marg_key[key][mi]]] = Fraction(1)
            ycol = col[marg_key[key][yi]]
            terms[ycol] = terms.get(ycol, Fraction(0)) - 1
            for mass, cond_key in cond_fan[key][yi]:
                zcol = col[marg_key[cond_key][zi]]
                terms[zcol] = terms.get(zcol, Fraction(0)) - mass
            row = tuple(
                sorted(
                    (c, f.numerator, f.denominator)
                    for c, f in terms.items()
                    if f != 0
                )
            )
            if row:
                rows.add(row)
    return unknown_keys, sorted(rows)


def solve_nullspace(
    structure: InformationStructure,
    seeds,
    cap: int = 100_000,
    svd_tol: float = 1e-8,
) -> NullspaceReport:
    points = build_closure(structure, seeds, cap=cap)
    unknown_keys, rows = chain_rows(structure, points)
    n = len(unknown_keys)
    matrix = np.zeros((len(rows), n))
    for r, row in enumerate(rows):
        for c, num, den in row:
            matrix[r, c] = num / den

    if rows:
        # full_matrices only when rows < unknowns, so vt always covers the
        # whole unknown space without ever forming a rows x rows factor
        _, svals, vt = np.linalg.svd(matrix, full_matrices=matrix.shape[0] < n)
        top = float(svals[0])
        rank = int((svals > svd_tol * top).sum()) if top > 0 else 0
        basis = vt[rank:].T
    else:
        svals = np.zeros(0)
        rank = 0
        basis = np.eye(n)
    dimension = n - rank

    entropy_vec = np.array([discrete_entropy(points[k]) for k in unknown_keys])
    residual = float(np.abs(matrix @ entropy_vec).max()) if rows else 0.0

    tail = tuple(float(s) for s in svals[-8:])
    return NullspaceReport(
        dimension=dimension,
        n_points=n,
        n_rows=len(rows),
        entropy_residual=residual,
        singular_values=tail,
        basis=basis,
    )
