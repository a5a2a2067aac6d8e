"""Hot numeric kernels with selectable backend.

The single expensive inner loop in this package is evaluating a gaussian
mixture's log density at many points (entropy estimates, L1/TV integrands,
posterior entropies). Kernel-density suites push this to ~1e4 components
times ~1e5 points per call, so the loop is compiled with numba when available.

Backend selection, decided once at import:

* ``CHAINCERT_BACKEND=numba``  force numba (ImportError if missing),
* ``CHAINCERT_BACKEND=numpy``  force the pure-numpy fallback,
* unset                        numba if importable, else numpy.

Both backends implement the same two entry points and agree to float rounding:

* :func:`mixture_logpdf`          log m(x) via a streaming logsumexp,
* :func:`mixture_logpdf_entropy`  log m(x) fused with the entropy of the
  posterior over components, H(w_j exp(l_j(x)) / m(x)).

Components are passed in precomputed form: means ``(k, d)``, precision
matrices ``(k, d, d)``, and per-component log coefficients
``logc_j = log w_j - 0.5 log det Sigma_j - (d/2) log 2 pi``. The isotropic
fast path replaces the precision stack with a scalar ``1/h^2``.
"""
from __future__ import annotations

import os

import numpy as np

_ENV_VAR = "CHAINCERT_BACKEND"

# ---------------------------------------------------------------------------
# numpy backend
# ---------------------------------------------------------------------------

# Cap on chunk * components so scratch matrices stay ~tens of MB.
_CHUNK_BUDGET = 4_000_000


def _chunked(n: int, k: int):
    step = max(1, _CHUNK_BUDGET // max(k, 1))
    for lo in range(0, n, step):
        yield lo, min(lo + step, n)


def _reduce_rows(ell: np.ndarray, want_entropy: bool):
    """Row-wise logsumexp of ``ell``; optionally the posterior entropy."""
    mx = ell.max(axis=1)
    shifted = ell - mx[:, None]
    weights = np.exp(shifted)
    total = weights.sum(axis=1)
    logpdf = mx + np.log(total)
    if not want_entropy:
        return logpdf, None
    # H(posterior) = logsumexp - E_posterior[ell]; computed on shifted values
    # so the subtraction stays well conditioned.
    mean_shifted = (weights * shifted).sum(axis=1) / total
    return logpdf, np.log(total) - mean_shifted


def _general_numpy(points, means, precs, logcs, want_entropy):
    n = points.shape[0]
    k = means.shape[0]
    out = np.empty(n)
    ent = np.empty(n) if want_entropy else None
    for lo, hi in _chunked(n, k):
        pts = points[lo:hi]
        ell = np.empty((hi - lo, k))
        for j in range(k):
            diff = pts - means[j]
            quad = np.einsum("ni,ij,nj->n", diff, precs[j], diff)
            ell[:, j] = logcs[j] - 0.5 * quad
        logpdf, h = _reduce_rows(ell, want_entropy)
        out[lo:hi] = logpdf
        if want_entropy:
            ent[lo:hi] = h
    return out, ent


def _iso_numpy(points, means, inv_h2, logcs, want_entropy):
    n = points.shape[0]
    k = means.shape[0]
    out = np.empty(n)
    ent = np.empty(n) if want_entropy else None
    comp_sq = np.einsum("ji,ji->j", means, means)
    for lo, hi in _chunked(n, k):
        pts = points[lo:hi]
        pt_sq = np.einsum("ni,ni->n", pts, pts)
        sq = pt_sq[:, None] + comp_sq[None, :] - 2.0 * (pts @ means.T)
        np.maximum(sq, 0.0, out=sq)  # matmul round-off can dip below zero
        ell = logcs[None, :] - (0.5 * inv_h2) * sq
        logpdf, h = _reduce_rows(ell, want_entropy)
        out[lo:hi] = logpdf
        if want_entropy:
            ent[lo:hi] = h
    return out, ent


# ---------------------------------------------------------------------------
# numba backend (compiled lazily at import when selected)
# ---------------------------------------------------------------------------

def _build_numba():
    import numba

    @numba.njit(parallel=True, cache=True)
    def general(points, means, precs, logcs, want_entropy):  # pragma: no cover
        n, d = points.shape
        k = means.shape[0]
        out = np.empty(n)
        ent = np.empty(n)
        for i in numba.prange(n):
            # Online logsumexp: running max m, A = sum exp(l - m),
            # B = sum exp(l - m) * l. One pass over components.
            m = -np.inf
            acc = 0.0
            acc_l = 0.0
            for j in range(k):
                quad = 0.0
                for r in range(d):
                    dr = points[i, r] - means[j, r]
                    row = 0.0
                    for s in range(d):
                        row += precs[j, r, s] * (points[i, s] - means[j, s])
                    quad += dr * row
                ell = logcs[j] - 0.5 * quad
                if ell > m:
                    if m == -np.inf:
                        acc = 1.0
                        acc_l = ell
                    else:
                        scale = np.exp(m - ell)
                        acc = acc * scale + 1.0
                        acc_l = acc_l * scale + ell
                    m = ell
                else:
                    w = np.exp(ell - m)
                    acc += w
                    acc_l += w * ell
            logpdf = m + np.log(acc)
            out[i] = logpdf
            if want_entropy:
                ent[i] = logpdf - acc_l / acc
        return out, ent

    @numba.njit(parallel=True, cache=True)
    def iso(points, means, inv_h2, logcs, want_entropy):  # pragma: no cover
        n, d = points.shape
        k = means.shape[0]
        out = np.empty(n)
        ent = np.empty(n)
        for i in numba.prange(n):
            m = -np.inf
            acc = 0.0
            acc_l = 0.0
            for j in range(k):
                sq = 0.0
                for r in range(d):
                    dr = points[i, r] - means[j, r]
                    sq += dr * dr
                ell = logcs[j] - 0.5 * inv_h2 * sq
                if ell > m:
                    if m == -np.inf:
                        acc = 1.0
                        acc_l = ell
                    else:
                        scale = np.exp(m - ell)
                        acc = acc * scale + 1.0
                        acc_l = acc_l * scale + ell
                    m = ell
                else:
                    w = np.exp(ell - m)
                    acc += w
                    acc_l += w * ell
            logpdf = m + np.log(acc)
            out[i] = logpdf
            if want_entropy:
                ent[i] = logpdf - acc_l / acc
        return out, ent

    def general_wrapped(points, means, precs, logcs, want_entropy):
        out, ent = general(points, means, precs, logcs, want_entropy)
        return out, (ent if want_entropy else None)

    def iso_wrapped(points, means, inv_h2, logcs, want_entropy):
        out, ent = iso(points, means, inv_h2, logcs, want_entropy)
        return out, (ent if want_entropy else None)

    return general_wrapped, iso_wrapped


def _pick_backend() -> str:
    choice = os.environ.get(_ENV_VAR, "").strip().lower()
    if choice == "numpy":
        return "numpy"
    if choice == "numba":
        import numba  # noqa: F401  (fail loudly when forced)

        return "numba"
    if choice:
        raise ValueError(f"{_ENV_VAR} must be 'numba' or 'numpy', got {choice!r}")
    try:
        import numba  # noqa: F401
    except ImportError:
        return "numpy"
    return "numba"


BACKEND = _pick_backend()

if BACKEND == "numba":
    _general_impl, _iso_impl = _build_numba()
else:
    _general_impl, _iso_impl = _general_numpy, _iso_numpy


def get_impl(backend: str):
    """Raw (general, iso) implementations for one backend; used by benchmarks."""
    if backend == "numpy":
        return _general_numpy, _iso_numpy
    if backend == "numba":
        return _build_numba()
    raise ValueError(f"unknown backend {backend!r}")


# ---------------------------------------------------------------------------
# public entry points
# ---------------------------------------------------------------------------

def _prepare(points, means, logcs):
    points = np.ascontiguousarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    means = np.ascontiguousarray(means, dtype=np.float64)
    logcs = np.ascontiguousarray(logcs, dtype=np.float64)
    if means.shape[0] != logcs.shape[0]:
        raise ValueError("means and logcs disagree on component count")
    if points.shape[1] != means.shape[1]:
        raise ValueError("points and means disagree on dimension")
    return points, means, logcs


def _dim_zero(points, logcs, want_entropy):
    # All mass sits at the single point of a 0-dim space; the mixture collapses
    # to its weight vector.
    shifted = logcs - logcs.max()
    total = np.exp(shifted).sum()
    logpdf = float(logcs.max() + np.log(total))
    n = points.shape[0]
    out = np.full(n, logpdf)
    if not want_entropy:
        return out, None
    post = np.exp(shifted) / total
    h = float(-(post * np.log(np.where(post > 0, post, 1.0))).sum())
    return out, np.full(n, h)


def mixture_logpdf(points, means, precs=None, logcs=None, iso_inv_h2=None):
    """Log density of a gaussian mixture at ``points``; shape ``(n,)``.

    Pass either a precision stack ``precs`` of shape (k, d, d) or, for
    components sharing covariance h^2 I, the scalar ``iso_inv_h2 = 1/h^2``.
    """
    out, _ = _dispatch(points, means, precs, logcs, iso_inv_h2, want_entropy=False)
    return out


def mixture_logpdf_entropy(points, means, precs=None, logcs=None, iso_inv_h2=None):
    """Fused pass returning (log m(x), entropy of the posterior over components)."""
    return _dispatch(points, means, precs, logcs, iso_inv_h2, want_entropy=True)


def _dispatch(points, means, precs, logcs, iso_inv_h2, want_entropy):
    points, means, logcs = _prepare(points, means, logcs)
    if means.shape[1] == 0:
        return _dim_zero(points, logcs, want_entropy)
    if iso_inv_h2 is not None:
        return _iso_impl(points, means, float(iso_inv_h2), logcs, want_entropy)
    precs = np.ascontiguousarray(precs, dtype=np.float64)
    if precs.shape != (means.shape[0], means.shape[1], means.shape[1]):
        raise ValueError("precision stack has wrong shape")
    return _general_impl(points, means, precs, logcs, want_entropy)


def warmup() -> None:
    """Trigger JIT compilation so timed sections never pay compile cost."""
    pts = np.zeros((2, 1))
    means = np.zeros((2, 1))
    precs = np.tile(np.eye(1), (2, 1, 1))
    logcs = np.full(2, -1.0)
    _dispatch(pts, means, precs, logcs, None, want_entropy=True)
    _dispatch(pts, means, None, logcs, 1.0, want_entropy=True)
