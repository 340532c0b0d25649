"""LLL lattice basis reduction for real-valued channel matrices.

The reduced basis Q and the integer matrices R (with Q R = original) and
R^{-1} are what the lattice-aided detectors consume. Columns are the basis
vectors; the core works on transposed (row-contiguous) storage so the inner
dot products stay BLAS-friendly, and is compiled with numba when available
(the BER benches run ~1e5 reductions per curve).

Size reduction uses round-half-to-even; both halves satisfy |mu| <= 1/2, so
the reduced-basis contract is unaffected. A final sign pass makes the first
nonzero entry of every reduced column non-negative, which fixes the +-1
column ambiguity LLL otherwise leaves.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, RankDeficientError, ShapeError

_MAX_SWEEPS = 100000


def _gso_rows(bt, bstar, mu, norms2):
    # modified Gram-Schmidt over rows of bt (each row is a basis vector)
    n, m = bt.shape
    for k in range(n):
        for i in range(m):
            bstar[k, i] = bt[k, i]
        for j in range(k):
            d = 0.0
            for i in range(m):
                d += bstar[k, i] * bstar[j, i]
            mkj = d / norms2[j]
            mu[k, j] = mkj
            for i in range(m):
                bstar[k, i] -= mkj * bstar[j, i]
        s = 0.0
        for i in range(m):
            s += bstar[k, i] * bstar[k, i]
        norms2[k] = s


def _lll_rows(bt, ut, uinv, delta):
    """In-place LLL on row-vector storage. Returns 0 on success, <0 on failure."""
    n, m = bt.shape
    bstar = np.empty((n, m))
    mu = np.zeros((n, n))
    norms2 = np.zeros(n)
    _gso_rows(bt, bstar, mu, norms2)
    scale = np.max(norms2)
    if scale <= 0.0:
        return -1
    for j in range(n):
        if norms2[j] <= 1e-26 * scale:
            return -1

    k = 1
    sweeps = 0
    while k < n:
        sweeps += 1
        if sweeps > _MAX_SWEEPS:
            return -2
        for j in range(k - 1, -1, -1):
            q = np.rint(mu[k, j])
            if q != 0.0:
                for i in range(m):
                    bt[k, i] -= q * bt[j, i]
                for i in range(n):
                    ut[k, i] -= q * ut[j, i]
                    uinv[j, i] += q * uinv[k, i]
                for l in range(j):
                    mu[k, l] -= q * mu[j, l]
                mu[k, j] -= q
        if norms2[k] >= (delta - mu[k, k - 1] * mu[k, k - 1]) * norms2[k - 1]:
            k += 1
        else:
            for i in range(m):
                t = bt[k, i]
                bt[k, i] = bt[k - 1, i]
                bt[k - 1, i] = t
            for i in range(n):
                t = ut[k, i]
                ut[k, i] = ut[k - 1, i]
                ut[k - 1, i] = t
                t = uinv[k, i]
                uinv[k, i] = uinv[k - 1, i]
                uinv[k - 1, i] = t
            _gso_rows(bt, bstar, mu, norms2)
            if k > 1:
                k -= 1
    # sign pass: first nonzero entry of each basis vector made non-negative
    for j in range(n):
        s = 0.0
        for i in range(m):
            if bt[j, i] != 0.0:
                s = bt[j, i]
                break
        if s < 0.0:
            for i in range(m):
                bt[j, i] = -bt[j, i]
            for i in range(n):
                ut[j, i] = -ut[j, i]
                uinv[j, i] = -uinv[j, i]
    return 0


try:  # pragma: no cover - exercised implicitly by every call when numba exists
    from numba import njit

    _gso_rows = njit(cache=True, nogil=True)(_gso_rows)
    _lll_rows = njit(cache=True, nogil=True)(_lll_rows)
except ImportError:  # pragma: no cover
    pass


@dataclass(frozen=True)
class LatticeReduction:
    """Reduced basis and the unimodular change of basis, reduced @ transform = original."""

    reduced: np.ndarray         # (m, n) float, LLL-reduced columns
    transform: np.ndarray       # (n, n) int64, R with reduced @ R = original
    transform_inv: np.ndarray   # (n, n) int64, R^{-1}
    delta: float


def lll_reduce(basis, delta=0.75):
    """LLL-reduce the columns of a full-column-rank real matrix.

    :param basis: (m, n) real matrix, m >= n >= 1
    :param delta: Lovasz parameter in (1/4, 1]
    :raises RankDeficientError: if the columns are (numerically) dependent
    """
    b = np.asarray(basis, dtype=float)
    if b.ndim != 2:
        raise ShapeError(f"basis must be 2-d, got ndim={b.ndim}")
    m, n = b.shape
    if n < 1 or m < n:
        raise ShapeError(f"need m >= n >= 1 columns, got shape {b.shape}")
    if not np.all(np.isfinite(b)):
        raise DomainError("basis has non-finite entries")
    if not (0.25 < delta <= 1.0):
        raise DomainError(f"delta must be in (1/4, 1], got {delta}")

    sv = np.linalg.svd(b, compute_uv=False)
    if sv[-1] <= max(m, n) * 1e-12 * sv[0]:
        raise RankDeficientError("basis columns are numerically rank deficient")

    bt = np.ascontiguousarray(b.T)
    ut = np.eye(n)
    uinv = np.eye(n)
    status = _lll_rows(bt, ut, uinv, float(delta))
    if status == -1:
        raise RankDeficientError("basis columns are numerically rank deficient")
    if status == -2:
        raise DomainError("LLL did not converge (sweep limit hit)")

    u_int = np.rint(ut.T).astype(np.int64)
    r_int = np.rint(uinv).astype(np.int64)
    return LatticeReduction(
        reduced=bt.T.copy(), transform=r_int, transform_inv=u_int,
        delta=float(delta),
    )
