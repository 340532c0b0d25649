"""Symbol detectors and channel-conditioning diagnostics.

Three detector families:

* ``ml_detect``: exhaustive maximum likelihood over a complex-valued
  equivalent channel (guarded at 2**20 candidates).
* ``zf_detect``: pseudo-inverse solve + per-entry nearest constellation point,
  also on the complex model.
* ``lr_zf_detect``: zero forcing on the real-valued model after LLL reduction,
  with the shifted/scaled integer quantizer. The reduction can be precomputed
  once per channel block and passed in; it does not depend on SNR.

Real-model coordinate order follows ``stcodes.realify``: (Re x; Im x) for QAM,
one coordinate per symbol for BPSK.
"""

from dataclasses import dataclass

import numpy as np

from .channel import draw_channel
from .constellations import index_from_axis
from .errors import (
    DomainError,
    RankDeficientError,
    SearchSpaceTooLargeError,
    ShapeError,
    SingularError,
)
from .lattice import lll_reduce
from .stcodes import equivalent_channel_stacked, qstbc_decompose, realify

_SEARCH_LIMIT = 2**20

_INVALID_BIT = np.uint8(255)  # marks coordinates outside the constellation box


@dataclass(frozen=True)
class DetectionResult:
    symbols: np.ndarray
    bits: np.ndarray
    metric: float = np.nan
    clipped: int = 0


_cand_cache = {}


def candidate_set(const, dims):
    """Lexicographic candidate matrix (dims, M^dims) and bit table (M^dims, bits)."""
    key = (const.name, dims)
    if key in _cand_cache:
        return _cand_cache[key]
    m = const.order
    count = m**dims
    if count > _SEARCH_LIMIT:
        raise SearchSpaceTooLargeError(
            f"{m}^{dims} = {count} exceeds the exhaustive-search limit {_SEARCH_LIMIT}"
        )
    codes = np.arange(count)
    digits = np.empty((dims, count), dtype=np.int64)
    for d in range(dims - 1, -1, -1):
        digits[d] = codes % m
        codes = codes // m
    points = const.points[digits]
    bits = np.transpose(const.labels[digits], (1, 0, 2)).reshape(count, -1)
    _cand_cache[key] = (points, bits)
    return points, bits


def ml_detect(y, h_eq, const):
    """Exhaustive ML over the complex equivalent model y = H x + n.

    Ties (exactly equal metrics) resolve to the lexicographically smallest
    candidate index, which argmin-first gives for free.
    """
    y = np.asarray(y, dtype=complex).ravel()
    h_eq = np.asarray(h_eq, dtype=complex)
    if h_eq.ndim != 2 or y.size != h_eq.shape[0]:
        raise ShapeError(f"y is {y.size}-dim but channel is {h_eq.shape}")
    dims = h_eq.shape[1]
    points, bits = candidate_set(const, dims)
    d = y[:, None] - h_eq @ points
    metrics = np.einsum("ic,ic->c", d.conj(), d).real
    best = int(np.argmin(metrics))
    return DetectionResult(
        symbols=points[:, best].copy(), bits=bits[best].copy(),
        metric=float(metrics[best]),
    )


def zf_detect(y, h_eq, const):
    """Pseudo-inverse solve then per-entry nearest constellation point."""
    y = np.asarray(y, dtype=complex).ravel()
    h_eq = np.asarray(h_eq, dtype=complex)
    if h_eq.ndim != 2 or y.size != h_eq.shape[0]:
        raise ShapeError(f"y is {y.size}-dim but channel is {h_eq.shape}")
    sv = np.linalg.svd(h_eq, compute_uv=False)
    if h_eq.shape[0] < h_eq.shape[1] or sv[-1] <= max(h_eq.shape) * 1e-12 * sv[0]:
        raise RankDeficientError("zero forcing needs a full-column-rank channel")
    x_soft, *_ = np.linalg.lstsq(h_eq, y, rcond=None)
    idx = np.argmin(np.abs(x_soft[:, None] - const.points[None, :]) ** 2, axis=1)
    return DetectionResult(
        symbols=const.points[idx], bits=const.labels[idx].reshape(-1).copy(),
    )


def _coords_to_decision(coords, const, clip):
    """Map real lattice-domain coordinates to symbols and bits."""
    c = const.scale
    levels = const.pam_levels
    side = const.side
    axis = np.rint((coords - levels[0]) / c).astype(np.int64)
    out_of_box = (axis < 0) | (axis >= side)
    clipped = int(np.count_nonzero(out_of_box))
    axis_clipped = np.clip(axis, 0, side - 1)
    if const.is_real:
        point_idx = index_from_axis(const, axis_clipped)
        symbols = const.points[point_idx]
        bits = const.labels[point_idx].reshape(-1).copy()
        if not clip:
            bits[out_of_box] = _INVALID_BIT
        return symbols, bits, clipped
    p = coords.size // 2
    i_idx, q_idx = axis_clipped[:p], axis_clipped[p:]
    point_idx = index_from_axis(const, i_idx, q_idx)
    symbols = const.points[point_idx]
    bits = const.labels[point_idx].copy()
    if not clip:
        bpa = const.bits_per_symbol // 2
        bits[out_of_box[:p], :bpa] = _INVALID_BIT
        bits[out_of_box[p:], bpa:] = _INVALID_BIT
    return symbols, bits.reshape(-1), clipped


def lr_zf_detect(y_real, h_real, const, reduction=None, clip=True):
    """Lattice-reduction-aided zero forcing on the real model.

    Solves against the reduced basis Q, rounds in the transformed integer
    domain after the half-integer shift, maps back through R^{-1}, and
    re-applies the shift/scale. With ``clip`` every coordinate is forced to
    the nearest constellation level; without it, out-of-box coordinates keep
    sentinel bits so the miss is visible in BER counts.

    :param reduction: a LatticeReduction of h_real (computed here if None)
    """
    y_real = np.asarray(y_real, dtype=float).ravel()
    h_real = np.asarray(h_real, dtype=float)
    if h_real.ndim != 2 or y_real.size != h_real.shape[0]:
        raise ShapeError(f"y is {y_real.size}-dim but channel is {h_real.shape}")
    if reduction is None:
        reduction = lll_reduce(h_real)
    q = reduction.reduced
    r = reduction.transform.astype(float)
    r_inv = reduction.transform_inv.astype(float)
    n = h_real.shape[1]
    c = const.scale
    y_soft, *_ = np.linalg.lstsq(q, y_real, rcond=None)
    z = np.rint(y_soft / c - 0.5 * (r @ np.ones(n)))
    coords = c * (r_inv @ z + 0.5)
    symbols, bits, clipped = _coords_to_decision(coords, const, clip)
    return DetectionResult(symbols=symbols, bits=bits, clipped=clipped)


def condition_number(a):
    """2-norm condition number sigma_max / sigma_min."""
    a = np.asarray(a)
    sv = np.linalg.svd(a, compute_uv=False)
    if sv[-1] <= 0.0:
        raise SingularError("smallest singular value is zero")
    return float(sv[0] / sv[-1])


def real_equivalent_channel(scheme_kind, h):
    """The real-valued lattice model each scheme's LR detector works on."""
    kind = scheme_kind.lower()
    if kind == "sm":
        return realify(h)
    if kind in ("stacked_ostbc", "alamouti"):
        return realify(equivalent_channel_stacked(h))
    if kind == "qstbc4":
        return realify(qstbc_decompose(h).h_eq)
    raise DomainError(f"no real model for scheme kind {scheme_kind!r}")


@dataclass(frozen=True)
class CondHistogram:
    samples: np.ndarray     # ln condition numbers
    bin_edges: np.ndarray
    density: np.ndarray
    mean: float


def cond_histogram(scheme_kind, cfg, trials, with_lr=False, bins=60, delta=0.75):
    """Histogram of ln(condition number) of a scheme's real model.

    With ``with_lr`` the basis is LLL-reduced first; the density integrates
    to one over the sampled range.
    """
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    samples = np.empty(trials)
    for t in range(trials):
        h = draw_channel(cfg, t)
        m = real_equivalent_channel(scheme_kind, h)
        if with_lr:
            m = lll_reduce(m, delta=delta).reduced
        samples[t] = np.log(condition_number(m))
    density, edges = np.histogram(samples, bins=bins, density=True)
    return CondHistogram(
        samples=samples, bin_edges=edges, density=density,
        mean=float(samples.mean()),
    )
