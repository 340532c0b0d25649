"""Monte Carlo bit-error-rate engine.

One trial is one coherence block: a fresh channel, one code block of fresh
data bits, and one noise realization that is reused (rescaled) across the
whole SNR grid, so curves at different SNRs are driven by common random
numbers. All draws come from the per-trial streams in ``channel``, which
makes every decision reproducible trial by trial; the batched paths here
produce the same decisions as running the one-shot detectors from ``detect``
on each trial, and a regression test holds them to that.

Error counts are accumulated as integers, so results do not depend on chunk
size or worker count.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..channel import draw_bits, draw_channel, draw_unit_noise, noise_sigma
from ..constellations import make_constellation
from ..detect import candidate_set
from ..errors import DomainError, SearchSpaceTooLargeError
from ..lattice import lll_reduce
from ..stcodes import make_scheme

DETECTOR_NAMES = ("ml", "zf", "lr_zf")

_CHUNK = 256
_CHUNK_WIDE_ML = 48        # smaller chunks when the split-ML cross table is big
_FULL_ML_LIMIT = 4096      # joint search up to this many candidates
_HALF_ML_LIMIT = 1024      # per-half candidates for the split search


@dataclass(frozen=True)
class BerPoint:
    snr_db: float
    ber: float
    std_error: float
    bit_errors: int
    total_bits: int


_dig_cache = {}


def _digit_table(order, dims):
    """(order**dims, dims) table of per-position candidate digits, last fastest."""
    key = (order, dims)
    if key in _dig_cache:
        return _dig_cache[key]
    codes = np.arange(order**dims)
    out = np.empty((codes.size, dims), dtype=np.int64)
    for d in range(dims - 1, -1, -1):
        out[:, d] = codes % order
        codes = codes // order
    _dig_cache[key] = out
    return out


def _batched_equivalent(scheme, h):
    """Stacked equivalent channels for a batch of draws, shape (m, rows, p)."""
    m, n_r, n_t = h.shape
    if scheme.kind == "sm":
        return h.copy()
    if scheme.kind in ("alamouti", "stacked_ostbc"):
        out = np.empty((m, 2 * n_r, n_t), dtype=complex)
        out[:, 0::2, :] = h
        out[:, 1::2, 0::2] = -np.conj(h[:, :, 1::2])
        out[:, 1::2, 1::2] = np.conj(h[:, :, 0::2])
        return out
    # qstbc4
    c = np.conj
    h1, h2, h3, h4 = (h[:, :, j] for j in range(4))
    out = np.empty((m, 4 * n_r, 4), dtype=complex)
    out[:, 0::4, 0], out[:, 0::4, 1], out[:, 0::4, 2], out[:, 0::4, 3] = h1, h2, h3, h4
    out[:, 1::4, 0], out[:, 1::4, 1] = -c(h2), c(h1)
    out[:, 1::4, 2], out[:, 1::4, 3] = -c(h4), c(h3)
    out[:, 2::4, 0], out[:, 2::4, 1], out[:, 2::4, 2], out[:, 2::4, 3] = -h3, h4, h1, -h2
    out[:, 3::4, 0], out[:, 3::4, 1] = -c(h4), -c(h3)
    out[:, 3::4, 2], out[:, 3::4, 3] = c(h2), c(h1)
    return out


def _batched_receive(scheme, blocks):
    """Receive-side reordering y' for a batch of (m, T, n_r) blocks."""
    m, _, n_r = blocks.shape
    if scheme.kind == "sm":
        return blocks[:, 0, :].copy()
    if scheme.kind in ("alamouti", "stacked_ostbc"):
        out = np.empty((m, 2 * n_r), dtype=complex)
        out[:, 0::2] = blocks[:, 0, :]
        out[:, 1::2] = np.conj(blocks[:, 1, :])
        return out
    out = np.empty((m, 4 * n_r), dtype=complex)
    out[:, 0::4] = blocks[:, 0, :]
    out[:, 1::4] = np.conj(blocks[:, 1, :])
    out[:, 2::4] = blocks[:, 2, :]
    out[:, 3::4] = np.conj(blocks[:, 3, :])
    return out


def _realify_batched(heq, is_real):
    """Batched real model of complex channels, matching stcodes.realify."""
    m, rows, cols = heq.shape
    if is_real:
        out = np.empty((m, 2 * rows, cols))
        out[:, :rows, :] = heq.real
        out[:, rows:, :] = heq.imag
        return out
    out = np.empty((m, 2 * rows, 2 * cols))
    out[:, :rows, :cols] = heq.real
    out[:, :rows, cols:] = -heq.imag
    out[:, rows:, :cols] = heq.imag
    out[:, rows:, cols:] = heq.real
    return out


def _candidate_energy(gram, points):
    """q[t, c] = p_c^H G_t p_c for a batch of Grams (m, d, d)."""
    u = np.matmul(gram, points[None, :, :])
    return np.einsum("dc,tdc->tc", points.conj(), u).real


def _linear_term(heq, y, points):
    """2 Re((H^H y)^H p_c) per trial and candidate."""
    w = np.einsum("trd,tr->td", heq.conj(), y)
    return 2.0 * np.einsum("td,dc->tc", w.conj(), points).real


def _ml_full(heq, y_sig, n_eq, sigmas, const, p):
    """Joint exhaustive search; per-SNR decided point indices (n_snr, m, p)."""
    points, _ = candidate_set(const, p)
    dig = _digit_table(const.order, p)
    gram = np.matmul(heq.conj().transpose(0, 2, 1), heq)
    quad = _candidate_energy(gram, points)
    out = np.empty((len(sigmas), heq.shape[0], p), dtype=np.int64)
    for k, sig in enumerate(sigmas):
        y = y_sig + sig * n_eq
        best = np.argmin(quad - _linear_term(heq, y, points), axis=1)
        out[k] = dig[best]
    return out


def _ml_split(heq, y_sig, n_eq, sigmas, const, p):
    """Exhaustive search with the candidate set split into two halves.

    The metric separates as q_a + q_b + cross(a, b) minus the linear terms;
    flattening the (a, b) grid row-major reproduces the lexicographic
    candidate order of the joint search, so ties resolve identically.
    """
    ph = p // 2
    points, _ = candidate_set(const, ph)
    dig = _digit_table(const.order, ph)
    a_ch, b_ch = heq[:, :, :ph], heq[:, :, ph:]
    quad_a = _candidate_energy(np.matmul(a_ch.conj().transpose(0, 2, 1), a_ch), points)
    quad_b = _candidate_energy(np.matmul(b_ch.conj().transpose(0, 2, 1), b_ch), points)
    cross_g = np.matmul(a_ch.conj().transpose(0, 2, 1), b_ch)
    cross = 2.0 * np.matmul(
        np.matmul(points.conj().T[None, :, :], cross_g), points[None, :, :]
    ).real
    n_half = points.shape[1]
    out = np.empty((len(sigmas), heq.shape[0], p), dtype=np.int64)
    for k, sig in enumerate(sigmas):
        y = y_sig + sig * n_eq
        part_a = quad_a - _linear_term(a_ch, y, points)
        part_b = quad_b - _linear_term(b_ch, y, points)
        tot = cross + part_a[:, :, None]
        tot += part_b[:, None, :]
        best = tot.reshape(tot.shape[0], -1).argmin(axis=1)
        out[k, :, :ph] = dig[best // n_half]
        out[k, :, ph:] = dig[best % n_half]
    return out


def _zf_decide(heq, y_sig, n_eq, sigmas, const):
    """Pseudo-inverse solve + per-entry nearest point, (n_snr, m, p)."""
    pinv = np.linalg.pinv(heq)
    m, p = heq.shape[0], heq.shape[2]
    out = np.empty((len(sigmas), m, p), dtype=np.int64)
    for k, sig in enumerate(sigmas):
        soft = np.einsum("tcr,tr->tc", pinv, y_sig + sig * n_eq)
        d2 = np.abs(soft[:, :, None] - const.points[None, None, :]) ** 2
        out[k] = np.argmin(d2, axis=2)
    return out


def _lr_zf_decide(heq, y_sig, n_eq, sigmas, const, delta):
    """Batched LLL-aided ZF with the shift/scale quantizer, (n_snr, m, p)."""
    m, rows, p = heq.shape
    real_h = _realify_batched(heq, const.is_real)
    n = real_h.shape[2]
    qred = np.empty_like(real_h)
    r_mat = np.empty((m, n, n))
    r_inv = np.empty((m, n, n))
    for i in range(m):
        red = lll_reduce(real_h[i], delta=delta)
        qred[i] = red.reduced
        r_mat[i] = red.transform
        r_inv[i] = red.transform_inv
    pinv = np.linalg.pinv(qred)
    shift = 0.5 * r_mat.sum(axis=2)
    c = const.scale
    levels0 = const.pam_levels[0]
    side = const.side
    out = np.empty((len(sigmas), m, p), dtype=np.int64)
    for k, sig in enumerate(sigmas):
        y = y_sig + sig * n_eq
        y_real = np.concatenate([y.real, y.imag], axis=1)
        soft = np.einsum("tnr,tr->tn", pinv, y_real)
        z = np.rint(soft / c - shift)
        coords = c * (np.einsum("tnj,tj->tn", r_inv, z) + 0.5)
        axis = np.clip(np.rint((coords - levels0) / c).astype(np.int64), 0, side - 1)
        if const.is_real:
            out[k] = 1 - axis
        else:
            out[k] = axis[:, :p] * side + axis[:, p:]
    return out


def _qstbc_decide(h, heq, y_sig, n_eq, sigmas, const, detector, delta):
    """Detection through the two decoupled 2x2 subsystems, (n_snr, m, 4).

    Column order of the result is the symbol order (x1, x2, x3, x4); the odd
    subsystem decides (x1, x3) and the even one (x4, x2).
    """
    m = h.shape[0]
    lam = np.sum(np.abs(h) ** 2, axis=(1, 2))
    alpha = np.sum(2.0 * np.imag(
        np.conj(h[:, :, 0]) * h[:, :, 2] + np.conj(h[:, :, 3]) * h[:, :, 1]
    ), axis=1)
    beta = np.sqrt(np.maximum((lam + alpha) / 2.0, 0.0))
    eps = np.sqrt(np.maximum((lam - alpha) / 2.0, 0.0))
    h_eq = np.zeros((m, 2, 2), dtype=complex)
    h_eq[:, 0, 0], h_eq[:, 0, 1] = beta, 1j * beta
    h_eq[:, 1, 0], h_eq[:, 1, 1] = eps, -1j * eps

    if detector == "ml":
        points, _ = candidate_set(const, 2)
        dig = _digit_table(const.order, 2)
        energy = np.sum(np.abs(points) ** 2, axis=0)
        cross_im = np.imag(np.conj(points[0]) * points[1])
        quad = lam[:, None] * energy[None, :] - 2.0 * alpha[:, None] * cross_im[None, :]
    elif detector == "lr_zf":
        real_h = _realify_batched(h_eq, const.is_real)
        n = real_h.shape[2]
        qred = np.empty_like(real_h)
        r_mat = np.empty((m, n, n))
        r_inv = np.empty((m, n, n))
        for i in range(m):
            red = lll_reduce(real_h[i], delta=delta)
            qred[i] = red.reduced
            r_mat[i] = red.transform
            r_inv[i] = red.transform_inv
        pinv = np.linalg.pinv(qred)
        shift = 0.5 * r_mat.sum(axis=2)

    out = np.empty((len(sigmas), m, 4), dtype=np.int64)
    for k, sig in enumerate(sigmas):
        y = y_sig + sig * n_eq
        z = np.einsum("tij,ti->tj", heq.conj(), y)
        y_odd = np.stack([
            (z[:, 0] + 1j * z[:, 2]) / (2.0 * beta),
            (z[:, 0] - 1j * z[:, 2]) / (2.0 * eps),
        ], axis=1)
        y_even = np.stack([
            (z[:, 3] + 1j * z[:, 1]) / (2.0 * beta),
            (z[:, 3] - 1j * z[:, 1]) / (2.0 * eps),
        ], axis=1)
        for sub, (cols, y_sub) in enumerate((((0, 2), y_odd), ((3, 1), y_even))):
            if detector == "ml":
                best = np.argmin(quad - _linear_term(h_eq, y_sub, points), axis=1)
                pair = dig[best]
            elif detector == "zf":
                soft0 = y_sub[:, 0] / beta
                soft1 = y_sub[:, 1] / eps
                soft = np.stack([(soft0 + soft1) / 2.0,
                                 -0.5j * (soft0 - soft1)], axis=1)
                d2 = np.abs(soft[:, :, None] - const.points[None, None, :]) ** 2
                pair = np.argmin(d2, axis=2)
            else:
                y_real = np.concatenate([y_sub.real, y_sub.imag], axis=1)
                soft = np.einsum("tnr,tr->tn", pinv, y_real)
                zq = np.rint(soft / const.scale - shift)
                coords = const.scale * (np.einsum("tnj,tj->tn", r_inv, zq) + 0.5)
                axis = np.clip(np.rint((coords - const.pam_levels[0]) / const.scale
                                       ).astype(np.int64), 0, const.side - 1)
                if const.is_real:
                    pair = 1 - axis
                else:
                    pair = axis[:, :2] * const.side + axis[:, 2:]
            out[k, :, cols[0]] = pair[:, 0]
            out[k, :, cols[1]] = pair[:, 1]
    return out


def _chunk_errors(scheme, const, detector, cfg, t0, m, delta):
    """Bit error counts for trials t0 .. t0+m-1, shape (n_snr, m)."""
    p = scheme.symbols_per_block
    b = const.bits_per_symbol
    h = np.empty((m, cfg.n_r, cfg.n_t), dtype=complex)
    nunit = np.empty((m, scheme.block_len, cfg.n_r), dtype=complex)
    bits = np.empty((m, p * b), dtype=np.uint8)
    for i in range(m):
        h[i] = draw_channel(cfg, t0 + i)
        bits[i] = draw_bits(cfg, t0 + i, p * b)
        nunit[i] = draw_unit_noise(cfg, t0 + i, (scheme.block_len, cfg.n_r))
    weights = (1 << np.arange(b - 1, -1, -1)).astype(np.int64)
    codes = bits.reshape(m, p, b).astype(np.int64) @ weights
    true_idx = const._code_to_index[codes]
    x = const.points[true_idx]

    heq = _batched_equivalent(scheme, h)
    y_sig = np.einsum("trc,tc->tr", heq, x)
    n_eq = _batched_receive(scheme, nunit)
    sigmas = [noise_sigma(s, cfg.n_t) for s in cfg.snr_db]

    if scheme.kind == "qstbc4":
        dec = _qstbc_decide(h, heq, y_sig, n_eq, sigmas, const, detector, delta)
    elif detector == "ml":
        if const.order**p <= _FULL_ML_LIMIT:
            dec = _ml_full(heq, y_sig, n_eq, sigmas, const, p)
        else:
            dec = _ml_split(heq, y_sig, n_eq, sigmas, const, p)
    elif detector == "zf":
        dec = _zf_decide(heq, y_sig, n_eq, sigmas, const)
    else:
        dec = _lr_zf_decide(heq, y_sig, n_eq, sigmas, const, delta)

    true_bits = const.labels[true_idx]
    errs = np.empty((len(sigmas), m), dtype=np.int64)
    for k in range(len(sigmas)):
        errs[k] = np.count_nonzero(const.labels[dec[k]] != true_bits, axis=(1, 2))
    return errs


def _check_feasible(scheme, const, detector, cfg):
    if detector not in DETECTOR_NAMES:
        raise DomainError(f"unknown detector {detector!r}; supported: {DETECTOR_NAMES}")
    p = scheme.symbols_per_block
    if scheme.kind == "qstbc4":
        return
    if detector == "ml" and const.order**p > _FULL_ML_LIMIT:
        if p % 2 != 0 or const.order ** (p // 2) > _HALF_ML_LIMIT:
            raise SearchSpaceTooLargeError(
                f"{const.order}^{p} candidates cannot be searched, even split in half"
            )
    if scheme.kind == "sm" and detector in ("zf", "lr_zf") and cfg.n_r < cfg.n_t:
        raise DomainError("spatial multiplexing with zero forcing needs n_r >= n_t")
    if scheme.kind in ("alamouti", "stacked_ostbc") and 2 * cfg.n_r < cfg.n_t:
        raise DomainError("stacked detection needs 2 n_r >= n_t")


def ber_curve(scheme_kind, const_name, detector, cfg, trials, delta=0.75, workers=None):
    """Simulate a BER curve over cfg.snr_db.

    :param scheme_kind: one of stcodes.SCHEME_KINDS
    :param const_name: constellation name
    :param detector: "ml", "zf", or "lr_zf"
    :param cfg: SystemConfig (antennas, SNR grid, seed)
    :param trials: number of simulated coherence blocks
    :return: list of BerPoint, one per SNR grid point
    """
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    scheme = make_scheme(scheme_kind, cfg.n_t)
    const = make_constellation(const_name)
    _check_feasible(scheme, const, detector, cfg)

    chunk = _CHUNK
    if detector == "ml" and scheme.kind != "qstbc4" \
            and const.order**scheme.symbols_per_block > _FULL_ML_LIMIT:
        chunk = _CHUNK_WIDE_ML
    starts = [(t0, min(chunk, trials - t0)) for t0 in range(0, trials, chunk)]

    def run(args):
        t0, m = args
        return _chunk_errors(scheme, const, detector, cfg, t0, m, delta)

    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, starts))
    else:
        parts = [run(a) for a in starts]

    n_snr = len(cfg.snr_db)
    err_sum = np.zeros(n_snr, dtype=np.int64)
    err_sq = np.zeros(n_snr, dtype=np.int64)
    for e in parts:
        err_sum += e.sum(axis=1)
        err_sq += (e.astype(np.int64) ** 2).sum(axis=1)

    bits_per_trial = scheme.symbols_per_block * const.bits_per_symbol
    total_bits = trials * bits_per_trial
    points = []
    for k, snr in enumerate(cfg.snr_db):
        mean_e = err_sum[k] / trials
        var_e = max(err_sq[k] / trials - mean_e**2, 0.0)
        se = np.sqrt(var_e / trials) / bits_per_trial
        points.append(BerPoint(
            snr_db=float(snr), ber=float(err_sum[k] / total_bits),
            std_error=float(se), bit_errors=int(err_sum[k]),
            total_bits=int(total_bits),
        ))
    return points
