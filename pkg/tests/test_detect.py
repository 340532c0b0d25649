"""Detector correctness, conditioning diagnostics, and lattice-aided behavior.

Monte Carlo assertions run at fixed seeds; trial counts and tolerances were
chosen so the measured margins sit several standard errors inside the bound.
"""

import numpy as np
import pytest

from stcsim.channel import (
    SystemConfig,
    draw_bits,
    draw_channel,
    draw_unit_noise,
    noise_sigma,
)
from stcsim.constellations import make_constellation, map_bits
from stcsim.detect import (
    candidate_set,
    cond_histogram,
    condition_number,
    lr_zf_detect,
    ml_detect,
    real_equivalent_channel,
    zf_detect,
)
from stcsim.errors import (
    DomainError,
    RankDeficientError,
    SearchSpaceTooLargeError,
    ShapeError,
    SingularError,
)
from stcsim.lattice import lll_reduce
from stcsim.simlab.ber import ber_curve
from stcsim.stcodes import (
    equivalent_channel_stacked,
    realify,
    realify_bpsk,
    realify_vector,
    receive_to_equivalent_stacked,
)


def _rand_h(rng, n_r, n_t):
    return np.sqrt(0.5) * (rng.standard_normal((n_r, n_t))
                           + 1j * rng.standard_normal((n_r, n_t)))


def test_candidate_set_lexicographic():
    const = make_constellation("qam4")
    points, bits = candidate_set(const, 2)
    assert points.shape == (2, 16) and bits.shape == (16, 4)
    for c in range(16):
        assert points[0, c] == const.points[c // 4]
        assert points[1, c] == const.points[c % 4]
        np.testing.assert_array_equal(
            bits[c], np.concatenate([const.labels[c // 4], const.labels[c % 4]]))


def test_candidate_set_size_guard():
    const = make_constellation("qam16")
    with pytest.raises(SearchSpaceTooLargeError):
        candidate_set(const, 6)


def test_ml_exact_and_near_recovery():
    const = make_constellation("qam16")
    rng = np.random.default_rng(40)
    h = np.eye(2, dtype=complex)
    for _ in range(50):
        idx = rng.integers(16, size=2)
        x = const.points[idx]
        res = ml_detect(x, h, const)
        np.testing.assert_array_equal(res.symbols, x)
        # anything closer than half the minimum distance cannot flip it
        pert = 0.45 * const.scale * np.exp(2j * np.pi * rng.random(2))
        res = ml_detect(x + pert, h, const)
        np.testing.assert_array_equal(res.symbols, x)
        assert res.metric == pytest.approx(np.sum(np.abs(pert) ** 2))


def test_ml_tie_breaks_to_first_candidate():
    const = make_constellation("qam4")
    res = ml_detect(np.array([1.0, 1.0]), np.zeros((2, 2)), const)
    points, bits = candidate_set(const, 2)
    np.testing.assert_array_equal(res.symbols, points[:, 0])
    np.testing.assert_array_equal(res.bits, bits[0])


def test_ml_matches_brute_force_reimplementation():
    const = make_constellation("qam4")
    rng = np.random.default_rng(41)
    for _ in range(1000):
        h = _rand_h(rng, 2, 2)
        y = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        res = ml_detect(y, h, const)
        best, best_m = None, np.inf
        for i, pi in enumerate(const.points):
            for j, pj in enumerate(const.points):
                m = np.sum(np.abs(y - h @ np.array([pi, pj])) ** 2)
                if m < best_m:
                    best_m, best = m, (pi, pj, i, j)
        np.testing.assert_array_equal(res.symbols, best[:2])
        np.testing.assert_array_equal(
            res.bits, np.concatenate([const.labels[best[2]], const.labels[best[3]]]))
        assert res.metric == pytest.approx(best_m, rel=1e-9)
    with pytest.raises(ShapeError):
        ml_detect(np.zeros(3), np.zeros((2, 2)), const)


def test_zf_identity_channel_quantizes():
    const = make_constellation("qam16")
    rng = np.random.default_rng(42)
    idx = rng.integers(16, size=4)
    y = const.points[idx] + 0.3 * const.scale * np.exp(2j * np.pi * rng.random(4))
    res = zf_detect(y, np.eye(4, dtype=complex), const)
    np.testing.assert_array_equal(res.symbols, const.points[idx])


def test_zf_equals_ml_on_orthogonal_channel():
    const = make_constellation("qam4")
    rng = np.random.default_rng(43)
    for _ in range(200):
        hp = equivalent_channel_stacked(_rand_h(rng, 1, 2))
        x = const.points[rng.integers(4, size=2)]
        y = hp @ x + 0.5 * (rng.standard_normal(2) + 1j * rng.standard_normal(2))
        np.testing.assert_array_equal(zf_detect(y, hp, const).bits,
                                      ml_detect(y, hp, const).bits)


def test_zf_rank_guard():
    const = make_constellation("qam4")
    with pytest.raises(RankDeficientError):
        zf_detect(np.zeros(2), np.ones((2, 2)), const)
    with pytest.raises(RankDeficientError):
        zf_detect(np.zeros(2), np.ones((2, 3)), const)


def test_zf_loses_to_ml_on_ill_conditioned_channel():
    const = make_constellation("qam4")
    h = np.array([[1.0, 0.95], [0.95, 1.0]], dtype=complex)
    rng = np.random.default_rng(77)
    ml_err = zf_err = 0
    for _ in range(10000):
        x = const.points[rng.integers(4, size=2)]
        n = 0.25 * np.sqrt(0.5) * (rng.standard_normal(2)
                                   + 1j * rng.standard_normal(2))
        y = h @ x + n
        ml_err += int(np.any(ml_detect(y, h, const).symbols != x))
        zf_err += int(np.any(zf_detect(y, h, const).symbols != x))
    assert zf_err >= 1.2 * ml_err


@pytest.mark.parametrize("name", ("bpsk", "qam4", "qam16"))
def test_lr_zf_noiseless_exhaustive_two_symbols(name):
    const = make_constellation(name)
    rng = np.random.default_rng(44)
    h = _rand_h(rng, 2, 2)
    h_real = realify_bpsk(h) if const.is_real else realify(h)
    red = lll_reduce(h_real)
    for i in range(const.order):
        for j in range(const.order):
            x = const.points[[i, j]]
            y = h @ x
            y_real = np.concatenate([y.real, y.imag]) if const.is_real \
                else realify_vector(y)
            res = lr_zf_detect(y_real, h_real, const, reduction=red)
            np.testing.assert_allclose(res.symbols, x, atol=1e-9)
            want = np.concatenate([const.labels[i], const.labels[j]])
            np.testing.assert_array_equal(res.bits, want)
            assert res.clipped == 0


def test_lr_zf_identity_channel_all_qam4_vectors():
    const = make_constellation("qam4")
    points, bits = candidate_set(const, 2)
    h_real = np.eye(4)
    for c in range(points.shape[1]):
        y_real = realify_vector(points[:, c])
        res = lr_zf_detect(y_real, h_real, const)
        np.testing.assert_array_equal(res.bits, bits[c])


def test_lr_zf_noiseless_recovery_stacked_channel():
    const = make_constellation("qam4")
    rng = np.random.default_rng(45)
    for _ in range(1000):
        hp = equivalent_channel_stacked(_rand_h(rng, 2, 4))
        x = const.points[rng.integers(4, size=4)]
        h_real = realify(hp)
        res = lr_zf_detect(realify_vector(hp @ x), h_real, const)
        np.testing.assert_allclose(res.symbols, x, atol=1e-9)


def test_lr_zf_reduction_reuse_identical():
    const = make_constellation("qam16")
    rng = np.random.default_rng(46)
    hp = equivalent_channel_stacked(_rand_h(rng, 2, 4))
    h_real = realify(hp)
    red = lll_reduce(h_real)
    for _ in range(20):
        y = rng.standard_normal(8)
        a = lr_zf_detect(y, h_real, const)
        b = lr_zf_detect(y, h_real, const, reduction=red)
        np.testing.assert_array_equal(a.bits, b.bits)
    with pytest.raises(ShapeError):
        lr_zf_detect(np.zeros(3), h_real, const)


def test_lr_zf_sentinel_bits_without_clipping():
    const = make_constellation("qam4")
    y = 50.0 * np.ones(4)  # far outside the constellation box
    clipped = lr_zf_detect(y, np.eye(4), const, clip=True)
    raw = lr_zf_detect(y, np.eye(4), const, clip=False)
    assert clipped.clipped > 0 and raw.clipped == clipped.clipped
    assert np.all((clipped.bits == 0) | (clipped.bits == 1))
    assert np.any(raw.bits == 255)


def test_all_detectors_agree_on_orthogonal_channel():
    # stacked n_r=1 equivalent channel is orthogonal, so ZF, LR-ZF and ML
    # make identical decisions on the same noise
    const = make_constellation("qam4")
    rng = np.random.default_rng(47)
    for _ in range(300):
        hp = equivalent_channel_stacked(_rand_h(rng, 1, 2))
        x = const.points[rng.integers(4, size=2)]
        y = hp @ x + 0.6 * (rng.standard_normal(2) + 1j * rng.standard_normal(2))
        ml = ml_detect(y, hp, const).bits
        zf = zf_detect(y, hp, const).bits
        lr = lr_zf_detect(realify_vector(y), realify(hp), const).bits
        np.testing.assert_array_equal(ml, zf)
        np.testing.assert_array_equal(ml, lr)


def test_condition_number_values():
    assert condition_number(np.eye(3)) == pytest.approx(1.0)
    assert condition_number(np.array([[0.0, 1.0], [-1.0, 0.0]])) == pytest.approx(1.0)
    assert condition_number(np.diag([3.0, 1.0])) == pytest.approx(3.0)
    with pytest.raises(SingularError):
        condition_number(np.zeros((2, 2)))


def test_condition_number_stacked_single_rx_is_one():
    rng = np.random.default_rng(48)
    for n_t in (2, 4, 8):
        h = _rand_h(rng, 1, n_t)
        m = real_equivalent_channel("stacked_ostbc", h)
        assert abs(condition_number(m) - 1.0) < 1e-9


def test_real_equivalent_channel_shapes():
    rng = np.random.default_rng(49)
    h = _rand_h(rng, 2, 4)
    assert real_equivalent_channel("sm", h).shape == (4, 8)
    assert real_equivalent_channel("stacked_ostbc", h).shape == (8, 8)
    assert real_equivalent_channel("alamouti", _rand_h(rng, 1, 2)).shape == (4, 4)
    assert real_equivalent_channel("qstbc4", h).shape == (4, 4)
    with pytest.raises(DomainError):
        real_equivalent_channel("dblast", h)


def test_cond_histogram_density_and_orthogonal_mass():
    cfg = SystemConfig(2, 1, (0.0,), 50)
    hist = cond_histogram("alamouti", cfg, 500)
    widths = np.diff(hist.bin_edges)
    assert abs(np.sum(hist.density * widths) - 1.0) < 1e-9
    # orthogonal channel: ln cond identically zero, all mass in one spot
    assert np.max(np.abs(hist.samples)) < 1e-9
    assert abs(hist.mean) < 1e-9
    with pytest.raises(DomainError):
        cond_histogram("alamouti", cfg, 0)


def test_lll_improves_conditioning_by_scheme():
    cfg = SystemConfig(4, 4, (0.0,), 51)
    reductions = {}
    for kind in ("sm", "stacked_ostbc", "qstbc4"):
        plain = cond_histogram(kind, cfg, 1000)
        lr = cond_histogram(kind, cfg, 1000, with_lr=True)
        reductions[kind] = plain.mean - lr.mean
        assert lr.mean < plain.mean, kind
    # LR moves SM a lot, the stacked model some, QSTBC almost not at all
    assert reductions["sm"] > reductions["stacked_ostbc"] > reductions["qstbc4"] > 0


def _lr_clipping_errors(const_name, snr_db, trials=3000, seed=63):
    """Bit errors of LR-ZF with and without the clip step, stacked 4x2."""
    cfg = SystemConfig(4, 2, (snr_db,), seed)
    const = make_constellation(const_name)
    n_bits = 4 * const.bits_per_symbol
    sigma = noise_sigma(snr_db, 4)
    errs = {True: 0, False: 0}
    clipped = 0
    for t in range(trials):
        h = draw_channel(cfg, t)
        bits = draw_bits(cfg, t, n_bits)
        x = map_bits(bits, const)
        hp = equivalent_channel_stacked(h)
        noise = sigma * draw_unit_noise(cfg, t, (2, 2))
        y = hp @ x + receive_to_equivalent_stacked(noise)
        if const.is_real:
            h_real = realify_bpsk(hp)
            y_real = np.concatenate([y.real, y.imag])
        else:
            h_real = realify(hp)
            y_real = realify_vector(y)
        red = lll_reduce(h_real)
        for clip in (True, False):
            res = lr_zf_detect(y_real, h_real, const, reduction=red, clip=clip)
            errs[clip] += int(np.count_nonzero(res.bits != bits))
            if not clip:
                clipped += res.clipped
    return errs[True], errs[False], clipped


def test_clipping_matters_more_for_bpsk_than_qam16():
    clip_b, noclip_b, clipped_b = _lr_clipping_errors("bpsk", 6.0)
    assert clipped_b > 0
    # removing the clip step measurably degrades BPSK
    assert noclip_b >= 1.5 * clip_b
    clip_q, noclip_q, _ = _lr_clipping_errors("qam16", 16.0)
    rel_b = (noclip_b - clip_b) / clip_b
    rel_q = (noclip_q - clip_q) / clip_q
    # the gain from clipping shrinks with constellation order
    assert rel_q < rel_b


def test_lr_zf_beats_plain_zf_on_sm():
    cfg = SystemConfig(4, 4, (20.0,), 31)
    zf = ber_curve("sm", "qam4", "zf", cfg, 12500)[0]
    lr = ber_curve("sm", "qam4", "lr_zf", cfg, 12500)[0]
    assert zf.total_bits == 100000
    assert lr.bit_errors < zf.bit_errors


def _crossing_db(points, target):
    xs = np.array([p.snr_db for p in points])
    ys = np.array([p.ber for p in points])
    keep = ys > 0
    xs, ys = xs[keep], np.log10(ys[keep])
    t = np.log10(target)
    for i in range(len(xs) - 1):
        if ys[i] >= t >= ys[i + 1]:
            return xs[i] + (t - ys[i]) * (xs[i + 1] - xs[i]) / (ys[i + 1] - ys[i])
    raise AssertionError(f"curve never crosses {target}")


def test_lr_zf_slope_parallel_to_ml():
    # 4x4 stacked code: the LR-ZF curve must fall with (nearly) the ML slope
    cfg = SystemConfig(4, 4, tuple(float(s) for s in range(0, 17, 2)), 43)
    ml = ber_curve("stacked_ostbc", "qam4", "ml", cfg, 120000)
    lr = ber_curve("stacked_ostbc", "qam4", "lr_zf", cfg, 120000)
    span_ml = _crossing_db(ml, 1e-4) - _crossing_db(ml, 1e-2)
    span_lr = _crossing_db(lr, 1e-4) - _crossing_db(lr, 1e-2)
    slope_ml, slope_lr = 2.0 / span_ml, 2.0 / span_lr
    assert (slope_ml - slope_lr) / slope_ml < 0.20
