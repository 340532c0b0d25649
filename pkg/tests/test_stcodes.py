"""Code constructions, equivalent channel models, and the quasi-orthogonal split.

The equivalent models are held to brute-force simulation of the physical
block transmission Y = G H^T + N: same noise realization in, same metric
(and hence the same ML decision) out.
"""

import numpy as np
import pytest

from stcsim.constellations import make_constellation
from stcsim.detect import candidate_set, ml_detect
from stcsim.errors import DomainError, ShapeError, SingularError
from stcsim.stcodes import (
    CodeScheme,
    QstbcDecomposition,
    encode_alamouti,
    encode_qstbc4,
    encode_sm,
    encode_stacked,
    equivalent_channel_qstbc,
    equivalent_channel_stacked,
    make_scheme,
    qstbc_decompose,
    qstbc_subsystem_outputs,
    realify,
    realify_bpsk,
    realify_vector,
    receive_to_equivalent_qstbc,
    receive_to_equivalent_stacked,
)


def _rand_h(rng, n_r, n_t):
    return np.sqrt(0.5) * (rng.standard_normal((n_r, n_t))
                           + 1j * rng.standard_normal((n_r, n_t)))


def test_make_scheme_rates():
    assert make_scheme("alamouti", 2) == CodeScheme("alamouti", 2, 2, 2)
    assert make_scheme("alamouti", 2).rate == 1.0
    assert make_scheme("stacked_ostbc", 4).rate == 2.0
    assert make_scheme("stacked_ostbc", 8).rate == 4.0
    assert make_scheme("qstbc4", 4).rate == 1.0
    assert make_scheme("sm", 3).rate == 3.0


def test_make_scheme_errors():
    with pytest.raises(DomainError):
        make_scheme("alamouti", 4)
    with pytest.raises(DomainError):
        make_scheme("stacked_ostbc", 3)
    with pytest.raises(DomainError):
        make_scheme("qstbc4", 2)
    with pytest.raises(DomainError):
        make_scheme("ostbc", 2)


def test_encode_alamouti_example():
    g = encode_alamouti(np.array([1.0, 1j]))
    np.testing.assert_array_equal(g, np.array([[1.0, 1j], [-1j, -1.0]]))
    np.testing.assert_array_equal(encode_alamouti(np.zeros(2)), np.zeros((2, 2)))


def test_encode_alamouti_orthogonal_columns():
    rng = np.random.default_rng(7)
    for _ in range(20):
        x = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        g = encode_alamouti(x)
        gram = g.conj().T @ g
        e = np.sum(np.abs(x) ** 2)
        np.testing.assert_allclose(gram, e * np.eye(2), atol=1e-12)


def test_encode_stacked_four_antennas():
    x = np.array([1.0 + 2j, 3.0, -1j, 0.5 - 0.5j])
    g = encode_stacked(x, 4)
    c = np.conj
    want = np.array([
        [x[0], x[1], x[2], x[3]],
        [c(x[1]), -c(x[0]), c(x[3]), -c(x[2])],
    ])
    np.testing.assert_array_equal(g, want)


def test_encode_stacked_reduces_to_alamouti():
    x = np.array([0.3 + 1j, -2.0 + 0.1j])
    np.testing.assert_array_equal(encode_stacked(x, 2), encode_alamouti(x))


def test_encode_stacked_unit_symbol_power():
    rng = np.random.default_rng(8)
    x = np.exp(2j * np.pi * rng.random(6))
    g = encode_stacked(x, 6)
    assert g.shape == (2, 6)
    np.testing.assert_allclose(np.abs(g), np.ones((2, 6)), atol=1e-15)
    with pytest.raises(DomainError):
        encode_stacked(x, 5)
    with pytest.raises(ShapeError):
        encode_stacked(x[:4], 6)


def test_encode_qstbc4_basis_vector():
    g = encode_qstbc4(np.array([1.0, 0.0, 0.0, 0.0]))
    want = np.array([
        [1.0, 0.0, 0.0, 0.0],
        [0.0, -1.0, 0.0, 0.0],
        [0.0, 0.0, -1.0, 0.0],
        [0.0, 0.0, 0.0, -1.0],
    ])
    np.testing.assert_array_equal(g, want)
    np.testing.assert_array_equal(encode_qstbc4(np.zeros(4)), np.zeros((4, 4)))


def test_encode_sm():
    x = np.array([1.0, 1j, -1.0])
    np.testing.assert_array_equal(encode_sm(x, 3), x.reshape(1, 3))


def test_equivalent_channel_stacked_example():
    hp = equivalent_channel_stacked(np.array([[1.0, 1j]]))
    np.testing.assert_array_equal(hp, np.array([[1.0, 1j], [1j, 1.0]]))
    np.testing.assert_allclose(hp.conj().T @ hp, 2.0 * np.eye(2), atol=1e-15)


def test_equivalent_channel_stacked_dsttd_pattern():
    # n_t=4: per receive antenna, rows (h1 h2 h3 h4) and (-h2* h1* -h4* h3*)
    rng = np.random.default_rng(9)
    h = _rand_h(rng, 2, 4)
    hp = equivalent_channel_stacked(h)
    assert hp.shape == (4, 4)
    c = np.conj
    for i in range(2):
        np.testing.assert_array_equal(hp[2 * i], h[i])
        want = [-c(h[i, 1]), c(h[i, 0]), -c(h[i, 3]), c(h[i, 2])]
        np.testing.assert_array_equal(hp[2 * i + 1], want)
    with pytest.raises(ShapeError):
        equivalent_channel_stacked(_rand_h(rng, 2, 3))


def test_stacked_single_rx_rows_are_orthogonal():
    # H'_1 (H'_1)^H = lambda I_2, the identity behind the capacity result
    rng = np.random.default_rng(10)
    for n_t in (2, 4, 6, 8):
        h = _rand_h(rng, 1, n_t)
        hp = equivalent_channel_stacked(h)
        lam = np.sum(np.abs(h) ** 2)
        np.testing.assert_allclose(hp @ hp.conj().T, lam * np.eye(2), atol=1e-12)


def test_stacked_model_matches_direct_simulation():
    rng = np.random.default_rng(11)
    for n_t, n_r in ((2, 1), (4, 2), (6, 3)):
        h = _rand_h(rng, n_r, n_t)
        x = rng.standard_normal(n_t) + 1j * rng.standard_normal(n_t)
        n = rng.standard_normal((2, n_r)) + 1j * rng.standard_normal((2, n_r))
        y = encode_stacked(x, n_t) @ h.T + n
        got = receive_to_equivalent_stacked(y)
        want = equivalent_channel_stacked(h) @ x + receive_to_equivalent_stacked(n)
        np.testing.assert_allclose(got, want, atol=1e-12)
        # the receive map is an isometry, so metrics carry over unchanged
        assert np.linalg.norm(receive_to_equivalent_stacked(n)) == pytest.approx(
            np.linalg.norm(n))


def test_equivalent_channel_qstbc_basis_channel():
    hq = equivalent_channel_qstbc(np.array([[1.0, 0.0, 0.0, 0.0]]))
    np.testing.assert_array_equal(hq, np.eye(4))
    np.testing.assert_array_equal(
        equivalent_channel_qstbc(np.zeros((2, 4))), np.zeros((8, 4)))


def test_qstbc_column_norms_equal_total_energy():
    rng = np.random.default_rng(12)
    for _ in range(10):
        h = _rand_h(rng, 2, 4)
        hq = equivalent_channel_qstbc(h)
        lam = np.sum(np.abs(h) ** 2)
        np.testing.assert_allclose(np.sum(np.abs(hq) ** 2, axis=0),
                                   lam * np.ones(4), rtol=1e-12)


def test_qstbc_model_matches_direct_simulation():
    rng = np.random.default_rng(13)
    for n_r in (1, 2):
        h = _rand_h(rng, n_r, 4)
        x = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        n = rng.standard_normal((4, n_r)) + 1j * rng.standard_normal((4, n_r))
        y = encode_qstbc4(x) @ h.T + n
        got = receive_to_equivalent_qstbc(y)
        want = equivalent_channel_qstbc(h) @ x + receive_to_equivalent_qstbc(n)
        np.testing.assert_allclose(got, want, atol=1e-12)


def test_receive_map_shape_errors():
    with pytest.raises(ShapeError):
        receive_to_equivalent_stacked(np.zeros((3, 2), dtype=complex))
    with pytest.raises(ShapeError):
        receive_to_equivalent_qstbc(np.zeros((2, 2), dtype=complex))


def test_qstbc_decompose_basis_channel():
    dec = qstbc_decompose(np.array([[1.0, 0.0, 0.0, 0.0]]))
    assert dec.lam == 1.0 and dec.alpha == 0.0
    assert dec.beta == pytest.approx(1 / np.sqrt(2))
    assert dec.epsilon == pytest.approx(1 / np.sqrt(2))
    b = dec.beta
    np.testing.assert_allclose(dec.h_eq, [[b, 1j * b], [b, -1j * b]])


def test_qstbc_decompose_zero_channel():
    dec = qstbc_decompose(np.zeros((1, 4)))
    assert dec.lam == 0.0 and dec.alpha == 0.0
    assert dec.beta == 0.0 and dec.epsilon == 0.0
    np.testing.assert_array_equal(dec.h_eq, np.zeros((2, 2)))
    with pytest.raises(SingularError):
        qstbc_subsystem_outputs(np.zeros((1, 4)), np.zeros(4))


def test_qstbc_decompose_energy_split():
    rng = np.random.default_rng(14)
    for _ in range(50):
        h = _rand_h(rng, 2, 4)
        dec = qstbc_decompose(h)
        assert dec.beta**2 + dec.epsilon**2 == pytest.approx(dec.lam, rel=1e-12)
        assert isinstance(dec, QstbcDecomposition)


def test_qstbc_self_interference_rarely_vanishes():
    rng = np.random.default_rng(13)
    hits = 0
    for _ in range(10000):
        h = _rand_h(rng, 2, 4)
        if abs(qstbc_decompose(h).alpha) < 1e-6:
            hits += 1
    assert hits == 0


def test_qstbc_subsystem_ml_equals_joint_ml():
    # the 4-dim exhaustive search over the equivalent model must decouple
    # into the two 2x2 subsystems with identical decisions
    const = make_constellation("qam4")
    points, _ = candidate_set(const, 4)
    rng = np.random.default_rng(15)
    for _ in range(30):
        h = _rand_h(rng, 1, 4)
        x = points[:, rng.integers(points.shape[1])]
        noise = 0.4 * (rng.standard_normal(4) + 1j * rng.standard_normal(4))
        y_q = equivalent_channel_qstbc(h) @ x + noise
        joint = ml_detect(y_q, equivalent_channel_qstbc(h), const).symbols
        y_odd, y_even = qstbc_subsystem_outputs(h, y_q)
        dec = qstbc_decompose(h)
        odd = ml_detect(y_odd, dec.h_eq, const).symbols    # decides (x1, x3)
        even = ml_detect(y_even, dec.h_eq, const).symbols  # decides (x4, x2)
        assembled = np.array([odd[0], even[1], odd[1], even[0]])
        np.testing.assert_array_equal(assembled, joint)


def test_realify_examples():
    np.testing.assert_array_equal(realify(np.array([[1j]])),
                                  np.array([[0.0, -1.0], [1.0, 0.0]]))
    m = np.array([[1.0, 2.0], [3.0, 4.0]])
    want = np.block([[m, np.zeros((2, 2))], [np.zeros((2, 2)), m]])
    np.testing.assert_array_equal(realify(m), want)
    with pytest.raises(ShapeError):
        realify(np.ones(3))


def test_realify_action():
    rng = np.random.default_rng(16)
    for _ in range(20):
        m = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
        x = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        got = realify(m) @ realify_vector(x)
        np.testing.assert_allclose(got, realify_vector(m @ x), atol=1e-12)


def test_realify_bpsk_action():
    rng = np.random.default_rng(17)
    m = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    x = rng.choice([-1.0, 1.0], size=2)
    np.testing.assert_allclose(realify_bpsk(m) @ x, realify_vector(m @ x),
                               atol=1e-12)
    assert realify_bpsk(m).shape == (6, 2)


def _direct_ml(scheme_kind, n_t, h, y_block, const):
    """Brute-force ML on the physical model Y = G(x) H^T + N."""
    encoders = {
        "alamouti": lambda x: encode_alamouti(x),
        "stacked_ostbc": lambda x: encode_stacked(x, n_t),
        "qstbc4": encode_qstbc4,
        "sm": lambda x: encode_sm(x, n_t),
    }
    enc = encoders[scheme_kind]
    p = make_scheme(scheme_kind, n_t).symbols_per_block
    points, _ = candidate_set(const, p)
    metrics = [np.sum(np.abs(y_block - enc(points[:, c]) @ h.T) ** 2)
               for c in range(points.shape[1])]
    return points[:, int(np.argmin(metrics))]


@pytest.mark.parametrize("scheme_kind,n_t,n_r", [
    ("alamouti", 2, 1),
    ("stacked_ostbc", 4, 2),
    ("qstbc4", 4, 1),
    ("sm", 2, 2),
])
def test_equivalent_model_ml_matches_direct_model(scheme_kind, n_t, n_r):
    const = make_constellation("qam4")
    scheme = make_scheme(scheme_kind, n_t)
    points, _ = candidate_set(const, scheme.symbols_per_block)
    receive = {
        "alamouti": receive_to_equivalent_stacked,
        "stacked_ostbc": receive_to_equivalent_stacked,
        "qstbc4": receive_to_equivalent_qstbc,
        "sm": lambda y: y[0, :],
    }[scheme_kind]
    equiv = {
        "alamouti": equivalent_channel_stacked,
        "stacked_ostbc": equivalent_channel_stacked,
        "qstbc4": equivalent_channel_qstbc,
        "sm": lambda h: h,
    }[scheme_kind]
    rng = np.random.default_rng(18)
    for _ in range(50):
        h = _rand_h(rng, n_r, n_t)
        x = points[:, rng.integers(points.shape[1])]
        g = {
            "alamouti": lambda v: encode_alamouti(v),
            "stacked_ostbc": lambda v: encode_stacked(v, n_t),
            "qstbc4": encode_qstbc4,
            "sm": lambda v: encode_sm(v, n_t),
        }[scheme_kind](x)
        n = 0.35 * (rng.standard_normal((scheme.block_len, n_r))
                    + 1j * rng.standard_normal((scheme.block_len, n_r)))
        y_block = g @ h.T + n
        direct = _direct_ml(scheme_kind, n_t, h, y_block, const)
        equivalent = ml_detect(receive(y_block), equiv(h), const).symbols
        np.testing.assert_array_equal(direct, equivalent)
