"""Space-time block code constructions and their equivalent channel models.

Transmit convention: a codeword G has shape (T, n_t) and the received block
is Y = G H^T + N with H of shape (n_r, n_t), so column i of Y is what receive
antenna i sees over the T symbol periods.

The equivalent models below rewrite the linear part of each scheme as
y' = H' x + n' where x is the symbol vector and y' is a conjugation/reordering
of the entries of Y. The reordering is an isometry, so Euclidean metrics (and
hence ML decisions) computed in the equivalent domain match the direct model
exactly, noise realization for noise realization.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError, SingularError

SCHEME_KINDS = ("alamouti", "stacked_ostbc", "qstbc4", "sm")


@dataclass(frozen=True)
class CodeScheme:
    """A code family instance: antennas, block length T, symbols per block."""

    kind: str
    n_t: int
    block_len: int
    symbols_per_block: int

    @property
    def rate(self):
        return self.symbols_per_block / self.block_len


def make_scheme(kind, n_t):
    kind = kind.lower()
    if kind == "alamouti":
        if n_t != 2:
            raise DomainError("alamouti needs n_t = 2")
        return CodeScheme(kind, 2, 2, 2)
    if kind == "stacked_ostbc":
        if n_t < 2 or n_t % 2 != 0:
            raise DomainError(f"stacked_ostbc needs even n_t >= 2, got {n_t}")
        return CodeScheme(kind, n_t, 2, n_t)
    if kind == "qstbc4":
        if n_t != 4:
            raise DomainError("qstbc4 needs n_t = 4")
        return CodeScheme(kind, 4, 4, 4)
    if kind == "sm":
        if n_t < 1:
            raise DomainError(f"sm needs n_t >= 1, got {n_t}")
        return CodeScheme(kind, n_t, 1, n_t)
    raise DomainError(f"unknown scheme kind {kind!r}; supported: {SCHEME_KINDS}")


def _symbol_vector(x, expect):
    x = np.asarray(x, dtype=complex).ravel()
    if x.size != expect:
        raise ShapeError(f"expected {expect} symbols, got {x.size}")
    return x


def encode_alamouti(x):
    """2x2 orthogonal block: rows (x1, x2) and (x2*, -x1*)."""
    x = _symbol_vector(x, 2)
    return np.array([[x[0], x[1]], [np.conj(x[1]), -np.conj(x[0])]])


def encode_stacked(x, n_t):
    """Rate-n_t/2 stacked code: n_t/2 Alamouti blocks side by side, T = 2."""
    if n_t % 2 != 0 or n_t < 2:
        raise DomainError(f"stacked encoding needs even n_t >= 2, got {n_t}")
    x = _symbol_vector(x, n_t)
    g = np.empty((2, n_t), dtype=complex)
    for k in range(0, n_t, 2):
        g[:, k:k + 2] = encode_alamouti(x[k:k + 2])
    return g


def encode_qstbc4(x):
    """Quasi-orthogonal 4x4 block (rate 1, T = 4)."""
    x = _symbol_vector(x, 4)
    x1, x2, x3, x4 = x
    c = np.conj
    return np.array([
        [x1, x2, x3, x4],
        [c(x2), -c(x1), c(x4), -c(x3)],
        [x3, -x4, -x1, x2],
        [c(x4), c(x3), -c(x2), -c(x1)],
    ])


def encode_sm(x, n_t):
    """Spatial multiplexing: one symbol per antenna, T = 1."""
    x = _symbol_vector(x, n_t)
    return x.reshape(1, n_t)


def _check_channel(h, n_t=None, even=False):
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2:
        raise ShapeError(f"channel must be 2-d, got ndim={h.ndim}")
    if n_t is not None and h.shape[1] != n_t:
        raise ShapeError(f"channel must have {n_t} columns, got {h.shape[1]}")
    if even and h.shape[1] % 2 != 0:
        raise ShapeError(f"channel needs an even number of columns, got {h.shape[1]}")
    return h


def equivalent_channel_stacked(h):
    """Equivalent channel H' of the stacked code, shape (2 n_r, n_t).

    Rows 2i, 2i+1 hold, for receive antenna i, the Alamouti-block pattern
    [[h_ij, h_i(j+1)], [-h*_i(j+1), h*_ij]] for each odd column j. Odd rows of
    the result equal H itself; even rows are H* J with J the block rotation
    (Proposition-1 structure), which the tests assert.
    """
    h = _check_channel(h, even=True)
    n_r, n_t = h.shape
    out = np.empty((2 * n_r, n_t), dtype=complex)
    out[0::2, :] = h
    out[1::2, 0::2] = -np.conj(h[:, 1::2])
    out[1::2, 1::2] = np.conj(h[:, 0::2])
    return out


def receive_to_equivalent_stacked(y):
    """Map a received block Y (2 x n_r) to the equivalent-model vector y'."""
    y = np.asarray(y, dtype=complex)
    if y.ndim != 2 or y.shape[0] != 2:
        raise ShapeError(f"received block must be 2 x n_r, got {y.shape}")
    out = np.empty(2 * y.shape[1], dtype=complex)
    out[0::2] = y[0, :]
    out[1::2] = np.conj(y[1, :])
    return out


def equivalent_channel_qstbc(h):
    """Equivalent channel H^Q of the 4-antenna quasi-orthogonal code, (4 n_r, 4)."""
    h = _check_channel(h, n_t=4)
    n_r = h.shape[0]
    out = np.empty((4 * n_r, 4), dtype=complex)
    c = np.conj
    for i in range(n_r):
        h1, h2, h3, h4 = h[i]
        out[4 * i:4 * i + 4] = [
            [h1, h2, h3, h4],
            [-c(h2), c(h1), -c(h4), c(h3)],
            [-h3, h4, h1, -h2],
            [-c(h4), -c(h3), c(h2), c(h1)],
        ]
    return out


def receive_to_equivalent_qstbc(y):
    """Map a received block Y (4 x n_r) to the equivalent-model vector y^Q."""
    y = np.asarray(y, dtype=complex)
    if y.ndim != 2 or y.shape[0] != 4:
        raise ShapeError(f"received block must be 4 x n_r, got {y.shape}")
    n_r = y.shape[1]
    out = np.empty(4 * n_r, dtype=complex)
    out[0::4] = y[0, :]
    out[1::4] = np.conj(y[1, :])
    out[2::4] = y[2, :]
    out[3::4] = np.conj(y[3, :])
    return out


@dataclass(frozen=True)
class QstbcDecomposition:
    """Scalars of the quasi-orthogonal Gram and the decoupled 2x2 channel."""

    lam: float
    alpha: float
    beta: float
    epsilon: float
    h_eq: np.ndarray  # [[beta, j beta], [epsilon, -j epsilon]]


def qstbc_decompose(h):
    """Decompose the 4-antenna quasi-orthogonal channel into two 2x2 subsystems.

    lam is the total channel energy, alpha the self-interference scalar; the
    returned 2x2 channel carries the odd symbols (x1, x3) and, reused as-is,
    the even symbols in the order (x4, x2).
    """
    h = _check_channel(h, n_t=4)
    lam = float(np.sum(np.abs(h) ** 2))
    alpha = float(np.sum(2.0 * np.imag(
        np.conj(h[:, 0]) * h[:, 2] + np.conj(h[:, 3]) * h[:, 1]
    )))
    beta = np.sqrt(max((lam + alpha) / 2.0, 0.0))
    eps = np.sqrt(max((lam - alpha) / 2.0, 0.0))
    h_eq = np.array([[beta, 1j * beta], [eps, -1j * eps]])
    return QstbcDecomposition(lam=lam, alpha=alpha, beta=beta, epsilon=eps, h_eq=h_eq)


def qstbc_subsystem_outputs(h, y_q, dec=None):
    """Matched-filter + whiten a received y^Q into the two 2x2 subsystems.

    Returns (y_odd, y_even) with y_odd = h_eq (x1, x3) + w and
    y_even = h_eq (x4, x2) + w', both with the same white-noise variance as
    the entries of y^Q.
    """
    if dec is None:
        dec = qstbc_decompose(h)
    if dec.beta * dec.epsilon <= 1e-300:
        raise SingularError("quasi-orthogonal subsystem channel is singular")
    hq = equivalent_channel_qstbc(h)
    z = hq.conj().T @ np.asarray(y_q, dtype=complex).ravel()
    # inv(h_eq^H) worked out explicitly: h_eq^H = [[b, e], [-jb, je]].
    b, e = dec.beta, dec.epsilon
    inv_hh = np.array([[1.0 / (2 * b), 1j / (2 * b)], [1.0 / (2 * e), -1j / (2 * e)]])
    y_odd = inv_hh @ z[[0, 2]]
    y_even = inv_hh @ z[[3, 1]]
    return y_odd, y_even


def realify(m):
    """Real 2r x 2c image [[Re, -Im], [Im, Re]] acting on stacked (Re x; Im x)."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2:
        raise ShapeError(f"realify expects a matrix, got ndim={m.ndim}")
    return np.block([[m.real, -m.imag], [m.imag, m.real]])


def realify_vector(v):
    v = np.asarray(v, dtype=complex).ravel()
    return np.concatenate([v.real, v.imag])


def realify_bpsk(m):
    """Real model for purely real symbol vectors: [Re H; Im H], shape (2r, c)."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2:
        raise ShapeError(f"realify_bpsk expects a matrix, got ndim={m.ndim}")
    return np.vstack([m.real, m.imag])
