"""Gray-labeled constellations with unit average power.

Square QAM is built as a product of two Gray-coded PAM axes with levels at
odd multiples of C/2, C = sqrt(6/(M-1)); the first half of a symbol label is
the in-phase bits, the second half the quadrature bits. BPSK is kept as a
real constellation (one real dimension) so the lattice detectors can treat
it as PAM with C = 2: the points +-1 then sit on C(Z + 1/2) exactly like the
QAM axis levels.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, LengthError

_NAMES = ("bpsk", "qam4", "qam16")


@dataclass(frozen=True, eq=False)
class Constellation:
    name: str
    points: np.ndarray        # (M,) complex
    labels: np.ndarray        # (M, bits_per_symbol) uint8, Gray
    bits_per_symbol: int
    scale: float              # lattice scale C
    pam_levels: np.ndarray    # (side,) ascending per-axis levels
    is_real: bool             # True for BPSK (one real dimension)
    side: int
    _code_to_index: np.ndarray

    @property
    def order(self):
        return len(self.points)


def _gray(k):
    return k ^ (k >> 1)


def _axis_labels(side):
    bits = int(np.log2(side))
    out = np.zeros((side, bits), dtype=np.uint8)
    for k in range(side):
        g = _gray(k)
        for b in range(bits):
            out[k, b] = (g >> (bits - 1 - b)) & 1
    return out


def make_constellation(name):
    """Build one of the supported constellations: 'bpsk', 'qam4', 'qam16'."""
    name = name.lower()
    if name == "bpsk":
        points = np.array([1.0 + 0.0j, -1.0 + 0.0j])
        labels = np.array([[0], [1]], dtype=np.uint8)
        pam = np.array([-1.0, 1.0])
        const = Constellation(
            name=name, points=points, labels=labels, bits_per_symbol=1,
            scale=2.0, pam_levels=pam, is_real=True, side=2,
            _code_to_index=np.array([0, 1]),
        )
        return const
    if name not in _NAMES:
        raise DomainError(f"unknown constellation {name!r}; supported: {_NAMES}")
    m = {"qam4": 4, "qam16": 16}[name]
    side = int(np.sqrt(m))
    c = np.sqrt(6.0 / (m - 1))
    levels = (c / 2.0) * (2 * np.arange(side) - side + 1)
    axis = _axis_labels(side)
    points = np.empty(m, dtype=complex)
    labels = np.empty((m, 2 * axis.shape[1]), dtype=np.uint8)
    for i in range(side):
        for q in range(side):
            idx = i * side + q
            points[idx] = levels[i] + 1j * levels[q]
            labels[idx] = np.concatenate([axis[i], axis[q]])
    bits = 2 * axis.shape[1]
    weights = 1 << np.arange(bits - 1, -1, -1)
    code_to_index = np.empty(m, dtype=np.int64)
    code_to_index[labels @ weights] = np.arange(m)
    return Constellation(
        name=name, points=points, labels=labels, bits_per_symbol=bits,
        scale=float(c), pam_levels=levels, is_real=False, side=side,
        _code_to_index=code_to_index,
    )


def map_bits(bits, const):
    """Map a 0/1 sequence to constellation symbols (length must divide evenly)."""
    bits = np.asarray(bits)
    if bits.ndim != 1:
        raise LengthError(f"bits must be 1-d, got ndim={bits.ndim}")
    if bits.size % const.bits_per_symbol != 0:
        raise LengthError(
            f"bit count {bits.size} is not a multiple of {const.bits_per_symbol}"
        )
    if bits.size and not np.all((bits == 0) | (bits == 1)):
        raise DomainError("bits must be 0 or 1")
    b = const.bits_per_symbol
    codes = bits.reshape(-1, b).astype(np.int64) @ (1 << np.arange(b - 1, -1, -1))
    return const.points[const._code_to_index[codes]]


def demap_symbols(symbols, const):
    """Hard nearest-neighbor demap back to bits; exact inverse of map_bits."""
    symbols = np.asarray(symbols, dtype=complex).ravel()
    d2 = np.abs(symbols[:, None] - const.points[None, :]) ** 2
    idx = np.argmin(d2, axis=1)
    return const.labels[idx].reshape(-1)


def index_from_axis(const, i_idx, q_idx=None):
    """Point indices from per-axis level indices (ascending pam_levels order)."""
    i_idx = np.asarray(i_idx, dtype=np.int64)
    if const.is_real:
        # pam_levels are (-1, +1); points are (+1, -1)
        return 1 - i_idx
    if q_idx is None:
        raise DomainError("QAM needs both axis indices")
    return i_idx * const.side + np.asarray(q_idx, dtype=np.int64)
