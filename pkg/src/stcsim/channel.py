"""System configuration, reproducible RNG streams, and channel/noise draws.

The Monte Carlo contract is counter-based: every random object is drawn from
a generator seeded by (seed, trial index, stream purpose, extra...), so any
trial can be regenerated in isolation and results do not depend on how trials
are split across workers.

Normalization: symbols have unit average power and the noise carries variance
n_t / rho per complex entry (rho = 10^(SNR_dB/10)), which gives receive SNR
rho and the familiar log2 det(I + rho/n_t H^H H) capacity expression.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# Stream purposes. Keep values stable: they are part of the reproducibility
# contract (a result CSV is only re-derivable if these do not move).
CHANNEL_STREAM = 0
NOISE_STREAM = 1
DATA_STREAM = 2


@dataclass(frozen=True)
class SystemConfig:
    """Antenna counts, SNR grid (dB), and the master seed for one experiment."""

    n_t: int
    n_r: int
    snr_db: tuple = (0.0,)
    seed: int = 0

    def __post_init__(self):
        if self.n_t < 1 or self.n_r < 1:
            raise DomainError(f"need n_t >= 1 and n_r >= 1, got ({self.n_t}, {self.n_r})")
        grid = tuple(float(s) for s in self.snr_db)
        if len(grid) == 0:
            raise DomainError("snr_db grid must be non-empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise DomainError("snr_db grid must be strictly ascending")
        object.__setattr__(self, "snr_db", grid)
        if not (0 <= int(self.seed) < 2**64):
            raise DomainError("seed must fit in 64 bits")

    @property
    def rho(self):
        """Linear SNR values for the grid."""
        return tuple(snr_to_rho(s) for s in self.snr_db)


def snr_to_rho(snr_db):
    return float(10.0 ** (snr_db / 10.0))


def stream(seed, trial_index, purpose, *extra):
    """Deterministic per-trial generator for one stream purpose.

    Distinct (trial_index, purpose, extra) tuples give statistically
    independent streams; identical tuples give identical streams.
    """
    if trial_index < 0:
        raise DomainError(f"trial_index must be >= 0, got {trial_index}")
    words = [int(seed), int(trial_index), int(purpose)] + [int(e) for e in extra]
    return np.random.default_rng(np.random.SeedSequence(words))


def draw_channel(cfg, trial_index):
    """One i.i.d. Rayleigh flat-fading matrix, shape (n_r, n_t), CN(0, 1) entries."""
    rng = stream(cfg.seed, trial_index, CHANNEL_STREAM)
    h = rng.standard_normal((cfg.n_r, cfg.n_t)) + 1j * rng.standard_normal((cfg.n_r, cfg.n_t))
    return h * np.sqrt(0.5)


def draw_noise(shape, snr_db, n_t, rng):
    """Complex AWGN with variance n_t / rho per entry.

    :param shape: output shape
    :param snr_db: SNR point in dB
    :param n_t: number of transmit antennas (sets the power normalization)
    :param rng: generator, typically stream(seed, trial, NOISE_STREAM)
    """
    if n_t < 1:
        raise DomainError(f"n_t must be >= 1, got {n_t}")
    sigma_dim = np.sqrt(n_t / (2.0 * snr_to_rho(snr_db)))
    n = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return sigma_dim * n


def draw_unit_noise(cfg, trial_index, shape):
    """The unit-variance-per-dimension noise block behind a trial's noise stream.

    Scaling this by sqrt(n_t / (2 rho)) reproduces draw_noise(shape, snr, n_t,
    stream(seed, trial, NOISE_STREAM)) bit for bit, which is how simulation
    sweeps reuse one noise realization across the whole SNR grid.
    """
    rng = stream(cfg.seed, trial_index, NOISE_STREAM)
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def noise_sigma(snr_db, n_t):
    """Per-real-dimension noise standard deviation sqrt(n_t / (2 rho))."""
    if n_t < 1:
        raise DomainError(f"n_t must be >= 1, got {n_t}")
    return float(np.sqrt(n_t / (2.0 * snr_to_rho(snr_db))))


def draw_bits(cfg, trial_index, count):
    """Equiprobable data bits for one trial, shape (count,), uint8."""
    rng = stream(cfg.seed, trial_index, DATA_STREAM)
    return rng.integers(0, 2, size=count, dtype=np.uint8)
