"""Rate analysis and detection simulation for stacked space-time block codes.

The package splits into a small set of layers:

* ``numerics``: special functions and stable determinant/eigen helpers
* ``channel``: system configuration and reproducible per-trial randomness
* ``constellations`` / ``stcodes``: modulation, code constructions, and the
  equivalent linear models used everywhere else
* ``inforate``: instantaneous and ergodic rates, closed-form bounds
* ``lattice`` / ``detect``: LLL reduction and the detector family
* ``simlab``: spec-driven experiments, the BER engine, CSV output, CLI
"""

from . import (
    channel,
    constellations,
    detect,
    inforate,
    lattice,
    numerics,
    simlab,
    stcodes,
)
from .errors import StcsimError

__version__ = "0.1.0"

__all__ = [
    "StcsimError",
    "__version__",
    "channel",
    "constellations",
    "detect",
    "inforate",
    "lattice",
    "numerics",
    "simlab",
    "stcodes",
]
