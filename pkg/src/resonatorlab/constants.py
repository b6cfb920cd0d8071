"""Physical constants used throughout the package.

All values come from scipy's CODATA table. No other module should define
its own copies; importing from here keeps the unit conventions in one place.
"""

from scipy.constants import (
    e as ELEMENTARY_CHARGE,  # C
    epsilon_0 as VACUUM_PERMITTIVITY,  # F/m
    h as PLANCK,  # J s
    hbar as HBAR,  # J s
)
from scipy.constants import physical_constants as _physical_constants

#: Superconducting magnetic flux quantum h/(2e) [Wb].
FLUX_QUANTUM = _physical_constants["mag. flux quantum"][0]

__all__ = [
    "ELEMENTARY_CHARGE",
    "VACUUM_PERMITTIVITY",
    "PLANCK",
    "HBAR",
    "FLUX_QUANTUM",
]
