"""Array geometry and steering vectors for the BS ULA and the IRS planar array."""
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument

# Element spacing in wavelengths, fixed at half a wavelength.
SPACING = 0.5


@dataclass(frozen=True)
class ArrayGeometry:
    n_bs: int
    g_irs: int
    m_az: int
    m_el: int
    element_spacing_wavelengths: float = SPACING

    def __post_init__(self):
        for name in ("n_bs", "g_irs", "m_az", "m_el"):
            if int(getattr(self, name)) < 1:
                raise InvalidArgument(f"{name} must be >= 1")
        if self.element_spacing_wavelengths != SPACING:
            raise InvalidArgument("element spacing is fixed at 0.5 wavelengths")

    @property
    def m(self) -> int:
        """Elements per IRS unit."""
        return self.m_az * self.m_el

    @property
    def m_tot(self) -> int:
        """Reflecting elements summed over all IRS units."""
        return self.m * self.g_irs


def index_set(n: int) -> np.ndarray:
    """Centered element indices ``i - (n-1)/2`` for ``i = 0..n-1``."""
    n = int(n)
    if n < 1:
        raise InvalidArgument(f"array size must be >= 1, got {n}")
    return np.arange(n) - (n - 1) / 2.0


def ula_steering(spatial_freq: float, n: int) -> np.ndarray:
    """Unit-norm ULA response ``exp(-j 2 pi d/lambda * f * i) / sqrt(n)``."""
    if not np.isfinite(spatial_freq):
        raise InvalidArgument("spatial frequency must be finite")
    idx = index_set(n)
    return np.exp(-2j * np.pi * SPACING * spatial_freq * idx) / np.sqrt(len(idx))


def upa_steering(az_freq: float, el_freq: float, m_az: int, m_el: int) -> np.ndarray:
    """Planar-array response as the Kronecker product of azimuth and elevation ULAs.

    Entry ``p * m_el + q`` is the product of azimuth entry ``p`` and elevation
    entry ``q``.
    """
    if m_az < 1 or m_el < 1:
        raise InvalidArgument("planar array dimensions must be >= 1")
    return np.kron(ula_steering(az_freq, m_az), ula_steering(el_freq, m_el))


def angle_to_spatial_freq(angle_rad: float) -> float:
    return float(np.sin(angle_rad))
