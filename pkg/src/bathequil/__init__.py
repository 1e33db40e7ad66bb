"""Thermal equilibrium of harmonic systems coupled to harmonic baths.

Natural units ``hbar = k_B = m0 = omega0 = 1`` are used throughout.
"""

__version__ = "0.1.0"

from .bath import (
    BathKind,
    SpectralDensity,
    ThermalPoint,
    effective_coupling_closed,
    effective_coupling_integral,
    kernel_quadrature,
    kernel_series,
    power_spectrum,
    spectral_density,
)
from .errors import AccuracyError, BathEquilError, DomainError, ModelError, StabilityError
from .gaussian import (
    GaussianState,
    logarithmic_negativity,
    quadratic_moments,
    symplectic_eigenvalues,
    von_neumann_entropy,
)
from .matsubara import (
    OscillatorObservables,
    entropy_ratio,
    log_partition_ratio,
    oscillator_observables,
    q_variance,
    squeezing_delta,
)
