"""
Casimir force between absorbing slabs modelled as open quantum systems.

A 1+1 dimensional scalar field couples to slabs of damped quantum Brownian
oscillators. The package evaluates the bath kernels, the optical response of
the slabs and the resulting finite-temperature Casimir force by mutually
independent routes.
"""

from .environment import (
    Cutoff, EnvironmentSpec, ThermalState, damping_kernel_time,
    damping_laplace, dissipation_kernel, gamma_of_k, green_laplace,
    noise_kernel, spectral_density,
)
from .errors import (
    CasimirError, ConfigError, DomainError, QuadratureError, RootPolishError,
    SingularityError,
)
from .force import (
    ForceConfig, ForceResult, Route, asymptotic_check, force_closed,
    force_decomposed, force_lifshitz_T0, force_matsubara, force_semispace_real,
)
from .optics import (
    Geometry, MediumSpec, SlabOpticalState, cubic_roots_alpha3,
    interface_coeffs, kramers_kronig_real, permittivity,
    permittivity_imaginary_axis, refractive_index,
    refractive_index_imaginary_axis, slab_coeffs, susceptibility,
    two_slab_coeffs,
)
from .quadrature import QuadratureSettings, integrate_semiinfinite, sum_truncated

__version__ = "0.1.0"
