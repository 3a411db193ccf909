"""Fixed-magnetization Ising lattice gas in a slowly varying field.

A desk-scale laboratory: thermodynamic potentials with interchangeable
backends, optimal mesoscopic magnetization profiles, an exactly solvable
Gaussian effective-interface chain with its Ornstein-Uhlenbeck scaling
window, a canonical spin-exchange Monte Carlo sampler, and a
gravity-modified Wulff droplet optimizer.
"""

__version__ = "0.1.0"

from .lattice import ExplicitField, FieldSpec, GravitationalField, LatticeGeometry
from .thermo import Exact1D, MeanField, Tabulated, ThermoBackend
from .profiles import (
    ContinuumProfile,
    MesoProfile,
    ProfileSolution,
    continuum_gravity_profile,
    mean_magnetization_at_shift,
    optimal_profile,
    psi,
    random_compatible_profile,
    solve_hbar,
)
from .gchain import (
    BridgeScaling,
    CovarianceKernel,
    GaussianChain,
    WindowScaling,
    area_covariances,
    canonical_covariance_agreement,
    conditioned_covariance,
    covariance,
    covariance_bounds_check,
    gradient_moment_check,
    nu,
    ou_covariance,
    rescaled_covariance,
    sample,
)
from .mc import (
    Boundary,
    CanonicalSampler,
    GrandCanonicalSampler,
    SpinConfiguration,
    coarse_grain,
    concentration_distance,
    energy,
    interface_height_estimate,
    layered_configuration,
    quantize_magnetization,
    random_configuration,
    snapshot,
    tabulate_isotherm,
)
from .droplet import (
    DropletShape,
    SurfaceTension,
    droplet_energy,
    minimize_droplet,
    phase_fraction,
    wulff_shape,
)

__all__ = [name for name in dir() if not name.startswith("_")]
