"""Electrostatic interaction of rigid charge bodies: energies, potentials, minimization."""

from .charge_model import (ChargeBody, GaussianComponent, GridDensity, Nucleus, density_at,
                           sample_gaussians_on_grid, total_charge, total_electron_count, transform_body)
from .coulomb import (EnergyBreakdown, PotentialGrid, QuadratureSpec, bilinear_form, density_density_energy,
                      density_nuclei_energy, gaussian_gaussian_energy, gaussian_point_energy, interaction_energy,
                      point_point_energy, potential_at, potential_grid)
from .errors import (DomainError, InputError, InvalidArgumentError, OptimizationError, ResourceError,
                     RigidQError, SingularityError)
from .field import (CompositeField, LinearField, PointChargeField, SampledGridField, UniformField, field_energy,
                    neutrality_report, potential_value)
from .geometry import (Bounds, EulerAngles, RigidPlacement, apply_placement, compose, inverse,
                       params_to_placement, placement_to_params, rotation_matrix, sample_placement)
from .optimize import (InvalidStartError, OptimizationResult, OptimizerConfig, ScanAxis, gradient, match_pairs,
                       minimize_local, minimize_multistart, objective, scan)

__version__ = "0.1.0"
