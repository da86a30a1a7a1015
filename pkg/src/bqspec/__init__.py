"""Spectral toolkit for the third-order periodic operator of the Boussinesq
Lax pair.

The pipeline, in the order the modules build on each other:

    periodic_fn      coefficient pairs u = (p, q) as zero-mean trig series
    ode_engine       batched fixed-step integration, monodromy matrices
    floquet_surface  discriminant rho, spectral domains, branch points r_n^+-
    three_point      the 3-point Dirichlet problem on [0, 2], eigenvalues mu_n
    hill_side        reduction to a Hill equation with energy-dependent
                     potential; on-shell pair/Dirichlet data, gap coordinates
    spectral_map     the gap-coordinate map g, its forward and inverse
    boussinesq_flow  pseudospectral Boussinesq evolution, isospectral checks
    cli              bqspec spectrum / verify / invert / flow

Everything numerical is deterministic: fixed-step integrators, fixed search
schedules, no RNG.
"""

from .boussinesq_flow import (FlowState, energy, evolve, flow_state,
                              isospectral_check, momentum, rhs)
from .errors import (AmbiguousSelection, BallNormWarning, BlowUp,
                     CountMismatch, DomainError, JacobianSingular,
                     NoConvergence, NonFinite, NonRealData,
                     NormalizationFailure, PositivityFailure,
                     RealnessViolation, SpectralError)
from .floquet_surface import (BranchPoints, DiscriminantValue,
                              count_discriminant_zeros, discriminant,
                              locate_branch_points, multipliers, real_trace,
                              select_tau, z_center)
from .hill_side import (FloquetSolution, HillGapData, HillSpectra,
                        TransformedPotential, E_to_lam, floquet_solution,
                        gap_coordinates, hill_spectra, hill_window, lam_to_E,
                        potential_V, transform_residual, transform_solution)
from .ode_engine import (DEFAULT_STEPS, Monodromy2, Monodromy3,
                         integrate_third_order, monodromy2, monodromy3)
from .periodic_fn import (CoefficientPair, TrigSeries, apply_symmetry,
                          ball_norm, check_ball, dump_coefficients,
                          load_coefficients)
from .spectral_map import (GapDatum, SpectralData, coefficients_to_vector,
                           forward_map, invert_map, vector_to_coefficients)
from .three_point import (ThreePointEigen, containment_slack, eigenfunction,
                          locate_mu, three_point_determinant, trace_interval)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
