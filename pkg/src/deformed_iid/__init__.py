"""Deterministic and Monte Carlo tools for deformed non-Hermitian random matrices ``A + X``."""

__version__ = "0.1.0"

from .brown import (BrownError, EdgePoint, SpecEps, brown_field, classify_edge, density, edge_point, f_A,
                    find_edge, grad_f, hessian_f, moments, sigma_f, sigma_f_closed, spec_eps, theta)
from .ensembles import (DeformedModel, Deformation, build_deformation, eigenvalues, hermitize, ou_transition,
                        sample_iid, singular_values, trial_seed)
from .flows import (CharTrajectory, PathSpec, ZigZagSchedule, characteristic_closed_form, characteristic_flow,
                    complex_path, real_path, scaling_params, zigzag_schedule)
from .mde import MdeSolution, log_potential, m_matrix, solve_at, solve_v

__all__ = [n for n in dir() if not n.startswith("_")]
