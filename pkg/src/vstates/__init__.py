"""Uniformly rotating patches: linear theory, nonlinear functionals, continuation, dynamics."""

from .closed_forms import QuadratureRule, integrate_periodic
from .dynamics import Contour, Kernel, boundary_velocity, fit_rotation, integrate
from .functional import Problem, curvature_min, eval_F_disk, eval_F_ellipse, gateaux_fd
from .linearized import apply_DF, bifurcation_ratio, kernel_generator, omega_m, tri_coeffs
from .series import CosineSeries, SineSeries
from .solver import BranchPoint, ContinuationConfig, branch_switch, newton_correct, trace_branch

__version__ = "0.1.0"
