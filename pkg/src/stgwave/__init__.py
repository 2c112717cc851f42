"""Two-grid compact difference solver for a variable-exponent nonlinear
diffusion-wave equation on rectangles."""

from .errors import (ConfigurationError, DomainError, NewtonDivergenceError,
                     NumericalError, SolverError, StgWaveError, UsageError)
from .exponent import (ExponentSchedule, KernelTable, alpha_eval, build_kernel_table,
                       compute_g, compute_g_integral, kernel_eval)
from .harness import (StudyConfig, bench_compare, run_cli, two_mesh_spatial,
                      two_mesh_temporal)
from .mesh import (Grid2D, GridFunction, apply_compact_A, apply_lambda, inner_product,
                   norm_A, norm_inf, norm_l2, read_csv, unit_square, write_csv)
from .piweights import (ConvolutionWeights, PIWeightRow, apply_averaged_pi,
                        averaged_pi_energy, build_pi_row, lambda_weight)
from .spline import (SplineCoeffs1D, cubic_spline_moments, prolongate_bicubic,
                     spline_eval)
from .stencilsolve import StencilMatrix, assemble, solve
from .stepper import (CASE_I, CASE_II, ZERO, NonlinearTerm, ProblemInstance, SchemeRun,
                      example_problem, linear_term, run_standard, run_stg,
                      step_fine_linearized, step_nonlinear)

__version__ = "0.1.0"
