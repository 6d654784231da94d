"""Einstein-product tensor Krylov solvers for multiquadric RBF collocation.

The package solves the dense, severely ill-conditioned tensor linear systems
that arise when a 3D PDE is collocated with multiquadric radial basis
functions: global GMRES and global LSQR over the 3-mode Einstein product, with
per-cycle Tikhonov regularization (GCV or discrepancy-principle parameter
choice), and an optional hierarchical ACA-compressed operator for large point
sets.
"""

from .collocation import (PointSet, gen_cube, gen_sphere, load_points,
                          save_points)
from .experiment import (ExperimentConfig, RunRecord, compute_relative_error,
                         parse_config, run_experiment, run_table)
from .hmatrix import (HOperator, aca, admissible, assemble_h,
                      build_cluster_tree, default_leaf_threshold, h_apply,
                      h_apply_transpose)
from .krylov import (SolveReport, SolverConfig, etga, ggkb, gmres_tikhonov,
                     lsqr_tikhonov, solve_reduced_gmres, solve_reduced_lsqr)
from .rbf_operator import (ExactSolution, HelmholtzProblem, MQKernel,
                           assemble_A, assemble_F, assemble_H, evaluate_U,
                           exact_field, mq_eval, mq_helmholtz_row)
from .regularization import (GcvSpectrum, discrepancy_select, gcv_minimize,
                             gcv_value, spectrum_of)
from .tensor_core import (Operator6, Shape3, SliceStack, einstein_apply,
                          einstein_apply_transpose, fro_norm, inner,
                          mode4_matmul, mode4_vecmul)

__version__ = "0.1.0"
