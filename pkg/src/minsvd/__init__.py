"""Smallest singular triplets of tall matrices by randomized-preconditioned LOBPCG."""

__version__ = "0.1.0"

from .core import EPS, UNIT_ROUNDOFF, LinearOperator, SvdResult, adjoint_matvec, aslinearoperator, dense_svd, matvec
from .errors import (
    ConvergenceError, DimensionError, HypothesisError, MatrixMarketError, MinSvdError, NonFiniteError,
)
from .mmio import read_matrix_market, write_matrix_market
from .sketch import DistortionReport, SparseStackEmbedding, build_sparsestack, empirical_distortion, sketch_apply
from .precond import Preconditioner, build_preconditioner, precond_apply, sketch_and_solve_init
from .solver import (
    BlockResult, ConvergenceRecord, SolveResult, SolverOptions, Truth, lobpcg_step, psd_step,
    rlobpcg_block, rlobpcg_single,
)
from .theory import RateParameters, angle_bounds, gamma_from_spectrum, iteration_estimate, predicted_rate
from .baselines import PrecondKind, diagonal_scaling, lanczos_gk, lobpcg_generic
from .matgen import PRESETS, SpectrumSpec, SyntheticProblem, preset, spectrum, synth
from .rational import (
    BarycentricRational, LawsonState, RealifiedOperator, aaa_fit, eval_barycentric, lawson_refine, realify,
)
