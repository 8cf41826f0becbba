"""Solvers for min-min and min-max problems with a first-order oracle in ``x``
and a zeroth-order oracle in ``y``."""

from .core import (FeasibleSet, InvalidDimension, InvalidParameter, MixedOracleError,
                   MixedOracleProblem, Mode, NumericalFailure, OracleLedger,
                   SmoothnessConstants, make_rng)
from .cutting_plane import DeltaSubgradient, VaidyaParams, vaidya_solve
from .zeroth_order import ArddConfig, ArddscConfig, ArddscDriver, ardd_run, arddsc_run
from .fgm import FgmConfig, InexactOracleSample, fgm_solve, make_inexact_oracle
from .catalyst import CatalystConfig, catalyst_run
from .approaches import (ApproachReport, LargeParams, solve_minmax_large,
                         solve_minmax_small, solve_minmin_small)
from .problems import GroundTruth, ProblemSpec, generate_problem

__version__ = "0.1.0"
