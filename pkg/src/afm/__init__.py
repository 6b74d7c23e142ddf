"""Absorption-free discrimination of semi-transparent objects."""

from .amplitude import (
    DiscriminationPair,
    ObjectModel,
    bound_rhs,
    eta,
    format_complex,
    identity_gap,
    object_from_alpha,
    parse_complex,
)
from .engine import (
    INCONCLUSIVE,
    ISTEP,
    M1,
    M2,
    BoundReport,
    EngineError,
    PairTrace,
    Projective,
    Protocol,
    RunTrace,
    UnambiguousPair,
    Unitary,
    amplify,
    elitzur_vaidman_preset,
    run,
    run_pair,
    verify_bound,
)
from .fabry_perot import FPConfig, FPReport, PlateauError, closed_form_fL, fp_discrimination_report, simulate_fp
from .optimizer import OptimizerConfig, OptimizerReport, search_lambda
from .zeno import NoRootError, ZenoSchedule, build_zeno_complex, build_zeno_real, solve_theta

__version__ = "0.1.0"
