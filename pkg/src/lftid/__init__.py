"""Identification of LFT-structured continuous-time descriptor systems
from slowly and non-uniformly sampled outputs."""

from . import errors
from .benchmarks import mass_spring_plant, two_tone_generator
from .estimation import (ExcitationReport, IdentifyResult, ParametricSystem,
                         Regression, TfmEstimate, build_parametric,
                         build_regression, check_excitation, estimate_tfm,
                         estimate_theta, identify, update_tfm)
from .experiments import (DlseResult, ExperimentConfig, TrialResult,
                          dlse_fit, generate_times, monte_carlo,
                          relative_error, settle_time)
from .igs import (InputGenerator, Spectrum, decompose, state_at, states_at,
                  xi_bar_components)
from .model import (AssumptionReport, LftPlant, SystemMatrices, assemble,
                    check_assumptions, eval_g, eval_hbar, eval_tfm,
                    eval_tfm_lft, tfm_derivative)
from .numerics import Tolerances
from .response import (JordanGenerator, SampleSet, SteadyStateMaps,
                       simulate_samples, solve_steady_maps,
                       steady_matrix_jordan, steady_matrix_from_tfm,
                       steady_output, tangential_value, transient_output)

__all__ = [
    "errors",
    "mass_spring_plant", "two_tone_generator",
    "ExcitationReport", "IdentifyResult", "ParametricSystem", "Regression",
    "TfmEstimate", "build_parametric", "build_regression",
    "check_excitation", "estimate_tfm", "estimate_theta", "identify",
    "update_tfm",
    "DlseResult", "ExperimentConfig", "TrialResult", "dlse_fit",
    "generate_times", "monte_carlo", "relative_error", "settle_time",
    "InputGenerator", "Spectrum", "decompose", "state_at", "states_at",
    "xi_bar_components",
    "AssumptionReport", "LftPlant", "SystemMatrices", "assemble",
    "check_assumptions", "eval_g", "eval_hbar", "eval_tfm", "eval_tfm_lft",
    "tfm_derivative",
    "Tolerances",
    "JordanGenerator", "SampleSet", "SteadyStateMaps", "simulate_samples",
    "solve_steady_maps", "steady_matrix_jordan", "steady_matrix_from_tfm",
    "steady_output", "tangential_value", "transient_output",
]
