"""Tracking performatively stable points of time-varying stochastic
optimization problems whose data distributions react to the decision."""

from .algorithms import (AlgorithmConfig, ContractionFactors, ConvergenceError,
                         InfeasibleStepSizeError, RunRecord, StepSizeInterval,
                         contraction_factor, opgd_step, ospgd_step, run_opgd,
                         run_ospgd, solve_stable_point, stable_point_budget_kkt,
                         step_size_interval)
from .bounds import (BoundInputs, hp_prefactor, limsup_bound, markov_envelope,
                     opgd_envelope, ospgd_expectation_envelope, ospgd_hp_envelope,
                     stable_optimum_gap)
from .config import (ConfigError, ScenarioConfig, load_scenario,
                     scenario_from_dict, sequence_from_spec)
from .distmap import (GaussianLocationMap, SampleBatch, expected_gradient, sample,
                      sensitivity_estimate, w1_empirical_1d, w1_translation)
from .harness import (ExperimentResult, build_problem, load_price_series,
                      run_experiment, sample_sphere, stable_point_sequence,
                      synth_price_series, write_metadata_json, write_result_csv)
from .problem import (AdditiveNoiseLoss, ClosedFormSummary, ContractionReport,
                      ProblemInstance, RegularityConstants, SeparableQuadraticLoss,
                      additive_noise_closed_forms, derive_constants,
                      validate_contraction)
from .projection import (Box, BudgetHalfspace, ConstraintSet, EuclideanBall,
                         FullSpace, NonnegBudget, contains, project)
from .subweibull import (SubWeibull, fit_subweibull, hp_quantile, sw_affine,
                         sw_bounded, sw_gaussian, sw_product, sw_sum,
                         sw_vector_norm, tail_bound)

__version__ = "0.1.0"
