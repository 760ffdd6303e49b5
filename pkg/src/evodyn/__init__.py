"""Wealth-share dynamics of fixed-mix betting strategies and their diffusion limit."""
__version__ = "0.1.0"

from .errors import (DimensionError, DynamicsUndefinedError, EvodynError, InfeasibleMomentsError,
                     ParameterRangeError, PreconditionError, RefusalError, StepSizeError,
                     UnsupportedFamilyError, ValidationError)
from .model import (DerivedMatrices, MarketParams, StrategyProfile, ValidationResult,
                    complete_market_sigma, derive_matrices, two_asset_params, two_asset_profile,
                    validate_params)
from .paths import LogOddsPath, WealthPath, logistic, path_rng
from .discrete import (DiscreteModelSeries, PayoffDistribution, conditional_moments,
                       empirical_characteristics, make_complete_market_family,
                       make_moment_matched_family, simulate_discrete, step_discrete)
from .diffusion import (DiffusionSpec, TwoAgentSpec, simulate_log_odds, simulate_multi,
                        simulate_two_agent)
from .survival import (Behavior, Outcome, SurvivalReport, classify_many, classify_two_agent,
                       invariant_density, replicator_map, theta_coefficients)
from .switching import SwitchingReport, SwitchingSpec, simulate_switched, switching_report
