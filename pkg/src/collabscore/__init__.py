"""Collaborative scoring with bounded per-user influence.

A six-stage pipeline turning pretrust, peer vouches and pairwise
comparisons into global entity scores: trust propagation, voting
rights, preference learning, score scaling, robust aggregation and
display post-processing. Ships with a synthetic community generator
and a seeded experiment harness.
"""

from .aggregation import (GlobalScores, QuantileStandardizedQrMedian, Squash,
                          aggregate_entity, postprocess, squash)
from .dataset import Comparison, ComparisonDataset, PRIVATE, PUBLIC
from .errors import ConfigError, DataError, StageError
from .experiment import (CellResult, ExperimentConfig, ExperimentResult,
                         correlation, patch_config, run_experiment, stats)
from .generative import (GenerativeConfig, GroundTruth, generate_dataset,
                         sample_comparison_knary)
from .pipeline import (PipelineState, ScoringPipeline, parse_generative_config,
                       parse_pipeline_config, register_scaling, run_pipeline,
                       serialize_pipeline_config)
from .preference import (UniformGBT, UserModel, cgf_uniform,
                         cgf_uniform_prime, estimate_uncertainties,
                         fit_raw_scores, gbt_loss)
from .primitives import (ResilienceParams, UnboundedObjectiveError,
                         WeightedInput, br_mean, clip_mean, huber_asym,
                         huber_asym_derivative, minimize_convex_1d, qr_dev,
                         qr_med, qr_qtl, qr_unc)
from .scaling import (Mehestan, QuantileZeroShift, ScaleConfig, ScalerSet,
                      ScalingCompose, ScalingParams, apply_scaling,
                      clearly_ordered_pairs, pair_scale, pair_translation,
                      quantile_zero_shift, ratio_estimate, scale_user,
                      select_scalers, standardize, translate_user)
from .trust import (LipschiTrust, TrustState, VouchMatrix, VouchSet,
                    build_vouch_matrix, lipschitrust)
from .voting import (AffineOvertrust, OvertrustParams, VotingRightsMatrix,
                     compute_voting_rights, max_tolerated_overtrust,
                     overtrust, solve_min_voting_right)

__version__ = "0.1.0"
