"""Weighted Ranking for edge-weighted oblivious bipartite matching, with
Monte Carlo checks of its 1-1/e guarantee."""

from .analysis import (RATIO_TARGET, DualFeasibilityReport, MarginalRank, MonotonicityViolated, RatioEstimate,
                       analytic_bound, estimate_dual_feasibility, estimate_ratio, find_marginal_rank,
                       gain_conservation_check, marginal_rank_gain_check, monotonicity_check)
from .graph import (Adversarial, BipartiteInstance, GainShares, IndependentBernoulli, InstanceError, JointSampler,
                    Matching, Realization, generate_random, generate_upper_triangular, perfectly_correlated,
                    read_instance, validate_instance, write_instance)
from .optimal import OptimalResult, brute_force_mwm, max_weight_matching
from .probe import DuplicateProbe, Outcome, ProbeEnv, ProbeOfMatchedVertex, final_matching, new_env
from .ranking import RankVector, build_schedule, draw_ranks, g, run_greedy, run_ranking

__version__ = "0.1.0"
