"""Document retrieval from repetition-coded queries sent over a token-erasure channel.

Simulation lives in :mod:`.harness`; the Gaussian error model and its bounds
live in :mod:`.margins` and :mod:`.bounds`.
"""

from .bounds import BoundReport, QMCConfig, bonferroni_first, bonferroni_third, full_report, pe_mvn, sidak_bound
from .channel import erase_token_sequence, reconstruct_query, sample_indicators, transmit
from .coding import (RepetitionPlan, TokenBudgetAllocation, UndefinedRateError, budget_from_rate,
                     dp_budget_allocation, effective_rate, exhaustive_allocation, proportional_plan,
                     survival_probabilities)
from .corpus import (DocumentCorpus, EmptySupportError, QueryRepresentation, ZipfVocabulary,
                     build_query, generate_corpus, idf_weights, sample_counts, zipf_probabilities)
from .gaussian import OrthantEstimate, bivariate_cdf_at_zero, mvn_cdf_at_zero, trivariate_cdf_at_zero
from .harness import (ConfigError, ErrorEstimate, ExperimentConfig, averaged_bounds, estimate_error,
                      run_trial)
from .margins import MarginCoefficients, MarginMoments, correlation_matrix, margin_coefficients, margin_moments
from .retrieval import RetrievalDecision, retrieve, retrieve_cosine, tfidf_scores

__version__ = "0.1.0"
