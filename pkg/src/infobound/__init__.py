"""Information quantities on finite-state systems, counterexamples to the
bounds 0 <= I_QC <= H(k), automated violation search, and the feedback
fluctuation identity <exp(-sigma - I_c)> = 1."""

from .bound_checker import BoundReport, check_footnote, check_su_bounds, verify_paper_examples
from .errors import (DomainError, InfiniteSigmaError, InfoboundError, RegressionError,
                     ResourceLimitError, ShapeError, ValidationError)
from .fluctuation import (FeedbackModel, averages, build_zero_sigma_model, conjecture_gap,
                          jarzynski_exhaustive, jarzynski_montecarlo)
from .info_core import (CondMatrix, DensityMatrix, Ensemble, ProbVec, binary_entropy,
                        conditional_entropy, iqc_classical, iqc_quantum, mutual_information,
                        shannon_entropy, von_neumann_entropy)
from .markov_chain import MarkovChain3, example1, example2, joint, marginal_k, marginal_x2, to_ensemble
from .search import Objective, grid_oracle, search

__version__ = "0.1.0"
