"""Decision-gap bounds for unsupervised sequence classification.

Dense desk-scale machinery for studying when a generative model fitted to
observation marginals alone can match the Bayes decision rule: exact
decision gaps, the marginal-distance bound chain, Monte-Carlo chain
verification, constructive necessity counterexamples, corpus conditioning
reports, and sequence-level cross-entropy training.
"""

__version__ = "0.1.0"

from .bounds import (
    BoundReport,
    LmMatrix,
    bound_report,
    build_lm_matrix,
    kl_marginal,
    l1_gap_bound,
    l1_marginal_distance,
    lm_matrix_from_rows,
    pinsker_beta,
    position_l1_gap,
    table_lp_distances,
    telescope_gap,
)
from .decision import DecisionRule, MismatchReport, decide, hamming_error, mismatch
from .dists import (
    Alphabet,
    BigramPrior,
    ConditionalTable,
    DensePrior,
    JointDist,
    LabelPrior,
    PositionUnigramPrior,
    SequenceDist,
    make_conditional,
    marginal_x,
    position_joint,
    sample_conditional,
    sample_prior,
    sequence_dist,
)
from .simulate import (
    Counterexample,
    SimConfig,
    SimRecord,
    find_rank_counterexample,
    find_structure_counterexample,
    run_bound_simulation,
)
from .train import (
    ModelParams,
    TrainConfig,
    TrainTrajectory,
    ce_gradient,
    ce_loss,
    forward_logprob,
    generate_dataset,
    load_dataset,
    save_dataset,
    train,
)

__all__ = [
    "Alphabet",
    "BigramPrior",
    "BoundReport",
    "ConditionalTable",
    "Counterexample",
    "DecisionRule",
    "DensePrior",
    "JointDist",
    "LabelPrior",
    "LmMatrix",
    "MismatchReport",
    "ModelParams",
    "PositionUnigramPrior",
    "SequenceDist",
    "SimConfig",
    "SimRecord",
    "TrainConfig",
    "TrainTrajectory",
    "bound_report",
    "build_lm_matrix",
    "ce_gradient",
    "ce_loss",
    "decide",
    "find_rank_counterexample",
    "find_structure_counterexample",
    "forward_logprob",
    "generate_dataset",
    "hamming_error",
    "kl_marginal",
    "l1_gap_bound",
    "l1_marginal_distance",
    "lm_matrix_from_rows",
    "load_dataset",
    "make_conditional",
    "marginal_x",
    "mismatch",
    "pinsker_beta",
    "position_joint",
    "position_l1_gap",
    "run_bound_simulation",
    "sample_conditional",
    "sample_prior",
    "save_dataset",
    "sequence_dist",
    "table_lp_distances",
    "telescope_gap",
    "train",
]
