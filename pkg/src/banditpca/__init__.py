"""Online PCA with bandit feedback.

A learner maintains a density matrix over directions, plays unit vectors
sampled to match it, observes only the scalar quadratic loss of its own
play, and runs mirror descent with the log-determinant regularizer on
unbiased loss-matrix estimates.  The sparse sampling scheme updates the
maintained eigensystem in O(d) per trial.
"""

from .backend import active, use
from .environments import (
    AdaptiveOracle,
    EnvConfig,
    LossOracle,
    PsdStream,
    RankOneStream,
    SpikedGaussian,
    StaticMatrix,
    adaptive_hook,
    best_fixed_comparator,
    make_oracle,
    psd_stream,
    rank_one_stream,
    spiked_gaussian,
)
from .harness import (
    RunResult,
    TrialRecord,
    compute_regret,
    probe_variance_terms,
    run_game,
    tune_eta_firstorder,
    tune_eta_sparse,
    tune_eta_worstcase,
)
from .mirror_descent import (
    DensityState,
    LearnerConfig,
    initial_state,
    project_trace_one,
    slow_reference_update,
    stein_divergence,
    update_dense_offdiag,
    update_dense_ondiag,
    update_sparse_diag,
    update_sparse_offdiag,
)
from .samplers import (
    Action,
    LossEstimate,
    enumerate_outcomes,
    estimate_dense,
    estimate_sparse,
    mix_weights,
    sample_dense,
    sample_sparse,
)
from .symlinalg import (
    EigenSystem,
    full_eigendecompose,
    orthogonality_error,
    reorthogonalize,
)

__version__ = "0.1.0"
