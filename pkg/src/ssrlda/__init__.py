"""Semi-supervised dual-autoencoder representation learning for domain adaptation.

A labeled source domain and an unlabeled target domain are jointly encoded
by two families of closed-form denoising autoencoders: a global one whose
solve shrinks marginal and per-class mean discrepancies between the
domains, and per-class local ones fit on class-matched subsets under
pseudo labels. Stacked layers of both are concatenated into a dual
representation on which a linear classifier transfers across domains.
"""

from .adapt_global import GlobalAdaptProblem, encode_global, solve_mda_ad
from .adapt_local import (
    ClassPartition,
    LocalWeights,
    encode_local,
    partition_by_class,
    solve_mmda,
)
from .classify import LinearModel, accuracy, predict, train_linear
from .dataio import (
    DomainPair,
    LabeledMatrix,
    load_sparse,
    make_domain_pair,
    save_matrix,
    select_top_frequent_features,
)
from .denoiser import (
    ExpectationStats,
    LayerWeights,
    NoiseSpec,
    corrupt_sample,
    encode,
    expected_stats,
    solve_mda,
)
from .errors import (
    AllClassesSkippedError,
    ParseError,
    SingularSystemError,
    ValidationError,
)
from .evalcli import (
    EvalReport,
    SweepGrid,
    proxy_a_distance,
    run_benchmark,
    run_sweep,
)
from .mmd import (
    MmdMatrix,
    build_conditional_mmd,
    build_marginal_mmd,
    mmd_squared_linear,
    sum_mmd_matrices,
)
from .pipeline import (
    AdaptConfig,
    DualRepresentation,
    PipelineResult,
    run_ssrlda,
    run_variant,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptConfig",
    "AllClassesSkippedError",
    "ClassPartition",
    "DomainPair",
    "DualRepresentation",
    "EvalReport",
    "ExpectationStats",
    "GlobalAdaptProblem",
    "LabeledMatrix",
    "LayerWeights",
    "LinearModel",
    "LocalWeights",
    "MmdMatrix",
    "NoiseSpec",
    "ParseError",
    "PipelineResult",
    "SingularSystemError",
    "SweepGrid",
    "ValidationError",
    "accuracy",
    "build_conditional_mmd",
    "build_marginal_mmd",
    "corrupt_sample",
    "encode",
    "encode_global",
    "encode_local",
    "expected_stats",
    "load_sparse",
    "make_domain_pair",
    "mmd_squared_linear",
    "partition_by_class",
    "predict",
    "proxy_a_distance",
    "run_benchmark",
    "run_ssrlda",
    "run_sweep",
    "run_variant",
    "save_matrix",
    "select_top_frequent_features",
    "solve_mda",
    "solve_mda_ad",
    "solve_mmda",
    "sum_mmd_matrices",
    "train_linear",
]
