"""Multi-scale graph embeddings from spectral graph wavelets.

Typical use::

    from msimap import generate_two_moons, embed, kmeans, adjusted_rand_index

    ds = generate_two_moons(seed=0)
    emb = embed(ds.points, method=2, seed=0, deterministic=True)
    ari = adjusted_rand_index(ds.labels, kmeans(emb.points, 2))
"""

from .encode import EncodedMethod1, EncodedMethod2, encode_method1, encode_method2
from .errors import (
    DegenerateInputError,
    MsimapError,
    OracleSizeError,
    ParameterError,
    ParseError,
    SpectralDomainError,
)
from .evaluation import (
    LabeledDataset,
    adjusted_mutual_information,
    adjusted_rand_index,
    evaluate_clustering,
    generate_dense_sparse,
    generate_two_moons,
    kmeans,
)
from .graph import (
    Laplacian,
    SparseGraph,
    SpectrumBound,
    build_knn_graph,
    build_laplacian,
    estimate_lambda_max,
    load_point_csv,
)
from .interpret import FeatureImportance, laplacian_score, rank_features
from .optimize import (
    Embedding,
    OptimizerConfig,
    cross_entropy_loss,
    embedding_similarity,
    optimize,
    optimize_method1,
    optimize_method2,
    sgd_step,
)
from .pipeline import RunConfig, embed, run_embedding
from .pw_verify import (
    LambdaSet,
    PolynomialOperator,
    find_lambda_set,
    lambda_psi,
    pw_space,
    uniqueness_rank_check,
    verify_poincare_laplacian,
    verify_poincare_sgw,
)
from .sampling import edge_betweenness, kde_fit, node_importance_sgw, sample_edges_ebc
from .sgw import (
    ChebyshevCoeffs,
    FilterBank,
    SgwTensor,
    chebyshev_fit,
    design_filter_bank,
    sgw_chebyshev,
    sgw_exact,
    sgw_transform_all,
)

__version__ = "0.1.0"
