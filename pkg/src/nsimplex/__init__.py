"""nSimplex Zen dimensionality reduction for Hilbert-embeddable metric spaces.

The transform maps each object to the apex of a simplex built over ``k``
reference objects; distances in the reduced space are estimated by ``zen``
(bounded below by ``lwb`` and above by ``upb``). Baseline transforms, quality
measures and data utilities support comparative experiments.
"""
__version__ = "0.1.0"

from .metrics import (  # noqa: E402
    KINDS,
    DomainError,
    Metric,
    RadicandError,
    cosine_l2normed,
    euclidean,
    jensen_shannon,
    quadratic_form,
    triangular,
)
from .simplex import (  # noqa: E402
    BaseSimplex,
    DegenerateSimplex,
    NotEmbeddable,
    NSimplexTransform,
    apex_addition,
    build_base_simplex,
    cross_estimates,
    estimates,
    fit,
    fit_random,
    implied_cos_theta,
    reduced_distances,
    transform,
)
from .baselines import (  # noqa: E402
    LinearTransform,
    LMDSTransform,
    apply_linear,
    lmds_fit,
    lmds_transform,
    mds_extend,
    mds_fit,
    pca_fit,
    rp_fit,
)
from .quality import (  # noqa: E402
    DistancePairSample,
    QualityReport,
    dcg_recall,
    isotonic_fit,
    kruskal_stress,
    quadratic_loss,
    relevance,
    sammon_stress,
    spearman_rho,
)
from .data import (  # noqa: E402
    Dataset,
    WitnessSplit,
    gen_gaussian,
    gen_uniform,
    knn_ground_truth,
    l1_normalize,
    l2_normalize,
    load_csv,
    load_fvecs,
    sample_witness,
    write_csv,
    write_fvecs,
)
from .persistence import load_transform, save_transform  # noqa: E402
