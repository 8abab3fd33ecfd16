"""Diagnostics for whether vision encoders bind composite structure.

The toolkit has three legs:

* functional sensitivity: Jacobian Effective Rank from randomized
  range-finder sketches of the input-output Jacobian (`jacobian`);
* embedding geometry: global and local spectrum functionals (`geometry`);
* behavior: synthetic two-object binding and same/different probes with
  fixed readouts (`probes`, `readout`), tied together by the statistics
  suite (`stats`) and a bundled reference leaderboard (`fixtures`).
"""

__version__ = "0.1.0"

from .embio import EmbeddingMatrix, read_embeddings, read_emb1, write_emb1
from .encoders import (
    BagOfFeaturesEncoder,
    IdentityEncoder,
    LinearEncoder,
    MlpEncoder,
    bag_embed,
    jvp_finite_diff,
)
from .geometry import (
    SingularSpectrum,
    covariance_spectrum,
    effective_rank_entropy,
    isotropy_score,
    local_isotropy,
    local_isotropy_sweep,
    participation_ratio,
)
from .jacobian import (
    DirectionSet,
    JerResult,
    JvpOracle,
    ProbeBatch,
    estimate_singular_values,
    jer,
    jer_depth_profile,
    jer_mean,
    local_feature_covariance_check,
    normalized_spectrum,
    orthonormal_directions,
    sample_probe_inputs,
)
from .probes import (
    BindingTrial,
    DatasetManifest,
    SameDiffPair,
    SceneSpec,
    Shape,
    gen_binding_trial,
    gen_dataset,
    gen_samediff_pair,
    load_manifest,
    render_scene,
)
from .readout import (
    ReadoutResult,
    TrialEmbeddings,
    cosine_select,
    eval_binding,
    eval_samediff,
    knn_select,
    localpca_select,
    samediff_accuracy,
)
from .stats import (
    CorrelationResult,
    ModelRecord,
    jackknife_significance,
    loo_cv_r2,
    ols_r2,
    partial_correlation,
    pearson,
    seed_stability,
)
from .wireclient import AdapterOracle

__all__ = [name for name in dir() if not name.startswith("_")]
