"""Monte Carlo dropout classification over precomputed feature vectors,
with Beta-Bernoulli priors on keep-rates, kernel feature maps, Brier-scored
calibration reports, and uncertainty triage."""

from .artifact import FORMAT_VERSION, ModelArtifact, load_model, save_model
from .bayesnet import (
    BetaPosterior,
    BetaPrior,
    MaskDraw,
    NetworkConfig,
    NetworkWeights,
    PredictiveSummary,
    TrainConfig,
    TrainingDiverged,
    TrainingLog,
    TrainResult,
    all_ones_masks,
    beta_update,
    enumerate_distribution,
    enumerate_expectation,
    forward_deterministic,
    forward_stochastic,
    gradient_check,
    init_network,
    mc_predict,
    sample_keep_probs,
    sample_masks,
    train,
)
from .data import (
    Dataset,
    PairedDataset,
    Split,
    SplitPlan,
    SynthSpec,
    load_dataset,
    load_paired,
    load_true_probs,
    make_splits,
    save_dataset,
    save_true_probs,
    synth_generate,
)
from .errors import CapabilityError, ValidationError
from .kernels import (
    Featurizer,
    KernelSpec,
    Standardizer,
    fit_standardizer,
    kernel_map,
    kernel_output_dim,
)
from .metrics import (
    Band,
    BandSpec,
    ComparisonReport,
    MetricsReport,
    TriageReport,
    brier_score,
    bucket_predictions,
    classification_metrics,
    rescore_compare,
)

__version__ = "0.1.0"
