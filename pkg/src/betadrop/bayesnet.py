"""Monte Carlo dropout classifier with Beta priors over per-layer keep-rates.

An L-layer feed-forward net where the input of every layer is multiplied
by a binary keep-mask. Each layer's keep-probability carries a Beta
prior; observed mask draws update it by conjugacy during training, and
predictive inference averages T stochastic forward passes, sampling a
fresh keep-probability from the posterior for every pass.

Masks drawn for a training step are reused unchanged in the backward
pass of that step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._rng import seed_seq
from .errors import CapabilityError, ValidationError
from .kernels import Featurizer, KernelSpec

ACTIVATIONS = ("relu", "tanh", "linear")

ENUMERATION_SITE_LIMIT = 20
_ENUM_CHUNK = 1 << 16


class TrainingDiverged(RuntimeError):
    """Raised when the training loss becomes non-finite."""


# ---------------------------------------------------------------------------
# priors and posteriors over keep-probabilities


@dataclass(frozen=True)
class BetaPrior:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValidationError(
                f"Beta prior requires alpha > 0 and beta > 0, got ({self.alpha}, {self.beta})"
            )


@dataclass(frozen=True)
class BetaPosterior:
    """Beta posterior over one layer's keep-probability.

    Stores the prior and the accumulated success/failure counts so the
    conjugate update stays exact: alpha_d = alpha + successes,
    beta_d = beta + failures. Counts are integers under pure conjugate
    updates; the training loop's optional per-step decay makes them
    real-valued.
    """

    alpha: float
    beta: float
    successes: float = 0.0
    failures: float = 0.0

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValidationError(
                f"Beta posterior requires prior alpha, beta > 0, got ({self.alpha}, {self.beta})"
            )
        if self.successes < 0 or self.failures < 0:
            raise ValidationError("posterior counts must be nonnegative")

    @classmethod
    def from_prior(cls, prior: BetaPrior) -> "BetaPosterior":
        return cls(alpha=prior.alpha, beta=prior.beta)

    @property
    def alpha_d(self) -> float:
        return self.alpha + self.successes

    @property
    def beta_d(self) -> float:
        return self.beta + self.failures

    @property
    def observation_count(self) -> float:
        return self.successes + self.failures

    @property
    def mean(self) -> float:
        return self.alpha_d / (self.alpha_d + self.beta_d)

    def decayed(self, factor: float) -> "BetaPosterior":
        """Scale accumulated counts toward the prior; factor 1.0 is a no-op."""
        if not (0.0 < factor <= 1.0):
            raise ValidationError(f"decay factor must be in (0, 1], got {factor}")
        if factor == 1.0:
            return self
        return replace(self, successes=self.successes * factor, failures=self.failures * factor)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "successes": self.successes,
            "failures": self.failures,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BetaPosterior":
        return cls(**d)


def beta_update(posterior: BetaPosterior, keeps: int, draws: int) -> BetaPosterior:
    """Conjugate update from `draws` Bernoulli mask observations, `keeps` of them 1."""
    if keeps < 0 or draws < 0 or keeps > draws:
        raise ValidationError(f"need 0 <= keeps <= draws, got keeps={keeps}, draws={draws}")
    return replace(
        posterior,
        successes=posterior.successes + keeps,
        failures=posterior.failures + (draws - keeps),
    )


def sample_keep_probs(posteriors, rng: np.random.Generator) -> list[float]:
    """One independent Beta(alpha_d, beta_d) draw per layer."""
    return [float(rng.beta(p.alpha_d, p.beta_d)) for p in posteriors]


# ---------------------------------------------------------------------------
# network configuration and parameters


@dataclass
class NetworkConfig:
    """Architecture of the dropout classifier.

    layer_widths is [d_in, K_1, ..., K_{L-1}, R]; there are L = len-1
    weight layers and L keep-masks, mask i multiplying the input of
    layer i (so mask 1 drops kernel features). tau is kept for the
    regression likelihood only; classification uses softmax
    cross-entropy.
    """

    layer_widths: list[int]
    activation: str = "relu"
    keep_prior_per_layer: list[BetaPrior] = field(default_factory=list)
    tau: float = 1.0
    weight_decay: float = 0.0
    class_count: int = 2

    def __post_init__(self):
        if len(self.layer_widths) < 2:
            raise ValidationError("layer_widths needs at least [d_in, R]")
        if any(w < 1 for w in self.layer_widths):
            raise ValidationError(f"all layer widths must be >= 1, got {self.layer_widths}")
        if self.activation not in ACTIVATIONS:
            raise ValidationError(f"unknown activation {self.activation!r}")
        if not self.keep_prior_per_layer:
            self.keep_prior_per_layer = [BetaPrior(1e-4, 1e-4) for _ in range(self.n_layers)]
        if len(self.keep_prior_per_layer) != self.n_layers:
            raise ValidationError(
                f"need one keep prior per mask site ({self.n_layers}), "
                f"got {len(self.keep_prior_per_layer)}"
            )
        if not (self.tau > 0):
            raise ValidationError("tau must be positive")
        if self.weight_decay < 0:
            raise ValidationError("weight_decay must be nonnegative")
        if self.class_count < 2:
            raise ValidationError("class_count must be >= 2")
        if self.class_count != self.layer_widths[-1]:
            raise ValidationError(
                f"class_count {self.class_count} must equal output width {self.layer_widths[-1]}"
            )

    @property
    def n_layers(self) -> int:
        return len(self.layer_widths) - 1

    def scale(self, layer: int) -> float:
        """Forward scaling 1/sqrt(fan_in) of layer `layer` (0-based)."""
        return 1.0 / math.sqrt(self.layer_widths[layer])

    def to_dict(self) -> dict:
        return {
            "layer_widths": list(self.layer_widths),
            "activation": self.activation,
            "keep_prior_per_layer": [
                {"alpha": p.alpha, "beta": p.beta} for p in self.keep_prior_per_layer
            ],
            "tau": self.tau,
            "weight_decay": self.weight_decay,
            "class_count": self.class_count,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkConfig":
        return cls(
            layer_widths=list(d["layer_widths"]),
            activation=d["activation"],
            keep_prior_per_layer=[BetaPrior(**p) for p in d["keep_prior_per_layer"]],
            tau=d["tau"],
            weight_decay=d["weight_decay"],
            class_count=d["class_count"],
        )


@dataclass
class NetworkWeights:
    matrices: list[np.ndarray]  # matrices[i]: (K_{i+1} x K_i)
    biases: list[np.ndarray]

    def validate_against(self, config: NetworkConfig):
        widths = config.layer_widths
        if len(self.matrices) != config.n_layers or len(self.biases) != config.n_layers:
            raise ValidationError("weight layer count does not match config")
        for i, (mat, b) in enumerate(zip(self.matrices, self.biases)):
            if mat.shape != (widths[i + 1], widths[i]):
                raise ValidationError(
                    f"layer {i + 1}: weight shape {mat.shape} != {(widths[i + 1], widths[i])}"
                )
            if b.shape != (widths[i + 1],):
                raise ValidationError(f"layer {i + 1}: bias shape {b.shape} != ({widths[i + 1]},)")
            if not (np.all(np.isfinite(mat)) and np.all(np.isfinite(b))):
                raise ValidationError(f"layer {i + 1}: non-finite weight entries")

    def copy(self) -> "NetworkWeights":
        return NetworkWeights(
            matrices=[m.copy() for m in self.matrices],
            biases=[b.copy() for b in self.biases],
        )

    def to_dict(self) -> dict:
        return {
            "matrices": [m.tolist() for m in self.matrices],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkWeights":
        return cls(
            matrices=[np.array(m, dtype=np.float64) for m in d["matrices"]],
            biases=[np.array(b, dtype=np.float64) for b in d["biases"]],
        )


@dataclass
class MaskDraw:
    """One stochastic pass's state: per-layer binary masks and the keep-probs they came from."""

    masks: list[np.ndarray]  # masks[i]: {0,1}^{K_i}, multiplies input of layer i+1
    keep_probs: list[float]

    def __post_init__(self):
        for i, (m, p) in enumerate(zip(self.masks, self.keep_probs)):
            if not np.all((m == 0) | (m == 1)):
                raise ValidationError(f"mask {i + 1} has entries outside {{0, 1}}")
            if not (0.0 <= p <= 1.0):
                raise ValidationError(f"keep probability {p} outside [0, 1]")


def sample_masks(config: NetworkConfig, keep_probs, rng: np.random.Generator) -> MaskDraw:
    masks = [
        (rng.random(config.layer_widths[i]) < keep_probs[i]).astype(np.float64)
        for i in range(config.n_layers)
    ]
    return MaskDraw(masks=masks, keep_probs=[float(p) for p in keep_probs])


def all_ones_masks(config: NetworkConfig) -> MaskDraw:
    masks = [np.ones(config.layer_widths[i]) for i in range(config.n_layers)]
    return MaskDraw(masks=masks, keep_probs=[1.0] * config.n_layers)


@dataclass
class PredictiveSummary:
    """Aggregate of T stochastic passes for one example."""

    sample_count: int
    samples: np.ndarray  # (T x class_count)
    mean_prob: np.ndarray
    sample_variance: np.ndarray

    @classmethod
    def from_samples(cls, samples: np.ndarray) -> "PredictiveSummary":
        samples = np.asarray(samples, dtype=np.float64)
        t = samples.shape[0]
        mean = samples.mean(axis=0)
        if t == 1:
            var = np.zeros(samples.shape[1])
        else:
            var = samples.var(axis=0, ddof=1)
        return cls(sample_count=t, samples=samples, mean_prob=mean, sample_variance=var)

    @property
    def predicted_class(self) -> int:
        # exact ties break toward the lower class index
        return int(np.argmax(self.mean_prob))


# ---------------------------------------------------------------------------
# forward / backward


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "tanh":
        return np.tanh(z)
    return z


def _activate_grad(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return (z > 0.0).astype(np.float64)
    if kind == "tanh":
        t = np.tanh(z)
        return 1.0 - t * t
    return np.ones_like(z)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def _forward_logits(weights, config, x_rows, mask_rows):
    """Masked forward pass over a batch.

    x_rows: (n x d_in); mask_rows[i]: (K_i,) shared mask or (n x K_i)
    per-row masks. Returns logits (n x R).
    """
    h = x_rows
    for i in range(config.n_layers):
        z = (mask_rows[i] * h) @ (config.scale(i) * weights.matrices[i]).T + weights.biases[i]
        h = _activate(z, config.activation) if i < config.n_layers - 1 else z
    return h


def forward_stochastic(
    weights: NetworkWeights, config: NetworkConfig, x, mask: MaskDraw
) -> np.ndarray:
    """One masked forward pass; returns the softmax class-probability vector."""
    weights.validate_against(config)
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (config.layer_widths[0],):
        raise ValidationError(
            f"input shape {x.shape} does not match network input width {config.layer_widths[0]}"
        )
    for i, m in enumerate(mask.masks):
        if m.shape != (config.layer_widths[i],):
            raise ValidationError(
                f"mask {i + 1} shape {m.shape} does not match layer input width "
                f"{config.layer_widths[i]}"
            )
    logits = _forward_logits(weights, config, x[None, :], mask.masks)
    return _softmax(logits)[0]


def forward_deterministic(weights: NetworkWeights, config: NetworkConfig, x) -> np.ndarray:
    """Forward pass with every mask entry kept (dropout disabled)."""
    return forward_stochastic(weights, config, x, all_ones_masks(config))


def _loss_and_grads(weights, config, x_rows, y, masks):
    """Mean softmax cross-entropy plus weight-decay penalty, with gradients.

    masks[i] is the (K_i,) mask shared by the whole batch; the same
    masks gate forward and backward.
    """
    n = x_rows.shape[0]
    pre = []
    hs = [x_rows]
    h = x_rows
    for i in range(config.n_layers):
        z = (masks[i] * h) @ (config.scale(i) * weights.matrices[i]).T + weights.biases[i]
        pre.append(z)
        h = _activate(z, config.activation) if i < config.n_layers - 1 else z
        hs.append(h)
    logits = hs[-1]
    logp = _log_softmax(logits)
    ce = -logp[np.arange(n), y].mean()
    penalty = config.weight_decay * sum(float((m * m).sum()) for m in weights.matrices)
    loss = ce + penalty

    delta = _softmax(logits)
    delta[np.arange(n), y] -= 1.0
    delta /= n
    g_mats, g_biases = [], []
    for i in reversed(range(config.n_layers)):
        masked_in = masks[i] * hs[i]
        g_mat = config.scale(i) * (delta.T @ masked_in)
        g_mat += 2.0 * config.weight_decay * weights.matrices[i]
        g_bias = delta.sum(axis=0)
        g_mats.append(g_mat)
        g_biases.append(g_bias)
        if i > 0:
            upstream = masks[i] * (delta @ (config.scale(i) * weights.matrices[i]))
            delta = upstream * _activate_grad(pre[i - 1], config.activation)
    g_mats.reverse()
    g_biases.reverse()
    return loss, g_mats, g_biases


def _loss_only(weights, config, x_rows, y, masks) -> float:
    n = x_rows.shape[0]
    logits = _forward_logits(weights, config, x_rows, masks)
    ce = -_log_softmax(logits)[np.arange(n), y].mean()
    penalty = config.weight_decay * sum(float((m * m).sum()) for m in weights.matrices)
    return float(ce + penalty)


# ---------------------------------------------------------------------------
# initialization


def init_network(config: NetworkConfig, seed: int) -> NetworkWeights:
    """Zero-mean init with per-layer std 1/sqrt(fan_in); biases zero."""
    rng = np.random.default_rng(seed_seq(seed))
    mats, biases = [], []
    widths = config.layer_widths
    for i in range(config.n_layers):
        fan_in = widths[i]
        mats.append(rng.normal(0.0, 1.0 / math.sqrt(fan_in), size=(widths[i + 1], fan_in)))
        biases.append(np.zeros(widths[i + 1]))
    return NetworkWeights(matrices=mats, biases=biases)


# ---------------------------------------------------------------------------
# training


@dataclass
class TrainConfig:
    learning_rate: float = 2e-5
    adam_epsilon: float = 1e-8
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    max_epochs: int = 100
    early_stop_patience: int = 10
    early_stop_min_delta: float = 1e-4
    batch_size: int = 32
    rng_seed: int = 0
    posterior_decay: float = 0.999  # 1.0 = unbounded count accumulation

    def __post_init__(self):
        if not (self.learning_rate > 0 and self.adam_epsilon > 0):
            raise ValidationError("learning_rate and adam_epsilon must be positive")
        if not (0 < self.adam_beta1 < 1 and 0 < self.adam_beta2 < 1):
            raise ValidationError("adam betas must lie in (0, 1)")
        if self.max_epochs < 0 or self.batch_size < 1:
            raise ValidationError("max_epochs must be >= 0 and batch_size >= 1")
        if self.early_stop_patience < 0 or self.early_stop_patience > self.max_epochs:
            raise ValidationError("early_stop_patience must lie in [0, max_epochs]")
        if not (0.0 < self.posterior_decay <= 1.0):
            raise ValidationError("posterior_decay must lie in (0, 1]")

    def to_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "adam_epsilon": self.adam_epsilon,
            "adam_beta1": self.adam_beta1,
            "adam_beta2": self.adam_beta2,
            "max_epochs": self.max_epochs,
            "early_stop_patience": self.early_stop_patience,
            "early_stop_min_delta": self.early_stop_min_delta,
            "batch_size": self.batch_size,
            "rng_seed": self.rng_seed,
            "posterior_decay": self.posterior_decay,
        }


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    posterior_state: list[tuple[float, float]]  # (alpha_d, beta_d) per layer


@dataclass
class TrainingLog:
    epochs: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = -1
    stopped_early: bool = False


@dataclass
class TrainResult:
    weights: NetworkWeights
    posteriors: list[BetaPosterior]
    log: TrainingLog
    featurizer: Featurizer


def _resolve_featurizer(kernel, train_features=None) -> Featurizer:
    if isinstance(kernel, Featurizer):
        return kernel
    if isinstance(kernel, KernelSpec):
        if train_features is not None:
            return Featurizer.fit(kernel, train_features)
        return Featurizer(spec=kernel, standardizer=None)
    raise ValidationError(f"kernel must be a KernelSpec or Featurizer, got {type(kernel)!r}")


def train(dataset, val, config: NetworkConfig, kernel, tc: TrainConfig) -> TrainResult:
    """Adam training with per-step posterior keep-rate sampling.

    Each step: draw p_i from the current per-layer posterior, draw masks
    zeta_i ~ Bern(p_i) shared across the batch, run forward and backward
    under those exact masks, apply Adam, then fold the step's mask
    observations into the posteriors (decayed by tc.posterior_decay).
    Early stopping restores the weights and posteriors of the best
    validation-loss epoch.

    Passing a bare KernelSpec fits a Standardizer on the training rows;
    pass a Featurizer to control preprocessing yourself.
    """
    if len(dataset) == 0:
        raise ValidationError("training dataset is empty")
    if len(val) == 0:
        raise ValidationError("validation dataset is empty")
    featurizer = _resolve_featurizer(kernel, train_features=dataset.features)
    x_tr = featurizer.transform(dataset.features)
    x_val = featurizer.transform(val.features)
    y_tr = np.asarray(dataset.labels, dtype=np.int64)
    y_val = np.asarray(val.labels, dtype=np.int64)
    for name, y in (("train", y_tr), ("validation", y_val)):
        if y.min() < 0 or y.max() >= config.class_count:
            raise ValidationError(f"{name} labels outside [0, {config.class_count})")
    if x_tr.shape[1] != config.layer_widths[0]:
        raise ValidationError(
            f"kernel output dim {x_tr.shape[1]} does not match network input width "
            f"{config.layer_widths[0]}"
        )

    weights = init_network(config, tc.rng_seed)
    posteriors = [BetaPosterior.from_prior(p) for p in config.keep_prior_per_layer]
    log = TrainingLog()
    if tc.max_epochs == 0:
        return TrainResult(weights=weights, posteriors=posteriors, log=log, featurizer=featurizer)

    rng = np.random.default_rng(seed_seq(tc.rng_seed, 1))
    adam_m = [np.zeros_like(m) for m in weights.matrices] + [
        np.zeros_like(b) for b in weights.biases
    ]
    adam_v = [np.zeros_like(m) for m in adam_m]
    step = 0

    best_val = math.inf
    best_weights = weights.copy()
    best_posteriors = list(posteriors)
    best_epoch = -1
    since_improved = 0
    n = len(dataset)

    for epoch in range(tc.max_epochs):
        perm = rng.permutation(n)
        loss_sum = 0.0
        for start in range(0, n, tc.batch_size):
            idx = perm[start : start + tc.batch_size]
            xb, yb = x_tr[idx], y_tr[idx]
            keep_probs = sample_keep_probs(posteriors, rng)
            draw = sample_masks(config, keep_probs, rng)
            loss, g_mats, g_biases = _loss_and_grads(weights, config, xb, yb, draw.masks)
            if not math.isfinite(loss):
                raise TrainingDiverged(
                    f"non-finite training loss at epoch {epoch}, step {step}; "
                    f"try a smaller learning rate than {tc.learning_rate}"
                )
            loss_sum += loss * len(idx)

            step += 1
            params = weights.matrices + weights.biases
            grads = g_mats + g_biases
            bc1 = 1.0 - tc.adam_beta1**step
            bc2 = 1.0 - tc.adam_beta2**step
            for j, (p, g) in enumerate(zip(params, grads)):
                adam_m[j] = tc.adam_beta1 * adam_m[j] + (1 - tc.adam_beta1) * g
                adam_v[j] = tc.adam_beta2 * adam_v[j] + (1 - tc.adam_beta2) * (g * g)
                p -= tc.learning_rate * (adam_m[j] / bc1) / (np.sqrt(adam_v[j] / bc2) + tc.adam_epsilon)

            for i in range(config.n_layers):
                keeps = int(draw.masks[i].sum())
                posteriors[i] = beta_update(
                    posteriors[i].decayed(tc.posterior_decay), keeps, draw.masks[i].size
                )

        val_loss = _loss_only(weights, config, x_val, y_val, all_ones_masks(config).masks)
        log.epochs.append(
            EpochRecord(
                epoch=epoch,
                train_loss=loss_sum / n,
                val_loss=val_loss,
                posterior_state=[(p.alpha_d, p.beta_d) for p in posteriors],
            )
        )
        if val_loss < best_val - tc.early_stop_min_delta:
            best_val = val_loss
            best_weights = weights.copy()
            best_posteriors = list(posteriors)
            best_epoch = epoch
            since_improved = 0
        else:
            since_improved += 1
            if since_improved > tc.early_stop_patience:
                log.stopped_early = True
                break

    log.best_epoch = best_epoch
    return TrainResult(
        weights=best_weights, posteriors=best_posteriors, log=log, featurizer=featurizer
    )


# ---------------------------------------------------------------------------
# predictive inference


def mc_predict(
    weights: NetworkWeights,
    config: NetworkConfig,
    kernel,
    posteriors,
    x,
    t_samples: int,
    seed: int,
    mode: str = "sample",
) -> PredictiveSummary:
    """Average T stochastic passes on the kernel-mapped input.

    Each pass draws from its own counter-derived random stream, so the
    result depends only on (inputs, seed), never on scheduling. mode
    "sample" draws a fresh keep-probability per layer per pass;
    "posterior_mean" fixes it at the posterior mean (ablation).
    """
    if t_samples < 1:
        raise ValidationError(f"T must be >= 1, got {t_samples}")
    if mode not in ("sample", "posterior_mean"):
        raise ValidationError(f"unknown mode {mode!r}")
    featurizer = _resolve_featurizer(kernel)
    phi = featurizer.transform(np.asarray(x, dtype=np.float64))
    if phi.shape != (config.layer_widths[0],):
        raise ValidationError(
            f"kernel output shape {phi.shape} does not match network input width "
            f"{config.layer_widths[0]}"
        )
    mean_probs = [p.mean for p in posteriors]

    streams = seed_seq(seed).spawn(t_samples)
    mask_rows = [np.empty((t_samples, config.layer_widths[i])) for i in range(config.n_layers)]
    for t_i, child in enumerate(streams):
        rng = np.random.default_rng(child)
        kp = sample_keep_probs(posteriors, rng) if mode == "sample" else mean_probs
        for i in range(config.n_layers):
            mask_rows[i][t_i] = rng.random(config.layer_widths[i]) < kp[i]

    x_rows = np.broadcast_to(phi, (t_samples, phi.shape[0]))
    logits = _forward_logits(weights, config, x_rows, mask_rows)
    return PredictiveSummary.from_samples(_softmax(logits))


# ---------------------------------------------------------------------------
# exact enumeration oracle


def _enumeration_sites(config: NetworkConfig, fixed_keep_probs):
    """(layer, unit) sites whose keep-prob is strictly inside (0, 1)."""
    if len(fixed_keep_probs) != config.n_layers:
        raise ValidationError(
            f"need one keep probability per layer ({config.n_layers}), "
            f"got {len(fixed_keep_probs)}"
        )
    sites = []
    for i, p in enumerate(fixed_keep_probs):
        if not (0.0 <= p <= 1.0):
            raise ValidationError(f"keep probability {p} outside [0, 1]")
        if 0.0 < p < 1.0:
            sites.extend((i, u) for u in range(config.layer_widths[i]))
    return sites


def enumerate_distribution(
    weights: NetworkWeights,
    config: NetworkConfig,
    x,
    fixed_keep_probs,
    pre_softmax: bool = False,
):
    """Exact mean and variance of the masked output over all mask combinations.

    Sites with keep-prob exactly 0 or 1 are deterministic and not
    branched on. Stochastic sites are capped at 20.
    """
    weights.validate_against(config)
    x = np.asarray(x, dtype=np.float64)
    sites = _enumeration_sites(config, fixed_keep_probs)
    n_sites = len(sites)
    if n_sites > ENUMERATION_SITE_LIMIT:
        raise CapabilityError(
            f"enumeration over {n_sites} stochastic mask sites exceeds the "
            f"{ENUMERATION_SITE_LIMIT}-site bound"
        )

    base_masks = [
        np.full(config.layer_widths[i], 1.0 if fixed_keep_probs[i] >= 1.0 else 0.0)
        for i in range(config.n_layers)
    ]
    site_p = np.array([fixed_keep_probs[layer] for layer, _ in sites])

    total = 1 << n_sites
    mean = np.zeros(config.class_count)
    second = np.zeros(config.class_count)
    for lo in range(0, total, _ENUM_CHUNK):
        hi = min(lo + _ENUM_CHUNK, total)
        codes = np.arange(lo, hi, dtype=np.uint64)
        bits = (codes[:, None] >> np.arange(n_sites, dtype=np.uint64)) & 1
        bits = bits.astype(np.float64)
        w = np.prod(np.where(bits == 1.0, site_p, 1.0 - site_p), axis=1)

        mask_rows = [
            np.broadcast_to(base_masks[i], (hi - lo, config.layer_widths[i])).copy()
            for i in range(config.n_layers)
        ]
        for s, (layer, unit) in enumerate(sites):
            mask_rows[layer][:, unit] = bits[:, s]
        x_rows = np.broadcast_to(x, (hi - lo, x.shape[0]))
        out = _forward_logits(weights, config, x_rows, mask_rows)
        if not pre_softmax:
            out = _softmax(out)
        mean += w @ out
        second += w @ (out * out)
    var = np.maximum(second - mean * mean, 0.0)
    return mean, var


def enumerate_expectation(
    weights: NetworkWeights,
    config: NetworkConfig,
    x,
    fixed_keep_probs,
    pre_softmax: bool = False,
) -> np.ndarray:
    """Exact expectation of the (softmax or pre-softmax) output over all masks."""
    mean, _ = enumerate_distribution(weights, config, x, fixed_keep_probs, pre_softmax=pre_softmax)
    return mean


# ---------------------------------------------------------------------------
# gradient verification


def gradient_check(
    weights: NetworkWeights,
    config: NetworkConfig,
    x,
    y: int,
    mask: MaskDraw,
    epsilon: float = 1e-5,
) -> float:
    """Max relative gap between analytic and central finite-difference gradients.

    Masks are frozen. Relative to max(|analytic|, |numeric|, 1e-3): below
    that scale the comparison is absolute, where finite differences are
    noise-dominated.
    """
    if not (1e-7 <= epsilon <= 1e-3):
        raise ValidationError(f"epsilon must lie in [1e-7, 1e-3], got {epsilon}")
    x_rows = np.asarray(x, dtype=np.float64)[None, :]
    y_arr = np.array([y], dtype=np.int64)
    _, g_mats, g_biases = _loss_and_grads(weights, config, x_rows, y_arr, mask.masks)
    analytic = g_mats + g_biases
    params = weights.matrices + weights.biases

    worst = 0.0
    for p, g in zip(params, analytic):
        flat = p.reshape(-1)
        g_flat = g.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + epsilon
            up = _loss_only(weights, config, x_rows, y_arr, mask.masks)
            flat[j] = orig - epsilon
            down = _loss_only(weights, config, x_rows, y_arr, mask.masks)
            flat[j] = orig
            numeric = (up - down) / (2.0 * epsilon)
            denom = max(abs(g_flat[j]), abs(numeric), 1e-3)
            worst = max(worst, abs(g_flat[j] - numeric) / denom)
    return worst
