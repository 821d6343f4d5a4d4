"""Deterministic feature maps applied to input vectors before the network.

The default map is the elementwise square of standardized inputs. The
explicit degree-2 polynomial map, random-feature approximations of the
RBF and Laplacian kernels, tanh, and identity are provided for
comparison sweeps. Every map is a pure function of (spec, x): random
frequencies are regenerated from the spec's seed on each call and never
persisted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._rng import seed_seq
from .errors import CapabilityError, ValidationError

KERNEL_KINDS = (
    "identity",
    "squared",
    "poly2_explicit",
    "rbf_random_features",
    "laplacian_random_features",
    "sigmoid",
)

RANDOM_FEATURE_KINDS = ("rbf_random_features", "laplacian_random_features")

# explicit degree-2 monomial map is O(d^2); refuse beyond this
POLY2_MAX_DIM = 64

STD_FLOOR = 1e-8


@dataclass(frozen=True)
class KernelSpec:
    """Configuration of one feature map.

    ``bandwidth``, ``feature_count``, ``rng_seed`` and ``input_dim`` are
    only meaningful (and required) for the random-feature kinds;
    ``input_dim`` pins which dimension the frequency matrix is generated
    for, so a mismatched input is an error rather than a silent remap.
    """

    kind: str
    bandwidth: float | None = None
    feature_count: int | None = None
    rng_seed: int | None = None
    input_dim: int | None = None

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValidationError(f"unknown kernel kind {self.kind!r}")
        if self.kind in RANDOM_FEATURE_KINDS:
            if self.bandwidth is None or not (self.bandwidth > 0):
                raise ValidationError(
                    f"kernel kind {self.kind!r} requires bandwidth > 0, got {self.bandwidth!r}"
                )
            if self.feature_count is None or self.feature_count < 1:
                raise ValidationError(
                    f"kernel kind {self.kind!r} requires feature_count >= 1, got {self.feature_count!r}"
                )
            if self.rng_seed is None:
                raise ValidationError(f"kernel kind {self.kind!r} requires rng_seed")
            if self.input_dim is None or self.input_dim < 1:
                raise ValidationError(
                    f"kernel kind {self.kind!r} requires input_dim >= 1, got {self.input_dim!r}"
                )

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "bandwidth": self.bandwidth,
            "feature_count": self.feature_count,
            "rng_seed": self.rng_seed,
            "input_dim": self.input_dim,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        return cls(
            kind=d["kind"],
            bandwidth=d.get("bandwidth"),
            feature_count=d.get("feature_count"),
            rng_seed=d.get("rng_seed"),
            input_dim=d.get("input_dim"),
        )


@dataclass
class Standardizer:
    """Per-dimension z-scoring statistics fitted on training rows only."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.std = np.asarray(self.std, dtype=np.float64)
        if self.mean.ndim != 1 or self.std.ndim != 1:
            raise ValidationError("standardizer mean/std must be 1-d vectors")
        if self.mean.shape != self.std.shape:
            raise ValidationError(
                f"standardizer mean dim {self.mean.shape[0]} != std dim {self.std.shape[0]}"
            )

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def transform(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.dim:
            raise ValidationError(
                f"standardizer fitted on dim {self.dim}, got input dim {x.shape[-1]}"
            )
        return (x - self.mean) / self.std

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        return cls(mean=np.array(d["mean"]), std=np.array(d["std"]))


def fit_standardizer(train_features) -> Standardizer:
    """Fit per-dimension mean/std on the given rows; std floored at 1e-8."""
    rows = list(train_features)
    if len(rows) == 0:
        raise ValidationError("cannot fit standardizer on empty input")
    dim = len(np.atleast_1d(np.asarray(rows[0])))
    for i, row in enumerate(rows):
        arr = np.atleast_1d(np.asarray(row, dtype=np.float64))
        if arr.shape != (dim,):
            raise ValidationError(
                f"ragged input: row {i} has dimension {arr.shape}, expected ({dim},)"
            )
        if not np.all(np.isfinite(arr)):
            raise ValidationError(f"non-finite value in row {i}")
    mat = np.asarray(rows, dtype=np.float64)
    mean = mat.mean(axis=0)
    std = mat.std(axis=0)
    std = np.maximum(std, STD_FLOOR)
    return Standardizer(mean=mean, std=std)


def kernel_output_dim(spec: KernelSpec, input_dim: int) -> int:
    """Dimension of kernel_map output for a given input dimension."""
    if spec.kind in ("identity", "squared", "sigmoid"):
        return input_dim
    if spec.kind == "poly2_explicit":
        if input_dim > POLY2_MAX_DIM:
            raise CapabilityError(
                f"poly2_explicit supports input dim <= {POLY2_MAX_DIM}, got {input_dim}"
            )
        return 1 + input_dim + input_dim * (input_dim + 1) // 2
    if spec.kind in RANDOM_FEATURE_KINDS:
        if input_dim != spec.input_dim:
            raise ValidationError(
                f"kernel fitted for input dim {spec.input_dim}, got {input_dim}"
            )
        return spec.feature_count
    raise ValidationError(f"unknown kernel kind {spec.kind!r}")


def _random_frequencies(spec: KernelSpec) -> tuple[np.ndarray, np.ndarray]:
    """Regenerate the (d x D) frequency matrix and D phases from the seed."""
    rng = np.random.default_rng(seed_seq(spec.rng_seed))
    d, n = spec.input_dim, spec.feature_count
    if spec.kind == "rbf_random_features":
        # target kernel exp(-gamma * ||x-y||^2); spectral density N(0, 2*gamma*I)
        freqs = rng.normal(0.0, np.sqrt(2.0 * spec.bandwidth), size=(d, n))
    else:
        # target kernel exp(-gamma * ||x-y||_1); per-coordinate Cauchy(0, gamma)
        freqs = rng.standard_cauchy(size=(d, n)) * spec.bandwidth
    phases = rng.uniform(0.0, 2.0 * np.pi, size=n)
    return freqs, phases


def _poly2(x: np.ndarray) -> np.ndarray:
    d = x.shape[-1]
    iu = np.triu_indices(d)
    if x.ndim == 1:
        cross = np.outer(x, x)[iu]
        return np.concatenate([[1.0], x, cross])
    cross = np.einsum("ni,nj->nij", x, x)[:, iu[0], iu[1]]
    ones = np.ones((x.shape[0], 1))
    return np.concatenate([ones, x, cross], axis=1)


def kernel_map(spec: KernelSpec, x) -> np.ndarray:
    """Apply the feature map to a standardized vector (or row matrix).

    Deterministic: identical (spec, x) always yields bit-identical output.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim not in (1, 2):
        raise ValidationError(f"kernel input must be a vector or row matrix, got ndim={x.ndim}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("non-finite value in kernel input")

    if spec.kind == "identity":
        return x.copy()
    if spec.kind == "squared":
        return x * x
    if spec.kind == "sigmoid":
        return np.tanh(x)
    if spec.kind == "poly2_explicit":
        d = x.shape[-1]
        if d > POLY2_MAX_DIM:
            raise CapabilityError(
                f"poly2_explicit supports input dim <= {POLY2_MAX_DIM}, got {d}"
            )
        return _poly2(x)
    if spec.kind in RANDOM_FEATURE_KINDS:
        if x.shape[-1] != spec.input_dim:
            raise ValidationError(
                f"kernel fitted for input dim {spec.input_dim}, got {x.shape[-1]}"
            )
        freqs, phases = _random_frequencies(spec)
        proj = x @ freqs + phases
        return np.sqrt(2.0 / spec.feature_count) * np.cos(proj)
    raise ValidationError(f"unknown kernel kind {spec.kind!r}")


@dataclass
class Featurizer:
    """Fitted preprocessing pipeline: z-score with training statistics, then kernel map."""

    spec: KernelSpec
    standardizer: Standardizer | None = None

    @classmethod
    def fit(cls, spec: KernelSpec, train_features) -> "Featurizer":
        return cls(spec=spec, standardizer=fit_standardizer(train_features))

    def transform(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self.standardizer is not None:
            x = self.standardizer.transform(x)
        return kernel_map(self.spec, x)

    def output_dim(self, input_dim: int) -> int:
        return kernel_output_dim(self.spec, input_dim)
