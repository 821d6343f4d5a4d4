"""Self-describing model artifact file: one JSON document holding the
network config, kernel spec, standardizer, weights, keep-rate posteriors,
and the training seed. The version field is mandatory and checked."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .bayesnet import BetaPosterior, NetworkConfig, NetworkWeights
from .data import _atomic_write_text
from .errors import ValidationError
from .kernels import Featurizer, KernelSpec, Standardizer

FORMAT_VERSION = 1


@dataclass
class ModelArtifact:
    config: NetworkConfig
    kernel_spec: KernelSpec
    standardizer: Standardizer | None
    weights: NetworkWeights
    posteriors: list[BetaPosterior]
    seed: int

    @property
    def featurizer(self) -> Featurizer:
        return Featurizer(spec=self.kernel_spec, standardizer=self.standardizer)


def save_model(path, artifact: ModelArtifact):
    doc = {
        "format_version": FORMAT_VERSION,
        "seed": int(artifact.seed),
        "network_config": artifact.config.to_dict(),
        "kernel_spec": artifact.kernel_spec.to_dict(),
        "standardizer": artifact.standardizer.to_dict() if artifact.standardizer else None,
        "weights": artifact.weights.to_dict(),
        "posteriors": [p.to_dict() for p in artifact.posteriors],
    }
    _atomic_write_text(Path(path), json.dumps(doc, sort_keys=True) + "\n")


def load_model(path) -> ModelArtifact:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"model file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not a valid model file: {exc}") from exc
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ValidationError(
            f"{path}: model format version {version!r} not supported "
            f"(expected {FORMAT_VERSION})"
        )
    std = doc.get("standardizer")
    artifact = ModelArtifact(
        config=NetworkConfig.from_dict(doc["network_config"]),
        kernel_spec=KernelSpec.from_dict(doc["kernel_spec"]),
        standardizer=Standardizer.from_dict(std) if std else None,
        weights=NetworkWeights.from_dict(doc["weights"]),
        posteriors=[BetaPosterior.from_dict(p) for p in doc["posteriors"]],
        seed=int(doc["seed"]),
    )
    artifact.weights.validate_against(artifact.config)
    return artifact
