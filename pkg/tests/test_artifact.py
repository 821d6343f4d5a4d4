import json

import numpy as np
import pytest

from betadrop import (
    BetaPosterior,
    BetaPrior,
    KernelSpec,
    ModelArtifact,
    NetworkConfig,
    Standardizer,
    ValidationError,
    init_network,
    load_model,
    save_model,
)


def make_artifact():
    cfg = NetworkConfig(
        layer_widths=[3, 5, 2],
        activation="tanh",
        keep_prior_per_layer=[BetaPrior(2.0, 3.0)] * 2,
        weight_decay=0.01,
        class_count=2,
    )
    return ModelArtifact(
        config=cfg,
        kernel_spec=KernelSpec(kind="squared"),
        standardizer=Standardizer(mean=np.array([0.5, -1.0, 2.0]), std=np.array([1.0, 2.0, 0.5])),
        weights=init_network(cfg, 42),
        posteriors=[BetaPosterior(2.0, 3.0, successes=10.0, failures=4.0)] * 2,
        seed=42,
    )


class TestModelArtifact:
    def test_roundtrip_exact(self, tmp_path):
        art = make_artifact()
        path = tmp_path / "model.json"
        save_model(path, art)
        back = load_model(path)
        assert back.config.to_dict() == art.config.to_dict()
        assert back.kernel_spec == art.kernel_spec
        np.testing.assert_array_equal(back.standardizer.mean, art.standardizer.mean)
        for a, b in zip(back.weights.matrices, art.weights.matrices):
            assert np.array_equal(a, b)
        assert back.posteriors == art.posteriors
        assert back.seed == 42

    def test_missing_standardizer_allowed(self, tmp_path):
        art = make_artifact()
        art.standardizer = None
        path = tmp_path / "model.json"
        save_model(path, art)
        assert load_model(path).standardizer is None

    def test_version_mismatch_rejected(self, tmp_path):
        art = make_artifact()
        path = tmp_path / "model.json"
        save_model(path, art)
        doc = json.loads(path.read_text())
        doc["format_version"] = 999
        path.write_text(json.dumps(doc))
        with pytest.raises(ValidationError, match="version"):
            load_model(path)

    def test_missing_version_rejected(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text("{}")
        with pytest.raises(ValidationError, match="version"):
            load_model(path)

    def test_garbage_rejected(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text("not json at all")
        with pytest.raises(ValidationError):
            load_model(path)

    def test_missing_file(self):
        with pytest.raises(FileNotFoundError):
            load_model("/nonexistent/model.json")
