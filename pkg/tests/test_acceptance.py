"""Acceptance suite: one test per release criterion, each printing a
pass/fail line (run with `pytest -s tests/test_acceptance.py` to see them).

Every tolerance is pinned here; timing bounds are asserted with
time.monotonic. The suite is self-contained: all data is synthetic and
generated in-process.
"""

import math
import time

import numpy as np
import pytest

from betadrop import (
    BandSpec,
    BetaPosterior,
    BetaPrior,
    KernelSpec,
    NetworkConfig,
    SplitPlan,
    SynthSpec,
    TrainConfig,
    beta_update,
    brier_score,
    bucket_predictions,
    enumerate_distribution,
    enumerate_expectation,
    forward_deterministic,
    gradient_check,
    init_network,
    make_splits,
    mc_predict,
    rescore_compare,
    sample_masks,
    synth_generate,
    train,
)
from betadrop.cli import main as cli_main

IDENTITY = KernelSpec(kind="identity")


def report(name: str, ok: bool, detail: str = ""):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}"
    if detail:
        line += f"  ({detail})"
    print(line)
    assert ok, line


# ---------------------------------------------------------------------------
# shared trained model on the 2-blob calibration dataset


@pytest.fixture(scope="module")
def blobs():
    ds, true_probs = synth_generate(SynthSpec(n=4000, dim=2, class_separation=2.0, seed=11))
    split = make_splits(ds, SplitPlan(mode="full_80_20", repetitions=1, seed=11))[0]
    index = ds.index_of()
    test_rows = [index[i] for i in split.test.ids]
    return {
        "dataset": ds,
        "true_probs": true_probs,
        "split": split,
        "test_true_probs": true_probs[test_rows],
    }


@pytest.fixture(scope="module")
def calibrated_model(blobs):
    split = blobs["split"]
    config = NetworkConfig(
        layer_widths=[2, 16, 8, 2],
        activation="relu",
        keep_prior_per_layer=[BetaPrior(1e6, 1.0)] * 3,
        class_count=2,
    )
    tc = TrainConfig(
        learning_rate=0.01,
        max_epochs=40,
        early_stop_patience=8,
        rng_seed=11,
    )
    start = time.monotonic()
    result = train(split.train, split.val, config, IDENTITY, tc)
    elapsed = time.monotonic() - start
    summaries = [
        mc_predict(
            result.weights, config, result.featurizer, result.posteriors,
            split.test.features[i], 100, seed=1000 + i,
        )
        for i in range(len(split.test))
    ]
    return {
        "config": config,
        "result": result,
        "summaries": summaries,
        "train_seconds": elapsed,
    }


# ---------------------------------------------------------------------------
# criteria


def test_mask_enumeration_oracle():
    start = time.monotonic()
    config = NetworkConfig(
        layer_widths=[4, 10, 2],
        activation="relu",
        keep_prior_per_layer=[BetaPrior(1.0, 1.0)] * 2,
        class_count=2,
    )
    weights = init_network(config, 5)
    for m in weights.matrices:
        m *= 6.0
    x = np.array([1.0, -0.7, 0.4, 1.5])
    mean, var = enumerate_distribution(weights, config, x, [0.7, 0.7])
    posteriors = [BetaPosterior(0.7e12, 0.3e12)] * 2
    summary = mc_predict(weights, config, IDENTITY, posteriors, x, 20000, seed=99)
    se = np.sqrt(var / 20000)
    gaps = np.abs(summary.mean_prob - mean)
    elapsed = time.monotonic() - start
    report(
        "mask-enumeration oracle: MC mean within 3 SE of exact expectation",
        bool(np.all(gaps <= 3 * se)) and elapsed < 10.0,
        f"max gap/SE={float(np.max(gaps / se)):.2f}, {elapsed:.1f}s",
    )


def test_linear_net_closed_form():
    start = time.monotonic()
    config = NetworkConfig(
        layer_widths=[3, 4, 2],
        activation="linear",
        keep_prior_per_layer=[BetaPrior(1.0, 1.0)] * 2,
        class_count=2,
    )
    weights = init_network(config, 21)  # biases are zero at init
    x = np.array([0.9, -1.2, 0.3])
    p1, p2 = 0.6, 0.8
    enumerated = enumerate_expectation(weights, config, x, [p1, p2], pre_softmax=True)
    s1, s2 = 1 / math.sqrt(3), 1 / math.sqrt(4)
    closed = s2 * p2 * (weights.matrices[1] @ (s1 * p1 * (weights.matrices[0] @ x)))
    gap = float(np.max(np.abs(enumerated - closed)))
    elapsed = time.monotonic() - start
    report(
        "linear-net closed form: enumerated expected logits match product form",
        gap <= 1e-10 and elapsed < 1.0,
        f"max gap={gap:.2e}, {elapsed:.2f}s",
    )


def test_conjugacy_exactness():
    start = time.monotonic()
    rng = np.random.default_rng(7)
    all_equal = True
    for _ in range(1000):
        prior = BetaPosterior(
            float(10 ** rng.uniform(-4, 3)), float(10 ** rng.uniform(-4, 3))
        )
        steps = []
        for _ in range(rng.integers(1, 6)):
            draws = int(rng.integers(0, 200))
            steps.append((int(rng.integers(0, draws + 1)), draws))
        seq = prior
        for keeps, draws in steps:
            seq = beta_update(seq, keeps, draws)
        batch = beta_update(prior, sum(k for k, _ in steps), sum(d for _, d in steps))
        all_equal = all_equal and (seq == batch)
    elapsed = time.monotonic() - start
    report(
        "conjugacy exactness: 1000 sequential-vs-batch updates identical",
        all_equal and elapsed < 1.0,
        f"{elapsed:.2f}s",
    )


def test_gradient_correctness():
    start = time.monotonic()
    rng = np.random.default_rng(13)
    worst = 0.0
    checked = 0
    while checked < 50:
        widths = [int(rng.integers(2, 5)), int(rng.integers(3, 7)), int(rng.integers(2, 4))]
        activation = "relu" if checked % 2 == 0 else "tanh"
        config = NetworkConfig(
            layer_widths=widths,
            activation=activation,
            keep_prior_per_layer=[BetaPrior(1.0, 1.0)] * 2,
            weight_decay=float(rng.uniform(0, 0.05)),
            class_count=widths[-1],
        )
        weights = init_network(config, int(rng.integers(0, 10000)))
        keep = [float(rng.uniform(0.4, 0.95)) for _ in range(2)]
        mask = sample_masks(config, keep, rng)
        x = rng.normal(size=widths[0])
        if activation == "relu":
            # keep relu pre-activations away from the kink so central
            # differences stay two-sided
            z = (mask.masks[0] * x) @ (config.scale(0) * weights.matrices[0]).T
            if float(np.min(np.abs(z))) < 1e-4:
                continue
        y = int(rng.integers(0, widths[-1]))
        worst = max(worst, gradient_check(weights, config, x, y, mask, epsilon=1e-5))
        checked += 1
    elapsed = time.monotonic() - start
    report(
        "gradient correctness: 50 randomized nets, max relative error <= 1e-4",
        worst <= 1e-4 and elapsed < 30.0,
        f"max err={worst:.2e}, {elapsed:.1f}s",
    )


def test_brier_identities():
    perfect = brier_score([1.0, 0.0, 1.0], [1, 0, 1])
    half = brier_score([0.5] * 6, [1, 0, 0, 1, 1, 0])
    hand = brier_score([0.8, 0.3], [1, 0])
    ok = perfect == 0.0 and half == 0.25 and abs(hand - 0.065) <= 1e-12
    report(
        "Brier identities: perfect=0, constant-half=0.25, hand case=0.065",
        ok,
        f"perfect={perfect}, half={half}, hand={hand!r}",
    )


def test_synthetic_calibration(blobs, calibrated_model):
    start = time.monotonic()
    split = blobs["split"]
    summaries = calibrated_model["summaries"]
    model_probs = [float(s.mean_prob[1]) for s in summaries]
    model_brier = brier_score(model_probs, split.test.labels)
    bayes_brier = brier_score(blobs["test_true_probs"], split.test.labels)
    gap = abs(model_brier - bayes_brier)
    elapsed = time.monotonic() - start + calibrated_model["train_seconds"]
    report(
        "synthetic calibration: test Brier within 0.05 of Bayes-optimal",
        gap <= 0.05 and elapsed < 60.0,
        f"model={model_brier:.4f}, bayes={bayes_brier:.4f}, gap={gap:.4f}, {elapsed:.1f}s",
    )


def test_selective_prediction(blobs, calibrated_model):
    start = time.monotonic()
    split = blobs["split"]
    bands = BandSpec.default()
    triage = bucket_predictions(
        calibrated_model["summaries"], split.test.labels.tolist(), bands, ids=split.test.ids
    )
    by_label = {b.label: b for b in triage.bands}
    confident = [by_label["confident_low"], by_label["confident_high"]]
    conf_count = sum(b.count for b in confident)
    conf_acc = sum(b.correct for b in confident) / conf_count
    unc = by_label["uncertain"]
    unc_acc = unc.correct / unc.count
    elapsed = time.monotonic() - start
    report(
        "selective prediction: confident-band accuracy >= uncertain + 10 points",
        conf_acc - unc_acc >= 0.10 and unc.count > 0 and elapsed < 60.0,
        f"confident={conf_acc:.3f} (n={conf_count}), uncertain={unc_acc:.3f} "
        f"(n={unc.count}), {elapsed:.1f}s",
    )


def test_rescore_direction(blobs, calibrated_model):
    start = time.monotonic()
    split = blobs["split"]
    bands = BandSpec.default()
    summaries = calibrated_model["summaries"]
    triage = bucket_predictions(summaries, split.test.labels.tolist(), bands, ids=split.test.ids)
    flagged = triage.flagged_ids
    assert flagged, "construction should flag some borderline examples"

    config = calibrated_model["config"]
    result = calibrated_model["result"]
    index = {ex_id: i for i, ex_id in enumerate(split.test.ids)}
    class_means = np.zeros((2, 2))
    class_means[0, 0], class_means[1, 0] = -1.0, 1.0  # separation 2 along axis 0

    def summarize(features, tag):
        keyed = {}
        for ex_id in flagged:
            i = index[ex_id]
            s = mc_predict(
                result.weights, config, result.featurizer, result.posteriors,
                features[i], 100, seed=5000 + i,
            )
            keyed[ex_id] = (s, int(split.test.labels[i]))
        return keyed

    shifted = split.test.features.copy()
    for ex_id in flagged:
        i = index[ex_id]
        mean = class_means[split.test.labels[i]]
        shifted[i] = shifted[i] + 0.8 * (mean - shifted[i])

    comparison = rescore_compare(
        summarize(split.test.features, "before"), summarize(shifted, "after"), flagged
    )
    elapsed = time.monotonic() - start
    report(
        "rescore direction: flagged accuracy +10 points and Brier decreases",
        comparison.accuracy_delta >= 0.10 and comparison.brier_delta < 0 and elapsed < 60.0,
        f"acc {comparison.accuracy_before:.3f}->{comparison.accuracy_after:.3f}, "
        f"brier {comparison.brier_before:.3f}->{comparison.brier_after:.3f}, "
        f"n={comparison.flagged_count}, {elapsed:.1f}s",
    )


def test_prior_sweep_harness(tmp_path):
    start = time.monotonic()
    ds_path = tmp_path / "sweep_ds.jsonl"
    assert cli_main([
        "synth", "--n", "240", "--dim", "2", "--separation", "2.0",
        "--seed", "4", "--out", str(ds_path),
    ]) == 0
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text(
        "\n".join(
            [
                f"dataset = {ds_path}",
                "kernel_kind = identity",
                "hidden_widths = 8,4",
                "learning_rate = 0.01",
                "max_epochs = 4",
                "repetitions = 2",
                "seed = 2",
                "mc_samples = 20",
            ]
        )
        + "\n"
    )
    out1, out2 = tmp_path / "s1", tmp_path / "s2"
    assert cli_main(["sweep-priors", "--config", str(cfg), "--out", str(out1)]) == 0
    assert cli_main(["sweep-priors", "--config", str(cfg), "--out", str(out2)]) == 0
    table1 = (out1 / "sweep_priors.csv").read_bytes()
    rows = table1.decode().splitlines()
    alphas = [row.split(",")[1] for row in rows[1:]]
    elapsed = time.monotonic() - start
    report(
        "prior-sweep harness: 3-row table for alpha=beta in {0.1, 0.001, 0.0001}, "
        "byte-identical rerun",
        alphas == ["0.1", "0.001", "0.0001"]
        and table1 == (out2 / "sweep_priors.csv").read_bytes()
        and elapsed < 180.0,
        f"{elapsed:.1f}s",
    )


def test_degenerate_prior_equivalence():
    config = NetworkConfig(
        layer_widths=[3, 12, 2],
        activation="relu",
        keep_prior_per_layer=[BetaPrior(1.0, 1.0)] * 2,
        class_count=2,
    )
    weights = init_network(config, 8)
    posteriors = [BetaPosterior(1e12, 1.0)] * 2
    rng = np.random.default_rng(0)
    worst = 0.0
    for i in range(100):
        x = rng.normal(size=3)
        s = mc_predict(weights, config, IDENTITY, posteriors, x, 30, seed=i)
        det = forward_deterministic(weights, config, x)
        worst = max(worst, float(np.max(np.abs(s.mean_prob - det))))
    report(
        "degenerate-prior equivalence: Beta(1e12, 1) collapses MC to deterministic pass",
        worst <= 1e-6,
        f"max gap={worst:.2e}",
    )
