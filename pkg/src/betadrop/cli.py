"""Command-line harness: training, evaluation, sweeps, triage, rescoring,
synthetic data generation, and report rendering.

Configuration comes from a flat key=value file (# comments allowed);
command-line flags override file keys, which override defaults. Every
emitted CSV carries a config-hash column tying it to the exact run
configuration, and reruns with the same configuration are byte-identical.

Exit codes: 0 success, 2 validation error, 3 I/O error, 4 capability
error. Errors print one machine-parsable line on stderr.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import bayesnet as bn
from . import data as dt
from . import kernels as kn
from . import metrics as mx
from .artifact import ModelArtifact, load_model, save_model
from ._rng import seed_seq
from .errors import CapabilityError, ValidationError

SWEEP_PRIOR_DEFAULTS = (0.1, 0.001, 0.0001)
SWEEP_KERNEL_DEFAULTS = (
    "squared",
    "identity",
    "rbf_random_features",
    "laplacian_random_features",
    "sigmoid",
)

OUT_ROOT_ENV = "BETADROP_OUT"


def derive_seed(*parts: int) -> int:
    """Deterministic child seed from integer parts."""
    state = seed_seq(*parts).generate_state(1, dtype=np.uint64)
    return int(state[0])


# ---------------------------------------------------------------------------
# run configuration


@dataclass
class RunConfig:
    dataset: str | None = None
    kernel_kind: str = "squared"
    kernel_bandwidth: float = 1.0
    kernel_feature_count: int = 256
    kernel_seed: int = 0
    hidden_widths: tuple = (128, 64)
    activation: str = "relu"
    prior_alpha: float = 1e-4
    prior_beta: float = 1e-4
    weight_decay: float = 0.0
    tau: float = 1.0
    class_count: int = 2
    learning_rate: float = 2e-5
    adam_epsilon: float = 1e-8
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    max_epochs: int = 100
    early_stop_patience: int = 10
    early_stop_min_delta: float = 1e-4
    batch_size: int = 32
    posterior_decay: float = 0.999
    split_mode: str = "full_80_20"
    shots: int = 5
    folds: int = 5
    repetitions: int = 5
    seed: int = 0
    mc_samples: int = 100
    band_edges: tuple | None = None  # None = canonical default partition
    uncertain_lo: float = 0.45
    uncertain_hi: float = 0.55
    positive_class: int = 1
    out_dir: str | None = None

    def config_hash(self) -> str:
        """Hash of the experiment-defining fields (output location excluded)."""
        parts = []
        for f in sorted(fld.name for fld in fields(self)):
            if f == "out_dir":
                continue
            parts.append(f"{f}={getattr(self, f)!r}")
        return hashlib.sha256("\n".join(parts).encode("utf-8")).hexdigest()[:12]

    def band_spec(self) -> mx.BandSpec:
        if self.band_edges is None:
            return mx.BandSpec.default()
        return mx.BandSpec.from_edges(self.band_edges, (self.uncertain_lo, self.uncertain_hi))

    def train_config(self, rep_seed: int) -> bn.TrainConfig:
        return bn.TrainConfig(
            learning_rate=self.learning_rate,
            adam_epsilon=self.adam_epsilon,
            adam_beta1=self.adam_beta1,
            adam_beta2=self.adam_beta2,
            max_epochs=self.max_epochs,
            early_stop_patience=min(self.early_stop_patience, self.max_epochs),
            early_stop_min_delta=self.early_stop_min_delta,
            batch_size=self.batch_size,
            rng_seed=rep_seed,
            posterior_decay=self.posterior_decay,
        )

    def kernel_spec(self, input_dim: int) -> kn.KernelSpec:
        if self.kernel_kind in kn.RANDOM_FEATURE_KINDS:
            return kn.KernelSpec(
                kind=self.kernel_kind,
                bandwidth=self.kernel_bandwidth,
                feature_count=self.kernel_feature_count,
                rng_seed=self.kernel_seed,
                input_dim=input_dim,
            )
        return kn.KernelSpec(kind=self.kernel_kind)

    def network_config(self, d_in: int) -> bn.NetworkConfig:
        widths = [d_in, *self.hidden_widths, self.class_count]
        prior = bn.BetaPrior(self.prior_alpha, self.prior_beta)
        return bn.NetworkConfig(
            layer_widths=widths,
            activation=self.activation,
            keep_prior_per_layer=[prior] * (len(widths) - 1),
            tau=self.tau,
            weight_decay=self.weight_decay,
            class_count=self.class_count,
        )


_INT_KEYS = {
    "kernel_feature_count", "kernel_seed", "class_count", "max_epochs",
    "early_stop_patience", "batch_size", "shots", "folds", "repetitions",
    "seed", "mc_samples", "positive_class",
}
_FLOAT_KEYS = {
    "kernel_bandwidth", "prior_alpha", "prior_beta", "weight_decay", "tau",
    "learning_rate", "adam_epsilon", "adam_beta1", "adam_beta2",
    "early_stop_min_delta", "posterior_decay", "uncertain_lo", "uncertain_hi",
}
_STR_KEYS = {"dataset", "kernel_kind", "activation", "split_mode", "out_dir"}


def _parse_config_value(key: str, raw: str):
    raw = raw.strip()
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
        if key in _STR_KEYS:
            return raw
        if key == "hidden_widths":
            return tuple(int(v) for v in raw.split(",") if v.strip())
        if key == "band_edges":
            return tuple(float(v) for v in raw.split(",") if v.strip())
    except ValueError as exc:
        raise ValidationError(f"config key {key!r}: cannot parse {raw!r}: {exc}") from exc
    raise ValidationError(f"unknown config key {key!r}")


def read_config_file(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    out = {}
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValidationError(f"{path}:{line_no}: expected key = value")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.split(" #", 1)[0]  # allow trailing comments
        out[key] = _parse_config_value(key, raw)
    return out


def resolve_run_config(args: argparse.Namespace) -> RunConfig:
    rc = RunConfig()
    if getattr(args, "config", None):
        rc = replace(rc, **read_config_file(args.config))
    overrides = {}
    for flag, key in (
        ("dataset", "dataset"),
        ("seed", "seed"),
        ("out", "out_dir"),
        ("mc_samples", "mc_samples"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    if overrides:
        rc = replace(rc, **overrides)
    return rc


def _out_dir(rc: RunConfig, command: str) -> Path:
    if rc.out_dir:
        out = Path(rc.out_dir)
    else:
        out = Path(os.environ.get(OUT_ROOT_ENV, "runs")) / command
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# deterministic file writers


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: Path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    dt._atomic_write_text(path, buf.getvalue())


def write_json_doc(path: Path, doc: dict):
    dt._atomic_write_text(path, json.dumps(doc, sort_keys=True, indent=2) + "\n")


def _svg_bar_chart(path: Path, title: str, labels, series, y_max=None):
    """Minimal deterministic grouped bar chart. series: [(name, [values...])]."""
    width, height, margin = 640, 360, 50
    plot_w, plot_h = width - 2 * margin, height - 2 * margin
    n_groups = len(labels)
    n_series = max(1, len(series))
    values = [v for _, vals in series for v in vals if v is not None]
    top = y_max if y_max is not None else (max(values) if values else 1.0)
    top = top if top > 0 else 1.0
    palette = ("#4878a8", "#e49444", "#6a9f58", "#d1605e")
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="#333"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="#333"/>',
    ]
    group_w = plot_w / max(1, n_groups)
    bar_w = group_w * 0.8 / n_series
    for g, label in enumerate(labels):
        for s, (name, vals) in enumerate(series):
            v = vals[g]
            if v is None:
                continue
            bar_h = plot_h * (v / top)
            x = margin + g * group_w + group_w * 0.1 + s * bar_w
            y = height - margin - bar_h
            parts.append(
                f'<rect x="{x:.2f}" y="{y:.2f}" width="{bar_w:.2f}" height="{bar_h:.2f}" '
                f'fill="{palette[s % len(palette)]}"><title>{name}={v:.6g}</title></rect>'
            )
        parts.append(
            f'<text x="{margin + (g + 0.5) * group_w:.2f}" y="{height - margin + 16}" '
            f'text-anchor="middle" font-size="10">{label}</text>'
        )
    for s, (name, _) in enumerate(series):
        parts.append(
            f'<rect x="{width - margin - 120}" y="{margin + 16 * s}" width="10" height="10" '
            f'fill="{palette[s % len(palette)]}"/>'
            f'<text x="{width - margin - 105}" y="{margin + 16 * s + 9}" font-size="10">{name}</text>'
        )
    parts.append(f'<text x="12" y="{margin - 8}" font-size="10">max={top:.6g}</text>')
    parts.append("</svg>")
    dt._atomic_write_text(path, "\n".join(parts) + "\n")


# ---------------------------------------------------------------------------
# shared pipeline pieces


def predict_dataset(artifact: ModelArtifact, ds: dt.Dataset, t_samples: int, base_seed: int):
    """One PredictiveSummary per example, each from its own derived stream."""
    featurizer = artifact.featurizer
    return [
        bn.mc_predict(
            artifact.weights,
            artifact.config,
            featurizer,
            artifact.posteriors,
            ds.features[i],
            t_samples,
            seed=derive_seed(base_seed, i),
        )
        for i in range(len(ds))
    ]


def _fit_split_model(rc: RunConfig, split: dt.Split, feature_dim: int, rep_seed: int):
    """Train (or, zero-shot, just initialize) one model for one split."""
    spec = rc.kernel_spec(feature_dim)
    d_in = kn.kernel_output_dim(spec, feature_dim)
    config = rc.network_config(d_in)
    if len(split.train) == 0:
        weights = bn.init_network(config, rep_seed)
        posteriors = [bn.BetaPosterior.from_prior(p) for p in config.keep_prior_per_layer]
        log = bn.TrainingLog()
        standardizer = None
    else:
        featurizer = kn.Featurizer.fit(spec, split.train.features)
        result = bn.train(split.train, split.val, config, featurizer, rc.train_config(rep_seed))
        weights, posteriors, log = result.weights, result.posteriors, result.log
        standardizer = result.featurizer.standardizer
    artifact = ModelArtifact(
        config=config,
        kernel_spec=spec,
        standardizer=standardizer,
        weights=weights,
        posteriors=posteriors,
        seed=rep_seed,
    )
    return artifact, log


def _metrics_for_split(rc: RunConfig, artifact: ModelArtifact, test: dt.Dataset, eval_seed: int):
    summaries = predict_dataset(artifact, test, rc.mc_samples, eval_seed)
    preds = [s.predicted_class for s in summaries]
    probs = [float(s.mean_prob[rc.positive_class]) for s in summaries]
    report = mx.classification_metrics(
        preds, test.labels, positive_class=rc.positive_class, positive_probs=probs
    )
    return report, summaries


def run_experiment(rc: RunConfig):
    """Full split/train/eval loop; returns per-split reports and artifacts."""
    if not rc.dataset:
        raise ValidationError("no dataset configured; pass --dataset or set it in the config file")
    ds = dt.load_dataset(rc.dataset, class_count=rc.class_count)
    plan = dt.SplitPlan(
        mode=rc.split_mode,
        shots=rc.shots,
        folds=rc.folds,
        repetitions=rc.repetitions,
        seed=rc.seed,
    )
    splits = dt.make_splits(ds, plan)
    results = []
    for split in splits:
        fold = 0 if split.fold is None else split.fold + 1
        rep_seed = derive_seed(rc.seed, 101, split.repetition, fold)
        artifact, log = _fit_split_model(rc, split, ds.feature_dim, rep_seed)
        eval_seed = derive_seed(rc.seed, 202, split.repetition, fold)
        report, _ = _metrics_for_split(rc, artifact, split.test, eval_seed)
        results.append((split, artifact, log, report))
    return results


def _mean_row(reports) -> dict:
    keys = ("precision", "recall", "f1", "accuracy", "brier")
    return {k: float(np.mean([getattr(r, k) for r in reports])) for k in keys}


# ---------------------------------------------------------------------------
# commands


def cmd_synth(args) -> int:
    spec = dt.SynthSpec(
        n=args.n, dim=args.dim, class_separation=args.separation, seed=args.seed or 0
    )
    ds, true_probs = dt.synth_generate(spec)
    out_path = Path(args.out) if args.out else Path("runs/synth/dataset.jsonl")
    out_path.parent.mkdir(parents=True, exist_ok=True)
    dt.save_dataset(ds, out_path)
    sidecar = out_path.with_name(out_path.stem + ".true_probs.jsonl")
    dt.save_true_probs(ds.ids, true_probs, sidecar)
    print(f"wrote {out_path}")
    print(f"wrote {sidecar}")
    return 0


def cmd_train(args) -> int:
    rc = resolve_run_config(args)
    out = _out_dir(rc, "train")
    results = run_experiment(rc)
    chash = rc.config_hash()

    log_rows = []
    summary_rows = []
    reports = []
    for split, artifact, log, report in results:
        fold = "" if split.fold is None else split.fold
        name = f"model_rep{split.repetition}" + (f"_fold{split.fold}" if split.fold is not None else "")
        save_model(out / f"{name}.json", artifact)
        for rec in log.epochs:
            log_rows.append(
                [
                    chash, split.repetition, fold, rec.epoch,
                    rec.train_loss, rec.val_loss,
                    "|".join(repr(a) for a, _ in rec.posterior_state),
                    "|".join(repr(b) for _, b in rec.posterior_state),
                ]
            )
        summary_rows.append(
            [
                chash, split.repetition, fold, len(split.train), len(split.test),
                report.precision, report.recall, report.f1, report.accuracy, report.brier,
            ]
        )
        reports.append(report)
    mean = _mean_row(reports)
    summary_rows.append(
        [chash, "mean", "", "", "", mean["precision"], mean["recall"], mean["f1"],
         mean["accuracy"], mean["brier"]]
    )
    write_csv(
        out / "training_log.csv",
        ["config_hash", "repetition", "fold", "epoch", "train_loss", "val_loss",
         "posterior_alpha_d", "posterior_beta_d"],
        log_rows,
    )
    write_csv(
        out / "summary.csv",
        ["config_hash", "repetition", "fold", "n_train", "n_test",
         "precision", "recall", "f1", "accuracy", "brier"],
        summary_rows,
    )
    print(f"wrote {out / 'summary.csv'}")
    return 0


def _load_eval_pair(args):
    artifact = load_model(args.model)
    ds = dt.load_dataset(args.dataset, class_count=artifact.config.class_count)
    return artifact, ds


def _prediction_rows(chash, ds, summaries, positive_class):
    rows = []
    for i, s in enumerate(summaries):
        rows.append(
            [
                chash, ds.ids[i], int(ds.labels[i]), s.predicted_class,
                float(s.mean_prob[positive_class]), float(s.sample_variance[positive_class]),
            ]
        )
    return rows


_PRED_HEADER = ["config_hash", "id", "true_label", "predicted_label",
                "mean_prob_positive", "sample_variance_positive"]


def cmd_eval(args) -> int:
    rc = resolve_run_config(args)
    out = _out_dir(rc, "eval")
    artifact, ds = _load_eval_pair(args)
    chash = rc.config_hash()
    summaries = predict_dataset(artifact, ds, rc.mc_samples, derive_seed(rc.seed, 202))
    preds = [s.predicted_class for s in summaries]
    probs = [float(s.mean_prob[rc.positive_class]) for s in summaries]
    report = mx.classification_metrics(
        preds, ds.labels, positive_class=rc.positive_class, positive_probs=probs
    )
    write_csv(
        out / "metrics.csv",
        ["config_hash", "precision", "recall", "f1", "accuracy", "brier", "support"],
        [[chash, report.precision, report.recall, report.f1, report.accuracy,
          report.brier, report.support]],
    )
    write_csv(out / "predictions.csv", _PRED_HEADER,
              _prediction_rows(chash, ds, summaries, rc.positive_class))
    doc = {"kind": "metrics", "config_hash": chash, "report": report.to_dict()}
    write_json_doc(out / "metrics.json", doc)
    if args.format == "json":
        print(json.dumps(doc, sort_keys=True))
    else:
        print(f"wrote {out / 'metrics.csv'}")
    return 0


def cmd_predict(args) -> int:
    rc = resolve_run_config(args)
    out = _out_dir(rc, "predict")
    artifact, ds = _load_eval_pair(args)
    chash = rc.config_hash()
    summaries = predict_dataset(artifact, ds, rc.mc_samples, derive_seed(rc.seed, 202))
    write_csv(out / "predictions.csv", _PRED_HEADER,
              _prediction_rows(chash, ds, summaries, rc.positive_class))
    print(f"wrote {out / 'predictions.csv'}")
    return 0


def _sweep(rc: RunConfig, out: Path, variants, apply, filename: str, key_column: str) -> int:
    chash = rc.config_hash()
    rows = []
    for value in variants:
        rc_v = apply(rc, value)
        reports = [report for _, _, _, report in run_experiment(rc_v)]
        mean = _mean_row(reports)
        rows.append([chash, value, mean["f1"], mean["brier"]])
    write_csv(out / filename, ["config_hash", key_column, "f1", "brier"], rows)
    print(f"wrote {out / filename}")
    return 0


def cmd_sweep_priors(args) -> int:
    rc = resolve_run_config(args)
    out = _out_dir(rc, "sweep_priors")
    alphas = (
        [float(v) for v in args.alphas.split(",")] if args.alphas else list(SWEEP_PRIOR_DEFAULTS)
    )
    return _sweep(
        rc, out, alphas,
        lambda base, a: replace(base, prior_alpha=a, prior_beta=a),
        "sweep_priors.csv", "alpha",
    )


def cmd_sweep_kernels(args) -> int:
    rc = resolve_run_config(args)
    out = _out_dir(rc, "sweep_kernels")
    kinds = (
        [v.strip() for v in args.kinds.split(",") if v.strip()]
        if args.kinds
        else list(SWEEP_KERNEL_DEFAULTS)
    )
    return _sweep(
        rc, out, kinds,
        lambda base, kind: replace(base, kernel_kind=kind),
        "sweep_kernels.csv", "kernel",
    )


def cmd_triage(args) -> int:
    rc = resolve_run_config(args)
    out = _out_dir(rc, "triage")
    artifact, ds = _load_eval_pair(args)
    chash = rc.config_hash()
    bands = rc.band_spec()
    summaries = predict_dataset(artifact, ds, rc.mc_samples, derive_seed(rc.seed, 202))
    report = mx.bucket_predictions(
        summaries, ds.labels.tolist(), bands, ids=ds.ids, positive_class=rc.positive_class
    )
    write_csv(
        out / "triage.csv",
        ["config_hash", "band", "interval", "count", "correct", "accuracy", "is_uncertain"],
        [
            [chash, b.label, b.interval, b.count, b.correct, b.accuracy, b.is_uncertain]
            for b in report.bands
        ],
    )
    dt._atomic_write_text(
        out / "flagged_ids.txt",
        "".join(ex_id + "\n" for ex_id in report.flagged_ids),
    )
    _svg_bar_chart(
        out / "bands.svg",
        "predictions per probability band",
        [b.label for b in report.bands],
        [("count", [float(b.count) for b in report.bands])],
    )
    doc = {"kind": "triage", "config_hash": chash, "report": report.to_dict()}
    write_json_doc(out / "triage.json", doc)
    if args.format == "json":
        print(json.dumps(doc, sort_keys=True))
    else:
        print(f"wrote {out / 'triage.csv'} ({len(report.flagged_ids)} flagged)")
    return 0


def cmd_rescore(args) -> int:
    rc = resolve_run_config(args)
    out = _out_dir(rc, "rescore")
    artifact = load_model(args.model)
    paired = dt.load_paired(args.original, args.replacement)
    flagged_path = Path(args.flagged)
    if not flagged_path.exists():
        raise FileNotFoundError(f"flagged-ids file not found: {flagged_path}")
    flagged = [line.strip() for line in flagged_path.read_text(encoding="utf-8").splitlines()
               if line.strip()]
    known = set(paired.ids)
    dropped = [i for i in flagged if i not in known]
    if dropped:
        print(
            f"warning: {len(dropped)} flagged ids have no replacement features; skipping them",
            file=sys.stderr,
        )
    flagged = [i for i in flagged if i in known]
    chash = rc.config_hash()

    index = {ex_id: k for k, ex_id in enumerate(paired.ids)}
    featurizer = artifact.featurizer

    def _keyed(feature_matrix):
        keyed = {}
        for ex_id in flagged:
            k = index[ex_id]
            summary = bn.mc_predict(
                artifact.weights, artifact.config, featurizer, artifact.posteriors,
                feature_matrix[k], rc.mc_samples, seed=derive_seed(rc.seed, 303, k),
            )
            keyed[ex_id] = (summary, int(paired.labels[k]))
        return keyed

    report = mx.rescore_compare(
        _keyed(paired.features_original),
        _keyed(paired.features_replacement),
        flagged,
        positive_class=rc.positive_class,
    )
    if report.warning:
        print(f"warning: {report.warning}", file=sys.stderr)
    d = report.to_dict()
    header = ["config_hash"] + [k for k in d if k != "warning"]
    write_csv(out / "rescore.csv", header, [[chash] + [d[k] for k in header[1:]]])
    _svg_bar_chart(
        out / "rescore.svg",
        "flagged subset, before vs after replacement",
        ["accuracy", "brier"],
        [
            ("before", [report.accuracy_before, report.brier_before]),
            ("after", [report.accuracy_after, report.brier_after]),
        ],
        y_max=1.0,
    )
    doc = {"kind": "comparison", "config_hash": chash, "report": d}
    write_json_doc(out / "rescore.json", doc)
    if args.format == "json":
        print(json.dumps(doc, sort_keys=True))
    else:
        print(f"wrote {out / 'rescore.csv'}")
    return 0


def _render_report(doc: dict, fmt: str) -> str:
    kind = doc.get("kind")
    report = doc.get("report", {})
    if kind == "metrics":
        pairs = [(k, report[k]) for k in
                 ("precision", "recall", "f1", "accuracy", "brier", "support")]
    elif kind == "comparison":
        pairs = [(k, v) for k, v in report.items() if k != "warning"]
    elif kind == "triage":
        lines = []
        if fmt == "csv":
            buf = io.StringIO()
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(["band", "interval", "count", "correct", "accuracy", "is_uncertain"])
            for b in report["bands"]:
                writer.writerow([b["label"], b["interval"], b["count"], b["correct"],
                                 _cell(b["accuracy"]), b["is_uncertain"]])
            return buf.getvalue().rstrip("\n")
        for b in report["bands"]:
            acc = "-" if b["accuracy"] is None else f"{b['accuracy']:.4f}"
            flag = " <- uncertain" if b["is_uncertain"] else ""
            lines.append(
                f"{b['label']:>16} {b['interval']:>14} n={b['count']:<6} acc={acc}{flag}"
            )
        lines.append(f"flagged: {len(report['flagged_ids'])} of {report['total']}")
        return "\n".join(lines)
    else:
        raise ValidationError(f"unknown report kind {kind!r}")
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([k for k, _ in pairs])
        writer.writerow([_cell(v) for _, v in pairs])
        return buf.getvalue().rstrip("\n")
    width = max(len(k) for k, _ in pairs)
    return "\n".join(f"{k:>{width}} : {_cell(v)}" for k, v in pairs)


def cmd_report(args) -> int:
    path = Path(args.input)
    if not path.exists():
        raise FileNotFoundError(f"report file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not a valid report document: {exc}") from exc
    print(_render_report(doc, args.format or "text"))
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="betadrop",
        description="Monte Carlo dropout classifier with Beta keep-rate priors",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt_default="csv"):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--mc-samples", dest="mc_samples", type=int, default=None)
        p.add_argument("--format", choices=("csv", "json"), default=fmt_default)

    p = sub.add_parser("synth", help="generate a synthetic two-blob dataset")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--separation", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output dataset path (.jsonl)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train per the configured split plan")
    common(p)
    p.add_argument("--dataset", default=None)
    p.set_defaults(func=cmd_train)

    for name, func in (("eval", cmd_eval), ("predict", cmd_predict), ("triage", cmd_triage)):
        p = sub.add_parser(name)
        common(p)
        p.add_argument("--model", required=True)
        p.add_argument("--dataset", required=True)
        p.set_defaults(func=func)

    p = sub.add_parser("sweep-priors", help="train/eval once per symmetric Beta prior value")
    common(p)
    p.add_argument("--dataset", default=None)
    p.add_argument("--alphas", default=None, help="comma-separated alpha=beta values")
    p.set_defaults(func=cmd_sweep_priors)

    p = sub.add_parser("sweep-kernels", help="train/eval once per kernel kind")
    common(p)
    p.add_argument("--dataset", default=None)
    p.add_argument("--kinds", default=None, help="comma-separated kernel kinds")
    p.set_defaults(func=cmd_sweep_kernels)

    p = sub.add_parser("rescore", help="re-predict flagged ids on replacement features")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--original", required=True)
    p.add_argument("--replacement", required=True)
    p.add_argument("--flagged", required=True, help="file with one flagged id per line")
    p.set_defaults(func=cmd_rescore)

    p = sub.add_parser("report", help="render a JSON report document")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.set_defaults(func=cmd_report)

    return parser


def _fail(kind: str, exc: BaseException, code: int) -> int:
    msg = " ".join(str(exc).split())
    print(f"error: {kind}: {msg}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        return _fail("validation", exc, 2)
    except CapabilityError as exc:
        return _fail("capability", exc, 4)
    except OSError as exc:
        return _fail("io", exc, 3)
    except bn.TrainingDiverged as exc:
        return _fail("diverged", exc, 1)


if __name__ == "__main__":
    sys.exit(main())
