"""End-to-end experiment on synthetic two-blob data: generate, train,
evaluate, triage uncertain predictions, then rescore them on features
shifted toward their class means. Prints where every artifact lands.

Usage: python scripts/synthetic_experiment.py [--out runs/synthetic] [--seed 0]
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from betadrop.cli import main as cli


def run(argv):
    code = cli(argv)
    if code != 0:
        sys.exit(code)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="runs/synthetic")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    ds = out / "dataset.jsonl"
    run(["synth", "--n", "2000", "--dim", "4", "--separation", "2.0",
         "--seed", str(args.seed), "--out", str(ds)])

    cfg = out / "run.cfg"
    cfg.write_text(
        "\n".join([
            f"dataset = {ds}",
            "kernel_kind = identity",
            "hidden_widths = 32,16",
            "prior_alpha = 1000000",
            "prior_beta = 1",
            "learning_rate = 0.01",
            "max_epochs = 30",
            "repetitions = 3",
            f"seed = {args.seed}",
            "mc_samples = 100",
        ]) + "\n"
    )
    run(["train", "--config", str(cfg), "--out", str(out / "train")])
    model = out / "train" / "model_rep0.json"
    run(["eval", "--config", str(cfg), "--model", str(model),
         "--dataset", str(ds), "--out", str(out / "eval")])
    run(["triage", "--config", str(cfg), "--model", str(model),
         "--dataset", str(ds), "--out", str(out / "triage")])

    # replacement features: flagged examples nudged toward their class mean
    flagged = set((out / "triage" / "flagged_ids.txt").read_text().split())
    rows = [json.loads(line) for line in ds.read_text().splitlines()]
    repl_rows = []
    for row in rows:
        vec = np.array(row["embedding"])
        if row["id"] in flagged:
            mean = np.zeros_like(vec)
            mean[0] = 1.0 if row["label"] == 1 else -1.0
            vec = vec + 0.8 * (mean - vec)
        repl_rows.append(json.dumps({"id": row["id"], "label": row["label"],
                                     "embedding": list(vec)}))
    repl = out / "replacement.jsonl"
    repl.write_text("\n".join(repl_rows) + "\n")

    run(["rescore", "--config", str(cfg), "--model", str(model),
         "--original", str(ds), "--replacement", str(repl),
         "--flagged", str(out / "triage" / "flagged_ids.txt"),
         "--out", str(out / "rescore")])
    run(["report", "--input", str(out / "rescore" / "rescore.json")])


if __name__ == "__main__":
    main()
