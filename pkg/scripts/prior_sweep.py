"""Sweep the symmetric Beta prior over keep-rates on synthetic data and
print the resulting F1/Brier table.

Usage: python scripts/prior_sweep.py [--alphas 0.1,0.001,0.0001] [--out runs/prior_sweep]
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from betadrop.cli import main as cli


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--alphas", default="0.1,0.001,0.0001")
    parser.add_argument("--out", default="runs/prior_sweep")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    ds = out / "dataset.jsonl"
    if cli(["synth", "--n", "1200", "--dim", "4", "--separation", "2.0",
            "--seed", str(args.seed), "--out", str(ds)]) != 0:
        sys.exit(1)
    cfg = out / "run.cfg"
    cfg.write_text(
        "\n".join([
            f"dataset = {ds}",
            "kernel_kind = identity",
            "hidden_widths = 16,8",
            "learning_rate = 0.01",
            "max_epochs = 15",
            "repetitions = 3",
            f"seed = {args.seed}",
            "mc_samples = 50",
        ]) + "\n"
    )
    code = cli(["sweep-priors", "--config", str(cfg), "--alphas", args.alphas,
                "--out", str(out)])
    if code != 0:
        sys.exit(code)
    print((out / "sweep_priors.csv").read_text().rstrip())


if __name__ == "__main__":
    main()
