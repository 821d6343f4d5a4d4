"""Compare feature maps (squared, identity, RBF random features,
Laplacian random features, tanh) on the same synthetic task.

Usage: python scripts/kernel_sweep.py [--out runs/kernel_sweep]
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from betadrop.cli import main as cli


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="runs/kernel_sweep")
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
            "hidden_widths = 16,8",
            "prior_alpha = 1000000",
            "prior_beta = 1",
            "learning_rate = 0.01",
            "max_epochs = 15",
            "repetitions = 3",
            f"seed = {args.seed}",
            "mc_samples = 50",
            "kernel_feature_count = 128",
            "kernel_bandwidth = 0.5",
        ]) + "\n"
    )
    code = cli(["sweep-kernels", "--config", str(cfg), "--out", str(out)])
    if code != 0:
        sys.exit(code)
    print((out / "sweep_kernels.csv").read_text().rstrip())


if __name__ == "__main__":
    main()
