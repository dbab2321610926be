#!/usr/bin/env python3
"""Average evaluation reports over ten seeded runs.

Trains and evaluates one model per seed (0..9) on an already simulated and
split dataset directory, then prints the mean and standard deviation of every
metric. Usage:

    python3 scripts/ten_run_average.py --cli build/tools/inf2vec \\
        --data out/haw5 --model-config configs/local_density.json \\
        --train-config configs/train_default.json --workdir out/haw5/runs
"""

import argparse
import json
import math
import pathlib
import subprocess
import sys


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cli", required=True, help="path to the inf2vec binary")
    ap.add_argument("--data", required=True, help="dataset directory (train/valid/test.jsonl)")
    ap.add_argument("--model-config", required=True)
    ap.add_argument("--train-config", required=True)
    ap.add_argument("--workdir", required=True, help="where checkpoints and reports go")
    ap.add_argument("--seeds", type=int, default=10, help="number of seeds (default 10)")
    args = ap.parse_args()

    workdir = pathlib.Path(args.workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    train_cfg = json.loads(pathlib.Path(args.train_config).read_text())

    reports = []
    for seed in range(args.seeds):
        cfg = dict(train_cfg)
        cfg["seed"] = seed
        cfg_path = workdir / f"train_seed{seed}.json"
        cfg_path.write_text(json.dumps(cfg))
        ckpt = workdir / f"ckpt_seed{seed}.bin"
        report = workdir / f"report_seed{seed}.json"
        subprocess.run(
            [args.cli, "train", "--data", args.data, "--model-config", args.model_config,
             "--train-config", str(cfg_path), "--out", str(ckpt)],
            check=True)
        subprocess.run(
            [args.cli, "evaluate", "--data", f"{args.data}/test.jsonl",
             "--ckpt", str(ckpt), "--out", str(report)],
            check=True)
        reports.append(json.loads(report.read_text()))
        print(f"seed {seed}: {reports[-1]}")

    keys = sorted({k for r in reports for k in r})
    print(f"\naveraged over {len(reports)} runs:")
    for key in keys:
        values = [r[key] for r in reports if key in r]
        mean = sum(values) / len(values)
        sd = math.sqrt(sum((v - mean) ** 2 for v in values) / len(values)) if len(values) > 1 else 0.0
        print(f"  {key}: {mean:.6f} +- {sd:.6f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
