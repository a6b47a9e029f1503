#!/usr/bin/env python3
"""Set up a small ready-to-train experiment directory.

Writes an experiment config for a curriculum run on the synthetic tone
task, then prints the command to launch it.

Example:
    python scripts/make_demo_run.py demo/
    snrtrain train --config demo/experiment.json
"""

import argparse
import json
import os
import sys


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("directory", help="where to put the experiment")
    parser.add_argument("--schedule", default="accan",
                        choices=("accan", "accan_reversed", "multicondition"))
    parser.add_argument("--seed", type=int, default=1234)
    args = parser.parse_args(argv)

    os.makedirs(args.directory, exist_ok=True)
    config = {
        "master_seed": args.seed,
        "out_dir": "run",
        "corpus": {"kind": "synthetic", "seed": 0,
                   "num_train": 60, "num_dev": 20},
        "noise": {"kind": "pink", "seconds": 60.0, "seed": 7},
        "schedule": {"kind": args.schedule, "snr_min": 0, "snr_max": 50,
                     "snr_step": 5, "patience": 3, "max_epochs": 120},
        "features": {"gauss_sigma": 0.6},
        "trainer": {"hidden_size": 64, "learning_rate": 0.002,
                    "batch_size": 16, "dropout": 0.3},
    }
    path = os.path.join(args.directory, "experiment.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2)
        fh.write("\n")
    print(f"wrote {path}")
    print(f"run it with:  snrtrain train --config {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
