#!/usr/bin/env python3
"""Train curriculum / multi-condition / clean-only models on the synthetic
tone task and compare their WER at low test SNRs.

Example:
    python scripts/run_curriculum_comparison.py --seeds 1,2,3
"""

import argparse
import sys
import time

from snrtrain.experiments import ComparisonSpec, run_comparison


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", default="1,2,3",
                        help="comma-separated training seeds")
    parser.add_argument("--num-train", type=int, default=200)
    parser.add_argument("--num-dev", type=int, default=50)
    parser.add_argument("--num-test", type=int, default=50)
    parser.add_argument("--hidden-size", type=int, default=64)
    parser.add_argument("--patience", type=int, default=3)
    parser.add_argument("--learning-rate", type=float, default=2e-3)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args(argv)

    spec = ComparisonSpec(
        num_train=args.num_train,
        num_dev=args.num_dev,
        num_test=args.num_test,
        hidden_size=args.hidden_size,
        seeds=tuple(int(s) for s in args.seeds.split(",")),
        patience=args.patience,
        learning_rate=args.learning_rate,
        workers=args.workers,
    )
    start = time.time()
    result = run_comparison(spec, progress=print)
    print(f"\ntotal wall time {time.time() - start:.0f}s\n")
    for line in result.summary_lines():
        print(line)

    accan = result.low_snr_mean("accan")
    multicondition = result.low_snr_mean("multicondition")
    clean_at_0 = result.outcomes["clean_only"].mean_wer(0.0)
    print(f"\ncurriculum vs multicondition at low SNR: "
          f"{accan:.2f} vs {multicondition:.2f} "
          f"({'parity within slack' if accan <= multicondition + 2 else 'WORSE'})")
    print(f"clean-only at 0 dB: {clean_at_0:.2f} "
          f"(trained models better by "
          f"{clean_at_0 - result.outcomes['accan'].mean_wer(0.0):.1f} / "
          f"{clean_at_0 - result.outcomes['multicondition'].mean_wer(0.0):.1f} points)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
