"""Command-line surface: mix, featurize, train, score.

Exit codes: 0 success, 1 computational failure, 2 usage or input error.
All commands that draw randomness take an explicit seed; nothing reads the
wall clock.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import features, pem, trainer, wer
from .audio import (CLEAN, NoisePool, Waveform, measure_snr_db, mix_at_snr,
                    mixing_gain, read_wav, sample_segment_offset, segment_at,
                    write_wav)
from .curriculum import Schedule, grid_from_endpoints, parse_schedule_file
from .errors import ComputeError, DataError
from .noise import NoiseSpec, generate_pink
from .seeding import derive_seed, derived_rng
from .task import SyntheticTask, Utterance, make_corpus


def _parse_snr(text: str):
    if text == CLEAN:
        return CLEAN
    try:
        return float(text)
    except ValueError:
        raise DataError(f"--snr must be a dB value or '{CLEAN}', got {text!r}") from None


def cmd_mix(args) -> int:
    signal = read_wav(args.in_path)
    target = _parse_snr(args.snr)
    if args.noise == "pink":
        pool_wave = generate_pink(NoiseSpec("pink", len(signal),
                                            signal.sample_rate_hz, seed=args.seed))
        pool = NoisePool(pool_wave, pool_id="pink-synth")
    else:
        pool = NoisePool(read_wav(args.noise), pool_id=os.path.basename(args.noise))
    if target == CLEAN:
        mixed = mix_at_snr(signal, signal, CLEAN)
        print("gain=0 achieved_snr_db=clean")
    else:
        rng = derived_rng(args.seed, "mix")
        offset = sample_segment_offset(pool, len(signal), rng)
        segment = segment_at(pool, offset, len(signal))
        gain = mixing_gain(signal, segment, target)
        mixed = mix_at_snr(signal, segment, target)
        scaled = Waveform(gain * segment.samples, segment.sample_rate_hz)
        achieved = measure_snr_db(signal, scaled)
        print(f"gain={gain:.9g} noise_offset={offset} "
              f"achieved_snr_db={achieved:.9f}")
    write_wav(args.out_path, mixed, args.format)
    return 0


def cmd_featurize(args) -> int:
    waveform = read_wav(args.in_path)
    feats = features.featurize_waveform(waveform)
    if args.per_utt_stats:
        feats = features.normalize_per_utterance(feats)
    elif args.stats is not None:
        feats = features.normalize(feats, features.read_norm_stats(args.stats))
    if args.sigma > 0:
        if args.seed is None:
            raise DataError("--sigma > 0 requires --seed")
        feats = features.inject_gaussian(feats, args.sigma,
                                         derived_rng(args.seed, "inject"))
    features.write_feature_file(args.out_path, feats)
    checksum = pem.feature_checksum(np.ascontiguousarray(feats, dtype=np.float32))
    print(f"frames={feats.shape[0]} dim={feats.shape[1]} checksum={checksum}")
    return 0


def _schedule_from_config(section, base_dir: str) -> Schedule:
    if isinstance(section, str):
        path = section if os.path.isabs(section) else os.path.join(base_dir, section)
        if not os.path.exists(path):
            raise DataError(f"schedule file not found: {path}")
        return parse_schedule_file(path)
    kind = section.get("kind")
    if kind is None:
        raise DataError("schedule section needs a 'kind'")
    if "grid" in section:
        grid = tuple(CLEAN if v == CLEAN else float(v) for v in section["grid"])
    else:
        grid = grid_from_endpoints(float(section.get("snr_min", 0.0)),
                                   float(section.get("snr_max", 50.0)),
                                   float(section.get("snr_step", 5.0)))
    return Schedule(kind=kind, grid=grid,
                    patience=int(section.get("patience", 5)),
                    max_epochs=(int(section["max_epochs"])
                                if "max_epochs" in section else None))


def _corpus_from_config(section: dict, base_dir: str):
    kind = section.get("kind", "synthetic")
    if kind == "synthetic":
        task = SyntheticTask(
            min_symbols=int(section.get("min_symbols", 2)),
            max_symbols=int(section.get("max_symbols", 5)),
        )
        seed = int(section["seed"])
        train_corpus = make_corpus(task, int(section["num_train"]),
                                   derive_seed(seed, "train"))
        dev_corpus = make_corpus(task, int(section["num_dev"]),
                                 derive_seed(seed, "dev"), id_prefix="dev")
        return train_corpus, dev_corpus
    if kind == "wav-dir":
        return (_load_wav_dir(os.path.join(base_dir, section["train"])),
                _load_wav_dir(os.path.join(base_dir, section["dev"])))
    raise DataError(f"unknown corpus kind {kind!r}")


def _load_wav_dir(path):
    transcripts_path = os.path.join(path, "transcripts.tsv")
    if not os.path.isdir(path):
        raise DataError(f"corpus directory not found: {path}")
    if not os.path.exists(transcripts_path):
        raise DataError(f"missing transcripts file: {transcripts_path}")
    utterances = []
    with open(transcripts_path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            utt_id, words = parts[0], tuple(parts[1:])
            wav_path = os.path.join(path, f"{utt_id}.wav")
            if not os.path.exists(wav_path):
                raise DataError(f"missing audio file: {wav_path}")
            utterances.append(Utterance(utt_id, read_wav(wav_path), words))
    if not utterances:
        raise DataError(f"{transcripts_path}: no utterances listed")
    return tuple(utterances)


def _pool_from_config(section: dict, base_dir: str, sample_rate_hz: int) -> NoisePool:
    kind = section.get("kind")
    if kind == "pink":
        seconds = float(section.get("seconds", 60.0))
        seed = int(section["seed"])
        length = int(round(seconds * sample_rate_hz))
        return NoisePool(generate_pink(NoiseSpec("pink", length, sample_rate_hz,
                                                 seed=seed)),
                         pool_id=f"pink:{seed}")
    if kind == "wav":
        path = os.path.join(base_dir, section["path"])
        return NoisePool(read_wav(path), pool_id=os.path.basename(path))
    raise DataError(f"unknown noise kind {kind!r}; use 'pink' or 'wav'")


def load_run_config(path) -> dict:
    if not os.path.exists(path):
        raise DataError(f"config file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        try:
            config = json.load(fh)
        except json.JSONDecodeError as err:
            raise DataError(f"{path}: invalid JSON: {err}") from None
    for key in ("master_seed", "out_dir", "corpus", "noise", "schedule"):
        if key not in config:
            raise DataError(f"{path}: missing required key {key!r}")
    return config


def cmd_train(args) -> int:
    config = load_run_config(args.config)
    base_dir = os.path.dirname(os.path.abspath(args.config))
    train_corpus, dev_corpus = _corpus_from_config(config["corpus"], base_dir)
    sample_rate = train_corpus[0].waveform.sample_rate_hz
    pool = _pool_from_config(config["noise"], base_dir, sample_rate)
    schedule = _schedule_from_config(config["schedule"], base_dir)
    section = config.get("trainer", {})
    train_config = trainer.TrainConfig(
        master_seed=int(config["master_seed"]),
        learning_rate=float(section.get("learning_rate", 1e-3)),
        batch_size=int(section.get("batch_size", 16)),
        dropout=float(section.get("dropout", 0.3)),
        hidden_size=int(section.get("hidden_size", 64)),
        gauss_sigma=float(config.get("features", {}).get("gauss_sigma", 0.6)),
        overlap_generation=bool(section.get("overlap_generation", True)),
        workers=args.workers,
        materialize_features=bool(section.get("materialize_features", False)),
    )
    out_dir = config["out_dir"]
    if not os.path.isabs(out_dir):
        out_dir = os.path.join(base_dir, out_dir)
    result = trainer.train(train_corpus, dev_corpus, schedule, pool, train_config,
                           out_dir=out_dir, stop_after=args.stop_after)
    print(f"status={result.status} epochs={result.epochs_run} "
          f"stages_entered={result.stage_entry_count} "
          f"final_dev_wer={result.dev_wers[-1]:.4f}")
    print(f"out_dir={out_dir}")
    return 0


def cmd_score(args) -> int:
    refs = wer.read_transcripts(args.ref)
    hyps = wer.read_transcripts(args.hyp)
    if not args.by_condition:
        overall = wer.corpus_wer(refs, hyps)
        print(f"wer={overall:.4f}")
        return 0
    points = wer.wer_by_condition(refs, hyps)
    aggregates = wer.aggregate_ranges(points, prose_full=args.prose_full)
    baseline_values = None
    baseline_name = ""
    if args.baseline is not None:
        with open(args.baseline, encoding="utf-8") as fh:
            baseline_values = wer.parse_report_values(fh.read())
        baseline_name = args.baseline
    report = wer.format_report(points, aggregates, baseline_values, baseline_name)
    if args.out is not None:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report)
    print(report, end="")
    return 0


FORMATS_HELP = """\
file formats (byte-exact):
  WAV         mono; 16-bit PCM (internal value = sample/32768) or 32-bit float
  FEAT        magic "FEAT" | u16 version=1 | u32 frames | u32 dim=123, then
              frames*dim row-major little-endian float32. Stats files use the
              same layout with exactly 2 rows: mean then std.
  checkpoint  magic "CKPT" | u16 version=1 | u32 input_dim | u32 hidden |
              u32 outputs | u64 init_seed | u32 epoch | u64 param_count, then
              little-endian float32 parameters in the order
              w_in, w_rec, b_rec, w_out, b_out.
  manifest    line 1 "# pem-manifest v1", "# epoch=<N>", "# config=<hex16>",
              then one utterance per line:
              id<TAB>offset<TAB>snr<TAB>seed<TAB>checksum
              (snr is a dB number or "clean"; checksum is 16 hex digits over
              the float32 little-endian feature bytes).
  transcripts one utterance per line: "<utt_id> <word> <word> ...". For
              per-condition scoring, ids carry "@<dB>" or "@clean" tags.
  schedule    declarative text, "key = value" per line, '#' comments; keys:
              kind, snr_min, snr_max, snr_step, patience, max_epochs.
  experiment  JSON with keys master_seed, out_dir, corpus, noise, schedule,
              and optional features / trainer sections; schedule may also be
              a path to a schedule text file.
"""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="snrtrain",
        description="SNR-controlled noise mixing and curriculum training toolkit",
        epilog=FORMATS_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_mix = sub.add_parser("mix", help="mix a WAV with noise at an exact SNR")
    p_mix.add_argument("--in", dest="in_path", required=True, metavar="WAV")
    p_mix.add_argument("--noise", required=True,
                       help="noise WAV path, or 'pink' to synthesize")
    p_mix.add_argument("--snr", required=True,
                       help=f"target SNR in dB, or '{CLEAN}'")
    p_mix.add_argument("--seed", type=int, required=True)
    p_mix.add_argument("--out", dest="out_path", required=True, metavar="WAV")
    p_mix.add_argument("--format", choices=("float32", "int16"), default="float32")
    p_mix.set_defaults(func=cmd_mix)

    p_feat = sub.add_parser("featurize",
                            help="extract 123-dim filterbank features to a FEAT file")
    p_feat.add_argument("--in", dest="in_path", required=True, metavar="WAV")
    p_feat.add_argument("--stats", default=None,
                        help="stats FEAT file (mean/std rows) to normalize with")
    p_feat.add_argument("--per-utt-stats", action="store_true",
                        help="normalize by this utterance's own statistics")
    p_feat.add_argument("--sigma", type=float, default=0.0,
                        help="feature-level Gaussian injection std")
    p_feat.add_argument("--seed", type=int, default=None)
    p_feat.add_argument("--out", dest="out_path", required=True, metavar="FEAT")
    p_feat.set_defaults(func=cmd_featurize)

    p_train = sub.add_parser("train", help="run a training experiment from a config")
    p_train.add_argument("--config", required=True, metavar="JSON")
    p_train.add_argument("--workers", type=int, default=1,
                         help="intra-epoch generation parallelism")
    p_train.add_argument("--stop-after", type=int, default=None, metavar="N",
                         help="checkpoint and exit after N epochs (resume later)")
    p_train.set_defaults(func=cmd_train)

    p_score = sub.add_parser("score", help="score hypotheses against references")
    p_score.add_argument("--ref", required=True)
    p_score.add_argument("--hyp", required=True)
    p_score.add_argument("--by-condition", action="store_true",
                         help="per-condition WER plus range aggregates "
                              "(ids tagged like utt@0, utt@clean)")
    p_score.add_argument("--prose-full", action="store_true",
                         help="14-point full-range mean (clean, 50..-10 dB)")
    p_score.add_argument("--baseline", default=None,
                         help="baseline report for relative-improvement lines")
    p_score.add_argument("--out", default=None, help="also write the report here")
    p_score.set_defaults(func=cmd_score)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as err:
        print(f"error: file not found: {err.filename}", file=sys.stderr)
        return 2
    except DataError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except ComputeError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
