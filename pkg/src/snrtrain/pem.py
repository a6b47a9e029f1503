"""Per-epoch noise mixing: fresh training data every epoch.

Every epoch regenerates the whole training set: each utterance gets a new
noise segment and a new SNR from the current stage set, is featurized,
normalized with frozen stats, and optionally perturbed with feature-level
Gaussian noise. All draws derive from a per-item seed
blake2b(master_seed, epoch_index, utterance_id), so any item regenerates
independently of thread count or scheduling, and a manifest records every
choice. Epoch data is discarded after training to a footprint of just the
manifest; a one-deep prefetch overlaps next-epoch generation with training
on the current epoch.
"""

from __future__ import annotations

import hashlib
import json
import os
import shutil
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import audio, curriculum, features
from .audio import CLEAN, NoisePool, mix_at_snr, segment_at
from .curriculum import Decision, StageController
from .errors import ComputeError, DataError
from .seeding import derive_seed

MANIFEST_HEADER = "# pem-manifest v1"


@dataclass(frozen=True)
class EpochConfig:
    epoch_index: int
    stage_snr_set: tuple
    master_seed: int
    gauss_sigma: float = 0.0
    noise_pool_id: str = "pool"
    corpus_id: str = "corpus"

    def __post_init__(self):
        if self.epoch_index < 0:
            raise DataError(f"epoch index must be >= 0, got {self.epoch_index}")
        object.__setattr__(self, "stage_snr_set", tuple(self.stage_snr_set))

    def config_hash(self) -> str:
        payload = json.dumps(
            {
                "stage": [str(v) for v in self.stage_snr_set],
                "master_seed": self.master_seed,
                "gauss_sigma": self.gauss_sigma,
                "pool": self.noise_pool_id,
                "corpus": self.corpus_id,
            },
            sort_keys=True,
        )
        return hashlib.blake2b(payload.encode(), digest_size=8).hexdigest()


def item_seed(master_seed: int, epoch_index: int, utt_id: str) -> int:
    return derive_seed(master_seed, "epoch", epoch_index, "utt", utt_id)


def injection_seed(master_seed: int, epoch_index: int, utt_id: str) -> int:
    return derive_seed(master_seed, "epoch", epoch_index, "inject", utt_id)


def feature_checksum(values: np.ndarray) -> str:
    """64-bit hash over the canonical float32 little-endian feature bytes."""
    payload = np.ascontiguousarray(values, dtype="<f4").tobytes()
    return hashlib.blake2b(payload, digest_size=8).hexdigest()


@dataclass(frozen=True)
class ManifestRecord:
    utt_id: str
    noise_offset: int
    snr: object  # float dB or the CLEAN sentinel
    inject_seed: int
    checksum: str

    def to_line(self) -> str:
        snr = CLEAN if self.snr == CLEAN else f"{float(self.snr):g}"
        return f"{self.utt_id}\t{self.noise_offset}\t{snr}\t{self.inject_seed}\t{self.checksum}"

    @staticmethod
    def from_line(line: str) -> "ManifestRecord":
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 5:
            raise DataError(f"manifest record needs 5 tab-separated fields: {line!r}")
        snr = parts[2] if parts[2] == CLEAN else float(parts[2])
        return ManifestRecord(parts[0], int(parts[1]), snr, int(parts[3]), parts[4])


@dataclass(frozen=True)
class EpochManifest:
    epoch_index: int
    config_hash: str
    records: tuple

    def to_text(self) -> str:
        lines = [
            MANIFEST_HEADER,
            f"# epoch={self.epoch_index}",
            f"# config={self.config_hash}",
        ]
        lines += [r.to_line() for r in self.records]
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_text(text: str) -> "EpochManifest":
        lines = text.splitlines()
        if not lines or lines[0] != MANIFEST_HEADER:
            raise DataError("not a pem manifest")
        meta = {}
        records = []
        for line in lines[1:]:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key] = value
            elif line.strip():
                records.append(ManifestRecord.from_line(line))
        return EpochManifest(int(meta["epoch"]), meta["config"], tuple(records))

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_text())

    @staticmethod
    def read(path) -> "EpochManifest":
        with open(path, "r", encoding="utf-8") as fh:
            return EpochManifest.from_text(fh.read())


class EpochData:
    """Materialized training data for one epoch; discardable, manifest kept."""

    def __init__(self, manifest: EpochManifest, feature_map: dict,
                 storage_dir=None):
        self.manifest = manifest
        self._features = feature_map
        self.storage_dir = storage_dir
        self.discarded = False

    def features_for(self, utt_id: str) -> np.ndarray:
        if self.discarded:
            raise DataError(f"epoch {self.manifest.epoch_index} already discarded")
        return self._features[utt_id]

    def utt_ids(self):
        return list(self._features)

    def discard(self) -> None:
        """Free all feature storage; keeps the manifest. Idempotent."""
        if self.discarded:
            return
        self._features = {}
        if self.storage_dir is not None and os.path.isdir(self.storage_dir):
            shutil.rmtree(self.storage_dir)
        self.discarded = True


def _render_item(cfg: EpochConfig, utterance, pool: NoisePool, stats):
    rng = np.random.default_rng(item_seed(cfg.master_seed, cfg.epoch_index,
                                          utterance.utt_id))
    offset = audio.sample_segment_offset(pool, len(utterance.waveform), rng)
    snr = curriculum.sample_snr(cfg.stage_snr_set, rng, allow_clean=True)
    return _render_from_choices(cfg, utterance, pool, stats, offset, snr)


def _render_from_choices(cfg: EpochConfig, utterance, pool, stats, offset, snr):
    if snr == CLEAN:
        mixed = utterance.waveform
    else:
        segment = segment_at(pool, offset, len(utterance.waveform))
        mixed = mix_at_snr(utterance.waveform, segment, snr)
    feats = features.featurize_waveform(mixed)
    feats = features.normalize(feats, stats)
    seed = injection_seed(cfg.master_seed, cfg.epoch_index, utterance.utt_id)
    if cfg.gauss_sigma > 0.0:
        feats = features.inject_gaussian(feats, cfg.gauss_sigma,
                                         np.random.default_rng(seed))
    rendered = np.ascontiguousarray(feats, dtype=np.float32)
    record = ManifestRecord(utterance.utt_id, offset, snr, seed,
                            feature_checksum(rendered))
    return rendered, record


def generate_epoch(cfg: EpochConfig, corpus, pool: NoisePool, stats,
                   storage_dir=None, workers: int = 1) -> EpochData:
    """Mix, featurize, normalize and (optionally) inject one whole epoch.

    Fully deterministic in (master_seed, epoch_index, utterance id); worker
    count only affects wall time. When storage_dir is given, one feature
    file per utterance is written under <storage_dir>/epoch_<index>/.
    """
    def render(utterance):
        try:
            return _render_item(cfg, utterance, pool, stats)
        except DataError as err:
            raise DataError(f"utterance {utterance.utt_id!r}: {err}") from err

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool_exec:
            rendered = list(pool_exec.map(render, corpus))
    else:
        rendered = [render(u) for u in corpus]

    feature_map = {u.utt_id: feats for u, (feats, _) in zip(corpus, rendered)}
    manifest = EpochManifest(cfg.epoch_index, cfg.config_hash(),
                             tuple(record for _, record in rendered))
    epoch_dir = None
    if storage_dir is not None:
        epoch_dir = os.path.join(storage_dir, f"epoch_{cfg.epoch_index:04d}")
        os.makedirs(epoch_dir, exist_ok=True)
        for utt_id, feats in feature_map.items():
            features.write_feature_file(os.path.join(epoch_dir, f"{utt_id}.feat"),
                                        feats.astype(np.float64))
    return EpochData(manifest, feature_map, epoch_dir)


def regenerate_item(manifest_record: ManifestRecord, cfg: EpochConfig, utterance,
                    pool: NoisePool, stats) -> np.ndarray:
    """Rebuild one utterance's features from its manifest record."""
    rendered, record = _render_from_choices(
        cfg, utterance, pool, stats, manifest_record.noise_offset,
        manifest_record.snr
    )
    if record.checksum != manifest_record.checksum:
        raise ComputeError(
            f"regeneration mismatch for {utterance.utt_id!r}: "
            f"{record.checksum} != {manifest_record.checksum}"
        )
    return rendered


def fit_epoch_stats(cfg: EpochConfig, corpus, pool: NoisePool,
                    workers: int = 1) -> features.NormStats:
    """Normalization stats over the raw (pre-normalization) features of one
    epoch's mixes, using exactly the epoch's seeded segment/SNR choices."""
    def raw(utterance):
        rng = np.random.default_rng(item_seed(cfg.master_seed, cfg.epoch_index,
                                              utterance.utt_id))
        offset = audio.sample_segment_offset(pool, len(utterance.waveform), rng)
        snr = curriculum.sample_snr(cfg.stage_snr_set, rng, allow_clean=True)
        if snr == CLEAN:
            mixed = utterance.waveform
        else:
            mixed = mix_at_snr(utterance.waveform,
                               segment_at(pool, offset, len(utterance.waveform)), snr)
        return features.featurize_waveform(mixed)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool_exec:
            mats = list(pool_exec.map(raw, corpus))
    else:
        mats = [raw(u) for u in corpus]
    return features.fit_norm_stats(mats)


@dataclass
class PipelineResult:
    status: str  # "terminated" | "stopped"
    epochs_completed: int
    max_live_epochs: int
    log_lines: list = field(default_factory=list)


def pipeline_run(controller: StageController, generate, consume, *,
                 checkpoint_provider=None, on_restore=None, overlap: bool = True,
                 start_epoch: int = 0, stop_after_epochs: int | None = None) -> PipelineResult:
    """Drive epochs through the controller with one-deep generation prefetch.

    generate(epoch_index, stage_set) must be pure; consume(epoch_index,
    EpochData) returns the epoch's dev metric. While an epoch trains, the
    next one is generated speculatively under the same stage set; on a stage
    switch the speculative epoch is discarded and regenerated, so results
    are identical to sequential execution. At most two epoch datasets are
    live at any instant.
    """
    checkpoint_provider = checkpoint_provider or (lambda: None)
    live = 0
    max_live = 0
    live_lock = threading.Lock()
    epochs_this_run = 0
    epoch = start_epoch

    def tracked_generate(index, stage_set):
        nonlocal live, max_live
        data = generate(index, stage_set)
        with live_lock:
            live += 1
            max_live = max(max_live, live)
        return data

    def drop(data):
        nonlocal live
        if data is not None and not data.discarded:
            data.discard()
            with live_lock:
                live -= 1

    executor = ThreadPoolExecutor(max_workers=1) if overlap else None
    status = "terminated"
    current = tracked_generate(epoch, controller.stage_set)
    try:
        while True:
            future = None
            if overlap:
                future = executor.submit(tracked_generate, epoch + 1,
                                         controller.stage_set)
            metric = consume(epoch, current)
            decision = controller.advance(metric, checkpoint_provider())

            speculative = None
            if future is not None:
                try:
                    speculative = future.result()
                except Exception as err:
                    drop(current)
                    raise ComputeError(
                        f"epoch {epoch + 1} generation failed: {err}"
                    ) from err
            drop(current)
            epochs_this_run += 1

            if decision is not Decision.CONTINUE and on_restore is not None:
                on_restore(controller.best_checkpoint)
            if decision is Decision.TERMINATE:
                drop(speculative)
                break
            if stop_after_epochs is not None and epochs_this_run >= stop_after_epochs:
                drop(speculative)
                status = "stopped"
                break

            epoch += 1
            if decision is Decision.SWITCH_STAGE:
                drop(speculative)
                current = tracked_generate(epoch, controller.stage_set)
            elif speculative is not None:
                current = speculative
            else:
                current = tracked_generate(epoch, controller.stage_set)
    finally:
        if executor is not None:
            executor.shutdown(wait=True)

    return PipelineResult(status, epochs_this_run, max_live,
                          list(controller.log_lines))
