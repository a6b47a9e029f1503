"""Minimal recurrent acoustic model with hand-written backprop.

One tanh recurrent layer over 123-dim feature frames, a linear projection
to alphabet+blank logits, and log-softmax outputs. Dropout (inverted, on
the recurrent-layer output feeding the projection) is active only in train
mode. Parameters use Glorot uniform initialization from a fixed seed, so a
whole experiment is reproducible bit for bit.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import DataError

PARAM_ORDER = ("w_in", "w_rec", "b_rec", "w_out", "b_out")

CKPT_MAGIC = b"CKPT"
CKPT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    num_outputs: int
    input_dim: int = 123
    hidden_size: int = 64
    dropout: float = 0.3
    init_seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.dropout < 1.0):
            raise DataError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.num_outputs < 2:
            raise DataError("need at least one symbol plus blank")


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class RecurrentCtcModel:
    def __init__(self, config: ModelConfig):
        self.config = config
        rng = np.random.default_rng(config.init_seed)
        d, h, k = config.input_dim, config.hidden_size, config.num_outputs
        self.params = {
            "w_in": glorot_uniform(rng, d, h),
            "w_rec": glorot_uniform(rng, h, h),
            "b_rec": np.zeros(h),
            "w_out": glorot_uniform(rng, h, k),
            "b_out": np.zeros(k),
        }

    # --- forward / backward -------------------------------------------------

    def forward_batch(self, feature_list, train: bool = False,
                      rng: np.random.Generator | None = None):
        """Log-prob sequences for a batch of utterances.

        Returns (list of (T_i, K) arrays, cache-for-backward). Sequences are
        padded internally; padded frames never influence returned values or
        gradients computed from masked dlogits.
        """
        d, h = self.config.input_dim, self.config.hidden_size
        lengths = []
        for f in feature_list:
            f = np.asarray(f)
            if f.ndim != 2 or f.shape[1] != d:
                raise DataError(f"features must be (frames, {d}), got {f.shape}")
            lengths.append(f.shape[0])
        batch = len(feature_list)
        max_t = max(lengths)
        x = np.zeros((max_t, batch, d))
        for i, f in enumerate(feature_list):
            x[: lengths[i], i] = f

        dropout = self.config.dropout
        mask = None
        if train and dropout > 0.0:
            if rng is None:
                raise DataError("train-mode forward needs an rng for dropout")
            keep = 1.0 - dropout
            mask = (rng.random((max_t, batch, h)) < keep) / keep

        p = self.params
        hidden = np.zeros((max_t + 1, batch, h))
        logits = np.empty((max_t, batch, self.config.num_outputs))
        for t in range(max_t):
            a = x[t] @ p["w_in"] + hidden[t] @ p["w_rec"] + p["b_rec"]
            hidden[t + 1] = np.tanh(a)
            dropped = hidden[t + 1] if mask is None else hidden[t + 1] * mask[t]
            logits[t] = dropped @ p["w_out"] + p["b_out"]

        shift = logits.max(axis=2, keepdims=True)
        log_probs = logits - shift - np.log(
            np.sum(np.exp(logits - shift), axis=2, keepdims=True)
        )
        outputs = [log_probs[: lengths[i], i] for i in range(batch)]
        cache = (x, hidden, mask, lengths)
        return outputs, cache

    def forward(self, features, train: bool = False,
                rng: np.random.Generator | None = None) -> np.ndarray:
        outputs, _ = self.forward_batch([features], train=train, rng=rng)
        return outputs[0]

    def backward_batch(self, cache, dlogits_list) -> dict:
        """Parameter gradients given d(loss)/d(logits) per sequence."""
        x, hidden, mask, lengths = cache
        max_t, batch, _ = x.shape
        p = self.params
        dlogits = np.zeros((max_t, batch, self.config.num_outputs))
        for i, g in enumerate(dlogits_list):
            dlogits[: lengths[i], i] = g

        grads = {k: np.zeros_like(v) for k, v in p.items()}
        dh_carry = np.zeros((batch, self.config.hidden_size))
        for t in range(max_t - 1, -1, -1):
            h_t = hidden[t + 1]
            dropped = h_t if mask is None else h_t * mask[t]
            do = dlogits[t]
            grads["w_out"] += dropped.T @ do
            grads["b_out"] += do.sum(axis=0)
            dd = do @ p["w_out"].T
            dh = (dd if mask is None else dd * mask[t]) + dh_carry
            da = dh * (1.0 - h_t * h_t)
            grads["w_in"] += x[t].T @ da
            grads["w_rec"] += hidden[t].T @ da
            grads["b_rec"] += da.sum(axis=0)
            dh_carry = da @ p["w_rec"].T
        return grads

    # --- parameter bookkeeping ----------------------------------------------

    def copy_params(self) -> dict:
        return {k: v.copy() for k, v in self.params.items()}

    def set_params(self, params: dict) -> None:
        for k in PARAM_ORDER:
            if params[k].shape != self.params[k].shape:
                raise DataError(f"shape mismatch for {k}")
            self.params[k] = params[k].copy()

    def param_hash(self) -> str:
        digest = hashlib.blake2b(digest_size=8)
        for k in PARAM_ORDER:
            digest.update(self.params[k].astype(np.float64).tobytes())
        return digest.hexdigest()

    def num_params(self) -> int:
        return sum(v.size for v in self.params.values())

    # --- checkpoint file ------------------------------------------------------
    #
    # magic "CKPT" | version u16 | input u32 | hidden u32 | outputs u32
    # | init_seed u64 | epoch u32 | param_count u64
    # followed by all parameters as little-endian float32 in PARAM_ORDER.

    def save_checkpoint(self, path, epoch: int) -> None:
        c = self.config
        header = (
            CKPT_MAGIC
            + np.uint16(CKPT_VERSION).tobytes()
            + np.uint32(c.input_dim).tobytes()
            + np.uint32(c.hidden_size).tobytes()
            + np.uint32(c.num_outputs).tobytes()
            + np.uint64(c.init_seed & (2**64 - 1)).tobytes()
            + np.uint32(epoch).tobytes()
            + np.uint64(self.num_params()).tobytes()
        )
        with open(path, "wb") as fh:
            fh.write(header)
            for k in PARAM_ORDER:
                fh.write(np.ascontiguousarray(self.params[k], dtype="<f4").tobytes())


def load_checkpoint(path, dropout: float = 0.3):
    """Read a checkpoint; returns (model, epoch)."""
    with open(path, "rb") as fh:
        if fh.read(4) != CKPT_MAGIC:
            raise DataError(f"{path}: not a checkpoint file")
        version = int(np.frombuffer(fh.read(2), dtype="<u2")[0])
        if version != CKPT_VERSION:
            raise DataError(f"{path}: unsupported checkpoint version {version}")
        input_dim = int(np.frombuffer(fh.read(4), dtype="<u4")[0])
        hidden = int(np.frombuffer(fh.read(4), dtype="<u4")[0])
        outputs = int(np.frombuffer(fh.read(4), dtype="<u4")[0])
        seed = int(np.frombuffer(fh.read(8), dtype="<u8")[0])
        epoch = int(np.frombuffer(fh.read(4), dtype="<u4")[0])
        count = int(np.frombuffer(fh.read(8), dtype="<u8")[0])
        flat = np.frombuffer(fh.read(count * 4), dtype="<f4").astype(np.float64)
        if flat.size != count:
            raise DataError(f"{path}: truncated parameter block")
    config = ModelConfig(num_outputs=outputs, input_dim=input_dim,
                         hidden_size=hidden, dropout=dropout, init_seed=seed)
    model = RecurrentCtcModel(config)
    offset = 0
    for k in PARAM_ORDER:
        shape = model.params[k].shape
        size = model.params[k].size
        model.params[k] = flat[offset : offset + size].reshape(shape).copy()
        offset += size
    if offset != count:
        raise DataError(f"{path}: parameter count mismatch")
    return model, epoch


# --- Adam ---------------------------------------------------------------------


@dataclass
class AdamState:
    m: dict
    v: dict
    step: int = 0


def adam_init(params: dict) -> AdamState:
    return AdamState(
        m={k: np.zeros_like(p) for k, p in params.items()},
        v={k: np.zeros_like(p) for k, p in params.items()},
    )


def adam_step(params: dict, grads: dict, state: AdamState, *,
              learning_rate: float = 1e-3, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> None:
    """One bias-corrected Adam update, in place."""
    state.step += 1
    t = state.step
    for k in sorted(params):
        g = grads[k]
        state.m[k] = beta1 * state.m[k] + (1.0 - beta1) * g
        state.v[k] = beta2 * state.v[k] + (1.0 - beta2) * g * g
        m_hat = state.m[k] / (1.0 - beta1**t)
        v_hat = state.v[k] / (1.0 - beta2**t)
        params[k] -= learning_rate * m_hat / (np.sqrt(v_hat) + eps)
