"""CTC loss, gradient, and best-path decoding over a character alphabet.

The loss is the negative log probability of all frame-level alignments
(with blanks) that collapse to the target sequence, computed with a
log-space forward recursion over the blank-extended target. The gradient
is taken with respect to pre-softmax logits, so its rows sum to zero.
Blank occupies the last output index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError

NEG_INF = -np.inf


@dataclass(frozen=True)
class LabelAlphabet:
    """Ordered label symbols; the CTC blank is the extra final index."""

    symbols: tuple[str, ...]

    def __post_init__(self):
        symbols = tuple(self.symbols)
        if len(set(symbols)) != len(symbols):
            raise DataError("alphabet symbols must be distinct")
        if not symbols:
            raise DataError("alphabet must not be empty")
        object.__setattr__(self, "symbols", symbols)

    @property
    def blank_index(self) -> int:
        return len(self.symbols)

    @property
    def num_outputs(self) -> int:
        return len(self.symbols) + 1

    def encode(self, words) -> list[int]:
        try:
            return [self.symbols.index(w) for w in words]
        except ValueError:
            unknown = [w for w in words if w not in self.symbols]
            raise DataError(f"labels outside alphabet: {unknown}") from None

    def decode(self, indices) -> list[str]:
        return [self.symbols[i] for i in indices]


def _check_log_probs(log_probs: np.ndarray) -> np.ndarray:
    log_probs = np.asarray(log_probs, dtype=np.float64)
    if log_probs.ndim != 2 or log_probs.shape[0] < 1 or log_probs.shape[1] < 2:
        raise DataError(f"log-prob sequence must be (T, symbols+1), got {log_probs.shape}")
    row_mass = np.logaddexp.reduce(log_probs, axis=1)
    if np.any(np.abs(row_mass) > 1e-6):
        raise DataError("log-prob rows must normalize to 1 (log-sum-exp 0 +/- 1e-6)")
    return log_probs


def _check_labels(labels, num_outputs: int) -> list[int]:
    labels = [int(y) for y in labels]
    blank = num_outputs - 1
    if any(y < 0 or y >= blank for y in labels):
        raise DataError(f"label indices must lie in [0, {blank}), got {labels}")
    return labels


def ctc_feasible(num_frames: int, labels) -> bool:
    """True when at least one alignment of length num_frames exists."""
    labels = list(labels)
    repeats = sum(1 for a, b in zip(labels, labels[1:]) if a == b)
    return num_frames >= len(labels) + repeats


def _extended(labels: list[int], blank: int) -> np.ndarray:
    z = np.full(2 * len(labels) + 1, blank, dtype=np.int64)
    z[1::2] = labels
    return z


def _shift(row: np.ndarray, by: int) -> np.ndarray:
    out = np.full_like(row, NEG_INF)
    out[by:] = row[:-by]
    return out


def _shift_back(row: np.ndarray, by: int) -> np.ndarray:
    out = np.full_like(row, NEG_INF)
    out[:-by] = row[by:]
    return out


@dataclass(frozen=True)
class CtcForward:
    """Forward-pass result: loss is +inf when feasible is False."""

    loss: float
    feasible: bool
    log_alpha: np.ndarray | None


def ctc_forward(log_probs: np.ndarray, labels) -> CtcForward:
    log_probs = _check_log_probs(log_probs)
    num_frames, num_outputs = log_probs.shape
    labels = _check_labels(labels, num_outputs)
    if not ctc_feasible(num_frames, labels):
        return CtcForward(math.inf, False, None)

    blank = num_outputs - 1
    z = _extended(labels, blank)
    ext = z.size
    # a skip z[s-2] -> z[s] is legal when z[s] is a fresh non-blank label
    skip_ok = np.zeros(ext, dtype=bool)
    if ext > 2:
        skip_ok[2:] = (z[2:] != blank) & (z[2:] != z[:-2])

    log_alpha = np.full((num_frames, ext), NEG_INF)
    log_alpha[0, 0] = log_probs[0, z[0]]
    if ext > 1:
        log_alpha[0, 1] = log_probs[0, z[1]]
    for t in range(1, num_frames):
        prev = log_alpha[t - 1]
        acc = np.logaddexp(prev, _shift(prev, 1))
        skip = _shift(prev, 2)
        acc = np.where(skip_ok, np.logaddexp(acc, skip), acc)
        log_alpha[t] = log_probs[t, z] + acc

    tail = log_alpha[-1, -1]
    if ext > 1:
        tail = np.logaddexp(tail, log_alpha[-1, -2])
    return CtcForward(float(-tail), True, log_alpha)


def ctc_loss(log_probs: np.ndarray, labels) -> float:
    """Negative log-likelihood; +inf when no alignment exists."""
    return ctc_forward(log_probs, labels).loss


def ctc_posterior(log_probs: np.ndarray, labels) -> np.ndarray:
    """Per-frame symbol occupancy gamma, shape like log_probs; rows sum to 1."""
    forward = ctc_forward(log_probs, labels)
    if not forward.feasible:
        raise DataError("no feasible alignment: target too long for frame count")
    log_probs = np.asarray(log_probs, dtype=np.float64)
    num_frames, num_outputs = log_probs.shape
    blank = num_outputs - 1
    labels = _check_labels(labels, num_outputs)
    z = _extended(labels, blank)
    ext = z.size
    skip_ok = np.zeros(ext, dtype=bool)
    if ext > 2:
        skip_ok[2:] = (z[2:] != blank) & (z[2:] != z[:-2])
    # beta[t, s]: log mass of completing from s at frame t, emission at t included
    log_beta = np.full((num_frames, ext), NEG_INF)
    log_beta[-1, -1] = log_probs[-1, z[-1]]
    if ext > 1:
        log_beta[-1, -2] = log_probs[-1, z[-2]]
    for t in range(num_frames - 2, -1, -1):
        nxt = log_beta[t + 1]
        acc = np.logaddexp(nxt, _shift_back(nxt, 1))
        skip = _shift_back(nxt, 2)
        from_here = np.zeros(ext, dtype=bool)
        from_here[:-2] = skip_ok[2:]
        acc = np.where(from_here, np.logaddexp(acc, skip), acc)
        log_beta[t] = log_probs[t, z] + acc

    log_total = -forward.loss
    occupancy = forward.log_alpha + log_beta - log_probs[:, z] - log_total
    gamma = np.zeros_like(log_probs)
    np.add.at(gamma, (slice(None), z), np.exp(occupancy))
    return gamma


def ctc_grad(log_probs: np.ndarray, labels) -> np.ndarray:
    """d(loss)/d(logits) under log_probs = log_softmax(logits); rows sum to 0."""
    gamma = ctc_posterior(log_probs, labels)
    return np.exp(np.asarray(log_probs, dtype=np.float64)) - gamma


def best_path_decode(log_probs: np.ndarray) -> list[int]:
    """Frame-wise argmax, collapse adjacent repeats, drop blanks.

    Argmax ties break toward the lower index.
    """
    log_probs = np.asarray(log_probs, dtype=np.float64)
    blank = log_probs.shape[1] - 1
    path = np.argmax(log_probs, axis=1)
    out: list[int] = []
    previous = -1
    for idx in path:
        if idx != previous and idx != blank:
            out.append(int(idx))
        previous = idx
    return out
