"""Independent oracles used by the tests.

Everything here is deliberately written by a different route than the
library code it checks: brute-force enumeration, fsum two-pass statistics,
memoized recursion, periodogram regression.
"""

import itertools
import math
from functools import lru_cache

import numpy as np


def fsum_rms(samples) -> float:
    """Two-pass mean-of-squares RMS with compensated summation."""
    samples = list(float(s) for s in samples)
    mean_sq = math.fsum(s * s for s in samples) / len(samples)
    return math.sqrt(mean_sq)


def octave_band_slope(waveform, f_lo=125.0, f_hi=4000.0) -> float:
    """dB-per-octave slope of mean periodogram power across octave bands."""
    psd = np.abs(np.fft.rfft(waveform.samples)) ** 2
    freqs = np.fft.rfftfreq(len(waveform.samples), d=1.0 / waveform.sample_rate_hz)
    centers = []
    fc = f_lo
    while fc <= f_hi * 1.0001:
        centers.append(fc)
        fc *= 2.0
    band_db = []
    for fc in centers:
        sel = (freqs >= fc / np.sqrt(2.0)) & (freqs < fc * np.sqrt(2.0))
        band_db.append(10.0 * np.log10(np.mean(psd[sel])))
    octaves = np.log2(np.asarray(centers) / centers[0])
    return float(np.polyfit(octaves, band_db, 1)[0])


def collapse_two_pass(path, blank) -> tuple:
    """Reference collapse: drop adjacent repeats first, then blanks."""
    deduped = []
    previous = object()
    for s in path:
        if s != previous:
            deduped.append(s)
        previous = s
    return tuple(s for s in deduped if s != blank)


def brute_force_ctc_loss(log_probs, labels) -> float:
    """-log sum over all full paths that collapse to the target."""
    num_frames, num_outputs = log_probs.shape
    blank = num_outputs - 1
    target = tuple(int(y) for y in labels)
    masses = []
    for path in itertools.product(range(num_outputs), repeat=num_frames):
        if collapse_two_pass(path, blank) == target:
            masses.append(math.exp(sum(log_probs[t, s] for t, s in enumerate(path))))
    if not masses:
        return math.inf
    return -math.log(math.fsum(masses))


def brute_force_ctc_posterior(log_probs, labels) -> np.ndarray:
    """Per-frame symbol occupancy by explicit path enumeration."""
    num_frames, num_outputs = log_probs.shape
    blank = num_outputs - 1
    target = tuple(int(y) for y in labels)
    gamma = np.zeros_like(log_probs)
    total = 0.0
    for path in itertools.product(range(num_outputs), repeat=num_frames):
        if collapse_two_pass(path, blank) != target:
            continue
        mass = math.exp(sum(log_probs[t, s] for t, s in enumerate(path)))
        total += mass
        for t, s in enumerate(path):
            gamma[t, s] += mass
    return gamma / total


def recursive_edit_distance(a, b) -> int:
    """Memoized top-down Levenshtein, unit costs."""
    a, b = tuple(a), tuple(b)

    @lru_cache(maxsize=None)
    def go(i, j):
        if i == len(a):
            return len(b) - j
        if j == len(b):
            return len(a) - i
        if a[i] == b[j]:
            return go(i + 1, j + 1)
        return 1 + min(go(i + 1, j), go(i, j + 1), go(i + 1, j + 1))

    return go(0, 0)


def simulate_patience_controller(wer_trace, patience, num_stages, max_epochs):
    """Plain-loop reference for the stage automaton.

    Returns the list of decisions, one per epoch of the trace.
    """
    decisions = []
    stage = 0
    best = math.inf
    bad = 0
    for epoch, wer in enumerate(wer_trace, start=1):
        if wer < best:
            best = wer
            bad = 0
        else:
            bad += 1
        if epoch >= max_epochs:
            decisions.append("terminate")
            break
        if bad == patience:
            if stage == num_stages - 1:
                decisions.append("terminate")
                break
            decisions.append("switch_stage")
            stage += 1
            best = math.inf
            bad = 0
        else:
            decisions.append("continue")
    return decisions
