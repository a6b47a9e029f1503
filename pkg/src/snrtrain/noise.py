"""Seeded pink and white noise generators.

Pink noise is shaped in the frequency domain: white Gaussian noise is
transformed with an FFT, every bin above DC is scaled by 1/sqrt(f), the DC
bin is zeroed, and the result is inverse-transformed and RMS-normalized.
The power spectral density then falls at ~3 dB per octave. White noise is
i.i.d. Gaussian, RMS-normalized, flat under the same estimator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio import Waveform
from .errors import DataError

KINDS = ("pink", "white")


@dataclass(frozen=True)
class NoiseSpec:
    kind: str
    length: int
    sample_rate_hz: int
    target_rms: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataError(f"unknown noise kind {self.kind!r}, expected one of {KINDS}")
        if self.length <= 0:
            raise DataError(f"noise length must be positive, got {self.length}")
        if self.target_rms <= 0:
            raise DataError(f"target RMS must be positive, got {self.target_rms}")


def generate_white(spec: NoiseSpec) -> Waveform:
    if spec.kind != "white":
        raise DataError(f"spec kind is {spec.kind!r}, expected 'white'")
    rng = np.random.default_rng(spec.seed)
    samples = rng.standard_normal(spec.length)
    samples *= spec.target_rms / float(np.sqrt(np.mean(np.square(samples))))
    return Waveform(samples, spec.sample_rate_hz)


def generate_pink(spec: NoiseSpec) -> Waveform:
    if spec.kind != "pink":
        raise DataError(f"spec kind is {spec.kind!r}, expected 'pink'")
    rng = np.random.default_rng(spec.seed)
    white = rng.standard_normal(spec.length)
    spectrum = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(spec.length, d=1.0 / spec.sample_rate_hz)
    spectrum[0] = 0.0
    spectrum[1:] /= np.sqrt(freqs[1:])
    samples = np.fft.irfft(spectrum, n=spec.length)
    samples *= spec.target_rms / float(np.sqrt(np.mean(np.square(samples))))
    return Waveform(samples, spec.sample_rate_hz)


def generate_noise(spec: NoiseSpec) -> Waveform:
    """Dispatch on spec.kind; output RMS equals spec.target_rms."""
    if spec.kind == "pink":
        return generate_pink(spec)
    return generate_white(spec)


def pink_pool_waveform(seconds: float, sample_rate_hz: int, seed: int) -> Waveform:
    """Convenience constructor for noise pools a few tens of seconds long."""
    length = int(round(seconds * sample_rate_hz))
    return generate_pink(NoiseSpec("pink", length, sample_rate_hz, seed=seed))


__all__ = [
    "NoiseSpec",
    "generate_noise",
    "generate_pink",
    "generate_white",
    "pink_pool_waveform",
]
