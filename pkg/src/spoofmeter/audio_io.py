"""WAV decoding and sample-rate conversion.

Only 16-bit mono PCM is accepted; evaluation corpora in this domain are
distributed that way, and silently mixing down stereo or rescaling other
bit depths would hide data errors.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import resample_poly

from .errors import (
    CorruptHeaderError,
    EmptySignalError,
    InvalidRateError,
    UnsupportedChannelsError,
    UnsupportedFormatError,
)

PCM16_SCALE = 32768.0

# Windowed-sinc polyphase resampler parameters.
TAPS_PER_PHASE = 64
KAISER_BETA = 8.555


@dataclass(frozen=True)
class AudioSignal:
    """Mono waveform: float64 amplitudes nominally in [-1, 1) plus a rate in Hz.

    Immutable after construction (the sample buffer is made read-only), so
    instances are safe to share across threads.
    """

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        if int(self.sample_rate) <= 0:
            raise InvalidRateError(
                f"sample rate must be positive, got {self.sample_rate}")
        samples = np.array(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("samples must be a one-dimensional sequence")
        if samples.size and not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite (no NaN/Inf)")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        """Length in seconds."""
        return len(self) / self.sample_rate


def read_wav(path) -> AudioSignal:
    """Decode a RIFF/WAVE file into an :class:`AudioSignal`.

    Integer samples are scaled by 1/32768 into [-1, 1); the sample count is
    preserved exactly. Raises :class:`UnsupportedFormatError` for non-PCM or
    non-16-bit encodings, :class:`UnsupportedChannelsError` for anything but
    mono, and :class:`CorruptHeaderError` for malformed containers.
    """
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise CorruptHeaderError(f"{path}: not a RIFF/WAVE file")

    fmt_chunk = None
    data_chunk = None
    pos = 12
    while pos + 8 <= len(raw):
        chunk_id = raw[pos:pos + 4]
        (size,) = struct.unpack_from("<I", raw, pos + 4)
        body = raw[pos + 8:pos + 8 + size]
        if len(body) < size:
            raise CorruptHeaderError(
                f"{path}: truncated {chunk_id!r} chunk "
                f"(declared {size} bytes, {len(body)} present)")
        if chunk_id == b"fmt ":
            fmt_chunk = body
        elif chunk_id == b"data":
            data_chunk = body
        pos += 8 + size + (size & 1)  # chunks are word-aligned

    if fmt_chunk is None:
        raise CorruptHeaderError(f"{path}: missing fmt chunk")
    if data_chunk is None:
        raise CorruptHeaderError(f"{path}: missing data chunk")
    if len(fmt_chunk) < 16:
        raise CorruptHeaderError(f"{path}: fmt chunk too short")

    audio_format, channels, sample_rate, _, _, bits = struct.unpack_from(
        "<HHIIHH", fmt_chunk, 0)
    if audio_format != 1:
        raise UnsupportedFormatError(
            f"{path}: audio format {audio_format}, only PCM (1) is supported")
    if channels != 1:
        raise UnsupportedChannelsError(
            f"{path}: {channels} channels, only mono is supported")
    if bits != 16:
        raise UnsupportedFormatError(
            f"{path}: {bits}-bit samples, only 16-bit PCM is supported")
    if sample_rate == 0:
        raise CorruptHeaderError(f"{path}: zero sample rate in header")

    n = len(data_chunk) // 2
    samples = np.frombuffer(data_chunk[:2 * n], dtype="<i2").astype(np.float64)
    return AudioSignal(samples / PCM16_SCALE, sample_rate)


def resample(signal: AudioSignal, target_rate: int) -> AudioSignal:
    """Convert ``signal`` to ``target_rate`` by polyphase windowed-sinc filtering.

    Uses a Kaiser-windowed sinc with :data:`TAPS_PER_PHASE` taps per phase and
    an anti-aliasing cutoff at the tighter of the two Nyquist limits. Equal
    input and output rates return ``signal`` unchanged (bit-exact passthrough).
    Output length is ``round(len * target / source)`` up to one sample.
    """
    if int(target_rate) <= 0:
        raise InvalidRateError(f"target rate must be positive, got {target_rate}")
    if len(signal) == 0:
        raise EmptySignalError("cannot resample an empty signal")
    target_rate = int(target_rate)
    if target_rate == signal.sample_rate:
        return signal

    g = math.gcd(target_rate, signal.sample_rate)
    up = target_rate // g
    down = signal.sample_rate // g
    out = resample_poly(signal.samples, up, down, window=_lowpass_taps(up, down))
    return AudioSignal(out, target_rate)


def _lowpass_taps(up: int, down: int) -> np.ndarray:
    # Filter operates at the upsampled rate; resample_poly scales it by `up`,
    # so a unit-DC-gain design is what we hand over.
    cutoff = min(1.0 / up, 1.0 / down)
    half = (TAPS_PER_PHASE * up) // 2
    n = np.arange(-half, half + 1)
    return cutoff * np.sinc(cutoff * n) * np.kaiser(2 * half + 1, KAISER_BETA)
