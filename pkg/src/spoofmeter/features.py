"""CQCC feature extraction.

Pipeline: constant-Q spectrogram -> floored log power -> cubic-spline
resampling of the geometric frequency axis onto a uniform grid -> orthonormal
DCT-II truncated to the requested cepstral order -> optional delta and
double-delta blocks -> optional per-utterance mean/variance normalization.

No speech-activity detection is applied anywhere: frame count depends only
on signal length and hop.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.fft import dct
from scipy.interpolate import CubicSpline

from .audio_io import AudioSignal
from .cqt import CqtConfig, CqtSpectrogram, cqt_spectrogram
from .errors import ConfigError, GridTooSmallError, TooFewBinsError

# Floor applied to squared magnitudes before the log. Silent frames stay
# finite without activity detection.
POWER_FLOOR = 1e-20

# Two-sided regression window for deltas (5-frame regression).
DELTA_WINDOW = 2

_CACHE_MAGIC = b"CQCCFEAT"
_CACHE_VERSION = 1


@dataclass(frozen=True)
class CqccConfig:
    """Front-end shape: cepstral order, energy coefficient, block selection.

    The output dimension is ``(num_ceps + include_zeroth)`` times the number
    of enabled blocks; at least one of static/delta/double-delta must be on.
    Defaults give the delta+double-delta front end without normalization.
    """

    num_ceps: int = 29
    include_zeroth: bool = False
    use_static: bool = False
    use_delta: bool = True
    use_delta2: bool = True
    apply_cmvn: bool = False
    resample_period: int = 16

    def __post_init__(self):
        if self.num_ceps < 1:
            raise ConfigError("num_ceps must be >= 1")
        if self.resample_period < 1:
            raise ConfigError("resample_period must be >= 1")
        if not (self.use_static or self.use_delta or self.use_delta2):
            raise ConfigError(
                "at least one of use_static/use_delta/use_delta2 must be enabled")

    @property
    def n_blocks(self) -> int:
        return int(self.use_static) + int(self.use_delta) + int(self.use_delta2)

    @property
    def output_dim(self) -> int:
        return (self.num_ceps + int(self.include_zeroth)) * self.n_blocks


@dataclass(frozen=True)
class FeatureMatrix:
    """Per-utterance frames-by-dimensions feature array plus its source id."""

    frames: np.ndarray
    source_id: str = ""

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 2:
            raise ValueError("frames must be a 2-D array")
        if frames.size and not np.all(np.isfinite(frames)):
            raise ValueError("feature entries must be finite")
        object.__setattr__(self, "frames", frames)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def dim(self) -> int:
        return self.frames.shape[1]


def log_power(spec: CqtSpectrogram, floor: float = POWER_FLOOR) -> np.ndarray:
    """log(max(magnitude^2, floor)), same shape as the spectrogram."""
    if floor <= 0.0:
        raise ConfigError("power floor must be positive")
    return np.log(np.maximum(spec.magnitudes ** 2, floor))


def default_grid_size(center_freqs, period: int) -> int:
    """Uniform grid length for a geometric axis: ceil(d * 2**(octaves - 1)).

    The sampling period is anchored to the lowest octave, so ``period``
    points cover it and each higher octave doubles the count.
    """
    center_freqs = np.asarray(center_freqs, dtype=np.float64)
    octaves = math.log2(center_freqs[-1] / center_freqs[0])
    return max(2, math.ceil(period * 2.0 ** (octaves - 1.0)))


def uniform_resample(log_spec, center_freqs, period: int,
                     n_points: int | None = None):
    """Interpolate each frame's log spectrum onto a uniform frequency grid.

    Returns ``(resampled, grid)`` where ``grid`` runs linearly from the first
    to the last center frequency. Cubic splines are used when four or more
    bins are available (exact on linear data), linear interpolation below
    that. Pass ``n_points`` to pin a grid recorded in a model file.
    """
    log_spec = np.asarray(log_spec, dtype=np.float64)
    center_freqs = np.asarray(center_freqs, dtype=np.float64)
    n_bins = center_freqs.shape[0]
    if n_bins < 2:
        raise TooFewBinsError("uniform resampling needs at least 2 bins")
    if log_spec.ndim != 2 or log_spec.shape[1] != n_bins:
        raise ValueError("log_spec must be (frames, bins) matching center_freqs")

    if n_points is None:
        n_points = default_grid_size(center_freqs, period)
    if n_points < 2:
        raise ConfigError("grid must have at least 2 points")
    grid = np.linspace(center_freqs[0], center_freqs[-1], n_points)

    if n_bins >= 4:
        resampled = CubicSpline(center_freqs, log_spec, axis=1)(grid)
    else:
        resampled = np.stack(
            [np.interp(grid, center_freqs, row) for row in log_spec])
    return resampled, grid


def dct_truncate(uniform_log_spec, num_ceps: int,
                 include_zeroth: bool) -> np.ndarray:
    """Orthonormal DCT-II per frame, keeping coefficients 1..num_ceps.

    Coefficient 0 (the energy term) is prepended when ``include_zeroth``.
    """
    mat = np.asarray(uniform_log_spec, dtype=np.float64)
    if mat.shape[1] < num_ceps + 1:
        raise GridTooSmallError(
            f"grid of {mat.shape[1]} points cannot yield {num_ceps} "
            f"cepstral coefficients")
    coeffs = dct(mat, type=2, norm="ortho", axis=1)
    lo = 0 if include_zeroth else 1
    return coeffs[:, lo:num_ceps + 1]


def _delta(mat: np.ndarray, window: int = DELTA_WINDOW) -> np.ndarray:
    # Regression slope over a 2*window+1 frame context, edges replicated.
    n = mat.shape[0]
    padded = np.pad(mat, ((window, window), (0, 0)), mode="edge")
    num = np.zeros_like(mat)
    for tau in range(1, window + 1):
        num += tau * (padded[window + tau:window + tau + n]
                      - padded[window - tau:window - tau + n])
    return num / (2.0 * sum(tau * tau for tau in range(1, window + 1)))


def append_deltas(static_feats, config: CqccConfig,
                  source_id: str = "") -> FeatureMatrix:
    """Assemble the enabled blocks: static first, then delta, then double delta.

    Deltas are regression slopes with edge-replication padding, so a
    single-frame utterance gets all-zero dynamic blocks.
    """
    base = np.asarray(static_feats, dtype=np.float64)
    if base.ndim != 2 or base.shape[0] < 1:
        raise ValueError("need at least one frame of static features")

    blocks = []
    if config.use_static:
        blocks.append(base)
    if config.use_delta or config.use_delta2:
        d1 = _delta(base)
        if config.use_delta:
            blocks.append(d1)
        if config.use_delta2:
            blocks.append(_delta(d1))
    return FeatureMatrix(np.hstack(blocks), source_id=source_id)


def cmvn(feats: FeatureMatrix) -> FeatureMatrix:
    """Per-utterance standardization: zero mean, unit variance per dimension.

    Dimensions with variance below 1e-12 are set to zero.
    """
    frames = feats.frames
    if frames.shape[0] < 1:
        raise ValueError("cmvn needs at least one frame")
    mean = frames.mean(axis=0)
    var = frames.var(axis=0)
    out = np.zeros_like(frames)
    keep = var >= 1e-12
    out[:, keep] = (frames[:, keep] - mean[keep]) / np.sqrt(var[keep])
    return FeatureMatrix(out, source_id=feats.source_id)


def extract_cqcc(signal: AudioSignal, cqt_config: CqtConfig,
                 cqcc_config: CqccConfig, grid_size: int | None = None,
                 source_id: str = "") -> FeatureMatrix:
    """Full front end for one utterance.

    Composition of the pipeline stages above; the output dimension is
    ``cqcc_config.output_dim``. Without CMVN the result is bit-reproducible
    across runs for a given signal and configuration.
    """
    spec = cqt_spectrogram(signal, cqt_config)
    logp = log_power(spec)
    uniform, _ = uniform_resample(
        logp, spec.center_freqs, cqcc_config.resample_period, n_points=grid_size)
    ceps = dct_truncate(uniform, cqcc_config.num_ceps, cqcc_config.include_zeroth)
    feats = append_deltas(ceps, cqcc_config, source_id=source_id)
    if cqcc_config.apply_cmvn:
        feats = cmvn(feats)
    return feats


def write_feature_cache(path, feats: FeatureMatrix) -> None:
    """Write one utterance's features: 16-byte magic+version header, then

    dimension and frame count as little-endian uint32, then row-major
    little-endian float64 frames.
    """
    header = _CACHE_MAGIC + struct.pack("<II", _CACHE_VERSION, 0)
    body = struct.pack("<II", feats.dim, feats.n_frames)
    data = np.ascontiguousarray(feats.frames, dtype="<f8").tobytes()
    Path(path).write_bytes(header + body + data)


def read_feature_cache(path, source_id: str = "") -> FeatureMatrix:
    """Read a file written by :func:`write_feature_cache`."""
    raw = Path(path).read_bytes()
    if len(raw) < 24 or raw[:8] != _CACHE_MAGIC:
        raise ValueError(f"{path}: not a feature cache file")
    version, _ = struct.unpack_from("<II", raw, 8)
    if version != _CACHE_VERSION:
        raise ValueError(f"{path}: unsupported cache version {version}")
    dim, n_frames = struct.unpack_from("<II", raw, 16)
    expected = 24 + 8 * dim * n_frames
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
    frames = np.frombuffer(raw, dtype="<f8", offset=24).reshape(n_frames, dim)
    return FeatureMatrix(frames, source_id=source_id)
