"""Two-hypothesis artifact detector.

One diagonal GMM is trained on natural speech and one on artificial speech;
an utterance is scored by the difference of its frame-averaged
log-likelihoods under the two models. Higher scores mean the utterance
looks more like natural human speech to the detector.

Training never touches evaluation manifests: :func:`train_detector` takes
only the two class manifests, so evaluation audio cannot leak into the
models by construction.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .audio_io import AudioSignal, read_wav, resample
from .cqt import CqtConfig, default_cqt_config
from .errors import (
    BatchScoringError,
    ConfigError,
    DimMismatchError,
    EmptyManifestError,
)
from .features import (
    CqccConfig,
    FeatureMatrix,
    default_grid_size,
    extract_cqcc,
    read_feature_cache,
    write_feature_cache,
)
from .gmm import DiagGmm, GmmTrainConfig, avg_log_likelihood, train_gmm
from .manifest import Manifest
from .metrics import ScoreRecord, ScoreSet

import numpy as np

CACHE_ENV_VAR = "SPOOFMETER_CACHE_DIR"


@dataclass(frozen=True)
class FeatureConfig:
    """Everything that determines the extraction pipeline, with no hidden state.

    ``grid_size`` pins the uniform resampling grid; when ``None`` it is
    derived from the CQT geometry and the resampling period. Models store the
    pinned value so training and scoring always agree.
    """

    sample_rate: int
    cqt: CqtConfig
    cqcc: CqccConfig
    grid_size: int | None = None

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ConfigError("sample_rate must be positive")
        if self.cqt.f_max > self.sample_rate / 2.0 + 1e-9:
            raise ConfigError(
                f"cqt f_max={self.cqt.f_max} exceeds Nyquist for "
                f"{self.sample_rate} Hz")

    @property
    def effective_grid_size(self) -> int:
        if self.grid_size is not None:
            return self.grid_size
        return default_grid_size(self.cqt.center_freqs, self.cqcc.resample_period)

    @property
    def output_dim(self) -> int:
        return self.cqcc.output_dim

    def pinned(self) -> "FeatureConfig":
        """Copy with the grid size made explicit."""
        if self.grid_size is not None:
            return self
        return FeatureConfig(self.sample_rate, self.cqt, self.cqcc,
                             grid_size=self.effective_grid_size)


def default_feature_config(sample_rate: int = 16000) -> FeatureConfig:
    """Delta+double-delta CQCCs at 16 kHz: the package-wide default setup."""
    return FeatureConfig(
        sample_rate=sample_rate,
        cqt=default_cqt_config(sample_rate),
        cqcc=CqccConfig(),
    )


@dataclass(frozen=True)
class DetectorModel:
    """Pair of class GMMs plus the feature configuration they were trained with."""

    nat: DiagGmm
    artif: DiagGmm
    feature_config: FeatureConfig
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.nat.dim != self.artif.dim:
            raise DimMismatchError(
                f"class models disagree on dimension: {self.nat.dim} vs "
                f"{self.artif.dim}")
        if self.nat.dim != self.feature_config.output_dim:
            raise DimMismatchError(
                f"models are {self.nat.dim}-dimensional but the feature "
                f"config yields {self.feature_config.output_dim}")


def extract_features(config: FeatureConfig, signal: AudioSignal,
                     source_id: str = "") -> FeatureMatrix:
    """Run the front end on one signal, resampling to the operating rate first."""
    if signal.sample_rate != config.sample_rate:
        signal = resample(signal, config.sample_rate)
    return extract_cqcc(signal, config.cqt, config.cqcc,
                        grid_size=config.effective_grid_size,
                        source_id=source_id)


def _cache_dir() -> Path | None:
    value = os.environ.get(CACHE_ENV_VAR)
    return Path(value) if value else None


def _config_digest(config: FeatureConfig) -> str:
    doc = {
        "sample_rate": config.sample_rate,
        "cqt": [config.cqt.bins_per_octave, config.cqt.f_min,
                config.cqt.f_max, config.cqt.hop],
        "cqcc": [config.cqcc.num_ceps, config.cqcc.include_zeroth,
                 config.cqcc.use_static, config.cqcc.use_delta,
                 config.cqcc.use_delta2, config.cqcc.apply_cmvn,
                 config.cqcc.resample_period],
        "grid": config.effective_grid_size,
    }
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:20]


def _features_for_file(config: FeatureConfig, path: str,
                       utt_id: str) -> FeatureMatrix:
    cache = _cache_dir()
    if cache is None:
        return extract_features(config, read_wav(path), source_id=utt_id)

    key = hashlib.sha256(
        f"{Path(path).resolve()}::{_config_digest(config)}".encode()
    ).hexdigest()[:24]
    cache_file = cache / f"{key}.feat"
    if cache_file.exists():
        return read_feature_cache(cache_file, source_id=utt_id)
    feats = extract_features(config, read_wav(path), source_id=utt_id)
    cache.mkdir(parents=True, exist_ok=True)
    write_feature_cache(cache_file, feats)
    return feats


def _pooled_frames(manifest: Manifest, config: FeatureConfig, class_name: str):
    if len(manifest) == 0:
        raise EmptyManifestError(f"{class_name} manifest is empty")
    pools = []
    for entry in manifest:
        try:
            pools.append(_features_for_file(config, entry.path, entry.utt_id).frames)
        except Exception as exc:
            raise type(exc)(f"{entry.path}: {exc}") from exc
    return np.vstack(pools)


def train_detector(nat_manifest: Manifest, artif_manifest: Manifest,
                   feature_config: FeatureConfig,
                   gmm_config: GmmTrainConfig) -> DetectorModel:
    """Train the two class models on pooled per-class frames.

    Features are extracted per ``feature_config`` for every manifest row,
    pooled per class in manifest order, and one GMM is trained per class
    with the identical schedule. The returned model is self-describing.
    """
    config = feature_config.pinned()
    nat_frames = _pooled_frames(nat_manifest, config, "natural-speech")
    artif_frames = _pooled_frames(artif_manifest, config, "artificial-speech")

    nat_gmm = train_gmm(nat_frames, gmm_config)
    artif_gmm = train_gmm(artif_frames, gmm_config)

    metadata = {
        "tool": f"spoofmeter {__version__}",
        "seed": str(gmm_config.seed),
        "nat_files": str(len(nat_manifest)),
        "artif_files": str(len(artif_manifest)),
        "nat_frames": str(nat_frames.shape[0]),
        "artif_frames": str(artif_frames.shape[0]),
    }
    if nat_manifest.source_path:
        metadata["nat_manifest"] = nat_manifest.source_path
    if artif_manifest.source_path:
        metadata["artif_manifest"] = artif_manifest.source_path

    return DetectorModel(nat=nat_gmm, artif=artif_gmm,
                         feature_config=config, metadata=metadata)


def llr_score(model: DetectorModel, utterance) -> float:
    """Log-likelihood ratio of natural over artificial speech for one utterance.

    Accepts an :class:`AudioSignal` (features are extracted per the model's
    configuration) or a cached :class:`FeatureMatrix` of matching dimension.
    Deterministic and repeatable; swapping the class models negates the
    score exactly.
    """
    if isinstance(utterance, FeatureMatrix):
        if utterance.dim != model.feature_config.output_dim:
            raise DimMismatchError(
                f"cached features of dim {utterance.dim} against a model "
                f"expecting {model.feature_config.output_dim}")
        feats = utterance
    elif isinstance(utterance, AudioSignal):
        feats = extract_features(model.feature_config, utterance)
    else:
        raise TypeError(
            f"utterance must be AudioSignal or FeatureMatrix, got "
            f"{type(utterance).__name__}")
    return avg_log_likelihood(model.nat, feats) - avg_log_likelihood(model.artif, feats)


def score_batch(model: DetectorModel, eval_manifest: Manifest) -> ScoreSet:
    """Score every manifest row, in manifest order.

    Per-file failures are collected and the whole batch fails if any file
    fails; silently skipping files would bias downstream error rates.
    """
    if len(eval_manifest) == 0:
        raise EmptyManifestError("evaluation manifest is empty")
    records = []
    failures = []
    for entry in eval_manifest:
        try:
            feats = _features_for_file(model.feature_config, entry.path,
                                       entry.utt_id)
            llr = llr_score(model, feats)
        except Exception as exc:
            failures.append((entry.utt_id, entry.path, exc))
            continue
        records.append(ScoreRecord(entry.utt_id, entry.label,
                                   entry.system_id, llr))
    if failures:
        raise BatchScoringError(failures)
    return ScoreSet(tuple(records))


SCORE_COLUMNS = ("utt_id", "label", "system_id", "llr")


def write_score_file(scores: ScoreSet, path, comments=()) -> None:
    """Write a score TSV: one row per record, LLR as shortest round-trip decimal."""
    lines = [f"# {c}" for c in comments]
    lines.append("\t".join(SCORE_COLUMNS))
    for r in scores.records:
        lines.append(f"{r.utt_id}\t{r.label}\t{r.system_id}\t{r.llr!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_score_file(path) -> ScoreSet:
    """Read a TSV written by :func:`write_score_file`."""
    from .errors import ManifestParseError

    lines = Path(path).read_text(encoding="utf-8").splitlines()
    body = [(i, ln) for i, ln in enumerate(lines, start=1)
            if ln.strip() and not ln.startswith("#")]
    if not body:
        raise ManifestParseError(1, "empty score file")
    first_line, header = body[0]
    if header.split("\t") != list(SCORE_COLUMNS):
        raise ManifestParseError(first_line, f"unexpected score header {header!r}")
    records = []
    for lineno, line in body[1:]:
        cols = line.split("\t")
        if len(cols) != len(SCORE_COLUMNS):
            raise ManifestParseError(
                lineno, f"expected {len(SCORE_COLUMNS)} columns, got {len(cols)}")
        try:
            llr = float(cols[3])
        except ValueError:
            raise ManifestParseError(lineno, f"bad score {cols[3]!r}") from None
        try:
            records.append(ScoreRecord(cols[0], cols[1], cols[2], llr))
        except ValueError as exc:
            raise ManifestParseError(lineno, str(exc)) from None
    return ScoreSet(tuple(records))
