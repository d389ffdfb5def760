"""Detector model serialization.

Models are stored as a versioned JSON document with sorted keys and numbers
written as shortest round-trip decimals, so save -> load -> save is byte
identical and a loaded model scores bit-exactly like the original.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .cqt import CqtConfig
from .detector import DetectorModel, FeatureConfig
from .errors import SchemaError, VersionMismatchError
from .features import CqccConfig
from .gmm import DiagGmm

MODEL_FORMAT_VERSION = 1


def save_model(model: DetectorModel, path) -> None:
    """Write ``model`` to ``path`` as canonical JSON."""
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "feature_config": _config_doc(model.feature_config),
        "grid": {
            "size": model.feature_config.effective_grid_size,
            "f_min": model.feature_config.cqt.f_min,
            "f_max": model.feature_config.cqt.f_max,
        },
        "nat_gmm": _gmm_doc(model.nat),
        "artif_gmm": _gmm_doc(model.artif),
        "metadata": dict(model.metadata),
    }
    text = json.dumps(doc, sort_keys=True, indent=1)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_model(path) -> DetectorModel:
    """Read a model written by :func:`save_model`.

    Raises :class:`VersionMismatchError` for foreign format versions and
    :class:`SchemaError` for anything structurally wrong (truncation,
    missing keys, malformed arrays).
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: expected a JSON object at top level")
    version = doc.get("format_version")
    if version is None:
        raise SchemaError(f"{path}: missing format_version")
    if version != MODEL_FORMAT_VERSION:
        raise VersionMismatchError(
            f"{path}: format_version {version}, this build reads "
            f"{MODEL_FORMAT_VERSION}")

    try:
        config = _config_from_doc(doc["feature_config"], doc["grid"])
        nat = _gmm_from_doc(doc["nat_gmm"])
        artif = _gmm_from_doc(doc["artif_gmm"])
        metadata = dict(doc.get("metadata", {}))
        return DetectorModel(nat=nat, artif=artif, feature_config=config,
                             metadata=metadata)
    except VersionMismatchError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{path}: malformed model document ({exc})") from exc


def _config_doc(config: FeatureConfig) -> dict:
    return {
        "sample_rate": config.sample_rate,
        "cqt": {
            "bins_per_octave": config.cqt.bins_per_octave,
            "f_min": config.cqt.f_min,
            "f_max": config.cqt.f_max,
            "hop": config.cqt.hop,
        },
        "cqcc": {
            "num_ceps": config.cqcc.num_ceps,
            "include_zeroth": config.cqcc.include_zeroth,
            "use_static": config.cqcc.use_static,
            "use_delta": config.cqcc.use_delta,
            "use_delta2": config.cqcc.use_delta2,
            "apply_cmvn": config.cqcc.apply_cmvn,
            "resample_period": config.cqcc.resample_period,
        },
    }


def _config_from_doc(doc: dict, grid: dict) -> FeatureConfig:
    cqt = doc["cqt"]
    cqcc = doc["cqcc"]
    return FeatureConfig(
        sample_rate=int(doc["sample_rate"]),
        cqt=CqtConfig(
            bins_per_octave=int(cqt["bins_per_octave"]),
            f_min=float(cqt["f_min"]),
            f_max=float(cqt["f_max"]),
            hop=int(cqt["hop"]),
        ),
        cqcc=CqccConfig(
            num_ceps=int(cqcc["num_ceps"]),
            include_zeroth=bool(cqcc["include_zeroth"]),
            use_static=bool(cqcc["use_static"]),
            use_delta=bool(cqcc["use_delta"]),
            use_delta2=bool(cqcc["use_delta2"]),
            apply_cmvn=bool(cqcc["apply_cmvn"]),
            resample_period=int(cqcc["resample_period"]),
        ),
        grid_size=int(grid["size"]),
    )


def _gmm_doc(gmm: DiagGmm) -> dict:
    return {
        "weights": gmm.weights.tolist(),
        "means": gmm.means.tolist(),
        "variances": gmm.variances.tolist(),
    }


def _gmm_from_doc(doc: dict) -> DiagGmm:
    return DiagGmm(
        weights=np.asarray(doc["weights"], dtype=np.float64),
        means=np.asarray(doc["means"], dtype=np.float64),
        variances=np.asarray(doc["variances"], dtype=np.float64),
    )
