"""Command-line surface and experiment orchestration.

Subcommands: ``train`` (fit the two class models), ``score`` (LLR per
evaluation utterance), ``eer`` (per-system and attack-averaged equal error
rates), ``report`` (EER joined with machine and, optionally, human opinion
scores), and ``grid`` (front-end variants crossed with Gaussian counts).

All tabular I/O is TSV with a header row; every output embeds the
configuration that produced it in leading ``#`` comment lines, with no
timestamps, so identical invocations produce byte-identical artifacts.
Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .cqt import CqtConfig
from .detector import (
    FeatureConfig,
    read_score_file,
    score_batch,
    train_detector,
    write_score_file,
)
from .errors import (
    ConfigError,
    DataError,
    NumericalError,
    SpoofmeterError,
)
from .features import CqccConfig
from .gmm import GmmTrainConfig
from .manifest import parse_manifest
from .metrics import (
    attack_averaged_eer,
    compute_mos,
    machine_opinion_score,
    read_opinion_file,
)
from .model_io import load_model, save_model

AVERAGE_ROW_ID = "(average)"

_VARIANT_PARTS = ("z", "stat", "delta", "delta2")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------

_CQCC_KEYS = ("num_ceps", "include_zeroth", "use_static", "use_delta",
              "use_delta2", "apply_cmvn", "resample_period")
_GMM_KEYS = ("target_components", "em_iters_per_stage",
             "variance_floor_factor", "convergence_tol", "seed")
_CQT_KEYS = ("bins_per_octave", "f_min", "f_max", "hop")


def load_run_config(path=None):
    """Merge a JSON config file over the built-in defaults.

    Defaults reproduce the final reference setup: 16 kHz operating rate,
    96-bin/octave CQT over nine octaves below Nyquist, 29 delta+double-delta
    CQCCs without normalization, and 2048 Gaussians per class.
    """
    doc = {}
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        unknown = set(doc) - {"sample_rate", "cqt", "cqcc", "gmm"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    sample_rate = int(doc.get("sample_rate", 16000))

    cqt_doc = dict(doc.get("cqt", {}))
    unknown = set(cqt_doc) - set(_CQT_KEYS)
    if unknown:
        raise ConfigError(f"unknown cqt keys: {sorted(unknown)}")
    f_max = float(cqt_doc.get("f_max", sample_rate / 2.0))
    cqt = CqtConfig(
        bins_per_octave=int(cqt_doc.get("bins_per_octave", 96)),
        f_min=float(cqt_doc.get("f_min", f_max / 2.0 ** 9)),
        f_max=f_max,
        hop=int(cqt_doc.get("hop", round(sample_rate / 100.0))),
    )

    cqcc_doc = dict(doc.get("cqcc", {}))
    unknown = set(cqcc_doc) - set(_CQCC_KEYS)
    if unknown:
        raise ConfigError(f"unknown cqcc keys: {sorted(unknown)}")
    cqcc = CqccConfig(**cqcc_doc)

    gmm_doc = dict(doc.get("gmm", {}))
    unknown = set(gmm_doc) - set(_GMM_KEYS)
    if unknown:
        raise ConfigError(f"unknown gmm keys: {sorted(unknown)}")
    gmm = GmmTrainConfig(**gmm_doc)

    return FeatureConfig(sample_rate=sample_rate, cqt=cqt, cqcc=cqcc), gmm


def parse_variant(token: str) -> dict:
    """Turn a front-end variant like ``z+stat+delta+delta2`` into config flags."""
    parts = token.split("+")
    seen = set()
    for part in parts:
        if part not in _VARIANT_PARTS:
            raise ConfigError(
                f"unknown variant component {part!r} in {token!r} "
                f"(valid: {'/'.join(_VARIANT_PARTS)})")
        if part in seen:
            raise ConfigError(f"duplicate component {part!r} in {token!r}")
        seen.add(part)
    flags = {
        "include_zeroth": "z" in seen,
        "use_static": "stat" in seen,
        "use_delta": "delta" in seen,
        "use_delta2": "delta2" in seen,
    }
    if not (flags["use_static"] or flags["use_delta"] or flags["use_delta2"]):
        raise ConfigError(f"variant {token!r} enables no feature block")
    return flags


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------

def _write_table(path, comments, header, rows):
    lines = [f"# {c}" for c in comments]
    lines.append("\t".join(header))
    for row in rows:
        lines.append("\t".join(str(c) for c in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _read_table(path, expected_header):
    from .errors import ManifestParseError

    lines = Path(path).read_text(encoding="utf-8").splitlines()
    body = [(i, ln) for i, ln in enumerate(lines, start=1)
            if ln.strip() and not ln.startswith("#")]
    if not body:
        raise ManifestParseError(1, f"{path}: empty table")
    first_line, header = body[0]
    if header.split("\t") != list(expected_header):
        raise ManifestParseError(
            first_line, f"{path}: expected header {list(expected_header)}")
    rows = []
    for lineno, line in body[1:]:
        cols = line.split("\t")
        if len(cols) != len(expected_header):
            raise ManifestParseError(
                lineno, f"{path}: expected {len(expected_header)} columns")
        rows.append(cols)
    return rows


def _fmt(value: float) -> str:
    return repr(float(value))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _cmd_train(args) -> int:
    feature_config, gmm_config = load_run_config(args.config)
    if args.seed is not None:
        gmm_config = replace(gmm_config, seed=args.seed)
    if args.gaussians is not None:
        gmm_config = replace(gmm_config, target_components=args.gaussians)

    nat = parse_manifest(args.nat)
    artif = parse_manifest(args.artif)
    model = train_detector(nat, artif, feature_config, gmm_config)
    save_model(model, args.out)
    print(f"trained {gmm_config.target_components}-component detector on "
          f"{len(nat)} natural / {len(artif)} artificial files -> {args.out}")
    return 0


def _cmd_score(args) -> int:
    model = load_model(args.model)
    manifest = parse_manifest(args.eval)
    scores = score_batch(model, manifest)
    write_score_file(scores, args.out, comments=(
        f"tool: spoofmeter {__version__}",
        f"command: score --model {args.model} --eval {args.eval}",
        f"seed: {args.seed if args.seed is not None else model.metadata.get('seed', '0')}",
    ))
    print(f"scored {len(scores)} utterances -> {args.out}")
    return 0


_EER_HEADER = ("system_id", "eer_percent", "threshold", "n_bonafide", "n_spoof")


def _cmd_eer(args) -> int:
    scores = read_score_file(args.scores)
    summary = attack_averaged_eer(scores)
    rows = []
    total_spoof = 0
    n_bona = 0
    for system, result in summary.per_attack.items():
        rows.append((system, _fmt(result.eer_percent), _fmt(result.threshold),
                     result.n_bonafide, result.n_spoof))
        total_spoof += result.n_spoof
        n_bona = result.n_bonafide
    rows.append((AVERAGE_ROW_ID, _fmt(summary.average_percent), "-",
                 n_bona, total_spoof))
    _write_table(args.out, (
        f"tool: spoofmeter {__version__}",
        f"command: eer --scores {args.scores}",
        f"seed: {args.seed if args.seed is not None else 0}",
    ), _EER_HEADER, rows)
    print(f"attack-averaged EER {summary.average_percent:.2f}% over "
          f"{len(summary.per_attack)} system(s) -> {args.out}")
    return 0


def _cmd_report(args) -> int:
    eer_rows = _read_table(args.eer, _EER_HEADER)
    mos_map = None
    if args.opinions is not None:
        mos_map = compute_mos(read_opinion_file(args.opinions))

    header = ["system_id", "eer_percent", "machine_opinion_score"]
    if mos_map is not None:
        header.append("mos")
    rows = []
    for cols in eer_rows:
        system, eer_text = cols[0], cols[1]
        if system == AVERAGE_ROW_ID:
            continue
        eer = float(eer_text)
        row = [system, _fmt(eer), _fmt(machine_opinion_score(eer))]
        if mos_map is not None:
            row.append(_fmt(mos_map[system]) if system in mos_map else "-")
        rows.append(row)
    _write_table(args.out, (
        f"tool: spoofmeter {__version__}",
        f"command: report --eer {args.eer}"
        + (f" --opinions {args.opinions}" if args.opinions else ""),
        f"seed: {args.seed if args.seed is not None else 0}",
    ), header, rows)
    print(f"report for {len(rows)} system(s) -> {args.out}")
    return 0


def _cmd_grid(args) -> int:
    feature_config, gmm_config = load_run_config(args.config)
    if args.seed is not None:
        gmm_config = replace(gmm_config, seed=args.seed)

    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    if not variants:
        raise UsageError("grid: --variants is empty")
    variant_flags = {v: parse_variant(v) for v in variants}
    try:
        gaussians = [int(c) for c in args.gaussians.split(",") if c.strip()]
    except ValueError as exc:
        raise UsageError(f"grid: bad --gaussians value ({exc})") from None
    if not gaussians:
        raise UsageError("grid: --gaussians is empty")
    cmvn_settings = {"raw": [False], "cmvn": [True],
                     "both": [False, True]}[args.cmvn]

    nat = parse_manifest(args.nat)
    artif = parse_manifest(args.artif)
    eval_manifest = parse_manifest(args.eval)

    rows = []
    for variant in variants:
        for use_cmvn in cmvn_settings:
            cqcc = replace(feature_config.cqcc, apply_cmvn=use_cmvn,
                           **variant_flags[variant])
            cell_config = FeatureConfig(
                sample_rate=feature_config.sample_rate,
                cqt=feature_config.cqt, cqcc=cqcc)
            for n_components in gaussians:
                cell_gmm = replace(gmm_config, target_components=n_components)
                try:
                    model = train_detector(nat, artif, cell_config, cell_gmm)
                    scores = score_batch(model, eval_manifest)
                    summary = attack_averaged_eer(scores)
                    value = _fmt(summary.average_percent)
                except (SpoofmeterError, OSError) as exc:
                    print(f"grid cell ({variant}, "
                          f"{'cmvn' if use_cmvn else 'raw'}, {n_components}) "
                          f"failed: {exc}", file=sys.stderr)
                    value = "failed"
                rows.append((variant, "cmvn" if use_cmvn else "raw",
                             n_components, value))

    _write_table(args.out, (
        f"tool: spoofmeter {__version__}",
        f"command: grid --nat {args.nat} --artif {args.artif} "
        f"--eval {args.eval} --variants {args.variants} "
        f"--gaussians {args.gaussians} --cmvn {args.cmvn}",
        f"seed: {gmm_config.seed}",
    ), ("variant", "cmvn", "gaussians", "eer_percent"), rows)
    print(f"grid of {len(rows)} cell(s) -> {args.out}")
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spoofmeter",
                     description="Objective artifact assessment of converted "
                                 "speech via a CQCC-GMM countermeasure.")
    parser.add_argument("--version", action="version",
                        version=f"spoofmeter {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="train the two-class detector")
    train.add_argument("--nat", required=True, help="natural-speech manifest")
    train.add_argument("--artif", required=True, help="artificial-speech manifest")
    train.add_argument("--config", default=None, help="JSON run configuration")
    train.add_argument("--out", required=True, help="output model file")
    train.add_argument("--seed", type=int, default=None)
    train.add_argument("--gaussians", type=int, default=None,
                       help="override the configured component count")
    train.set_defaults(func=_cmd_train)

    score = sub.add_parser("score", help="score an evaluation manifest")
    score.add_argument("--model", required=True)
    score.add_argument("--eval", required=True, help="evaluation manifest")
    score.add_argument("--out", required=True, help="output score TSV")
    score.add_argument("--seed", type=int, default=None)
    score.set_defaults(func=_cmd_score)

    eer = sub.add_parser("eer", help="per-system and averaged EER from scores")
    eer.add_argument("--scores", required=True, help="score TSV")
    eer.add_argument("--out", required=True, help="output EER table TSV")
    eer.add_argument("--seed", type=int, default=None)
    eer.set_defaults(func=_cmd_eer)

    report = sub.add_parser(
        "report", help="join EERs with machine (and human) opinion scores")
    report.add_argument("--eer", required=True, help="EER table TSV")
    report.add_argument("--opinions", default=None,
                        help="optional listener-opinion TSV")
    report.add_argument("--out", required=True, help="output report TSV")
    report.add_argument("--seed", type=int, default=None)
    report.set_defaults(func=_cmd_report)

    grid = sub.add_parser(
        "grid", help="front-end variants x Gaussian counts experiment")
    grid.add_argument("--nat", required=True)
    grid.add_argument("--artif", required=True)
    grid.add_argument("--eval", required=True)
    grid.add_argument("--variants", required=True,
                      help="comma list, e.g. delta+delta2,z+stat+delta+delta2")
    grid.add_argument("--gaussians", required=True,
                      help="comma list of component counts, e.g. 32,2048")
    grid.add_argument("--cmvn", choices=("raw", "cmvn", "both"), default="raw")
    grid.add_argument("--config", default=None)
    grid.add_argument("--out", required=True, help="output grid TSV")
    grid.add_argument("--seed", type=int, default=None)
    grid.set_defaults(func=_cmd_grid)

    return parser


def _remove_partial_output(args) -> None:
    out = getattr(args, "out", None)
    if out is not None:
        Path(out).unlink(missing_ok=True)


def main(argv=None) -> int:
    parser = build_parser()
    args = None
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"spoofmeter: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        if args is not None:
            _remove_partial_output(args)
        print(f"spoofmeter: numerical failure: {exc}", file=sys.stderr)
        return 3
    except (DataError, FileNotFoundError, OSError, ValueError) as exc:
        if args is not None:
            _remove_partial_output(args)
        print(f"spoofmeter: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
