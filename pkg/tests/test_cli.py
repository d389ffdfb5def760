import json
import subprocess
import sys

import numpy as np
import pytest

from helpers import make_wav_corpus, resonant_noise
from spoofmeter.cli import main, parse_variant
from spoofmeter.errors import ConfigError

RUN_CONFIG = {
    "sample_rate": 16000,
    "cqt": {"bins_per_octave": 12, "f_min": 500.0, "f_max": 8000.0, "hop": 160},
    "cqcc": {"num_ceps": 8, "include_zeroth": True, "use_static": True,
             "use_delta": True, "use_delta2": True},
    "gmm": {"target_components": 2, "em_iters_per_stage": 3},
}


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli_ws")
    rng = np.random.default_rng(60)
    low = dict(freq_range=(300.0, 900.0))
    high = dict(freq_range=(2500.0, 3800.0))

    nat = make_wav_corpus(root / "nat", [
        (f"n{i}", "bonafide", "-", resonant_noise(rng, 4000, **low))
        for i in range(3)])
    artif = make_wav_corpus(root / "artif", [
        (f"a{i}", "spoof", "vcX", resonant_noise(rng, 4000, **high))
        for i in range(3)])
    eval_entries = (
        [(f"eb{i}", "bonafide", "-", resonant_noise(rng, 4000, **low))
         for i in range(3)]
        + [(f"ea{i}", "spoof", "sysA", resonant_noise(rng, 4000, **high))
           for i in range(2)]
        + [(f"es{i}", "spoof", "sysB", resonant_noise(rng, 4000, **high))
           for i in range(2)]
    )
    eval_manifest = make_wav_corpus(root / "eval", eval_entries)

    config = root / "run.json"
    config.write_text(json.dumps(RUN_CONFIG))
    return {"root": root, "nat": nat, "artif": artif, "eval": eval_manifest,
            "config": config}


@pytest.fixture(scope="module")
def trained_model(workspace):
    model = workspace["root"] / "model.json"
    rc = main(["train", "--nat", str(workspace["nat"]),
               "--artif", str(workspace["artif"]),
               "--config", str(workspace["config"]),
               "--out", str(model), "--seed", "7"])
    assert rc == 0
    return model


def _data_rows(path):
    lines = [l for l in path.read_text().splitlines()
             if l.strip() and not l.startswith("#")]
    return lines[0].split("\t"), [l.split("\t") for l in lines[1:]]


class TestTrainScoreEer:
    def test_train_writes_model(self, trained_model):
        doc = json.loads(trained_model.read_text())
        assert doc["format_version"] == 1
        assert doc["metadata"]["seed"] == "7"

    def test_score_outputs_manifest_order(self, workspace, trained_model):
        out = workspace["root"] / "scores.tsv"
        rc = main(["score", "--model", str(trained_model),
                   "--eval", str(workspace["eval"]), "--out", str(out)])
        assert rc == 0
        header, rows = _data_rows(out)
        assert header == ["utt_id", "label", "system_id", "llr"]
        assert [r[0] for r in rows] == ["eb0", "eb1", "eb2", "ea0", "ea1",
                                        "es0", "es1"]

    def test_score_is_byte_deterministic(self, workspace, trained_model):
        out1 = workspace["root"] / "s1.tsv"
        out2 = workspace["root"] / "s2.tsv"
        args = ["score", "--model", str(trained_model),
                "--eval", str(workspace["eval"])]
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_eer_table_has_per_system_and_average_rows(self, workspace,
                                                       trained_model):
        scores = workspace["root"] / "scores_eer.tsv"
        table = workspace["root"] / "eer.tsv"
        assert main(["score", "--model", str(trained_model),
                     "--eval", str(workspace["eval"]),
                     "--out", str(scores)]) == 0
        assert main(["eer", "--scores", str(scores), "--out", str(table)]) == 0
        header, rows = _data_rows(table)
        assert header == ["system_id", "eer_percent", "threshold",
                          "n_bonafide", "n_spoof"]
        assert [r[0] for r in rows] == ["sysA", "sysB", "(average)"]
        eers = {r[0]: float(r[1]) for r in rows}
        assert eers["(average)"] == pytest.approx(
            (eers["sysA"] + eers["sysB"]) / 2.0)


class TestReport:
    @pytest.fixture()
    def eer_table(self, tmp_path):
        path = tmp_path / "eer.tsv"
        path.write_text(
            "system_id\teer_percent\tthreshold\tn_bonafide\tn_spoof\n"
            "B01\t18.18\t0.0\t100\t100\n"
            "N10\t2.49\t0.0\t100\t100\n"
            "(average)\t10.335\t-\t100\t200\n")
        return path

    def test_report_without_opinions(self, eer_table, tmp_path):
        out = tmp_path / "report.tsv"
        assert main(["report", "--eer", str(eer_table), "--out", str(out)]) == 0
        header, rows = _data_rows(out)
        assert header == ["system_id", "eer_percent", "machine_opinion_score"]
        assert [r[0] for r in rows] == ["B01", "N10"]  # average row dropped
        scores = {r[0]: r[2] for r in rows}
        assert scores["B01"] == "1.818"

    def test_report_with_opinions(self, eer_table, tmp_path):
        opinions = tmp_path / "op.tsv"
        opinions.write_text(
            "utt_id\tsystem_id\tlistener_id\tscore\n"
            "u1\tB01\tl1\t4\nu2\tB01\tl2\t5\nu3\tN10\tl1\t4\n")
        out = tmp_path / "report.tsv"
        assert main(["report", "--eer", str(eer_table),
                     "--opinions", str(opinions), "--out", str(out)]) == 0
        header, rows = _data_rows(out)
        assert header[-1] == "mos"
        mos = {r[0]: r[3] for r in rows}
        assert float(mos["B01"]) == 4.5
        assert float(mos["N10"]) == 4.0


class TestGrid:
    def test_grid_cardinality_and_determinism(self, workspace):
        out1 = workspace["root"] / "grid1.tsv"
        out2 = workspace["root"] / "grid2.tsv"
        args = ["grid", "--nat", str(workspace["nat"]),
                "--artif", str(workspace["artif"]),
                "--eval", str(workspace["eval"]),
                "--variants", "delta+delta2,z+stat+delta+delta2",
                "--gaussians", "1,2",
                "--config", str(workspace["config"]),
                "--seed", "3"]
        assert main(args + ["--out", str(out1)]) == 0
        header, rows = _data_rows(out1)
        assert header == ["variant", "cmvn", "gaussians", "eer_percent"]
        assert len(rows) == 4
        assert {r[0] for r in rows} == {"delta+delta2", "z+stat+delta+delta2"}
        assert all(r[1] == "raw" for r in rows)
        assert main(args + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_variant_parsing(self):
        flags = parse_variant("z+stat+delta+delta2")
        assert flags == {"include_zeroth": True, "use_static": True,
                         "use_delta": True, "use_delta2": True}
        assert parse_variant("stat")["use_static"] is True
        with pytest.raises(ConfigError):
            parse_variant("z+static")
        with pytest.raises(ConfigError):
            parse_variant("z")


class TestErrorHandling:
    def test_usage_error_exits_1(self, capsys):
        assert main(["train", "--nat", "x.tsv"]) == 1
        assert "required" in capsys.readouterr().err

    def test_unknown_command_exits_1(self):
        assert main(["discombobulate"]) == 1

    def test_missing_manifest_exits_2(self, workspace, capsys):
        rc = main(["train", "--nat", "/nonexistent/m.tsv",
                   "--artif", str(workspace["artif"]),
                   "--config", str(workspace["config"]),
                   "--out", str(workspace["root"] / "never.json")])
        assert rc == 2
        assert not (workspace["root"] / "never.json").exists()

    def test_partial_output_removed_on_failure(self, workspace, trained_model,
                                               tmp_path):
        # eval manifest referencing a missing wav: scoring must fail with 2
        # and leave no output file behind
        manifest = tmp_path / "bad.tsv"
        manifest.write_text("utt_id\tpath\tlabel\tsystem_id\n"
                            "g\tghost.wav\tbonafide\t-\n")
        out = tmp_path / "scores.tsv"
        rc = main(["score", "--model", str(trained_model),
                   "--eval", str(manifest), "--out", str(out)])
        assert rc == 2
        assert not out.exists()

    def test_bad_config_exits_2(self, workspace, tmp_path):
        config = tmp_path / "bad.json"
        config.write_text('{"gmm": {"target_components": 3}}')
        rc = main(["train", "--nat", str(workspace["nat"]),
                   "--artif", str(workspace["artif"]),
                   "--config", str(config),
                   "--out", str(tmp_path / "m.json")])
        assert rc == 2

    def test_unknown_config_key_exits_2(self, workspace, tmp_path):
        config = tmp_path / "bad2.json"
        config.write_text('{"gms": {}}')
        rc = main(["train", "--nat", str(workspace["nat"]),
                   "--artif", str(workspace["artif"]),
                   "--config", str(config),
                   "--out", str(tmp_path / "m.json")])
        assert rc == 2


def test_console_script_version():
    out = subprocess.run([sys.executable, "-m", "spoofmeter.cli", "--version"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert "spoofmeter" in out.stdout
