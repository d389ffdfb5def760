import pytest

from spoofmeter import parse_manifest
from spoofmeter.errors import ManifestParseError


def _write(tmp_path, text):
    path = tmp_path / "m.tsv"
    path.write_text(text, encoding="utf-8")
    return path


HEADER = "utt_id\tpath\tlabel\tsystem_id\n"


def test_three_valid_rows(tmp_path):
    path = _write(tmp_path, HEADER
                  + "u1\ta.wav\tbonafide\t-\n"
                  + "u2\tb.wav\tspoof\tsysA\n"
                  + "u3\tsub/c.wav\tspoof\tsysB\n")
    manifest = parse_manifest(path)
    assert len(manifest) == 3
    assert [e.utt_id for e in manifest] == ["u1", "u2", "u3"]
    # relative paths resolve against the manifest directory
    assert manifest.entries[0].path == str(tmp_path / "a.wav")
    assert manifest.entries[2].path == str(tmp_path / "sub" / "c.wav")


def test_duplicate_utt_id_cites_line(tmp_path):
    rows = [f"u{i}\tf{i}.wav\tbonafide\t-" for i in range(1, 6)]
    rows.append("u3\tdup.wav\tbonafide\t-")  # line 7
    path = _write(tmp_path, HEADER + "\n".join(rows) + "\n")
    with pytest.raises(ManifestParseError) as info:
        parse_manifest(path)
    assert info.value.line == 7
    assert "u3" in str(info.value)


def test_bad_label_cites_line(tmp_path):
    path = _write(tmp_path, HEADER + "u1\ta.wav\tgenuine\t-\n")
    with pytest.raises(ManifestParseError) as info:
        parse_manifest(path)
    assert info.value.line == 2


def test_spoof_with_reserved_system_rejected(tmp_path):
    path = _write(tmp_path, HEADER + "u1\ta.wav\tspoof\t-\n")
    with pytest.raises(ManifestParseError):
        parse_manifest(path)


def test_bonafide_with_named_system_rejected(tmp_path):
    path = _write(tmp_path, HEADER + "u1\ta.wav\tbonafide\tsysA\n")
    with pytest.raises(ManifestParseError):
        parse_manifest(path)


def test_column_count_cites_line(tmp_path):
    path = _write(tmp_path, HEADER + "u1\ta.wav\tbonafide\t-\nu2\tb.wav\n")
    with pytest.raises(ManifestParseError) as info:
        parse_manifest(path)
    assert info.value.line == 3


def test_wrong_header(tmp_path):
    path = _write(tmp_path, "id\tfile\tlabel\tsystem\nu1\ta.wav\tbonafide\t-\n")
    with pytest.raises(ManifestParseError) as info:
        parse_manifest(path)
    assert info.value.line == 1


def test_empty_file(tmp_path):
    path = _write(tmp_path, "")
    with pytest.raises(ManifestParseError):
        parse_manifest(path)


def test_absolute_paths_kept(tmp_path):
    path = _write(tmp_path, HEADER + f"u1\t{tmp_path}/x.wav\tbonafide\t-\n")
    manifest = parse_manifest(path)
    assert manifest.entries[0].path == str(tmp_path / "x.wav")
