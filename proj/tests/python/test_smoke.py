import json
import os

import pytest

import formatscope as fs

SIG_DIR = os.environ.get("FORMATSCOPE_SIG_DIR", "data/signatures")


def sig_path(name):
    return os.path.join(SIG_DIR, name)


def test_canonical_mime():
    assert fs.canonical_mime("Text/HTML") == "text/html"
    assert fs.canonical_mime('text/html; version="4.01"') == "text/html; version=4.01"
    with pytest.raises(ValueError):
        fs.canonical_mime("nope")


def test_normalize_server_mime():
    assert fs.normalize_server_mime(" Text/HTML; charset=utf-8 ") == "text/html"
    assert fs.normalize_server_mime("") == "unknown/unknown"


def test_extract_year():
    assert fs.extract_year("20040229123055") == 2004
    with pytest.raises(ValueError):
        fs.extract_year("2004")


def test_identify_shipped_sets():
    fine = fs.SignatureSet.load(sig_path("fine.sig.json"))
    broad = fs.SignatureSet.load(sig_path("broad.sig.json"))
    assert fine.mode == "fine"
    assert broad.mode == "broad"
    gif = b"GIF87a" + bytes(7)
    assert fine.identify(gif) == "image/gif; version=87a"
    assert broad.identify(gif) == "image/gif"
    assert fine.identify(b"\x00" * 64) == "unidentified"


def test_corpus_round_trip(tmp_path):
    spec = {
        "seed": 7,
        "records_per_file": 50,
        "recipe": [
            {"year": 2004, "template": "png", "count": 102},
            {"year": 2005, "template": "text", "count": 11},
        ],
    }
    out = tmp_path / "corpus"
    info = fs.generate_corpus(json.dumps(spec), str(out))
    assert info["records"] == 113
    tsv, summary = fs.profile(
        info["archives"], sig_path("fine.sig.json"), sig_path("broad.sig.json"), 2
    )
    assert summary["records"] == 113
    assert tsv == info["expected_profile"]
    assert "image/png\timage/png\timage/png; version=1.0\t2004\t102\n" in tsv

    profile_path = tmp_path / "profile.tsv"
    profile_path.write_text(tsv)
    report_dir = fs.analyze(str(profile_path), str(tmp_path / "report"))
    assert os.path.exists(os.path.join(report_dir, "failure_rates.csv"))
    assert os.path.exists(os.path.join(report_dir, "report_manifest.tsv"))
