"""End-to-end extraction against the primary engine's external interfaces:
emitted files must pass `biascope validate` and load into experiments."""

import json
import math
import shutil
import struct
import subprocess

import numpy as np
import pytest
from PIL import Image

from embextract.cli import main
from embextract.encoders import HashedEncoder, get_encoder, load_image
from embextract.errors import CheckpointLoadError, PreprocessError
from embextract.lexicon import GroupLexicon

BIASCOPE = shutil.which("biascope")

require_biascope = pytest.mark.skipif(
    BIASCOPE is None, reason="primary `biascope` CLI not installed")


def _validate(base) -> subprocess.CompletedProcess:
    return subprocess.run([BIASCOPE, "validate", str(base)],
                          capture_output=True, text=True)


def _write_lexicon_csv(path, rows):
    path.write_text("word,valence\n" + "\n".join(rows) + "\n")


def _write_images(root, n):
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(8)
    names = []
    for i in range(n):
        arr = rng.integers(0, 255, size=(24, 24, 3), dtype=np.uint8)
        name = f"img{i:03d}.png"
        Image.fromarray(arr).save(root / name)
        names.append(name)
    return names


def test_hashed_encoder_is_deterministic_and_nonzero():
    enc = get_encoder("hashed/64")
    texts = ["This is the word happy", "This is the word sad", ""]
    a = enc.encode_texts(texts)
    b = enc.encode_texts(texts)
    assert np.array_equal(a, b)
    norms = np.linalg.norm(a, axis=1)
    assert np.all(norms > 1e-12)
    # re-encoded rows are perfectly self-similar
    for u, v in zip(a, b):
        cos = float(u @ v) / (math.sqrt(float(u @ u)) * math.sqrt(float(v @ v)))
        assert abs(cos - 1.0) <= 1e-5


def test_unknown_model_tag():
    with pytest.raises(CheckpointLoadError):
        get_encoder("gpt-17")
    with pytest.raises(CheckpointLoadError):
        get_encoder("hashed/xx")


@require_biascope
def test_text_extraction_emits_valid_corpus(tmp_path):
    csv = tmp_path / "words.csv"
    _write_lexicon_csv(csv, [f"word{i},{i/49:.4f}" for i in range(50)])
    out = tmp_path / "enc" / "nrc"
    rc = main(["text", "--lexicon", str(csv), "--model", "hashed/48",
               "-o", str(out)])
    assert rc == 0
    result = _validate(out)
    assert result.returncode == 0, result.stderr
    doc = json.loads(out.with_suffix(".json").read_text())
    assert doc["count"] == 300 and doc["dim"] == 48
    assert all(it["source"] == "nrc-vad" for it in doc["items"])
    assert {it["template_id"] for it in doc["items"]} == set(range(6))
    # stem convention: "<word>#t<k>"
    assert doc["items"][0]["id"].endswith("#t0")
    blob = out.with_suffix(".f32").read_bytes()
    magic, version, dim, count = struct.unpack("<4sHIQ", blob[:18])
    assert (magic, version, dim, count) == (b"EBPC", 1, 48, 300)


@require_biascope
def test_group_label_extraction(tmp_path):
    out = tmp_path / "gl"
    rc = main(["text", "--lexicon", "builtin:group-labels",
               "--model", "hashed/32", "-o", str(out)])
    assert rc == 0
    assert _validate(out).returncode == 0
    doc = json.loads(out.with_suffix(".json").read_text())
    assert doc["count"] == 5184
    per_group: dict[str, int] = {}
    for it in doc["items"]:
        per_group[it["group"]] = per_group.get(it["group"], 0) + 1
    assert all(v == 864 for v in per_group.values()) and len(per_group) == 6
    assert all(it["source"] == "group-labels" for it in doc["items"])


@require_biascope
def test_image_extraction_and_oasis_rescale(tmp_path):
    names = _write_images(tmp_path / "imgs", 6)
    labels = tmp_path / "labels.csv"
    lines = ["id,group,valence"]
    for i, name in enumerate(names):
        lines.append(f"{name},,{1 + i}")  # raw 1..7-style ratings
    labels.write_text("\n".join(lines) + "\n")
    out = tmp_path / "oasis"
    rc = main(["images", "--dir", str(tmp_path / "imgs"), "--labels", str(labels),
               "--model", "hashed/24", "--valence-scale", "oasis-1-7",
               "-o", str(out)])
    assert rc == 0
    assert _validate(out).returncode == 0
    doc = json.loads(out.with_suffix(".json").read_text())
    vals = [it["valence"] for it in doc["items"]]
    assert vals == pytest.approx([i / 6 for i in range(6)], abs=1e-9)
    assert all(it["source"] == "oasis" for it in doc["items"])


def test_corrupt_image_names_item(tmp_path):
    bad = tmp_path / "bad.png"
    bad.write_bytes(b"not an image at all")
    with pytest.raises(PreprocessError) as err:
        load_image(bad, "bad.png")
    assert err.value.item_id == "bad.png"


def test_missing_image_file(tmp_path):
    names = _write_images(tmp_path / "imgs", 2)
    labels = tmp_path / "labels.csv"
    labels.write_text("id,group\n" + names[0] + ",AsianMen\nghost.png,AsianMen\n")
    rc = main(["images", "--dir", str(tmp_path / "imgs"), "--labels", str(labels),
               "--model", "hashed/16", "-o", str(tmp_path / "x")])
    assert rc == 1


@require_biascope
def test_extracted_corpora_run_through_an_experiment(tmp_path):
    """Full secondary->primary handshake: extract four corpora, then run a
    preset experiment on them through the primary CLI."""
    enc = tmp_path / "enc"
    # valence text: 60 words
    csv = tmp_path / "w.csv"
    _write_lexicon_csv(csv, [f"word{i},{i/59:.4f}" for i in range(60)])
    assert main(["text", "--lexicon", str(csv), "--model", "hashed/32",
                 "-o", str(enc / "text_valence")]) == 0
    # valence images: 60 rated images
    names = _write_images(tmp_path / "imgs", 60)
    labels = tmp_path / "l.csv"
    labels.write_text("id,valence\n" +
                      "\n".join(f"{n},{i/59:.4f}" for i, n in enumerate(names)) + "\n")
    assert main(["images", "--dir", str(tmp_path / "imgs"), "--labels", str(labels),
                 "--model", "hashed/32", "-o", str(enc / "images_valence")]) == 0

    config = {
        "corpora": {"hashed": {
            "images_valence": str(enc / "images_valence"),
            "text_valence": str(enc / "text_valence"),
        }},
        "specs": [{
            "name": "spot", "direction": "image_to_text", "content": "valence",
            "target_selector": {"corpus": "images_valence", "modality": "image",
                                "valence_extremes": 10},
            "attribute_builder": {"kind": "valence_poles", "n": 10,
                                  "corpus": "text_valence"},
            "retrieval_corpus_selector": {"corpus": "text_valence",
                                          "modality": "text"},
            "k": 15, "extrinsic": "mean_valence", "stratify_by_group": False,
            "template_policy": {"mode": "average_over_templates"}, "seed": 1,
        }],
        "output_dir": str(tmp_path / "out"),
    }
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(config))
    result = subprocess.run([BIASCOPE, "run", str(cfg)],
                            capture_output=True, text=True)
    assert result.returncode == 0, result.stderr
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["n_targets"] == 20
    assert report["correlations"][0]["stratum"] == "overall"
    assert -1.0 <= report["correlations"][0]["rho"] <= 1.0
