"""
Adaptateurs, format canonique et statistiques du corpus
"""
import json

import pytest

from core.exceptions import CorpusFormatError
from nlp.models import Alphabet
from preprocessing.dataset_adapters import adapt_cocotext_style, adapt_quad_per_line, corpus_stats, merge_corpora
from preprocessing.text_reader import TextReader, read_canonical
from services.persistence import write_canonical


def test_read_canonical_fixture(corpus):
    assert [im.image_id for im in corpus.images] == ["101", "102", "img_1", "img_2", "t1", "t2"]
    assert corpus.provenance == {"cocotext": 2, "ic15": 2, "totaltext": 2}
    illegible = corpus.by_id["img_1"].instances[2]
    assert illegible.transcription is None and not illegible.legible


def test_canonical_write_then_read_is_identity(corpus, tmp_path):
    path = tmp_path / "corpus.jsonl"
    write_canonical(corpus, path)
    assert read_canonical(path) == corpus
    first = path.read_bytes()
    write_canonical(read_canonical(path), path)
    assert path.read_bytes() == first


def test_canonical_reports_every_bad_line(tmp_path):
    path = tmp_path / "bad.jsonl"
    lines = [
        {"image_id": "a", "width": 10, "height": 10, "dataset": "d", "split": "train",
         "instances": [{"polygon": [[0, 0], [1, 1], [2, 2]], "transcription": "x"}]},
        {"image_id": "b", "width": 10, "height": 10, "dataset": "d", "split": "train", "instances": []},
        {"image_id": "c", "width": 10, "height": 10, "dataset": "d", "split": "holdout", "instances": []},
    ]
    path.write_text("\n".join(json.dumps(line) for line in lines) + "\nnot json\n", encoding="utf-8")

    with pytest.raises(CorpusFormatError) as excinfo:
        read_canonical(path)
    violations = excinfo.value.violations
    assert sorted(v.line for v in violations) == [1, 3, 4]
    assert any(v.field_path and v.field_path.startswith("instances[0].polygon") for v in violations)

    lenient = read_canonical(path, strict=False)
    assert [im.image_id for im in lenient.images] == ["b"]


def test_out_of_frame_polygon_is_rejected(tmp_path):
    path = tmp_path / "frame.jsonl"
    record = {"image_id": "a", "width": 10, "height": 10, "dataset": "d", "split": "train",
              "instances": [{"polygon": [[0, 0], [20, 0], [20, 5], [0, 5]], "transcription": "x"}]}
    path.write_text(json.dumps(record) + "\n", encoding="utf-8")
    with pytest.raises(CorpusFormatError):
        read_canonical(path)


def test_instance_dataset_must_match_image(tmp_path):
    path = tmp_path / "mixed.jsonl"
    record = {"image_id": "a", "width": 10, "height": 10, "dataset": "ic15", "split": "train",
              "instances": [{"polygon": [[0, 0], [5, 0], [5, 5], [0, 5]], "transcription": "x", "dataset": "mlt"}]}
    path.write_text(json.dumps(record) + "\n", encoding="utf-8")
    with pytest.raises(CorpusFormatError) as excinfo:
        read_canonical(path)
    violation = excinfo.value.violations[0]
    assert violation.line == 1
    assert "instances[0].dataset" in violation.message


def test_quad_adapter(data_dir):
    corpus = adapt_quad_per_line(data_dir / "quad", "ic15", split="test")
    assert [im.image_id for im in corpus.images] == ["img_1", "img_2"]
    img_1 = corpus.by_id["img_1"]
    assert img_1.split == "test"
    assert (img_1.width, img_1.height) == (80, 20)
    assert img_1.instances[0].transcription == "stop"
    assert img_1.instances[1].transcription is None and not img_1.instances[1].legible
    assert corpus.by_id["img_2"].instances[0].transcription == "1,000"


def test_quad_adapter_with_image_sizes(data_dir):
    corpus = adapt_quad_per_line(data_dir / "quad", "ic15", image_sizes={"img_1": (1280, 720)})
    assert (corpus.by_id["img_1"].width, corpus.by_id["img_1"].height) == (1280, 720)


def test_quad_adapter_line_errors(tmp_path):
    (tmp_path / "gt_bad.txt").write_text("0,0,10,0,10,5,0,5,ok\n1,2,3\n1,x,3,4,5,6,7,8,word\n", encoding="utf-8")
    with pytest.raises(CorpusFormatError) as excinfo:
        adapt_quad_per_line(tmp_path, "ic15")
    violations = excinfo.value.violations
    assert [(v.source, v.line) for v in violations] == [("gt_bad.txt", 2), ("gt_bad.txt", 3)]


def test_quad_adapter_latin1_fallback(tmp_path):
    (tmp_path / "gt_a.txt").write_bytes("0,0,10,0,10,5,0,5,caf\xe9\n".encode("latin-1"))
    corpus = adapt_quad_per_line(tmp_path, "ic13")
    assert corpus.images[0].instances[0].transcription == "café"


def test_cocotext_adapter(data_dir):
    corpus = adapt_cocotext_style(data_dir / "cocotext.json")
    assert [im.image_id for im in corpus.images] == ["1", "2", "3"]
    assert [im.split for im in corpus.images] == ["train", "validation", "test"]

    exit_word, illegible = corpus.by_id["1"].instances
    assert exit_word.instance_id == "10" and exit_word.legible
    assert exit_word.polygon.bounds() == (10.0, 10.0, 50.0, 30.0)
    assert not illegible.legible
    assert corpus.by_id["2"].instances[0].polygon.bounds() == (20.0, 20.0, 70.0, 50.0)
    assert corpus.by_id["3"].instances == ()


def test_cocotext_dangling_reference_and_bad_legibility(tmp_path):
    data = {
        "imgs": {"1": {"width": 100, "height": 100, "set": "train"}},
        "anns": {
            "5": {"image_id": 9, "utf8_string": "a", "legibility": "legible", "bbox": [0, 0, 5, 5]},
            "6": {"image_id": 1, "utf8_string": "b", "legibility": "blurry", "bbox": [0, 0, 5, 5]},
        },
    }
    path = tmp_path / "coco.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    with pytest.raises(CorpusFormatError) as excinfo:
        adapt_cocotext_style(path)
    assert [v.field_path for v in excinfo.value.violations] == ["anns.5.image_id", "anns.6.legibility"]


def test_merge_prefixes_colliding_ids(data_dir):
    first = adapt_quad_per_line(data_dir / "quad", "ic13")
    second = adapt_quad_per_line(data_dir / "quad", "ic15")
    merged = merge_corpora([first, second])
    assert [im.image_id for im in merged.images] == ["ic13/img_1", "ic13/img_2", "ic15/img_1", "ic15/img_2"]


def test_merge_rejects_duplicate_within_dataset(data_dir):
    corpus = adapt_quad_per_line(data_dir / "quad", "ic15")
    with pytest.raises(CorpusFormatError):
        merge_corpora([corpus, corpus])


def test_corpus_stats(corpus):
    stats = corpus_stats(corpus)
    assert stats.total_images == 6
    assert stats.total_instances == 13
    assert stats.total_care_instances is None
    assert [(r.dataset, r.split, r.images) for r in stats.rows] == [
        ("cocotext", "train", 1), ("cocotext", "test", 1),
        ("ic15", "train", 1), ("ic15", "test", 1),
        ("totaltext", "validation", 1), ("totaltext", "test", 1),
    ]


def test_corpus_stats_counts_care_instances(corpus):
    stats = corpus_stats(corpus, Alphabet.default())
    assert stats.total_care_instances == 11
    assert stats.rows[2].care_instances == 2


def test_read_text_file_encoding_fallbacks(tmp_path):
    reader = TextReader()
    (tmp_path / "utf8.txt").write_bytes("\ufeffcafé".encode("utf-8"))
    (tmp_path / "cp1252.txt").write_bytes("café €".encode("cp1252"))
    # 0x81 n'existe pas en cp1252
    (tmp_path / "latin1.txt").write_bytes(b"\x81caf\xe9")

    assert reader.read_text_file(tmp_path / "utf8.txt") == "café"
    assert reader.read_text_file(tmp_path / "cp1252.txt") == "café €"
    assert reader.read_text_file(tmp_path / "latin1.txt") == "\x81café"
