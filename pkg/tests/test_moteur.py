"""
Moteur d'évaluation parallèle
"""
import json
import os
import time

import numpy as np
import pytest

from core.moteur import MoteurEvaluation, chunk_bounds
from evaluation.e2e import read_detection_submission
from nlp.models import CroppedWordRecord, SubsetLabel, Vocabulary
from nlp.reports import ImageDetections, RecognitionSubmission
from preprocessing.text_reader import read_canonical

from helpers import box, det, gt, image

WORDS = ["ab", "cd", "ef", "gh", "stop", "open"]


def synthetic_benchmark(rng: np.random.Generator, n_images: int, n_words: int):
    """Images à n_words instances en grille et détections bruitées correspondantes"""
    images, submission = [], []
    cols = int(np.ceil(np.sqrt(n_words)))
    cell = 1000 / cols
    for i in range(n_images):
        instances, dets = [], []
        for k in range(n_words):
            x, y = (k % cols) * cell + 2, (k // cols) * cell + 2
            word = str(rng.choice(WORDS))
            instances.append(gt(box(x, y, cell * 0.8, cell * 0.4), word, str(k), legible=bool(rng.random() > 0.05)))
            dx, dy = rng.normal(0, cell * 0.05, size=2)
            guess = word if rng.random() < 0.7 else str(rng.choice(WORDS))
            dets.append(det(box(x + dx, y + dy, cell * 0.8, cell * 0.4), guess))
        images.append(image(f"im{i:05d}", instances, width=1000, height=1000))
        submission.append(ImageDetections(image_id=f"im{i:05d}", detections=tuple(dets)))
    return images, submission


def test_chunk_bounds_cover_items():
    assert chunk_bounds(10, 4) == [(0, 3), (3, 6), (6, 9), (9, 10)]
    assert chunk_bounds(2, 8) == [(0, 1), (1, 2)]
    assert chunk_bounds(0, 3) == []


def test_e2e_result_independent_of_workers(cfg):
    rng = np.random.default_rng(42)
    images, submission = synthetic_benchmark(rng, 40, 12)
    vocab = Vocabulary(words=frozenset({"ab", "stop"}))

    report_1, ledgers_1 = MoteurEvaluation(workers=1, cfg=cfg).evaluate_e2e(images, submission, vocab)
    report_3, ledgers_3 = MoteurEvaluation(workers=3, cfg=cfg).evaluate_e2e(images, submission, vocab)

    assert report_1 == report_3
    assert ledgers_1 == ledgers_3
    assert [ledger.image_id for ledger in ledgers_1] == [im.image_id for im in images]


def test_engine_on_fixture(corpus, vocab, cfg, data_dir):
    images = [im for im in corpus.images if im.image_id in ("img_2", "t2")]
    report, _ = MoteurEvaluation(workers=2, cfg=cfg).evaluate_e2e(
        images, read_detection_submission(data_dir / "submission_e2e.jsonl"), vocab
    )
    assert report.average_hmean == pytest.approx(0.4)
    assert report.n_images == 2


def test_recognition_result_independent_of_workers(cfg):
    rng = np.random.default_rng(8)
    gt_words, predictions = [], {}
    for i in range(500):
        word = "".join(rng.choice(list("abcdef"), size=int(rng.integers(1, 9))))
        subset = SubsetLabel.IV if rng.random() < 0.6 else SubsetLabel.OOV
        gt_words.append(CroppedWordRecord(word_id=f"w{i}", transcription=word, dataset="synth", subset=subset))
        if rng.random() < 0.9:
            predictions[f"w{i}"] = word if rng.random() < 0.5 else word[::-1]
    sub = RecognitionSubmission(predictions=predictions)

    single = MoteurEvaluation(workers=1, cfg=cfg).evaluate_recognition(gt_words, sub)
    multi = MoteurEvaluation(workers=4, cfg=cfg).evaluate_recognition(gt_words, sub)
    assert single == multi
    assert single.metrics_iv.n_words + single.metrics_oov.n_words == 500


def write_large_benchmark(rng: np.random.Generator, directory, n_images: int, n_words: int):
    """Écrit une vérité terrain canonique et une soumission au format JSON ligne à ligne"""
    cols = int(np.ceil(np.sqrt(n_words)))
    cell = 1000 / cols
    gt_path, sub_path = directory / "gt.jsonl", directory / "submission.jsonl"

    def quad(x, y, w, h):
        return [[round(x, 2), round(y, 2)], [round(x + w, 2), round(y, 2)],
                [round(x + w, 2), round(y + h, 2)], [round(x, 2), round(y + h, 2)]]

    with open(gt_path, "w", encoding="utf-8") as gt_file, open(sub_path, "w", encoding="utf-8") as sub_file:
        for i in range(n_images):
            words = rng.choice(WORDS, size=n_words)
            legible = rng.random(n_words) > 0.05
            noise = rng.normal(0, cell * 0.05, size=(n_words, 2))
            wrong = rng.random(n_words) >= 0.7
            guesses = rng.choice(WORDS, size=n_words)
            instances, dets = [], []
            for k in range(n_words):
                x, y = (k % cols) * cell + 2, (k // cols) * cell + 2
                instances.append({"polygon": quad(x, y, cell * 0.8, cell * 0.4),
                                  "transcription": str(words[k]), "legible": bool(legible[k])})
                dets.append({"polygon": quad(x + noise[k, 0], y + noise[k, 1], cell * 0.8, cell * 0.4),
                             "transcription": str(guesses[k] if wrong[k] else words[k])})
            image_id = f"im{i:05d}"
            gt_file.write(json.dumps({"image_id": image_id, "width": 1000, "height": 1000, "dataset": "synth",
                                      "split": "test", "instances": instances}) + "\n")
            sub_file.write(json.dumps({"image_id": image_id, "detections": dets}) + "\n")
    return gt_path, sub_path


@pytest.fixture(scope="module")
def large_benchmark(tmp_path_factory):
    """10 000 images de 40 mots"""
    return write_large_benchmark(np.random.default_rng(0), tmp_path_factory.mktemp("large"), 10_000, 40)


LARGE_VOCAB = Vocabulary(words=frozenset({"ab", "cd", "stop"}))


@pytest.mark.slow
def test_large_benchmark_single_worker(large_benchmark, cfg):
    gt_path, sub_path = large_benchmark

    start = time.perf_counter()
    corpus = read_canonical(gt_path)
    submission = read_detection_submission(sub_path)
    report, _ = MoteurEvaluation(workers=1, cfg=cfg).evaluate_e2e(corpus.images, submission, LARGE_VOCAB)
    elapsed = time.perf_counter() - start

    assert report.n_images == 10_000
    assert elapsed < 60


@pytest.mark.slow
@pytest.mark.skipif((os.cpu_count() or 1) < 8, reason="8 processeurs requis")
def test_large_benchmark_eight_workers(large_benchmark, cfg):
    gt_path, sub_path = large_benchmark
    corpus = read_canonical(gt_path)
    submission = read_detection_submission(sub_path)

    start = time.perf_counter()
    report_8, _ = MoteurEvaluation(workers=8, cfg=cfg).evaluate_e2e(corpus.images, submission, LARGE_VOCAB)
    elapsed = time.perf_counter() - start
    report_1, _ = MoteurEvaluation(workers=1, cfg=cfg).evaluate_e2e(corpus.images, submission, LARGE_VOCAB)

    assert elapsed < 10
    assert json.dumps(report_1.model_dump(mode="json"), sort_keys=True) == \
        json.dumps(report_8.model_dump(mode="json"), sort_keys=True)
