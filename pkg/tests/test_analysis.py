"""
Analyses : longueur, catégories, répartition spatiale, histogrammes
"""
import numpy as np
import pytest

from analysis.analyses import (
    category_accuracy, length_profile, oov_length_histogram, outcomes_from_ledgers, outcomes_from_recognition,
    spatial_heatmap, words_per_image_histogram
)
from core.exceptions import ConfigError, SubmissionError
from evaluation.e2e import evaluate_image, read_detection_submission, align_submission
from nlp.models import Corpus, SubsetLabel
from nlp.reports import RecognitionSubmission, WordOutcome
from nlp.splits import export_cropped_words
from rules.rules import categorize, load_category_rules

from helpers import box, gt, image

IV, OOV = SubsetLabel.IV, SubsetLabel.OOV


def outcome(word, subset=IV, success=True, dataset="synth"):
    return WordOutcome(word=word, subset=subset, success=success, dataset=dataset)


# ========== LONGUEUR ==========

def _bucket(profile, length, subset):
    return next(b for b in profile.buckets if b.length == length and b.subset == subset)


def test_length_bucket_mean():
    outcomes = [outcome("abcde", success=s) for s in (True, True, False, False)]
    profile = length_profile(outcomes)
    assert _bucket(profile, 5, IV).value == 0.5
    assert _bucket(profile, 5, IV).n == 4


def test_empty_bucket_is_none_not_zero():
    profile = length_profile([outcome("abcde")])
    assert _bucket(profile, 9, IV).value is None
    assert _bucket(profile, 9, IV).n == 0


def test_long_words_are_clamped_into_last_bucket():
    profile = length_profile([outcome("a" * 40, OOV, False), outcome("b" * 25, OOV, True)], max_bucket=25)
    last = _bucket(profile, 25, OOV)
    assert (last.n, last.value) == (2, 0.5)


def test_length_profile_hand_tally():
    outcomes = [
        outcome("ab", IV, True), outcome("cd", IV, False), outcome("abc", IV, True),
        outcome("abc", OOV, False), outcome("abcd", OOV, True), outcome("abcd", OOV, True),
        outcome("abcd", OOV, False), outcome("x", OOV, True), outcome("abcdef", IV, True),
        outcome("abcdef", IV, True),
    ]
    profile = length_profile(outcomes, max_bucket=5)
    assert [(b.length, b.subset.value, b.n, b.value) for b in profile.buckets] == [
        (2, "IV", 2, 0.5), (2, "OOV", 0, None),
        (3, "IV", 1, 1.0), (3, "OOV", 1, 0.0),
        (4, "IV", 0, None), (4, "OOV", 3, pytest.approx(2 / 3)),
        (5, "IV", 2, 1.0), (5, "OOV", 0, None),
    ]
    # conservation : seuls les mots d'un caractère sont hors profil
    assert sum(b.n for b in profile.buckets) == 9


# ========== CATÉGORIES ==========

@pytest.fixture
def rules():
    return load_category_rules()


@pytest.mark.parametrize("word, category", [
    ("$4.99", "price"),
    ("4.99", "price"),
    ("user@site.com", "email"),
    ("www.example.org", "url"),
    ("http://a.b/c", "url"),
    ("example.com", "url"),
    ("+1(555)123-4567", "phone"),
    ("0123456789", "phone"),
    ("2024", "number"),
    ("50km", "units"),
    ("12%", "units"),
    ("qwerty", "other"),
])
def test_default_categories(rules, word, category):
    assert categorize(word, rules) == category


def test_rules_are_sorted_with_unique_priorities(rules):
    assert [r.name for r in rules] == ["email", "url", "phone", "number", "units", "price"]


def test_units_placeholder_uses_given_units(tmp_path):
    path = tmp_path / "rules.yaml"
    path.write_text("categories:\n  - name: units\n    priority: 1\n    pattern: '[0-9]+(?:{units})'\n", encoding="utf-8")
    rules = load_category_rules(path, units=["px"])
    assert categorize("12px", rules) == "units"
    assert categorize("12km", rules) == "other"


def test_duplicate_priorities_rejected(tmp_path):
    path = tmp_path / "rules.yaml"
    path.write_text(
        "categories:\n"
        "  - {name: a, priority: 1, pattern: 'a'}\n"
        "  - {name: b, priority: 1, pattern: 'b'}\n",
        encoding="utf-8",
    )
    with pytest.raises(ConfigError):
        load_category_rules(path)


def test_invalid_pattern_rejected(tmp_path):
    path = tmp_path / "rules.yaml"
    path.write_text("categories:\n  - {name: a, priority: 1, pattern: '(unclosed'}\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_category_rules(path)


def test_category_accuracy_all_correct(rules):
    rows = category_accuracy([outcome("2024"), outcome("hello", OOV), outcome("$5")], rules)
    assert all(r.accuracy == 1.0 for r in rows)


def test_category_accuracy_hand_tally(rules):
    outcomes = [
        outcome("2024", IV, True), outcome("17", IV, False), outcome("99", OOV, True),
        outcome("stop", IV, True), outcome("qwx", OOV, False), outcome("zebra7", OOV, True),
    ]
    rows = category_accuracy(outcomes, rules)
    assert [(r.category, r.subset.value, r.n, r.n_success) for r in rows] == [
        ("number", "IV", 2, 1), ("number", "OOV", 1, 1),
        ("other", "IV", 1, 1), ("other", "OOV", 2, 1),
    ]
    assert sum(r.n for r in rows) == len(outcomes)


# ========== RÉPARTITION SPATIALE ==========

def test_centered_word_lands_in_central_cell():
    corpus = Corpus.from_images([image("a", [gt(box(45, 45, 10, 10), "mid", "0")])])
    heatmap = spatial_heatmap(corpus, grid=4)
    grid = np.array(heatmap.grid)
    assert grid.sum() == 1
    assert grid[2, 2] == 1


def test_empty_corpus_gives_zero_grid():
    heatmap = spatial_heatmap(Corpus(), grid=8)
    assert np.array(heatmap.grid).shape == (8, 8)
    assert np.array(heatmap.grid).sum() == 0


def test_out_of_frame_centroid_is_clamped():
    corpus = Corpus.from_images([image("a", [gt(box(-8, 96, 6, 8), "edge", "0")])])
    grid = np.array(spatial_heatmap(corpus, grid=4).grid)
    assert grid[3, 0] == 1


def test_heatmap_counts_care_instances_and_filters_dataset(corpus):
    assert np.array(spatial_heatmap(corpus).grid).sum() == 11
    assert np.array(spatial_heatmap(corpus, dataset="ic15").grid).sum() == 4
    assert np.array(spatial_heatmap(corpus, dataset="absent").grid).sum() == 0


def test_heatmap_is_scale_invariant():
    small = Corpus.from_images([image("a", [gt(box(13, 71, 9, 4), "w", "0")], width=100, height=100)])
    large = Corpus.from_images([image("a", [gt(box(39, 213, 27, 12), "w", "0")], width=300, height=300)])
    assert spatial_heatmap(small, grid=16).grid == spatial_heatmap(large, grid=16).grid


def test_uniform_boxes_fill_grid_uniformly():
    rng = np.random.default_rng(3)
    images = []
    for i in range(100):
        xs = rng.uniform(0, 99, size=100)
        ys = rng.uniform(0, 99, size=100)
        instances = [gt(box(x, y, 1, 1), "w", str(k)) for k, (x, y) in enumerate(zip(xs, ys))]
        images.append(image(f"im{i}", instances))
    grid = np.array(spatial_heatmap(Corpus.from_images(images), grid=4).grid)
    assert grid.sum() == 10_000
    expected = 10_000 / 16
    sigma = np.sqrt(10_000 * (1 / 16) * (15 / 16))
    assert np.all(np.abs(grid - expected) < 5 * sigma)


# ========== HISTOGRAMMES ==========

def test_words_per_image_histogram():
    crowded = [gt(box(1 + (k % 10) * 9, 1 + (k // 10) * 4, 5, 2), "w", str(k), dataset="d1") for k in range(200)]
    images = [
        image("a", crowded, dataset="d1"),
        image("b", [gt(box(0, 0, 5, 5), None, "0", dataset="d1")], dataset="d1"),
        image("c", [gt(box(0, 0, 5, 5), "x", "0", dataset="d2"), gt(box(10, 0, 5, 5), "y", "1", dataset="d2")],
              dataset="d2"),
    ]
    histograms = words_per_image_histogram(Corpus.from_images(images))
    d1, d2 = histograms
    assert (d1.dataset, d1.zero, d1.overflow, sum(d1.bins)) == ("d1", 1, 1, 0)
    assert (d2.dataset, d2.zero, d2.overflow, d2.bins[1], sum(d2.bins)) == ("d2", 0, 0, 1, 1)
    assert len(d1.bins) == 150


def test_oov_length_histogram(corpus, vocab, cfg):
    crops = export_cropped_words(corpus, vocab, "test", cfg)
    assert oov_length_histogram(crops) == {"ic15": {6: 1}, "totaltext": {3: 1}}
    assert oov_length_histogram([c for c in crops if c.subset == IV]) == {}


# ========== ISSUES ==========

def test_outcomes_from_ledgers(corpus, vocab, cfg, data_dir):
    images = [corpus.by_id["img_2"], corpus.by_id["t2"]]
    aligned = align_submission(images, read_detection_submission(data_dir / "submission_e2e.jsonl"))
    ledgers = [evaluate_image(im, dets, vocab, cfg)[0] for im, dets in aligned]
    outcomes = outcomes_from_ledgers(images, ledgers, vocab, cfg)
    assert [(o.word, o.subset, o.success) for o in outcomes] == [
        ("stop", IV, True), ("zebra7", OOV, False), ("qwx", OOV, True), ("hello", IV, False),
    ]


def test_outcomes_require_every_ledger(corpus, vocab, cfg):
    with pytest.raises(SubmissionError):
        outcomes_from_ledgers([corpus.by_id["img_2"]], [], vocab, cfg)


def test_outcomes_from_recognition(corpus, vocab, cfg):
    crops = export_cropped_words(corpus, vocab, "test", cfg)
    outcomes = outcomes_from_recognition(crops, RecognitionSubmission(predictions={"t2#0": "qwx"}), cfg)
    assert [o.success for o in outcomes] == [False, False, False, True, False]
