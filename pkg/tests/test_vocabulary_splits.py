"""
Vocabulaire IV, classification et sélection des splits OOV
"""
import numpy as np
import pytest

from core.exceptions import AlphabetError
from nlp.models import Corpus, EvalConfig, SubsetLabel, Vocabulary
from nlp.splits import assign_splits, export_cropped_words, select_test_images, select_validation_images
from nlp.vocabulary import build_vocabulary, care_words, classify_word, read_lexicon, subset_labels

from helpers import box, gt, image


def test_vocabulary_from_train_and_validation(vocab):
    assert vocab.words == frozenset({"cafe", "open", "stop", "hello"})
    assert vocab.sources.corpus_word_count == 4
    assert vocab.sources.lexicon_word_count == 0


def test_vocabulary_with_lexicon(corpus, cfg, data_dir):
    vocab = build_vocabulary(corpus, data_dir / "lexicon.txt", cfg)
    assert vocab.words == frozenset({"cafe", "open", "stop", "hello", "market", "Zebra"})
    assert vocab.sources.lexicon_word_count == 3


def test_read_lexicon_skips_empty_lines(data_dir):
    assert read_lexicon(data_dir / "lexicon.txt") == ["market", "stop", "Zebra"]


def test_illegible_train_word_is_excluded(cfg):
    corpus = Corpus.from_images([image("a", [
        gt(box(0, 0, 10, 5), "alpha", "0"),
        gt(box(20, 0, 10, 5), "beta", "1", legible=False),
        gt(box(40, 0, 10, 5), "two words", "2"),
    ], split="train")])
    assert build_vocabulary(corpus, cfg=cfg).words == frozenset({"alpha"})


def test_test_words_never_enter_vocabulary(vocab):
    assert "zebra7" not in vocab.words
    assert "qwx" not in vocab.words


def test_classify_word(vocab, cfg):
    assert classify_word("stop", vocab, cfg) == SubsetLabel.IV
    assert classify_word("Stop", vocab, cfg) == SubsetLabel.OOV
    assert classify_word("Stop", vocab, EvalConfig(vocab_case_sensitive=False)) == SubsetLabel.IV
    with pytest.raises(AlphabetError):
        classify_word("déjà", vocab, cfg)


def test_subset_labels_mark_dontcare(corpus, vocab, cfg):
    labels = subset_labels(corpus.by_id["img_2"], vocab, cfg)
    assert labels == [SubsetLabel.IV, SubsetLabel.OOV, None]


def test_select_test_images(corpus, vocab, cfg):
    assert select_test_images(corpus, vocab, cfg) == ["img_2", "t2"]


def test_unreadable_marker_does_not_qualify_test_image(cfg):
    corpus = Corpus.from_images([
        image("tr", [gt(box(0, 0, 10, 5), "stop", "0")], split="train"),
        image("t", [gt(box(0, 0, 10, 5), "###", "0")], split="test"),
        image("u", [gt(box(0, 0, 10, 5), "###", "0"), gt(box(20, 0, 10, 5), "qwx", "1")], split="test"),
    ])
    vocab = build_vocabulary(corpus, cfg=cfg)
    assert "###" not in vocab.words
    assert select_test_images(corpus, vocab, cfg) == ["u"]


def test_select_validation_images(corpus, cfg):
    assert select_validation_images(corpus, cfg=cfg) == ["101", "t1"]
    assert select_validation_images(corpus, cap=1, cfg=cfg) == ["101"]
    assert select_validation_images(corpus, cap=0, cfg=cfg) == []


def test_assign_splits(corpus, vocab, cfg):
    oov = assign_splits(corpus, ["101", "t1"], ["img_2", "t2"])
    assert {im.image_id: im.split for im in oov.images} == {
        "101": "validation", "img_1": "train", "img_2": "test", "t1": "validation", "t2": "test",
    }


def test_export_cropped_words(corpus, vocab, cfg):
    records = export_cropped_words(corpus, vocab, "test", cfg)
    assert [(r.word_id, r.transcription, r.subset) for r in records] == [
        ("102#0", "open", SubsetLabel.IV),
        ("img_2#0", "stop", SubsetLabel.IV),
        ("img_2#1", "zebra7", SubsetLabel.OOV),
        ("t2#0", "qwx", SubsetLabel.OOV),
        ("t2#1", "hello", SubsetLabel.IV),
    ]


def _random_corpus(rng: np.random.Generator, n_images: int) -> Corpus:
    lexicon = ["w%d" % i for i in range(30)]
    images = []
    for i in range(n_images):
        split = rng.choice(["train", "validation", "test"], p=[0.6, 0.2, 0.2])
        n_words = int(rng.integers(0, 5))
        instances = [
            gt(box(5 + 15 * k, 10, 10, 5), str(rng.choice(lexicon)), str(k), legible=bool(rng.random() > 0.1))
            for k in range(n_words)
        ]
        images.append(image(f"im{i:03d}", instances, split=str(split)))
    return Corpus.from_images(images)


@pytest.mark.parametrize("seed", range(20))
def test_split_rules_on_random_corpora(seed, cfg):
    rng = np.random.default_rng(seed)
    corpus = _random_corpus(rng, 60)
    vocab = build_vocabulary(corpus, cfg=cfg)

    for im in corpus.images:
        if im.split in ("train", "validation"):
            assert all(classify_word(w, vocab, cfg) == SubsetLabel.IV for w in care_words(im, cfg))

    for image_id in select_test_images(corpus, vocab, cfg):
        words = care_words(corpus.by_id[image_id], cfg)
        assert any(classify_word(w, vocab, cfg) == SubsetLabel.OOV for w in words)

    cap = int(rng.integers(0, 10))
    assert len(select_validation_images(corpus, cap=cap, cfg=cfg)) <= cap


def test_vocabulary_rejects_empty_word():
    with pytest.raises(ValueError):
        Vocabulary(words=frozenset({""}))
