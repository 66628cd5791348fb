"""
Construction du vocabulaire (IV) et classification IV / OOV des mots
"""
import logging
from pathlib import Path
from typing import List, Optional, Union

from core.exceptions import AlphabetError, ConfigError
from nlp.models import Corpus, EvalConfig, ImageAnnotation, SubsetLabel, Vocabulary, VocabularySources
from preprocessing.text_cleaner import effective_dontcare, is_in_alphabet, normalize_transcription
from preprocessing.text_reader import TextReader

logger = logging.getLogger(__name__)

VOCABULARY_SPLITS = ("train", "validation")


def read_lexicon(path: Union[str, Path]) -> List[str]:
    """
    Lit un lexique UTF-8, un mot par ligne (compatible dictionnaire 90k)

    Args:
        path: Chemin du lexique

    Returns:
        Mots normalisés non vides, dans l'ordre du fichier
    """
    try:
        text = TextReader().read_text_file(path)
    except OSError as e:
        raise ConfigError(f"Lexique illisible {path}: {e}")

    words = [normalize_transcription(line) for line in text.splitlines()]
    return [w for w in words if w]


def care_words(image: ImageAnnotation, cfg: EvalConfig) -> List[str]:
    """Transcriptions normalisées des instances prises en compte d'une image"""
    return [
        normalize_transcription(inst.transcription)
        for inst in image.instances
        if not effective_dontcare(inst, cfg.alphabet)
    ]


def build_vocabulary(corpus: Corpus, lexicon: Optional[Union[str, Path]] = None,
                     cfg: Optional[EvalConfig] = None) -> Vocabulary:
    """
    Construit le dictionnaire IV

    Union des transcriptions lisibles et dans l'alphabet des splits train et
    validation, et des entrées du lexique externe.

    Args:
        corpus: Corpus avec splits d'origine
        lexicon: Lexique externe (optionnel)
        cfg: Configuration d'évaluation

    Returns:
        Vocabulaire
    """
    cfg = cfg or EvalConfig()

    corpus_words = set()
    for image in corpus.images:
        if image.split in VOCABULARY_SPLITS:
            corpus_words.update(care_words(image, cfg))

    lexicon_words = set(read_lexicon(lexicon)) if lexicon is not None else set()

    vocab = Vocabulary(
        words=frozenset(corpus_words | lexicon_words),
        sources=VocabularySources(
            corpus_word_count=len(corpus_words),
            lexicon_word_count=len(lexicon_words),
        ),
    )
    logger.info(
        f"Vocabulaire construit : {len(vocab.words)} mots "
        f"(corpus {len(corpus_words)}, lexique {len(lexicon_words)})"
    )
    return vocab


def classify_word(word: str, vocab: Vocabulary, cfg: Optional[EvalConfig] = None) -> SubsetLabel:
    """
    Classe un mot normalisé en IV ou OOV

    Args:
        word: Mot normalisé, dans l'alphabet
        vocab: Vocabulaire
        cfg: Configuration (sensibilité à la casse de l'appartenance)

    Returns:
        SubsetLabel.IV si le mot appartient au vocabulaire, sinon OOV
    """
    cfg = cfg or EvalConfig()
    if not is_in_alphabet(word, cfg.alphabet):
        raise AlphabetError(f"mot hors alphabet : {word!r}")

    if vocab.contains(word, case_sensitive=cfg.membership_case_sensitive):
        return SubsetLabel.IV
    return SubsetLabel.OOV


def subset_labels(image: ImageAnnotation, vocab: Vocabulary,
                  cfg: Optional[EvalConfig] = None) -> List[Optional[SubsetLabel]]:
    """Sous-ensemble de chaque instance d'une image (None pour les "don't care")"""
    cfg = cfg or EvalConfig()
    labels: List[Optional[SubsetLabel]] = []
    for inst in image.instances:
        if effective_dontcare(inst, cfg.alphabet):
            labels.append(None)
        else:
            labels.append(classify_word(normalize_transcription(inst.transcription), vocab, cfg))
    return labels
