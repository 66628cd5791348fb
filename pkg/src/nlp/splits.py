"""
Sélection des splits OOV (test, validation) et export des mots découpés
"""
import logging
from collections import Counter
from typing import Iterable, List, Optional

from nlp.models import Corpus, CroppedWordRecord, EvalConfig, SubsetLabel, Vocabulary
from nlp.vocabulary import VOCABULARY_SPLITS, care_words, classify_word
from preprocessing.text_cleaner import effective_dontcare, normalize_transcription

logger = logging.getLogger(__name__)


def select_test_images(corpus: Corpus, vocab: Vocabulary, cfg: Optional[EvalConfig] = None) -> List[str]:
    """
    Images de test contenant au moins un mot pris en compte hors vocabulaire

    Args:
        corpus: Corpus avec splits d'origine
        vocab: Vocabulaire IV
        cfg: Configuration d'évaluation

    Returns:
        Identifiants triés
    """
    cfg = cfg or EvalConfig()
    selected = []
    candidates = 0

    for image in corpus.images:
        if image.split != "test":
            continue
        candidates += 1
        if any(classify_word(w, vocab, cfg) == SubsetLabel.OOV for w in care_words(image, cfg)):
            selected.append(image.image_id)

    logger.info(f"Test : {len(selected)}/{candidates} images contiennent un mot OOV")
    return sorted(selected)


def select_validation_images(corpus: Corpus, cap: Optional[int] = None,
                             cfg: Optional[EvalConfig] = None) -> List[str]:
    """
    Images de validation : au moins un mot n'apparaissant qu'une fois

    Les occurrences sont comptées sur les instances prises en compte des splits
    train et validation d'origine. Le résultat est tronqué à `cap` images dans
    l'ordre des identifiants.

    Args:
        corpus: Corpus avec splits d'origine
        cap: Nombre maximum d'images (défaut : cfg.validation_cap)
        cfg: Configuration d'évaluation

    Returns:
        Identifiants triés
    """
    cfg = cfg or EvalConfig()
    cap = cfg.validation_cap if cap is None else cap

    pool = [image for image in corpus.images if image.split in VOCABULARY_SPLITS]
    words_by_image = {image.image_id: care_words(image, cfg) for image in pool}
    occurrences = Counter(w for words in words_by_image.values() for w in words)

    qualifying = sorted(
        image_id for image_id, words in words_by_image.items()
        if any(occurrences[w] == 1 for w in words)
    )
    selected = qualifying[:max(cap, 0)]

    logger.info(
        f"Validation : {len(qualifying)} images éligibles sur {len(pool)}, "
        f"{len(selected)} retenues (plafond {cap})"
    )
    return selected


def assign_splits(corpus: Corpus, validation_ids: Iterable[str], test_ids: Iterable[str]) -> Corpus:
    """
    Réaffecte les splits pour former le corpus OOV

    Images de validation retenues -> validation ; reste du pool train/validation
    -> train ; images de test retenues -> test ; autres images de test écartées.

    Args:
        corpus: Corpus avec splits d'origine
        validation_ids: Images de validation sélectionnées
        test_ids: Images de test sélectionnées

    Returns:
        Nouveau corpus
    """
    validation_ids = set(validation_ids)
    test_ids = set(test_ids)
    images = []

    for image in corpus.images:
        if image.split in VOCABULARY_SPLITS:
            split = "validation" if image.image_id in validation_ids else "train"
        elif image.image_id in test_ids:
            split = "test"
        else:
            continue
        images.append(image if image.split == split else image.model_copy(update={"split": split}))

    dropped = len(corpus.images) - len(images)
    logger.info(f"Corpus OOV : {len(images)} images ({dropped} images de test écartées)")
    return Corpus.from_images(images)


def export_cropped_words(corpus: Corpus, vocab: Vocabulary, split: str,
                         cfg: Optional[EvalConfig] = None) -> List[CroppedWordRecord]:
    """
    Un enregistrement par instance prise en compte du split

    Args:
        corpus: Corpus
        vocab: Vocabulaire IV
        split: Split exporté
        cfg: Configuration d'évaluation

    Returns:
        Mots découpés, dans l'ordre du corpus
    """
    cfg = cfg or EvalConfig()
    records = []

    for image in corpus.images:
        if image.split != split:
            continue
        for inst in image.instances:
            if effective_dontcare(inst, cfg.alphabet):
                continue
            word = normalize_transcription(inst.transcription)
            records.append(CroppedWordRecord(
                word_id=f"{image.image_id}#{inst.instance_id}",
                transcription=word,
                dataset=inst.dataset,
                subset=classify_word(word, vocab, cfg),
            ))

    n_oov = sum(1 for r in records if r.subset == SubsetLabel.OOV)
    logger.info(f"Mots découpés ({split}) : {len(records)} dont {n_oov} OOV")
    return records
