"""
Analyses diagnostiques : longueur des mots, catégories, répartition spatiale, histogrammes
"""
import logging
from collections import Counter, defaultdict
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from config import LENGTH_MIN_BUCKET, WORDS_PER_IMAGE_MAX_BIN
from core.exceptions import SubmissionError
from evaluation.recognition import align_predictions
from geometry.polygons import centroid
from nlp.models import Corpus, CroppedWordRecord, EvalConfig, ImageAnnotation, SubsetLabel, Vocabulary
from nlp.reports import (
    CategoryRow, CategoryRule, LengthBucket, LengthProfile, MatchLedger, RecognitionSubmission,
    SpatialHeatmap, WordOutcome, WordsPerImageHistogram
)
from nlp.vocabulary import subset_labels
from preprocessing.text_cleaner import effective_dontcare, normalize_transcription
from rules.rules import FALLBACK_CATEGORY, categorize

logger = logging.getLogger(__name__)


# ========== ISSUES PAR MOT ==========

def outcomes_from_ledgers(images: Sequence[ImageAnnotation], ledgers: Iterable[MatchLedger],
                          vocab: Vocabulary, cfg: Optional[EvalConfig] = None) -> List[WordOutcome]:
    """
    Issue de chaque instance prise en compte d'après les registres de la tâche 1

    Args:
        images: Images évaluées
        ledgers: Registres d'appariement (un par image)
        vocab: Vocabulaire IV
        cfg: Configuration d'évaluation

    Returns:
        Une issue par instance ; succès si appariée avec la bonne transcription
    """
    cfg = cfg or EvalConfig()
    by_id = {ledger.image_id: ledger for ledger in ledgers}
    missing = [image.image_id for image in images if image.image_id not in by_id]
    if missing:
        raise SubmissionError("registre d'appariement absent pour ces images", missing)

    outcomes = []
    for image in images:
        correct = {p.gt_index for p in by_id[image.image_id].pairs if p.transcription_correct}
        for index, (inst, label) in enumerate(zip(image.instances, subset_labels(image, vocab, cfg))):
            if label is None:
                continue
            outcomes.append(WordOutcome(
                word=normalize_transcription(inst.transcription),
                subset=label,
                success=index in correct,
                dataset=inst.dataset,
            ))
    return outcomes


def outcomes_from_recognition(crops: Sequence[CroppedWordRecord], submission: RecognitionSubmission,
                              cfg: Optional[EvalConfig] = None) -> List[WordOutcome]:
    """Issue de chaque mot découpé ; succès si la prédiction est exacte"""
    cfg = cfg or EvalConfig()
    pairs, _ = align_predictions(crops, submission)
    return [
        WordOutcome(
            word=record.transcription,
            subset=record.subset,
            success=normalize_transcription(prediction, cfg) == normalize_transcription(record.transcription, cfg),
            dataset=record.dataset,
        )
        for record, prediction in pairs
    ]


# ========== LONGUEUR DES MOTS ==========

def length_profile(outcomes: Iterable[WordOutcome], max_bucket: int = 25) -> LengthProfile:
    """
    Taux de succès par longueur de mot et par sous-ensemble

    Les mots plus longs que `max_bucket` tombent dans le dernier intervalle ;
    les mots d'un seul caractère sont hors profil.

    Args:
        outcomes: Issues par mot
        max_bucket: Dernière longueur

    Returns:
        Profil ; un intervalle sans mot a une valeur None
    """
    n = Counter()
    hits = Counter()
    for outcome in outcomes:
        if outcome.length < LENGTH_MIN_BUCKET:
            continue
        key = (min(outcome.length, max_bucket), outcome.subset)
        n[key] += 1
        hits[key] += int(outcome.success)

    buckets = []
    for length in range(LENGTH_MIN_BUCKET, max_bucket + 1):
        for subset in SubsetLabel:
            count = n[(length, subset)]
            buckets.append(LengthBucket(
                length=length, subset=subset, n=count,
                value=hits[(length, subset)] / count if count else None,
            ))
    return LengthProfile(buckets=buckets, max_bucket=max_bucket)


# ========== CATÉGORIES ==========

def category_accuracy(outcomes: Iterable[WordOutcome], rules: Sequence[CategoryRule]) -> List[CategoryRow]:
    """
    Exactitude par (catégorie, sous-ensemble)

    Args:
        outcomes: Issues par mot
        rules: Règles de catégorisation

    Returns:
        Lignes dans l'ordre des règles puis "other" ; catégories vides omises
    """
    n = Counter()
    hits = Counter()
    for outcome in outcomes:
        key = (categorize(outcome.word, rules), outcome.subset)
        n[key] += 1
        hits[key] += int(outcome.success)

    order = [rule.name for rule in rules] + [FALLBACK_CATEGORY]
    rows = []
    for category in order:
        for subset in SubsetLabel:
            count = n[(category, subset)]
            if count == 0:
                continue
            rows.append(CategoryRow(
                category=category, subset=subset, n=count,
                n_success=hits[(category, subset)],
                accuracy=hits[(category, subset)] / count,
            ))
    return rows


# ========== RÉPARTITION SPATIALE ==========

def spatial_heatmap(corpus: Corpus, dataset: Optional[str] = None, grid: int = 64,
                    cfg: Optional[EvalConfig] = None) -> SpatialHeatmap:
    """
    Compte les centroïdes des instances prises en compte sur une grille G×G

    Les coordonnées sont ramenées au carré unité par les dimensions de
    l'image ; un centroïde hors cadre est compté dans la cellule de bord.

    Args:
        corpus: Corpus
        dataset: Jeu de données retenu (tous si None)
        grid: Taille G de la grille
        cfg: Configuration d'évaluation

    Returns:
        Grille ligne par ligne (ligne = axe vertical)
    """
    cfg = cfg or EvalConfig()
    us, vs = [], []

    for image in corpus.images:
        if dataset is not None and image.dataset != dataset:
            continue
        for inst in image.instances:
            if effective_dontcare(inst, cfg.alphabet):
                continue
            c = centroid(inst.polygon)
            us.append(c.x / image.width)
            vs.append(c.y / image.height)

    counts = np.zeros((grid, grid), dtype=np.int64)
    if us:
        cols = np.clip(np.floor(np.asarray(us) * grid), 0, grid - 1).astype(np.int64)
        rows = np.clip(np.floor(np.asarray(vs) * grid), 0, grid - 1).astype(np.int64)
        np.add.at(counts, (rows, cols), 1)

    return SpatialHeatmap(dataset=dataset or "all", grid=counts.tolist())


# ========== HISTOGRAMMES ==========

def words_per_image_histogram(corpus: Corpus, cfg: Optional[EvalConfig] = None,
                              max_bin: int = WORDS_PER_IMAGE_MAX_BIN) -> List[WordsPerImageHistogram]:
    """
    Nombre d'images par nombre de mots pris en compte, par jeu de données

    Args:
        corpus: Corpus
        cfg: Configuration d'évaluation
        max_bin: Dernier intervalle ; au-delà, débordement

    Returns:
        Un histogramme par jeu de données (ordre alphabétique)
    """
    cfg = cfg or EvalConfig()
    histograms: Dict[str, WordsPerImageHistogram] = {}

    for image in corpus.images:
        hist = histograms.get(image.dataset)
        if hist is None:
            hist = histograms[image.dataset] = WordsPerImageHistogram(dataset=image.dataset, bins=[0] * max_bin)
        n_words = sum(1 for inst in image.instances if not effective_dontcare(inst, cfg.alphabet))
        if n_words == 0:
            hist.zero += 1
        elif n_words <= max_bin:
            hist.bins[n_words - 1] += 1
        else:
            hist.overflow += 1

    return [histograms[name] for name in sorted(histograms)]


def oov_length_histogram(crops: Iterable[CroppedWordRecord]) -> Dict[str, Dict[int, int]]:
    """
    Longueur des mots OOV par jeu de données

    Returns:
        {jeu de données: {longueur: nombre}} trié
    """
    counts: Dict[str, Counter] = defaultdict(Counter)
    for record in crops:
        if record.subset == SubsetLabel.OOV:
            counts[record.dataset][len(record.transcription)] += 1
    return {dataset: dict(sorted(counts[dataset].items())) for dataset in sorted(counts)}
