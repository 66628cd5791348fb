"""
Évaluation de la reconnaissance de mots découpés (tâche 2)
"""
import logging
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import editdistance

from core.exceptions import CorpusFormatError, SubmissionError
from nlp.models import CroppedWordRecord, EvalConfig, SubsetLabel
from nlp.reports import (
    E2EReport, LeaderboardEntry, RecognitionMetrics, RecognitionPrediction, RecognitionSubmission,
    RecReport, WordTally
)
from preprocessing.text_cleaner import normalize_transcription
from preprocessing.text_reader import read_records

logger = logging.getLogger(__name__)

WordTallies = Dict[SubsetLabel, WordTally]


def edit_distance(a: str, b: str) -> int:
    """Distance de Levenshtein à coûts unitaires, par point de code"""
    return int(editdistance.eval(a, b))


def read_recognition_submission(path: Union[str, Path]) -> RecognitionSubmission:
    """
    Lit une soumission de la tâche 2 ({"word_id", "prediction"} par ligne)

    Args:
        path: Fichier JSON ligne à ligne

    Returns:
        Soumission indexée par word_id
    """
    records, violations = read_records(path, RecognitionPrediction)
    if violations:
        raise CorpusFormatError(violations)

    predictions: Dict[str, str] = {}
    duplicates = set()
    for _, record in records:
        if record.word_id in predictions:
            duplicates.add(record.word_id)
        predictions[record.word_id] = record.prediction
    if duplicates:
        raise SubmissionError("word_id en double dans la soumission", sorted(duplicates))

    logger.info(f"Soumission lue : {len(predictions)} prédictions")
    return RecognitionSubmission(predictions=predictions)


def align_predictions(gt: Sequence[CroppedWordRecord], sub: RecognitionSubmission,
                      strict: bool = False) -> Tuple[List[Tuple[CroppedWordRecord, str]], int]:
    """
    Associe chaque mot de vérité terrain à sa prédiction

    Args:
        gt: Mots découpés de référence
        sub: Soumission
        strict: Refuser les prédictions manquantes

    Returns:
        (couples (mot, prédiction), nombre de prédictions manquantes remplacées par "")
    """
    known = {record.word_id for record in gt}
    unknown = [word_id for word_id in sub.predictions if word_id not in known]
    if unknown:
        raise SubmissionError("word_id inconnus dans la soumission", unknown)

    missing = [record.word_id for record in gt if record.word_id not in sub.predictions]
    if missing and strict:
        raise SubmissionError("prédictions manquantes (mode strict)", missing)
    if missing:
        logger.warning(f"{len(missing)} prédiction(s) manquante(s), comptée(s) comme chaîne vide")

    pairs = [(record, sub.predictions.get(record.word_id, "")) for record in gt]
    return pairs, len(missing)


def tally_words(pairs: Sequence[Tuple[CroppedWordRecord, str]], cfg: Optional[EvalConfig] = None) -> WordTallies:
    """
    Compte mots, mots corrects et distance d'édition par sous-ensemble

    Args:
        pairs: Couples (mot de référence, prédiction)
        cfg: Configuration (sensibilité à la casse)

    Returns:
        Totaux IV et OOV
    """
    cfg = cfg or EvalConfig()
    tallies = {label: WordTally() for label in SubsetLabel}

    for record, prediction in pairs:
        truth = normalize_transcription(record.transcription, cfg)
        guess = normalize_transcription(prediction, cfg)
        distance = 0 if guess == truth else edit_distance(guess, truth)
        tallies[record.subset] = tallies[record.subset] + WordTally(
            n_words=1, n_correct=int(distance == 0), total_edit_distance=distance
        )
    return tallies


def build_rec_report(tallies: WordTallies, missing: int = 0) -> RecReport:
    """
    Construit le rapport à partir des totaux

    Un sous-ensemble vide a une exactitude de 1 (cas vide).
    """
    metrics = {}
    for label in SubsetLabel:
        t = tallies.get(label, WordTally())
        metrics[label] = RecognitionMetrics(
            word_accuracy=t.n_correct / t.n_words if t.n_words else 1.0,
            total_edit_distance=t.total_edit_distance,
            n_words=t.n_words,
            n_correct=t.n_correct,
        )

    iv, oov = metrics[SubsetLabel.IV], metrics[SubsetLabel.OOV]
    return RecReport(
        metrics_iv=iv,
        metrics_oov=oov,
        total_word_accuracy=(iv.word_accuracy + oov.word_accuracy) / 2,
        total_edit_distance=iv.total_edit_distance + oov.total_edit_distance,
        missing_predictions=missing,
    )


def score_submission(gt: Sequence[CroppedWordRecord], sub: RecognitionSubmission,
                     cfg: Optional[EvalConfig] = None, strict: bool = False) -> RecReport:
    """
    Exactitude par mot et distance d'édition totale, par sous-ensemble

    Args:
        gt: Mots découpés de référence
        sub: Soumission
        cfg: Configuration d'évaluation
        strict: Refuser les prédictions manquantes

    Returns:
        Rapport IV / OOV
    """
    pairs, missing = align_predictions(gt, sub, strict=strict)
    return build_rec_report(tally_words(pairs, cfg), missing)


def rank_reports(reports: Mapping[str, Union[RecReport, E2EReport]]) -> List[LeaderboardEntry]:
    """
    Classe des rapports de même tâche

    Tâche 1 : Hmean moyen décroissant puis Hmean All décroissant.
    Tâche 2 : exactitude totale décroissante puis distance d'édition croissante.
    Les ex aequo partagent le même rang.

    Args:
        reports: Rapports indexés par nom de participant

    Returns:
        Classement
    """
    kinds = {type(r) for r in reports.values()}
    if len(kinds) > 1:
        raise SubmissionError("rapports de tâches différentes", sorted(reports))

    scored = []
    for name, report in reports.items():
        if isinstance(report, E2EReport):
            score, tie_break = report.average_hmean, report.metrics_all.hmean
            key = (-score, -tie_break, name)
        else:
            score, tie_break = report.total_word_accuracy, float(report.total_edit_distance)
            key = (-score, tie_break, name)
        scored.append((key, name, score, tie_break))
    scored.sort()

    entries: List[LeaderboardEntry] = []
    for position, (key, name, score, tie_break) in enumerate(scored, 1):
        rank = position
        if entries and entries[-1].score == score and entries[-1].tie_break == tie_break:
            rank = entries[-1].rank
        entries.append(LeaderboardEntry(rank=rank, name=name, score=score, tie_break=tie_break))
    return entries
