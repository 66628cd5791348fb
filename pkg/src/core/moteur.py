"""
Moteur principal d'évaluation (tâches 1 et 2), parallélisé par lots
"""
import logging
import math
import multiprocessing
import time
from functools import partial
from multiprocessing.context import BaseContext
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, TypeVar

from config import WORKERS
from evaluation.e2e import ImageCounts, aggregate, align_submission, evaluate_image
from evaluation.recognition import WordTallies, align_predictions, build_rec_report, tally_words
from nlp.models import CroppedWordRecord, EvalConfig, ImageAnnotation, SubsetLabel, Vocabulary
from nlp.reports import Detection, E2EReport, ImageDetections, MatchLedger, RecognitionSubmission, RecReport, WordTally

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

CHUNKS_PER_WORKER = 4


def _evaluate_images(items: Sequence[Tuple[ImageAnnotation, Sequence[Detection]]],
                     vocab: Vocabulary, cfg: EvalConfig) -> List[Tuple[MatchLedger, ImageCounts]]:
    return [evaluate_image(image, dets, vocab, cfg) for image, dets in items]


def _tally_chunk(pairs: Sequence[Tuple[CroppedWordRecord, str]], cfg: EvalConfig) -> WordTallies:
    return tally_words(pairs, cfg)


def chunk_bounds(n_items: int, n_chunks: int) -> List[Tuple[int, int]]:
    """Bornes [début, fin) de lots contigus couvrant n_items éléments"""
    if n_items <= 0:
        return []
    size = max(1, math.ceil(n_items / max(1, n_chunks)))
    return [(start, min(start + size, n_items)) for start in range(0, n_items, size)]


# Tâche et éléments installés une fois par processus ; seules les bornes
# des lots et les résultats transitent entre processus.
_worker_state: Dict[str, Any] = {}


def _install_worker(task: Callable[[Sequence[T]], R], items: Sequence[T]):
    _worker_state["task"] = task
    _worker_state["items"] = items


def _run_slice(bounds: Tuple[int, int]) -> R:
    start, stop = bounds
    return _worker_state["task"](_worker_state["items"][start:stop])


def _pool_context() -> BaseContext:
    """fork hérite des éléments sans les sérialiser ; sinon contexte par défaut"""
    if "fork" in multiprocessing.get_all_start_methods():
        return multiprocessing.get_context("fork")
    return multiprocessing.get_context()


class MoteurEvaluation:
    """Moteur d'évaluation ; le résultat ne dépend pas du nombre de processus"""

    def __init__(self, workers: Optional[int] = None, cfg: Optional[EvalConfig] = None):
        self.logger = logger
        self.workers = max(1, workers if workers is not None else WORKERS)
        self.cfg = cfg or EvalConfig()

    def _map(self, task: Callable[[Sequence[T]], R], items: Sequence[T]) -> List[R]:
        """Applique `task` par lots, en processus séparés si workers > 1"""
        if self.workers == 1 or len(items) < 2:
            return [task(items)] if items else []

        bounds = chunk_bounds(len(items), self.workers * CHUNKS_PER_WORKER)
        with _pool_context().Pool(processes=self.workers, initializer=_install_worker,
                                  initargs=(task, items)) as pool:
            return pool.map(_run_slice, bounds)

    def evaluate_e2e(self, images: Sequence[ImageAnnotation], submission: Sequence[ImageDetections],
                     vocab: Vocabulary) -> Tuple[E2EReport, List[MatchLedger]]:
        """
        Évalue une soumission de la tâche 1

        Args:
            images: Images de test
            submission: Lignes de la soumission
            vocab: Vocabulaire IV

        Returns:
            (rapport micro-agrégé, registres dans l'ordre des images)
        """
        start_time = time.time()
        items = align_submission(images, submission)

        results = []
        for chunk_results in self._map(partial(_evaluate_images, vocab=vocab, cfg=self.cfg), items):
            results.extend(chunk_results)

        ledgers = [ledger for ledger, _ in results]
        report = aggregate(counts for _, counts in results)

        self.logger.info(
            f"Tâche 1 : {len(images)} images évaluées en {time.time() - start_time:.2f}s "
            f"({self.workers} processus) - Hmean moyen {report.average_hmean:.4f}"
        )
        return report, ledgers

    def evaluate_recognition(self, gt: Sequence[CroppedWordRecord], sub: RecognitionSubmission,
                             strict: bool = False) -> RecReport:
        """
        Évalue une soumission de la tâche 2

        Args:
            gt: Mots découpés de référence
            sub: Soumission
            strict: Refuser les prédictions manquantes

        Returns:
            Rapport IV / OOV
        """
        start_time = time.time()
        pairs, missing = align_predictions(gt, sub, strict=strict)

        totals = {label: WordTally() for label in SubsetLabel}
        for tallies in self._map(partial(_tally_chunk, cfg=self.cfg), pairs):
            for label, tally in tallies.items():
                totals[label] = totals[label] + tally

        report = build_rec_report(totals, missing)
        self.logger.info(
            f"Tâche 2 : {len(pairs)} mots évalués en {time.time() - start_time:.2f}s "
            f"({self.workers} processus) - exactitude totale {report.total_word_accuracy:.4f}"
        )
        return report
