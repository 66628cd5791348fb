"""
Évaluation bout en bout (tâche 1) : appariement, comptage par sous-ensemble, Hmean
"""
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from core.exceptions import CorpusFormatError, SchemaViolation, SubmissionError
from geometry.polygons import PairwiseOverlaps
from nlp.models import EvalConfig, ImageAnnotation, SubsetLabel, TextInstance, Vocabulary
from nlp.reports import (
    Detection, E2EReport, EvalCounts, EvalMode, ImageDetections, MatchLedger, MatchPair, SubsetMetrics
)
from nlp.vocabulary import subset_labels
from preprocessing.text_cleaner import effective_dontcare, normalize_transcription
from preprocessing.text_reader import read_records

logger = logging.getLogger(__name__)

ImageCounts = Dict[EvalMode, EvalCounts]


def match_image(gts: Sequence[TextInstance], dets: Sequence[Detection],
                vocab: Optional[Vocabulary] = None, cfg: Optional[EvalConfig] = None,
                image_id: str = "") -> MatchLedger:
    """
    Apparie un-à-un les détections aux instances prises en compte d'une image

    Passe 1 : paires au-dessus du seuil d'IoU dont les transcriptions sont
    égales, par IoU décroissante (égalités : plus petit gt_index puis plus
    petit det_index). Passe 2 : paires restantes au-dessus du seuil, même
    ordre, transcription fausse. Les détections restantes sont supprimées si
    elles recouvrent une région "don't care" au-delà du seuil.

    L'appariement ignore les sous-ensembles IV/OOV ; `vocab` n'intervient
    qu'au comptage.

    Args:
        gts: Instances de vérité terrain
        dets: Détections
        vocab: Vocabulaire (non utilisé pour l'appariement)
        cfg: Configuration d'évaluation
        image_id: Identifiant de l'image pour le registre

    Returns:
        Registre d'appariement
    """
    cfg = cfg or EvalConfig()

    seen = set()
    for index, gt in enumerate(gts):
        if gt.instance_id in seen:
            raise SchemaViolation(
                f"instance_id dupliqué : {gt.instance_id}", field_path=f"instances[{index}]", source=image_id
            )
        seen.add(gt.instance_id)

    care = [not effective_dontcare(gt, cfg.alphabet) for gt in gts]
    gt_words = [normalize_transcription(gt.transcription, cfg) if care[i] else None for i, gt in enumerate(gts)]
    det_words = [normalize_transcription(d.transcription, cfg) for d in dets]

    overlaps = PairwiseOverlaps([d.polygon for d in dets], [gt.polygon for gt in gts])
    candidates = sorted(
        ((d, g, iou) for d, g, iou in overlaps.pairs_above(cfg.iou_threshold) if care[g]),
        key=lambda c: (-c[2], c[1], c[0])
    )

    pairs: List[MatchPair] = []
    used_dets, used_gts = set(), set()
    for correct_pass in (True, False):
        for d, g, iou in candidates:
            if d in used_dets or g in used_gts:
                continue
            if correct_pass and det_words[d] != gt_words[g]:
                continue
            pairs.append(MatchPair(det_index=d, gt_index=g, iou=iou, transcription_correct=correct_pass))
            used_dets.add(d)
            used_gts.add(g)

    dontcare = [g for g, is_care in enumerate(care) if not is_care]
    suppressed, unmatched = [], []
    for d in range(len(dets)):
        if d in used_dets:
            continue
        if dontcare and overlaps.inter_over_det[d, dontcare].max() > cfg.dontcare_overlap_threshold:
            suppressed.append(d)
        else:
            unmatched.append(d)

    return MatchLedger(
        image_id=image_id,
        pairs=sorted(pairs, key=lambda p: p.det_index),
        suppressed_dets=suppressed,
        unmatched_dets=unmatched,
        unmatched_gts=[g for g in range(len(gts)) if care[g] and g not in used_gts],
    )


def _in_mode(label: Optional[SubsetLabel], mode: EvalMode) -> bool:
    if label is None:
        return False
    return mode == EvalMode.ALL or label.value == mode.value


def count_mode(ledger: MatchLedger, gts: Sequence[TextInstance],
               subsets: Sequence[Optional[SubsetLabel]], mode: EvalMode) -> EvalCounts:
    """
    Compte VP / FP / FN d'un registre pour un mode (All, IV ou OOV)

    Les instances du sous-ensemble opposé sont ignorées ; les faux positifs
    (paires mal transcrites et détections non appariées) ne dépendent pas du
    mode.

    Args:
        ledger: Registre d'appariement
        gts: Instances de vérité terrain
        subsets: Sous-ensemble de chaque instance (None si "don't care")
        mode: Mode d'évaluation

    Returns:
        Comptes
    """
    if len(subsets) != len(gts):
        raise ValueError(f"{len(subsets)} étiquettes pour {len(gts)} instances")

    correct_gts = {p.gt_index for p in ledger.pairs if p.transcription_correct}
    tp = sum(1 for g in correct_gts if _in_mode(subsets[g], mode))
    fn = sum(1 for g, label in enumerate(subsets) if _in_mode(label, mode) and g not in correct_gts)
    fp = sum(1 for p in ledger.pairs if not p.transcription_correct) + len(ledger.unmatched_dets)
    return EvalCounts(tp=tp, fp=fp, fn=fn)


def count_image(ledger: MatchLedger, gts: Sequence[TextInstance],
                subsets: Sequence[Optional[SubsetLabel]]) -> ImageCounts:
    return {mode: count_mode(ledger, gts, subsets, mode) for mode in EvalMode}


def hmean(precision: float, recall: float) -> float:
    """Moyenne harmonique de la précision et du rappel (0 si les deux sont nuls)"""
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def subset_metrics(counts: EvalCounts) -> SubsetMetrics:
    """Précision = 1 sans détection comptée ; rappel = 1 sans instance comptée"""
    precision = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp > 0 else 1.0
    recall = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn > 0 else 1.0
    return SubsetMetrics(precision=precision, recall=recall, hmean=hmean(precision, recall))


def aggregate(per_image: Iterable[ImageCounts]) -> E2EReport:
    """
    Micro-agrège les comptes de toutes les images

    Args:
        per_image: Comptes par mode de chaque image

    Returns:
        Rapport All / IV / OOV et Hmean moyen (IV, OOV)
    """
    totals = {mode: EvalCounts() for mode in EvalMode}
    n_images = 0
    for counts in per_image:
        n_images += 1
        for mode in EvalMode:
            totals[mode] = totals[mode] + counts[mode]

    metrics = {mode: subset_metrics(totals[mode]) for mode in EvalMode}
    return E2EReport(
        metrics_all=metrics[EvalMode.ALL],
        metrics_iv=metrics[EvalMode.IV],
        metrics_oov=metrics[EvalMode.OOV],
        average_hmean=(metrics[EvalMode.IV].hmean + metrics[EvalMode.OOV].hmean) / 2,
        counts=totals,
        n_images=n_images,
    )


def evaluate_image(image: ImageAnnotation, detections: Sequence[Detection],
                   vocab: Vocabulary, cfg: EvalConfig) -> Tuple[MatchLedger, ImageCounts]:
    """Appariement et comptage d'une image"""
    ledger = match_image(image.instances, detections, vocab, cfg, image_id=image.image_id)
    subsets = subset_labels(image, vocab, cfg)
    return ledger, count_image(ledger, image.instances, subsets)


# ========== SOUMISSIONS ==========

def read_detection_submission(path: Union[str, Path]) -> List[ImageDetections]:
    """
    Lit une soumission de la tâche 1 (une image par ligne)

    Args:
        path: Fichier JSON ligne à ligne

    Returns:
        Lignes de la soumission, dans l'ordre du fichier
    """
    records, violations = read_records(path, ImageDetections)
    if violations:
        raise CorpusFormatError(violations)
    submission = [r for _, r in records]
    logger.info(f"Soumission lue : {len(submission)} images, "
                f"{sum(len(s.detections) for s in submission)} détections")
    return submission


def read_ledgers(path: Union[str, Path]) -> List[MatchLedger]:
    """Relit un registre d'appariement écrit par eval-e2e --dump-ledger"""
    records, violations = read_records(path, MatchLedger)
    if violations:
        raise CorpusFormatError(violations)
    return [r for _, r in records]


def align_submission(images: Sequence[ImageAnnotation],
                     submission: Iterable[ImageDetections]) -> List[Tuple[ImageAnnotation, Tuple[Detection, ...]]]:
    """
    Associe à chaque image évaluée ses détections

    Args:
        images: Images de vérité terrain évaluées
        submission: Lignes de la soumission

    Returns:
        Couples (image, détections) dans l'ordre des images ; une image absente
        de la soumission a zéro détection
    """
    known = {image.image_id for image in images}
    by_id: Dict[str, Tuple[Detection, ...]] = {}
    duplicates, unknown = set(), set()

    for entry in submission:
        if entry.image_id not in known:
            unknown.add(entry.image_id)
        elif entry.image_id in by_id:
            duplicates.add(entry.image_id)
        else:
            by_id[entry.image_id] = entry.detections

    if unknown:
        raise SubmissionError("image_id inconnus dans la soumission", sorted(unknown))
    if duplicates:
        raise SubmissionError("image_id en double dans la soumission", sorted(duplicates))

    missing = len(known) - len(by_id)
    if missing:
        logger.warning(f"{missing} image(s) absente(s) de la soumission, évaluées sans détection")

    return [(image, by_id.get(image.image_id, ())) for image in images]
