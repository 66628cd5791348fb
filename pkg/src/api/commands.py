"""
Commandes de l'outil : ingestion -> vocabulaire -> splits -> évaluation -> analyses
"""
import functools
import json
import logging
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import typer
from dotenv import dotenv_values
from pydantic import BaseModel, ValidationError
from rich.console import Console
from rich.table import Table

from config import CONFIG_KEYS, LOG_FILE, LOG_LEVEL, SPLITS, TOOL_NAME, TOOL_VERSION
from core.exceptions import ConfigError, CorpusFormatError, OOVError
from core.moteur import MoteurEvaluation
from core.utils import setup_logging
from analysis.analyses import (
    category_accuracy, length_profile, oov_length_histogram, outcomes_from_ledgers,
    outcomes_from_recognition, spatial_heatmap, words_per_image_histogram
)
from evaluation.e2e import read_detection_submission, read_ledgers
from evaluation.recognition import rank_reports, read_recognition_submission
from nlp.models import Corpus, CorpusStats, EvalConfig, Vocabulary
from nlp.reports import E2EReport, EvalMode, LeaderboardEntry, RecReport
from nlp.splits import assign_splits, export_cropped_words, select_test_images, select_validation_images
from nlp.vocabulary import build_vocabulary, read_lexicon
from preprocessing.dataset_adapters import DatasetAdapter, corpus_stats, merge_corpora
from preprocessing.text_cleaner import load_alphabet
from preprocessing.text_reader import read_canonical, read_cropped_words
from rules.rules import load_category_rules
from services.persistence import PersistenceService

logger = logging.getLogger(__name__)
console = Console()

app = typer.Typer(
    name="oov-analyzer",
    help="Évaluation de la reconnaissance de texte en scène sur les mots hors vocabulaire (OOV).",
    no_args_is_help=True,
    add_completion=False,
)


class AdapterName(str, Enum):
    QUAD = "quad"
    COCOTEXT = "cocotext"
    CANONICAL = "canonical"


class CliState(BaseModel):
    """Options partagées par toutes les sous-commandes"""
    cfg: EvalConfig
    workers: Optional[int] = None
    config_path: Optional[Path] = None
    alphabet_path: Optional[Path] = None

    def inputs(self, **paths: Optional[Path]) -> Dict[str, Optional[Path]]:
        return {"config": self.config_path, "alphabet": self.alphabet_path, **paths}


def load_eval_config(config_path: Optional[Path] = None, alphabet_path: Optional[Path] = None) -> EvalConfig:
    """
    Construit la configuration d'évaluation (fichier clé = valeur + alphabet)

    Args:
        config_path: Fichier --config (optionnel)
        alphabet_path: Fichier --alphabet (optionnel)

    Returns:
        Configuration validée
    """
    values: Dict[str, Any] = {}
    if config_path is not None:
        if not config_path.is_file():
            raise typer.BadParameter(f"fichier introuvable : {config_path}", param_hint="--config")
        values = {k: v for k, v in dotenv_values(config_path).items()}
        unknown = sorted(set(values) - set(CONFIG_KEYS))
        if unknown:
            raise typer.BadParameter(f"clés inconnues : {', '.join(unknown)}", param_hint="--config")

    if alphabet_path is not None:
        values["alphabet"] = load_alphabet(alphabet_path)

    try:
        return EvalConfig.model_validate(values)
    except ValidationError as e:
        first = e.errors()[0]
        raise typer.BadParameter(f"{'.'.join(map(str, first['loc']))}: {first['msg']}", param_hint="--config")


def handle_errors(func):
    """Traduit les erreurs de l'outil en diagnostics et code de sortie 1"""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except CorpusFormatError as e:
            console.print(f"[red]❌ {e}[/red]")
            for line in e.report():
                console.print(f"  {line}", markup=False)
            raise typer.Exit(code=1)
        except OOVError as e:
            console.print(f"[red]❌ {e}[/red]")
            raise typer.Exit(code=1)
        except OSError as e:
            console.print(f"❌ Fichier illisible : {e}", style="red", markup=False)
            raise typer.Exit(code=1)
        except UnicodeDecodeError as e:
            console.print(f"❌ Fichier non UTF-8 : {e}", style="red", markup=False)
            raise typer.Exit(code=1)

    return wrapper


@app.callback()
def main_callback(
    ctx: typer.Context,
    config: Optional[Path] = typer.Option(None, "--config", help="Fichier clé = valeur (champs d'EvalConfig)"),
    workers: Optional[int] = typer.Option(None, "--workers", min=1, help="Nombre de processus d'évaluation"),
    alphabet: Optional[Path] = typer.Option(None, "--alphabet", help="Fichier d'alphabet UTF-8"),
    log_level: str = typer.Option(LOG_LEVEL, "--log-level", help="Niveau de log"),
):
    setup_logging(log_level=log_level, log_file=LOG_FILE)
    try:
        cfg = load_eval_config(config, alphabet)
    except ConfigError as e:
        raise typer.BadParameter(str(e), param_hint="--alphabet")
    ctx.obj = CliState(cfg=cfg, workers=workers, config_path=config, alphabet_path=alphabet)
    logger.debug(f"🔧 {TOOL_NAME} {TOOL_VERSION} - configuration : {cfg.model_dump(mode='json', exclude={'alphabet'})}")


# ========== AFFICHAGE ==========

def _print_stats(stats: CorpusStats):
    table = Table(title="Statistiques du corpus")
    table.add_column("Jeu de données")
    table.add_column("Split")
    table.add_column("Images", justify="right")
    table.add_column("Instances", justify="right")
    table.add_column("Prises en compte", justify="right")
    for row in stats.rows:
        table.add_row(row.dataset, row.split, str(row.images), str(row.instances),
                      "" if row.care_instances is None else str(row.care_instances))
    table.add_row("Total", "", str(stats.total_images), str(stats.total_instances),
                  "" if stats.total_care_instances is None else str(stats.total_care_instances))
    console.print(table)


def _print_e2e(report: E2EReport):
    table = Table(title="Tâche 1 - bout en bout")
    for column in ("Mode", "Précision", "Rappel", "Hmean", "VP", "FP", "FN"):
        table.add_column(column, justify="right")
    by_mode = {EvalMode.ALL: report.metrics_all, EvalMode.IV: report.metrics_iv, EvalMode.OOV: report.metrics_oov}
    for mode, metrics in by_mode.items():
        counts = report.counts[mode]
        table.add_row(mode.value, f"{metrics.precision * 100:.2f}", f"{metrics.recall * 100:.2f}",
                      f"{metrics.hmean * 100:.2f}", str(counts.tp), str(counts.fp), str(counts.fn))
    console.print(table)
    console.print(f"Hmean moyen (IV, OOV) : [bold]{report.average_hmean * 100:.2f}[/bold]")


def _print_rec(report: RecReport):
    table = Table(title="Tâche 2 - mots découpés")
    for column in ("Sous-ensemble", "Exactitude", "Distance d'édition", "Mots"):
        table.add_column(column, justify="right")
    for name, metrics in (("IV", report.metrics_iv), ("OOV", report.metrics_oov)):
        table.add_row(name, f"{metrics.word_accuracy * 100:.2f}", str(metrics.total_edit_distance), str(metrics.n_words))
    console.print(table)
    console.print(f"Exactitude totale : [bold]{report.total_word_accuracy * 100:.2f}[/bold]")


def _print_leaderboard(entries: List[LeaderboardEntry]):
    table = Table(title="Classement")
    for column in ("Rang", "Participant", "Score", "Départage"):
        table.add_column(column)
    for entry in entries:
        table.add_row(str(entry.rank), entry.name, f"{entry.score * 100:.2f}", f"{entry.tie_break:g}")
    console.print(table)


def _read_vocabulary(path: Path) -> Vocabulary:
    words = read_lexicon(path)
    return Vocabulary(words=frozenset(words))


# ========== COMMANDES ==========

@app.command("ingest")
@handle_errors
def cmd_ingest(
    ctx: typer.Context,
    adapter: AdapterName = typer.Option(..., "--adapter", help="Format des annotations"),
    input_path: Path = typer.Option(..., "--in", help="Répertoire (quad) ou fichier (cocotext, canonical)"),
    out: Path = typer.Option(..., "--out", help="Corpus canonique produit"),
    dataset: Optional[str] = typer.Option(None, "--dataset", help="Étiquette du jeu de données"),
    split: str = typer.Option("train", "--split", help="Split d'origine (quad)"),
    sizes: Optional[Path] = typer.Option(None, "--sizes", help="JSON {image_id: [largeur, hauteur]} (quad)"),
    merge: Optional[List[Path]] = typer.Option(None, "--merge", help="Corpus canoniques à fusionner"),
    skip_invalid: bool = typer.Option(False, "--skip-invalid", help="Écarter les enregistrements invalides au lieu d'échouer"),
):
    """Convertit des annotations au format canonique et affiche leurs statistiques"""
    state: CliState = ctx.obj

    if adapter == AdapterName.QUAD:
        if not dataset:
            raise typer.BadParameter("requis pour l'adaptateur quad", param_hint="--dataset")
        if split not in SPLITS:
            raise typer.BadParameter(f"split inconnu : {split}", param_hint="--split")
        image_sizes = None
        if sizes is not None:
            with open(sizes, "r", encoding="utf-8") as f:
                try:
                    image_sizes = {k: tuple(v) for k, v in json.load(f).items()}
                except (json.JSONDecodeError, AttributeError, TypeError) as e:
                    raise typer.BadParameter(f"JSON {{image_id: [largeur, hauteur]}} attendu ({e})", param_hint="--sizes")
        corpus = DatasetAdapter(strict=not skip_invalid).adapt_quad_per_line(input_path, dataset, split, image_sizes)
    elif adapter == AdapterName.COCOTEXT:
        corpus = DatasetAdapter(strict=not skip_invalid).adapt_cocotext_style(input_path, dataset or "cocotext")
    else:
        corpus = read_canonical(input_path, strict=not skip_invalid)

    if merge:
        corpus = merge_corpora([corpus] + [read_canonical(p, strict=not skip_invalid) for p in merge])

    persistence = PersistenceService()
    persistence.save_canonical(out, corpus)
    stats = corpus_stats(corpus, state.cfg.alphabet)
    persistence.save_json(out.parent / f"{out.stem}.stats.json", stats)
    merged = {f"merge_{i}": p for i, p in enumerate(merge or [])}
    persistence.write_manifest(out.parent, "ingest", state.inputs(input=input_path, sizes=sizes, **merged), state.cfg)
    _print_stats(stats)


@app.command("build-vocab")
@handle_errors
def cmd_build_vocab(
    ctx: typer.Context,
    corpus_path: Path = typer.Option(..., "--corpus", help="Corpus canonique (splits d'origine)"),
    out: Path = typer.Option(..., "--out", help="Vocabulaire produit (un mot par ligne)"),
    lexicon: Optional[Path] = typer.Option(None, "--lexicon", help="Lexique externe"),
):
    """Construit le dictionnaire IV (train + validation + lexique)"""
    state: CliState = ctx.obj
    corpus = read_canonical(corpus_path)
    vocab = build_vocabulary(corpus, lexicon, state.cfg)

    persistence = PersistenceService()
    persistence.save_lines(out, sorted(vocab.words))
    persistence.write_manifest(out.parent, "build-vocab", state.inputs(corpus=corpus_path, lexicon=lexicon), state.cfg)
    console.print(f"✅ {len(vocab.words)} mots écrits dans {out}")


@app.command("make-splits")
@handle_errors
def cmd_make_splits(
    ctx: typer.Context,
    corpus_path: Path = typer.Option(..., "--corpus", help="Corpus canonique (splits d'origine)"),
    vocab_path: Path = typer.Option(..., "--vocab", help="Vocabulaire IV"),
    out: Path = typer.Option(..., "--out", help="Répertoire de sortie"),
    cap: Optional[int] = typer.Option(None, "--cap", min=0, help="Plafond d'images de validation"),
):
    """Sélectionne les images de test et de validation OOV et exporte les mots découpés"""
    state: CliState = ctx.obj
    cfg = state.cfg
    corpus = read_canonical(corpus_path)
    vocab = _read_vocabulary(vocab_path)

    test_ids = select_test_images(corpus, vocab, cfg)
    validation_ids = select_validation_images(corpus, cap, cfg)
    oov_corpus = assign_splits(corpus, validation_ids, test_ids)

    persistence = PersistenceService()
    persistence.save_lines(out / "test_images.txt", test_ids)
    persistence.save_lines(out / "validation_images.txt", validation_ids)
    persistence.save_canonical(out / "oov_corpus.jsonl", oov_corpus)
    for split in SPLITS:
        persistence.save_jsonl(out / f"crops_{split}.jsonl", export_cropped_words(oov_corpus, vocab, split, cfg))
    stats = corpus_stats(oov_corpus, cfg.alphabet)
    persistence.save_json(out / "oov_corpus.stats.json", stats)
    persistence.write_manifest(out, "make-splits", state.inputs(corpus=corpus_path, vocab=vocab_path), cfg)
    _print_stats(stats)


@app.command("eval-e2e")
@handle_errors
def cmd_eval_e2e(
    ctx: typer.Context,
    gt: Path = typer.Option(..., "--gt", help="Corpus canonique de référence"),
    vocab_path: Path = typer.Option(..., "--vocab", help="Vocabulaire IV"),
    submission: Path = typer.Option(..., "--submission", help="Soumission de la tâche 1"),
    out: Path = typer.Option(..., "--out", help="Rapport JSON"),
    split: str = typer.Option("test", "--split", help="Split évalué"),
    dump_ledger: bool = typer.Option(False, "--dump-ledger", help="Écrire les registres d'appariement"),
    percent: bool = typer.Option(False, "--percent", help="Rapport en pourcentages"),
):
    """Évalue une soumission bout en bout (Hmean All / IV / OOV)"""
    state: CliState = ctx.obj
    corpus = read_canonical(gt)
    images = [image for image in corpus.images if image.split == split]
    vocab = _read_vocabulary(vocab_path)
    detections = read_detection_submission(submission)

    moteur = MoteurEvaluation(workers=state.workers, cfg=state.cfg)
    report, ledgers = moteur.evaluate_e2e(images, detections, vocab)

    persistence = PersistenceService()
    persistence.save_json(out, report, percent=percent)
    if dump_ledger:
        persistence.save_jsonl(out.parent / f"{out.stem}.ledger.jsonl", ledgers)
    persistence.write_manifest(out.parent, "eval-e2e",
                               state.inputs(gt=gt, vocab=vocab_path, submission=submission), state.cfg)
    _print_e2e(report)


@app.command("eval-rec")
@handle_errors
def cmd_eval_rec(
    ctx: typer.Context,
    gt: Path = typer.Option(..., "--gt", help="Mots découpés de référence"),
    submission: Path = typer.Option(..., "--submission", help="Soumission de la tâche 2"),
    out: Path = typer.Option(..., "--out", help="Rapport JSON"),
    strict: bool = typer.Option(False, "--strict", help="Refuser les prédictions manquantes"),
    percent: bool = typer.Option(False, "--percent", help="Rapport en pourcentages"),
):
    """Évalue une soumission de reconnaissance (exactitude, distance d'édition)"""
    state: CliState = ctx.obj
    crops = read_cropped_words(gt)
    predictions = read_recognition_submission(submission)

    moteur = MoteurEvaluation(workers=state.workers, cfg=state.cfg)
    report = moteur.evaluate_recognition(crops, predictions, strict=strict)

    persistence = PersistenceService()
    persistence.save_json(out, report, percent=percent)
    persistence.write_manifest(out.parent, "eval-rec", state.inputs(gt=gt, submission=submission), state.cfg)
    _print_rec(report)


@app.command("analyze")
@handle_errors
def cmd_analyze(
    ctx: typer.Context,
    corpus_path: Path = typer.Option(..., "--corpus", help="Corpus canonique OOV"),
    vocab_path: Path = typer.Option(..., "--vocab", help="Vocabulaire IV"),
    out: Path = typer.Option(..., "--out", help="Répertoire des tables"),
    ledger: Optional[Path] = typer.Option(None, "--ledger", help="Registres de eval-e2e --dump-ledger"),
    crops_path: Optional[Path] = typer.Option(None, "--crops", help="Mots découpés de référence (tâche 2)"),
    submission: Optional[Path] = typer.Option(None, "--submission", help="Soumission de la tâche 2"),
    dataset: Optional[str] = typer.Option(None, "--dataset", help="Restreindre à un jeu de données"),
    rules_path: Optional[Path] = typer.Option(None, "--rules", help="Règles de catégorie YAML"),
    split: str = typer.Option("test", "--split", help="Split analysé"),
):
    """Produit les tables d'analyse (longueur, catégories, répartition, histogrammes)"""
    state: CliState = ctx.obj
    cfg = state.cfg
    corpus = read_canonical(corpus_path)
    vocab = _read_vocabulary(vocab_path)
    rules = load_category_rules(rules_path)

    images = [im for im in corpus.images if im.split == split and (dataset is None or im.dataset == dataset)]
    scope = Corpus.from_images(images)
    crops = read_cropped_words(crops_path) if crops_path else export_cropped_words(scope, vocab, split, cfg)
    crops = [c for c in crops if dataset is None or c.dataset == dataset]

    if ledger is not None:
        outcomes = outcomes_from_ledgers(images, read_ledgers(ledger), vocab, cfg)
        task = "e2e"
    elif crops_path is not None and submission is not None:
        outcomes = outcomes_from_recognition(crops, read_recognition_submission(submission), cfg)
        task = "rec"
    else:
        raise ConfigError("--ledger (tâche 1) ou --crops et --submission (tâche 2) requis")

    profile = length_profile(outcomes, cfg.length_max_bucket)
    categories = category_accuracy(outcomes, rules)
    heatmap = spatial_heatmap(scope, dataset, cfg.heatmap_grid, cfg)
    words_hist = words_per_image_histogram(scope, cfg)
    oov_hist = oov_length_histogram(crops)

    persistence = PersistenceService()
    persistence.save_csv(out / "length_profile.csv", ["length", "subset", "n", "value"],
                         ([b.length, b.subset.value, b.n, b.value] for b in profile.buckets))
    persistence.save_csv(out / "category_accuracy.csv", ["category", "subset", "n", "n_success", "accuracy"],
                         ([r.category, r.subset.value, r.n, r.n_success, r.accuracy] for r in categories))
    persistence.save_csv(out / "spatial_heatmap.csv", ["row"] + [f"c{j}" for j in range(cfg.heatmap_grid)],
                         ([i] + cells for i, cells in enumerate(heatmap.grid)))
    persistence.save_csv(out / "words_per_image.csv", ["dataset", "words", "images"],
                         ([h.dataset, label, count] for h in words_hist for label, count in _histogram_rows(h)))
    persistence.save_csv(out / "oov_lengths.csv", ["dataset", "length", "count"],
                         ([name, length, count] for name, hist in oov_hist.items() for length, count in hist.items()))

    summary = {
        "task": task,
        "split": split,
        "dataset": dataset,
        "n_outcomes": len(outcomes),
        "n_success": sum(1 for o in outcomes if o.success),
        "heatmap_dataset": heatmap.dataset,
        "heatmap_total": sum(map(sum, heatmap.grid)),
        "n_images": len(images),
        "n_oov_crops": sum(sum(h.values()) for h in oov_hist.values()),
    }
    persistence.save_json(out / "summary.json", summary)
    persistence.write_manifest(out, "analyze", state.inputs(
        corpus=corpus_path, vocab=vocab_path, ledger=ledger, crops=crops_path,
        submission=submission, rules=rules_path
    ), cfg)
    console.print(f"✅ Analyses écrites dans {out} ({len(outcomes)} mots)")


def _histogram_rows(hist) -> List[tuple]:
    rows = [("0", hist.zero)]
    rows += [(str(i + 1), count) for i, count in enumerate(hist.bins)]
    rows.append((f">{len(hist.bins)}", hist.overflow))
    return rows


@app.command("rank")
@handle_errors
def cmd_rank(
    ctx: typer.Context,
    reports: List[Path] = typer.Argument(..., help="Rapports JSON (eval-e2e ou eval-rec, non pourcentés)"),
    out: Optional[Path] = typer.Option(None, "--out", help="Classement JSON"),
):
    """Classe plusieurs rapports d'une même tâche"""
    state: CliState = ctx.obj
    named: Dict[str, Union[E2EReport, RecReport]] = {}
    for path in reports:
        name = path.stem if sum(p.stem == path.stem for p in reports) == 1 else str(path)
        named[name] = _load_report(path)

    entries = rank_reports(named)
    if out is not None:
        persistence = PersistenceService()
        persistence.save_json(out, [e.model_dump(mode="json") for e in entries])
        persistence.write_manifest(out.parent, "rank",
                                   state.inputs(**{f"report_{i}": p for i, p in enumerate(reports)}), state.cfg)
    _print_leaderboard(entries)


def _load_report(path: Path) -> Union[E2EReport, RecReport]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        if "average_hmean" in data:
            return E2EReport.model_validate(data)
        return RecReport.model_validate(data)
    except (OSError, json.JSONDecodeError, ValidationError) as e:
        raise ConfigError(f"Rapport illisible {path}: {str(e).splitlines()[0]}")
