"""
Lecture des fichiers texte et du format canonique du corpus
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Tuple, Type, TypeVar, Union

from pydantic import BaseModel, ValidationError

from core.exceptions import CorpusFormatError, SchemaViolation
from nlp.models import Corpus, CroppedWordRecord, ImageAnnotation

logger = logging.getLogger(__name__)

ModelT = TypeVar("ModelT", bound=BaseModel)

ENCODINGS = ["utf-8-sig", "cp1252", "latin-1"]


class TextReader:
    """Lit le contenu des fichiers texte"""

    def __init__(self):
        self.logger = logger

    def read_text_file(self, file_path: Union[str, Path]) -> str:
        """
        Lit un fichier texte en essayant plusieurs encodages

        Args:
            file_path: Chemin vers le fichier

        Returns:
            Contenu du fichier
        """
        path = Path(file_path)
        raw = path.read_bytes()

        for encoding in ENCODINGS[:-1]:
            try:
                text = raw.decode(encoding)
                if encoding != ENCODINGS[0]:
                    self.logger.warning(f"{path.name} lu avec l'encodage {encoding}")
                return text
            except UnicodeDecodeError:
                continue

        # latin-1 décode toute séquence d'octets
        self.logger.warning(f"{path.name} lu avec l'encodage {ENCODINGS[-1]}")
        return raw.decode(ENCODINGS[-1])

    def list_files_in_directory(self, directory: Union[str, Path], extension: str = ".txt") -> List[Path]:
        """
        Liste les fichiers d'un répertoire (ordre trié)

        Args:
            directory: Chemin du répertoire
            extension: Extension des fichiers à lister

        Returns:
            Liste triée des chemins
        """
        path = Path(directory)
        if not path.is_dir():
            raise FileNotFoundError(f"Répertoire introuvable: {directory}")

        files = sorted(p for p in path.glob(f"*{extension}") if p.is_file())
        self.logger.info(f"{len(files)} fichiers {extension} trouvés dans {directory}")
        return files


def format_loc(loc: Tuple[Any, ...]) -> str:
    """('instances', 0, 'polygon') -> 'instances[0].polygon'"""
    path = ""
    for part in loc:
        if isinstance(part, int):
            path += f"[{part}]"
        else:
            path += f".{part}" if path else str(part)
    return path


def violations_from_validation(err: ValidationError, line: Optional[int],
                               source: Optional[str] = None) -> List[SchemaViolation]:
    """Convertit une ValidationError pydantic en violations localisées"""
    return [
        SchemaViolation(e["msg"], line=line, field_path=format_loc(e["loc"]) or None, source=source)
        for e in err.errors()
    ]


def iter_jsonl(path: Union[str, Path]) -> Iterator[Tuple[int, Union[Any, SchemaViolation]]]:
    """
    Parcourt un fichier JSON ligne à ligne (lignes vides ignorées)

    Yields:
        (numéro de ligne, objet décodé), ou une SchemaViolation à la place de
        l'objet si la ligne n'est pas du JSON
    """
    path = Path(path)
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as e:
                yield lineno, SchemaViolation(f"JSON invalide ({e.msg})", line=lineno, source=path.name)


def read_records(path: Union[str, Path], model: Type[ModelT]) -> Tuple[List[Tuple[int, ModelT]], List[SchemaViolation]]:
    """
    Valide chaque ligne d'un fichier JSON ligne à ligne contre un modèle

    Returns:
        (enregistrements valides avec leur ligne, violations collectées)
    """
    path = Path(path)
    records: List[Tuple[int, ModelT]] = []
    violations: List[SchemaViolation] = []

    for lineno, obj in iter_jsonl(path):
        if isinstance(obj, SchemaViolation):
            violations.append(obj)
            continue
        try:
            records.append((lineno, model.model_validate(obj)))
        except ValidationError as e:
            violations.extend(violations_from_validation(e, lineno, path.name))

    return records, violations


def assemble_corpus(entries: List[Tuple[Optional[int], ImageAnnotation]],
                    source: Optional[str] = None) -> Tuple[Corpus, List[SchemaViolation]]:
    """
    Fusionne des images en un corpus à identifiants uniques

    Un image_id partagé par plusieurs jeux de données est préfixé par le jeu
    de données ("cocotext/000123") ; un doublon au sein d'un même jeu est une
    violation.

    Args:
        entries: Couples (numéro de ligne ou None, image)
        source: Nom de la source pour les diagnostics

    Returns:
        (corpus, violations)
    """
    violations: List[SchemaViolation] = []
    datasets_by_id: Dict[str, set] = {}
    kept: List[ImageAnnotation] = []
    seen = set()

    for line, image in entries:
        key = (image.dataset, image.image_id)
        if key in seen:
            violations.append(SchemaViolation(
                f"image_id dupliqué dans {image.dataset} : {image.image_id}",
                line=line, field_path="image_id", source=source
            ))
            continue
        seen.add(key)
        datasets_by_id.setdefault(image.image_id, set()).add(image.dataset)
        kept.append(image)

    images = []
    for image in kept:
        if len(datasets_by_id[image.image_id]) > 1:
            image = image.model_copy(update={"image_id": f"{image.dataset}/{image.image_id}"})
        images.append(image)

    renamed = sum(1 for ids in datasets_by_id.values() if len(ids) > 1)
    if renamed:
        logger.warning(f"{renamed} image_id partagés entre jeux de données, préfixés par le jeu")

    return Corpus.from_images(images), violations


def read_canonical(path: Union[str, Path], strict: bool = True) -> Corpus:
    """
    Lit un corpus au format canonique (une image par ligne)

    Args:
        path: Chemin du fichier JSON ligne à ligne
        strict: Lever CorpusFormatError si au moins une ligne est invalide

    Returns:
        Corpus validé
    """
    path = Path(path)
    records, violations = read_records(path, ImageAnnotation)
    corpus, merge_violations = assemble_corpus(records, source=path.name)
    violations.extend(merge_violations)

    for image in corpus.images:
        for inst in image.instances:
            if inst.polygon.repaired:
                logger.warning(f"{image.image_id}#{inst.instance_id}: polygone auto-intersecté remplacé par son enveloppe convexe")

    if violations:
        for v in violations:
            logger.error(v.describe())
        if strict:
            raise CorpusFormatError(violations)

    logger.info(f"Corpus lu depuis {path}: {len(corpus.images)} images, {len(violations)} ligne(s) rejetée(s)")
    return corpus


def read_cropped_words(path: Union[str, Path]) -> List[CroppedWordRecord]:
    """Lit un export de mots découpés"""
    records, violations = read_records(path, CroppedWordRecord)
    if violations:
        raise CorpusFormatError(violations)
    return [r for _, r in records]
