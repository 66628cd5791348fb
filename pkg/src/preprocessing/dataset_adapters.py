"""
Adaptateurs des formats d'annotation des jeux de données sources
"""
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from pydantic import ValidationError

from config import COCOTEXT_SETS, LEGIBILITY_VALUES, SPLITS, UNREADABLE_MARKER
from core.exceptions import CorpusFormatError, SchemaViolation
from nlp.models import Alphabet, Corpus, CorpusStats, ImageAnnotation, Polygon, StatsRow, TextInstance
from preprocessing.text_cleaner import effective_dontcare
from preprocessing.text_reader import TextReader, assemble_corpus, violations_from_validation

logger = logging.getLogger(__name__)


class DatasetAdapter:
    """Convertit les annotations d'un jeu de données vers le format canonique"""

    def __init__(self, strict: bool = True):
        self.logger = logger
        self.strict = strict
        self.reader = TextReader()
        self.violations: List[SchemaViolation] = []

    def _finish(self, images: List[ImageAnnotation], source: str) -> Corpus:
        corpus, merge_violations = assemble_corpus([(None, im) for im in images], source=source)
        self.violations.extend(merge_violations)

        if self.violations:
            for v in self.violations:
                self.logger.error(v.describe())
            if self.strict:
                raise CorpusFormatError(self.violations)

        n_instances = sum(len(im.instances) for im in corpus.images)
        self.logger.info(f"{source}: {len(corpus.images)} images, {n_instances} instances")
        return corpus

    # ========== FORMAT QUADRILATÈRE PAR LIGNE (style ICDAR) ==========

    def adapt_quad_per_line(self, gt_dir: Union[str, Path], dataset_tag: str, split: str = "train",
                            image_sizes: Optional[Dict[str, Tuple[int, int]]] = None) -> Corpus:
        """
        Lit un répertoire de fichiers "x1,y1,...,x4,y4,transcription"

        Args:
            gt_dir: Répertoire, un fichier de vérité terrain par image
            dataset_tag: Étiquette du jeu de données
            split: Split d'origine des images
            image_sizes: Dimensions (largeur, hauteur) par image_id (optionnel)

        Returns:
            Corpus
        """
        self.violations = []
        images = []

        for path in self.reader.list_files_in_directory(gt_dir, ".txt"):
            image_id = path.stem[3:] if path.stem.startswith("gt_") else path.stem
            instances = self._parse_quad_file(path, dataset_tag)

            if image_sizes and image_id in image_sizes:
                width, height = image_sizes[image_id]
            else:
                width, height = self._infer_size(instances)
                self.logger.debug(f"{image_id}: dimensions déduites de l'emprise ({width}x{height})")

            try:
                images.append(ImageAnnotation(
                    image_id=image_id, width=width, height=height,
                    dataset=dataset_tag, split=split, instances=tuple(instances)
                ))
            except ValidationError as e:
                self.violations.extend(violations_from_validation(e, None, path.name))

        if images and not image_sizes:
            self.logger.warning(f"{dataset_tag}: dimensions d'image absentes, déduites des annotations")

        return self._finish(images, str(gt_dir))

    def _parse_quad_file(self, path: Path, dataset_tag: str) -> List[TextInstance]:
        instances = []
        text = self.reader.read_text_file(path)

        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            fields = line.rstrip("\r\n").split(",")
            if len(fields) < 9:
                self.violations.append(SchemaViolation(
                    f"{len(fields)} champs, 9 attendus (8 coordonnées + transcription)",
                    line=lineno, source=path.name
                ))
                continue
            try:
                coords = [float(v) for v in fields[:8]]
            except ValueError:
                self.violations.append(SchemaViolation(
                    "coordonnée non numérique", line=lineno, field_path="polygon", source=path.name
                ))
                continue

            transcription: Optional[str] = ",".join(fields[8:])
            legible = transcription != UNREADABLE_MARKER
            if not legible:
                transcription = None

            try:
                instances.append(TextInstance(
                    polygon=list(zip(coords[0::2], coords[1::2])),
                    transcription=transcription,
                    legible=legible,
                    dataset=dataset_tag,
                    instance_id=str(len(instances)),
                ))
            except ValidationError as e:
                self.violations.extend(violations_from_validation(e, lineno, path.name))

        return instances

    @staticmethod
    def _infer_size(instances: List[TextInstance]) -> Tuple[int, int]:
        xmax = max((inst.polygon.bounds()[2] for inst in instances), default=1.0)
        ymax = max((inst.polygon.bounds()[3] for inst in instances), default=1.0)
        return max(1, math.ceil(xmax)), max(1, math.ceil(ymax))

    # ========== FICHIER UNIQUE À ATTRIBUTS (style COCO-Text) ==========

    def adapt_cocotext_style(self, json_path: Union[str, Path], dataset_tag: str = "cocotext") -> Corpus:
        """
        Lit un fichier {imgs, anns} indexé par identifiant d'annotation

        Args:
            json_path: Chemin du fichier JSON
            dataset_tag: Étiquette du jeu de données

        Returns:
            Corpus
        """
        self.violations = []
        json_path = Path(json_path)
        with open(json_path, "r", encoding="utf-8") as f:
            try:
                data = json.load(f)
            except json.JSONDecodeError as e:
                raise CorpusFormatError([
                    SchemaViolation(f"JSON invalide ({e.msg})", line=e.lineno, source=json_path.name)
                ])

        if not isinstance(data, dict):
            raise CorpusFormatError([SchemaViolation("objet {imgs, anns} attendu", source=json_path.name)])
        for key in ("imgs", "anns"):
            if not isinstance(data.get(key, {}), dict):
                raise CorpusFormatError([
                    SchemaViolation("dictionnaire attendu", field_path=key, source=json_path.name)
                ])

        imgs: Dict[str, Any] = {str(k): v for k, v in data.get("imgs", {}).items()}
        anns: Dict[str, Any] = {str(k): v for k, v in data.get("anns", {}).items()}

        for image_id in [k for k, v in imgs.items() if not isinstance(v, dict)]:
            self.violations.append(SchemaViolation(
                "image non objet", field_path=f"imgs.{image_id}", source=json_path.name
            ))
            del imgs[image_id]
        by_image: Dict[str, List[TextInstance]] = {image_id: [] for image_id in imgs}

        for ann_id in sorted(anns, key=_natural_key):
            ann = anns[ann_id]
            path = f"anns.{ann_id}"
            if not isinstance(ann, dict):
                self.violations.append(SchemaViolation(
                    "annotation non objet", field_path=path, source=json_path.name
                ))
                continue
            image_id = str(ann.get("image_id"))

            if image_id not in imgs:
                self.violations.append(SchemaViolation(
                    f"image inconnue : {image_id}", field_path=f"{path}.image_id", source=json_path.name
                ))
                continue

            legibility = ann.get("legibility")
            if legibility not in LEGIBILITY_VALUES:
                self.violations.append(SchemaViolation(
                    f"valeur de lisibilité inconnue : {legibility!r}",
                    field_path=f"{path}.legibility", source=json_path.name
                ))
                continue

            try:
                instance = TextInstance(
                    polygon=self._cocotext_polygon(ann),
                    transcription=ann.get("utf8_string"),
                    legible=LEGIBILITY_VALUES[legibility],
                    dataset=dataset_tag,
                    instance_id=ann_id,
                )
            except (ValidationError, ValueError, TypeError) as e:
                self.violations.append(SchemaViolation(
                    str(e).splitlines()[0], field_path=f"{path}.polygon", source=json_path.name
                ))
                continue
            by_image[image_id].append(instance)

        images = []
        for image_id in sorted(imgs, key=_natural_key):
            info = imgs[image_id]
            split = COCOTEXT_SETS.get(info.get("set"))
            if split is None:
                self.violations.append(SchemaViolation(
                    f"split inconnu : {info.get('set')!r}",
                    field_path=f"imgs.{image_id}.set", source=json_path.name
                ))
                continue
            try:
                images.append(ImageAnnotation(
                    image_id=image_id, width=info.get("width"), height=info.get("height"),
                    dataset=dataset_tag, split=split, instances=tuple(by_image[image_id])
                ))
            except ValidationError as e:
                for v in violations_from_validation(e, None, json_path.name):
                    v.field_path = f"imgs.{image_id}" + (f".{v.field_path}" if v.field_path else "")
                    self.violations.append(v)

        return self._finish(images, json_path.name)

    @staticmethod
    def _cocotext_polygon(ann: Dict[str, Any]) -> Polygon:
        """Polygone du masque s'il a au moins 3 sommets, sinon de la boîte [x, y, w, h]"""
        mask = ann.get("mask") or []
        if len(mask) >= 6 and len(mask) % 2 == 0:
            return Polygon.model_validate(list(zip(mask[0::2], mask[1::2])))
        bbox = ann.get("bbox")
        if not bbox or len(bbox) != 4:
            raise ValueError("ni masque ni boîte exploitable")
        return Polygon.from_box(*[float(v) for v in bbox])


def _natural_key(value: str) -> Tuple[int, Union[int, str]]:
    return (0, int(value)) if value.isdigit() else (1, value)


def adapt_quad_per_line(gt_dir: Union[str, Path], dataset_tag: str, split: str = "train",
                        image_sizes: Optional[Dict[str, Tuple[int, int]]] = None) -> Corpus:
    return DatasetAdapter().adapt_quad_per_line(gt_dir, dataset_tag, split, image_sizes)


def adapt_cocotext_style(json_path: Union[str, Path], dataset_tag: str = "cocotext") -> Corpus:
    return DatasetAdapter().adapt_cocotext_style(json_path, dataset_tag)


def merge_corpora(corpora: List[Corpus]) -> Corpus:
    """
    Fusionne plusieurs corpus (collisions d'image_id préfixées par le jeu de données)

    Args:
        corpora: Corpus à fusionner

    Returns:
        Corpus fusionné, trié
    """
    corpus, violations = assemble_corpus([(None, im) for c in corpora for im in c.images])
    if violations:
        raise CorpusFormatError(violations)
    return corpus


def corpus_stats(corpus: Corpus, alphabet: Optional[Alphabet] = None) -> CorpusStats:
    """
    Compte images et instances par (jeu de données, split)

    Args:
        corpus: Corpus valide
        alphabet: Si fourni, compte aussi les instances prises en compte

    Returns:
        Statistiques avec totaux
    """
    rows: Dict[Tuple[str, str], StatsRow] = {}

    for image in corpus.images:
        key = (image.dataset, image.split)
        row = rows.get(key)
        if row is None:
            row = rows[key] = StatsRow(
                dataset=image.dataset, split=image.split,
                care_instances=0 if alphabet is not None else None
            )
        row.images += 1
        row.instances += len(image.instances)
        if alphabet is not None:
            row.care_instances += sum(1 for inst in image.instances if not effective_dontcare(inst, alphabet))

    ordered = [rows[k] for k in sorted(rows, key=lambda k: (k[0], SPLITS.index(k[1])))]
    return CorpusStats(
        rows=ordered,
        total_images=sum(r.images for r in ordered),
        total_instances=sum(r.instances for r in ordered),
        total_care_instances=sum(r.care_instances for r in ordered) if alphabet is not None else None,
    )
