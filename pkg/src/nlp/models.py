"""
Modèles de données du corpus et du vocabulaire - Pydantic v2
"""
import math
from enum import Enum
from functools import cached_property
from typing import Any, Dict, FrozenSet, List, Literal, NamedTuple, Optional, Tuple

import shapely
from pydantic import (
    BaseModel, ConfigDict, Field, PositiveInt, field_serializer, field_validator,
    model_serializer, model_validator
)

from config import (
    AREA_EPSILON, CASE_SENSITIVE, DEFAULT_ALPHABET, DONTCARE_OVERLAP_THRESHOLD,
    FRAME_SLACK, HEATMAP_GRID, IOU_THRESHOLD, LENGTH_MAX_BUCKET, VALIDATION_CAP
)

Split = Literal["train", "validation", "test"]


class Point2D(NamedTuple):
    """Sommet en pixels"""
    x: float
    y: float


def _orientation(a: Tuple[float, float], b: Tuple[float, float], c: Tuple[float, float]) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _doubled_signed_area(points: List[Tuple[float, float]]) -> float:
    """Formule du lacet ; positive pour un contour anti-horaire"""
    return sum(
        x0 * y1 - x1 * y0
        for (x0, y0), (x1, y1) in zip(points, points[1:] + points[:1])
    )


def _is_simple_small(points: List[Tuple[float, float]]) -> bool:
    """
    Vrai si un triangle ou un quadrilatère est certainement simple

    Faux dès qu'un doute subsiste (plus de 4 sommets, sommets alignés,
    côtés opposés sécants) : la vérification complète passe alors par Shapely.
    """
    n = len(points)
    if n > 4:
        return False
    for i in range(n):
        if _orientation(points[i], points[(i + 1) % n], points[(i + 2) % n]) == 0:
            return False
    if n == 3:
        return True

    p0, p1, p2, p3 = points
    for a, b, c, d in ((p0, p1, p2, p3), (p1, p2, p3, p0)):
        o1, o2 = _orientation(a, b, c), _orientation(a, b, d)
        o3, o4 = _orientation(c, d, a), _orientation(c, d, b)
        if o1 * o2 <= 0 and o3 * o4 <= 0:
            return False
    return True


def _canonical_vertices(raw: Any) -> Tuple[Tuple[Point2D, ...], bool]:
    """
    Met un contour sous forme canonique (anti-horaire, sans sommet de fermeture)

    Args:
        raw: Séquence de couples (x, y)

    Returns:
        (sommets canoniques, indicateur de réparation par enveloppe convexe)
    """
    try:
        points = [(float(p[0]), float(p[1])) for p in raw]
    except (TypeError, ValueError, IndexError, KeyError):
        raise ValueError("sommets invalides : couples [x, y] attendus")

    if not all(math.isfinite(x) and math.isfinite(y) for x, y in points):
        raise ValueError("coordonnée non finie")

    if len(points) >= 2 and points[0] == points[-1]:
        points = points[:-1]
    if len(points) < 3:
        raise ValueError(f"un polygone requiert au moins 3 sommets ({len(points)} fournis)")

    if _is_simple_small(points):
        doubled_area = _doubled_signed_area(points)
        if abs(doubled_area) / 2 <= AREA_EPSILON:
            raise ValueError("polygone dégénéré (aire nulle)")
        if doubled_area < 0:
            points.reverse()
        return tuple(Point2D(x, y) for x, y in points), False

    shape = shapely.Polygon(points)
    repaired = False
    if not shape.is_valid:
        # Contour auto-intersecté : repli sur l'enveloppe convexe
        hull = shape.convex_hull
        if hull.geom_type != "Polygon" or hull.area <= AREA_EPSILON:
            raise ValueError("polygone dégénéré (aire nulle)")
        points = list(hull.exterior.coords)[:-1]
        shape = hull
        repaired = True

    if shape.area <= AREA_EPSILON:
        raise ValueError("polygone dégénéré (aire nulle)")

    if not shapely.LinearRing(points).is_ccw:
        points.reverse()

    return tuple(Point2D(x, y) for x, y in points), repaired


class Polygon(BaseModel):
    """Contour simple, orienté dans le sens anti-horaire"""
    vertices: Tuple[Point2D, ...]
    repaired: bool = False

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="before")
    @classmethod
    def canonicalize(cls, data: Any) -> Any:
        """Accepte une liste de sommets ou un dictionnaire {vertices: ...}"""
        if isinstance(data, Polygon):
            return data
        if isinstance(data, dict):
            raw = data.get("vertices")
        else:
            raw = data
        vertices, repaired = _canonical_vertices(raw)
        # sommets déjà typés : instance acceptée telle quelle par la validation
        return cls.model_construct(vertices=vertices, repaired=repaired)

    @model_serializer
    def serialize(self) -> List[List[float]]:
        return [[v.x, v.y] for v in self.vertices]

    def bounds(self) -> Tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax)"""
        xs = [v.x for v in self.vertices]
        ys = [v.y for v in self.vertices]
        return min(xs), min(ys), max(xs), max(ys)

    @classmethod
    def from_box(cls, x: float, y: float, w: float, h: float) -> "Polygon":
        """Développe une boîte [x, y, w, h] en quadrilatère"""
        return cls.model_validate([(x, y), (x + w, y), (x + w, y + h), (x, y + h)])


class TextInstance(BaseModel):
    """Mot annoté : région, transcription, lisibilité et provenance"""
    polygon: Polygon
    transcription: Optional[str] = None
    legible: bool = True
    dataset: str
    instance_id: str

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="before")
    @classmethod
    def absent_is_illegible(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("transcription") is None:
            data = {**data, "legible": False}
        return data


class ImageAnnotation(BaseModel):
    """Vérité terrain d'une image"""
    image_id: str = Field(min_length=1)
    width: PositiveInt
    height: PositiveInt
    dataset: str = Field(min_length=1)
    split: Split
    instances: Tuple[TextInstance, ...] = ()

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="before")
    @classmethod
    def fill_instances(cls, data: Any) -> Any:
        """Complète provenance et identifiants des instances du format canonique"""
        if not isinstance(data, dict) or not isinstance(data.get("instances"), (list, tuple)):
            return data

        filled = []
        for index, inst in enumerate(data["instances"]):
            if isinstance(inst, dict):
                inst = dict(inst)
                inst.setdefault("dataset", data.get("dataset"))
                if inst.get("instance_id") is None:
                    inst["instance_id"] = str(index)
            filled.append(inst)
        return {**data, "instances": filled}

    @model_validator(mode="after")
    def check_instances(self) -> "ImageAnnotation":
        seen = set()
        for index, inst in enumerate(self.instances):
            if inst.instance_id in seen:
                raise ValueError(f"instances[{index}].instance_id dupliqué : {inst.instance_id}")
            seen.add(inst.instance_id)

            if inst.dataset != self.dataset:
                raise ValueError(
                    f"instances[{index}].dataset : {inst.dataset} ne correspond pas au jeu de l'image ({self.dataset})"
                )

            xmin, ymin, xmax, ymax = inst.polygon.bounds()
            if (xmin < -FRAME_SLACK * self.width or xmax > (1 + FRAME_SLACK) * self.width
                    or ymin < -FRAME_SLACK * self.height or ymax > (1 + FRAME_SLACK) * self.height):
                raise ValueError(
                    f"instances[{index}].polygon hors cadre "
                    f"({self.width}x{self.height}, boîte {xmin:g},{ymin:g},{xmax:g},{ymax:g})"
                )
        return self


class Alphabet(BaseModel):
    """Ensemble des caractères autorisés"""
    allowed: FrozenSet[str]

    model_config = ConfigDict(frozen=True)

    @field_validator("allowed", mode="before")
    @classmethod
    def split_string(cls, v: Any) -> Any:
        if isinstance(v, str):
            return frozenset(v)
        return v

    @field_validator("allowed")
    @classmethod
    def check_codepoints(cls, v: FrozenSet[str]) -> FrozenSet[str]:
        if not v:
            raise ValueError("alphabet vide")
        for char in v:
            if len(char) != 1:
                raise ValueError(f"caractère multi-codepoint : {char!r}")
        return v

    @field_serializer("allowed")
    def serialize_allowed(self, v: FrozenSet[str]) -> str:
        return "".join(sorted(v))

    @classmethod
    def default(cls) -> "Alphabet":
        return cls(allowed=DEFAULT_ALPHABET)

    def __contains__(self, char: str) -> bool:
        return char in self.allowed


class EvalConfig(BaseModel):
    """Paramètres d'évaluation partagés par tous les modules"""
    iou_threshold: float = Field(IOU_THRESHOLD, gt=0, le=1)
    dontcare_overlap_threshold: float = Field(DONTCARE_OVERLAP_THRESHOLD, gt=0, le=1)
    case_sensitive: bool = CASE_SENSITIVE
    vocab_case_sensitive: Optional[bool] = None
    normalization: Literal["NFC+strip"] = "NFC+strip"
    heatmap_grid: PositiveInt = HEATMAP_GRID
    length_max_bucket: int = Field(LENGTH_MAX_BUCKET, ge=2)
    validation_cap: int = Field(VALIDATION_CAP, ge=0)
    alphabet: Alphabet = Field(default_factory=Alphabet.default)

    model_config = ConfigDict(frozen=True, extra="forbid")

    @property
    def membership_case_sensitive(self) -> bool:
        """Sensibilité à la casse de l'appartenance au vocabulaire"""
        if self.vocab_case_sensitive is None:
            return self.case_sensitive
        return self.vocab_case_sensitive


class Corpus(BaseModel):
    """Corpus fusionné, trié par image_id"""
    images: Tuple[ImageAnnotation, ...] = ()
    provenance: Dict[str, int] = {}

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_consistency(self) -> "Corpus":
        seen = set()
        for image in self.images:
            if image.image_id in seen:
                raise ValueError(f"image_id dupliqué : {image.image_id}")
            seen.add(image.image_id)
            for inst in image.instances:
                if inst.dataset not in self.provenance:
                    raise ValueError(f"provenance inconnue : {inst.dataset}")
        return self

    @classmethod
    def from_images(cls, images: List[ImageAnnotation]) -> "Corpus":
        """Construit un corpus trié et calcule la provenance"""
        ordered = tuple(sorted(images, key=lambda im: im.image_id))
        provenance: Dict[str, int] = {}
        for image in ordered:
            provenance[image.dataset] = provenance.get(image.dataset, 0) + 1
        return cls(images=ordered, provenance=dict(sorted(provenance.items())))

    @cached_property
    def by_id(self) -> Dict[str, ImageAnnotation]:
        return {image.image_id: image for image in self.images}


class StatsRow(BaseModel):
    """Ligne de statistiques par (jeu de données, split)"""
    dataset: str
    split: Split
    images: int = 0
    instances: int = 0
    care_instances: Optional[int] = None


class CorpusStats(BaseModel):
    """Statistiques de taille du corpus"""
    rows: List[StatsRow] = []
    total_images: int = 0
    total_instances: int = 0
    total_care_instances: Optional[int] = None


class VocabularySources(BaseModel):
    corpus_word_count: int = 0
    lexicon_word_count: int = 0


class Vocabulary(BaseModel):
    """Dictionnaire des mots dans le vocabulaire (IV)"""
    words: FrozenSet[str] = frozenset()
    sources: VocabularySources = VocabularySources()

    model_config = ConfigDict(frozen=True)

    @field_validator("words")
    @classmethod
    def no_empty_word(cls, v: FrozenSet[str]) -> FrozenSet[str]:
        if "" in v:
            raise ValueError("mot vide dans le vocabulaire")
        return v

    @field_serializer("words")
    def serialize_words(self, v: FrozenSet[str]) -> List[str]:
        return sorted(v)

    @cached_property
    def folded_words(self) -> FrozenSet[str]:
        return frozenset(w.lower() for w in self.words)

    def contains(self, word: str, case_sensitive: bool = True) -> bool:
        if case_sensitive:
            return word in self.words
        return word.lower() in self.folded_words


class SubsetLabel(str, Enum):
    IV = "IV"
    OOV = "OOV"


class CroppedWordRecord(BaseModel):
    """Mot découpé de la tâche de reconnaissance"""
    word_id: str
    transcription: str = Field(min_length=1)
    dataset: str
    subset: SubsetLabel

    model_config = ConfigDict(frozen=True)
