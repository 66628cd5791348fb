"""
Modèles des soumissions, registres d'appariement et rapports - Pydantic v2
"""
import re
from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator

from nlp.models import Polygon, SubsetLabel


class EvalMode(str, Enum):
    ALL = "All"
    IV = "IV"
    OOV = "OOV"


# ========== TÂCHE 1 : BOUT EN BOUT ==========

class Detection(BaseModel):
    """Mot proposé par un participant"""
    polygon: Polygon
    transcription: str
    confidence: Optional[float] = None

    model_config = ConfigDict(frozen=True)


class ImageDetections(BaseModel):
    """Ligne d'une soumission de la tâche 1"""
    image_id: str
    detections: Tuple[Detection, ...] = ()

    model_config = ConfigDict(frozen=True)


class MatchPair(BaseModel):
    det_index: int
    gt_index: int
    iou: float
    transcription_correct: bool


class MatchLedger(BaseModel):
    """Registre d'appariement un-à-un d'une image"""
    image_id: str
    pairs: List[MatchPair] = []
    suppressed_dets: List[int] = []
    unmatched_dets: List[int] = []
    unmatched_gts: List[int] = []


class EvalCounts(BaseModel):
    tp: int = Field(0, ge=0)
    fp: int = Field(0, ge=0)
    fn: int = Field(0, ge=0)

    def __add__(self, other: "EvalCounts") -> "EvalCounts":
        return EvalCounts(tp=self.tp + other.tp, fp=self.fp + other.fp, fn=self.fn + other.fn)


class SubsetMetrics(BaseModel):
    precision: float = Field(ge=0, le=1)
    recall: float = Field(ge=0, le=1)
    hmean: float = Field(ge=0, le=1)


class E2EReport(BaseModel):
    """Rapport de la tâche 1 (All / IV / OOV)"""
    metrics_all: SubsetMetrics
    metrics_iv: SubsetMetrics
    metrics_oov: SubsetMetrics
    average_hmean: float
    counts: Dict[EvalMode, EvalCounts]
    n_images: int = 0


# ========== TÂCHE 2 : MOTS DÉCOUPÉS ==========

class RecognitionPrediction(BaseModel):
    """Ligne d'une soumission de la tâche 2"""
    word_id: str
    prediction: str


class RecognitionSubmission(BaseModel):
    predictions: Dict[str, str] = {}


class WordTally(BaseModel):
    """Totaux partiels d'un lot de mots"""
    n_words: int = 0
    n_correct: int = 0
    total_edit_distance: int = 0

    def __add__(self, other: "WordTally") -> "WordTally":
        return WordTally(
            n_words=self.n_words + other.n_words,
            n_correct=self.n_correct + other.n_correct,
            total_edit_distance=self.total_edit_distance + other.total_edit_distance,
        )


class RecognitionMetrics(BaseModel):
    word_accuracy: float = Field(ge=0, le=1)
    total_edit_distance: int = Field(ge=0)
    n_words: int = Field(ge=0)
    n_correct: int = Field(0, ge=0)


class RecReport(BaseModel):
    """Rapport de la tâche 2 (IV / OOV)"""
    metrics_iv: RecognitionMetrics
    metrics_oov: RecognitionMetrics
    total_word_accuracy: float
    total_edit_distance: int = 0
    missing_predictions: int = 0


class LeaderboardEntry(BaseModel):
    rank: int
    name: str
    score: float
    tie_break: float


# ========== ANALYSES ==========

class WordOutcome(BaseModel):
    """Issue d'un mot de vérité terrain (trouvé ou non)"""
    word: str
    subset: SubsetLabel
    success: bool
    dataset: str = ""

    model_config = ConfigDict(frozen=True)

    @property
    def length(self) -> int:
        return len(self.word)


class LengthBucket(BaseModel):
    length: int
    subset: SubsetLabel
    n: int
    value: Optional[float] = None  # None : aucun mot de cette longueur


class LengthProfile(BaseModel):
    buckets: List[LengthBucket] = []
    max_bucket: int


class CategoryRule(BaseModel):
    name: str
    pattern: str
    priority: int

    model_config = ConfigDict(frozen=True)

    @field_validator("pattern")
    @classmethod
    def must_compile(cls, v: str) -> str:
        try:
            re.compile(v)
        except re.error as e:
            raise ValueError(f"expression régulière invalide : {e}")
        return v


class CategoryRow(BaseModel):
    category: str
    subset: SubsetLabel
    n: int
    n_success: int
    accuracy: float


class SpatialHeatmap(BaseModel):
    dataset: str
    grid: List[List[int]]


class WordsPerImageHistogram(BaseModel):
    """Images par nombre de mots ; bins[i] compte les images à i+1 mots"""
    dataset: str
    zero: int = 0
    bins: List[int]
    overflow: int = 0


class RunManifest(BaseModel):
    tool: str
    tool_version: str
    command: str
    inputs: Dict[str, str]
    config: Dict
    timestamp: str
    outputs: Dict[str, str]
