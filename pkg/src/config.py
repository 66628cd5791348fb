"""
Configuration de l'outil d'évaluation OOV
"""
import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

TOOL_NAME = "oov-analyzer"
TOOL_VERSION = "1.0.0"

# Chemins
RULES_FILE = Path(__file__).parent / "rules" / "categories.yaml"

# Logging
LOG_LEVEL = os.getenv("OOV_LOG_LEVEL", "INFO")
LOG_FILE = os.getenv("OOV_LOG_FILE")
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

# Parallélisme
WORKERS = int(os.getenv("OOV_WORKERS", 1))

# Évaluation
IOU_THRESHOLD = float(os.getenv("OOV_IOU_THRESHOLD", 0.5))
DONTCARE_OVERLAP_THRESHOLD = float(os.getenv("OOV_DONTCARE_THRESHOLD", 0.5))
CASE_SENSITIVE = os.getenv("OOV_CASE_SENSITIVE", "true").lower() in ("1", "true", "yes")
HEATMAP_GRID = 64
LENGTH_MAX_BUCKET = 25
LENGTH_MIN_BUCKET = 2
REPORT_DECIMALS = 6

# Splits
VALIDATION_CAP = int(os.getenv("OOV_VALIDATION_CAP", 5000))
UNREADABLE_MARKER = "###"
SPLITS = ["train", "validation", "test"]

# Géométrie
AREA_EPSILON = 1e-9  # aires inférieures ramenées à 0
FRAME_SLACK = 0.1  # tolérance hors-cadre (fraction de W/H)

# Histogrammes
WORDS_PER_IMAGE_MAX_BIN = 150

# Alphabet par défaut : latin, chiffres et ponctuation ASCII (l'espace est exclu)
DEFAULT_LETTERS = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
DEFAULT_DIGITS = "0123456789"
DEFAULT_PUNCTUATION = "!\"#$%&'()*+,-./:;<=>?@[\\]_`{|}~"
DEFAULT_ALPHABET = DEFAULT_LETTERS + DEFAULT_DIGITS + DEFAULT_PUNCTUATION

# Suffixes d'unités pour la catégorie "units"
UNITS = [
    "km", "m", "cm", "mm", "mi", "ft", "in", "kg", "g", "mg", "lb", "lbs", "oz",
    "l", "L", "ml", "mL", "h", "min", "s", "mph", "kmh", "km/h", "kW", "W", "V",
    "MB", "GB", "TB", "GHz", "MHz", "%",
]

# Correspondance des valeurs de lisibilité (style COCO-Text)
LEGIBILITY_VALUES = {
    "legible": True,
    "illegible": False,
}

COCOTEXT_SETS = {
    "train": "train",
    "val": "validation",
    "validation": "validation",
    "test": "test",
}

# Clés acceptées dans le fichier --config (format clé = valeur)
CONFIG_KEYS = [
    "iou_threshold",
    "dontcare_overlap_threshold",
    "case_sensitive",
    "vocab_case_sensitive",
    "heatmap_grid",
    "length_max_bucket",
    "validation_cap",
]
