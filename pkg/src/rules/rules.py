"""
Règles de catégorisation des mots par expressions régulières
"""
import logging
import re
from functools import lru_cache
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

import yaml
from pydantic import ValidationError

from config import RULES_FILE, UNITS
from core.exceptions import ConfigError
from nlp.reports import CategoryRule

logger = logging.getLogger(__name__)

FALLBACK_CATEGORY = "other"
UNITS_PLACEHOLDER = "{units}"


def units_alternation(units: Iterable[str]) -> str:
    """Alternative regex des unités, les plus longues d'abord"""
    return "|".join(re.escape(u) for u in sorted(set(units), key=lambda u: (-len(u), u)))


def load_category_rules(path: Optional[Union[str, Path]] = None,
                        units: Optional[Sequence[str]] = None) -> List[CategoryRule]:
    """
    Charge les règles de catégorisation depuis un fichier YAML

    Args:
        path: Fichier de règles (défaut : rules/categories.yaml)
        units: Suffixes d'unités pour {units} (défaut : config.UNITS)

    Returns:
        Règles triées par priorité croissante
    """
    path = Path(path) if path is not None else RULES_FILE
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"Fichier de règles illisible {path}: {e}")

    alternation = units_alternation(units if units is not None else UNITS)
    rules = []
    for index, entry in enumerate(data.get("categories", [])):
        if isinstance(entry, dict) and isinstance(entry.get("pattern"), str):
            entry = {**entry, "pattern": entry["pattern"].replace(UNITS_PLACEHOLDER, alternation)}
        try:
            rules.append(CategoryRule.model_validate(entry))
        except ValidationError as e:
            raise ConfigError(f"{path}: categories[{index}]: {e.errors()[0]['msg']}")

    priorities = [r.priority for r in rules]
    if len(set(priorities)) != len(priorities):
        raise ConfigError(f"{path}: priorités de règles non uniques")

    rules.sort(key=lambda r: r.priority)
    logger.info(f"{len(rules)} règles de catégorie chargées depuis {path.name}")
    return rules


@lru_cache(maxsize=None)
def _compiled(pattern: str) -> re.Pattern:
    return re.compile(pattern)


def categorize(word: str, rules: Sequence[CategoryRule]) -> str:
    """
    Catégorie d'un mot normalisé

    Args:
        word: Mot normalisé
        rules: Règles triées par priorité

    Returns:
        Nom de la première règle couvrant le mot, sinon "other"
    """
    for rule in rules:
        if _compiled(rule.pattern).fullmatch(word):
            return rule.name
    return FALLBACK_CATEGORY
