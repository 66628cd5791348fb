"""
Normalisation des transcriptions et règles d'alphabet
"""
import logging
import unicodedata
from pathlib import Path
from typing import Optional, Union

from config import UNREADABLE_MARKER
from core.exceptions import ConfigError
from nlp.models import Alphabet, EvalConfig, TextInstance

logger = logging.getLogger(__name__)


def normalize_transcription(raw: str, cfg: Optional[EvalConfig] = None) -> str:
    """
    Construit la clé de comparaison d'une transcription

    Composition canonique Unicode (NFC) et suppression des espaces en début et
    fin ; passage en minuscules uniquement si l'évaluation ignore la casse.
    La ponctuation intérieure est conservée.

    Args:
        raw: Transcription brute
        cfg: Configuration d'évaluation (défaut : sensible à la casse)

    Returns:
        Transcription normalisée
    """
    text = unicodedata.normalize("NFC", raw.strip())
    if cfg is not None and not cfg.case_sensitive:
        text = unicodedata.normalize("NFC", text.lower())
    return text


def is_in_alphabet(word: str, alphabet: Alphabet) -> bool:
    """Vrai si chaque caractère du mot appartient à l'alphabet ; faux pour le mot vide"""
    if not word:
        return False
    return all(char in alphabet.allowed for char in word)


def effective_dontcare(inst: TextInstance, alphabet: Alphabet) -> bool:
    """
    Indique si une instance est ignorée ("don't care") à l'évaluation

    Args:
        inst: Instance de vérité terrain
        alphabet: Alphabet du challenge

    Returns:
        True si illisible, sans transcription, marquée "###" ou hors alphabet
    """
    if not inst.legible or inst.transcription is None:
        return True
    word = normalize_transcription(inst.transcription)
    if word == UNREADABLE_MARKER:
        return True
    return not is_in_alphabet(word, alphabet)


def load_alphabet(path: Union[str, Path]) -> Alphabet:
    """
    Charge un alphabet depuis un fichier UTF-8 (une ligne, doublons ignorés)

    Args:
        path: Chemin du fichier

    Returns:
        Alphabet chargé
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8-sig")
    except OSError as e:
        raise ConfigError(f"Alphabet illisible {path}: {e}")

    chars = frozenset(text.replace("\n", "").replace("\r", ""))
    if not chars:
        raise ConfigError(f"Alphabet vide : {path}")

    logger.info(f"Alphabet chargé depuis {path}: {len(chars)} caractères")
    return Alphabet(allowed=chars)
