"""
Fonctions utilitaires générales
"""
import hashlib
import logging
from pathlib import Path
from typing import Any, Optional, Union

from config import LOG_FORMAT, REPORT_DECIMALS


def setup_logging(log_level: str = "INFO", log_file: Optional[str] = None):
    """
    Configure le système de logging

    Args:
        log_level: Niveau de log (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file: Chemin vers le fichier de log (optionnel)
    """
    numeric_level = getattr(logging, log_level.upper(), None)
    if not isinstance(numeric_level, int):
        numeric_level = logging.INFO

    handlers = [logging.StreamHandler()]

    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_file))

    logging.basicConfig(
        level=numeric_level,
        format=LOG_FORMAT,
        handlers=handlers,
        force=True
    )


def file_digest(path: Union[str, Path]) -> str:
    """
    Calcule l'empreinte SHA-256 d'un fichier (ou d'un répertoire, fichiers triés)

    Args:
        path: Chemin du fichier ou du répertoire

    Returns:
        Empreinte hexadécimale
    """
    path = Path(path)
    sha = hashlib.sha256()

    if path.is_dir():
        for child in sorted(p for p in path.rglob("*") if p.is_file()):
            sha.update(str(child.relative_to(path)).encode("utf-8"))
            sha.update(bytes.fromhex(file_digest(child)))
        return sha.hexdigest()

    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            sha.update(chunk)
    return sha.hexdigest()


def round_floats(value: Any, decimals: int = REPORT_DECIMALS) -> Any:
    """
    Arrondit récursivement les réels d'une structure JSON

    Args:
        value: Structure (dict, liste, scalaire)
        decimals: Nombre de décimales

    Returns:
        Structure avec réels arrondis
    """
    if isinstance(value, float):
        return round(value, decimals)
    if isinstance(value, dict):
        return {k: round_floats(v, decimals) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [round_floats(v, decimals) for v in value]
    return value


def as_percent(value: Any) -> Any:
    """Convertit les fractions d'un rapport en pourcentages (2 décimales)"""
    if isinstance(value, float):
        return round(value * 100.0, 2)
    if isinstance(value, dict):
        return {k: as_percent(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [as_percent(v) for v in value]
    return value

