"""
Hiérarchie des erreurs de l'outil d'évaluation
"""
from typing import List, Optional


class OOVError(Exception):
    """Erreur de base ; toute sous-classe se traduit par le code de sortie 1"""


class ConfigError(OOVError):
    """Fichier de configuration ou alphabet invalide"""


class SchemaViolation(OOVError):
    """Enregistrement malformé, localisé par numéro de ligne et chemin de champ"""

    def __init__(self, message: str, line: Optional[int] = None,
                 field_path: Optional[str] = None, source: Optional[str] = None):
        self.message = message
        self.line = line
        self.field_path = field_path
        self.source = source
        super().__init__(self.describe())

    def describe(self) -> str:
        parts = []
        if self.source:
            parts.append(str(self.source))
        if self.line is not None:
            parts.append(f"ligne {self.line}")
        if self.field_path:
            parts.append(self.field_path)
        prefix = ":".join(parts)
        return f"{prefix}: {self.message}" if prefix else self.message


class CorpusFormatError(OOVError):
    """Rapport d'erreurs d'ingestion (une violation par ligne fautive)"""

    def __init__(self, violations: List[SchemaViolation]):
        self.violations = violations
        super().__init__(f"{len(violations)} enregistrement(s) invalide(s)")

    def report(self) -> List[str]:
        return [v.describe() for v in self.violations]


class GeometryError(OOVError):
    """Polygone dégénéré (aire nulle)"""


class AlphabetError(OOVError):
    """Mot contenant des caractères hors alphabet"""


class SubmissionError(OOVError):
    """Soumission incohérente avec la vérité terrain"""

    def __init__(self, message: str, offenders: Optional[List[str]] = None):
        self.offenders = sorted(offenders or [])
        if self.offenders:
            shown = ", ".join(self.offenders[:20])
            more = f" (+{len(self.offenders) - 20})" if len(self.offenders) > 20 else ""
            message = f"{message}: {shown}{more}"
        super().__init__(message)
