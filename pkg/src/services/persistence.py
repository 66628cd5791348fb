"""
Service de persistance sur fichiers (corpus, exports, rapports, manifestes)
"""
import csv
import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence, Union

from config import TOOL_NAME, TOOL_VERSION
from core.utils import as_percent, file_digest, round_floats
from nlp.models import Corpus, EvalConfig, ImageAnnotation
from nlp.reports import RunManifest

logger = logging.getLogger(__name__)


def canonical_record(image: ImageAnnotation) -> Dict[str, Any]:
    """Représentation d'une image au format canonique"""
    return {
        "image_id": image.image_id,
        "width": image.width,
        "height": image.height,
        "dataset": image.dataset,
        "split": image.split,
        "instances": [
            {
                "instance_id": inst.instance_id,
                "polygon": inst.polygon.model_dump(),
                "transcription": inst.transcription,
                "legible": inst.legible,
            }
            for inst in image.instances
        ],
    }


def _dumps(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True)


class PersistenceService:
    """Écrit les sorties de l'outil et garde trace de leurs empreintes"""

    def __init__(self):
        self.logger = logger
        self.outputs: Dict[str, Path] = {}

    def _register(self, path: Path) -> Path:
        self.outputs[path.name] = path
        return path

    @staticmethod
    def _prepare(path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def save_jsonl(self, path: Union[str, Path], records: Iterable[Any]) -> Path:
        """
        Écrit des enregistrements JSON, un par ligne

        Args:
            path: Fichier de sortie
            records: Dictionnaires ou modèles pydantic

        Returns:
            Chemin écrit
        """
        path = self._prepare(path)
        count = 0
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for record in records:
                if hasattr(record, "model_dump"):
                    record = record.model_dump(mode="json")
                f.write(_dumps(record) + "\n")
                count += 1
        self.logger.info(f"{count} enregistrements écrits dans {path}")
        return self._register(path)

    def save_canonical(self, path: Union[str, Path], corpus: Corpus) -> Path:
        """Écrit un corpus au format canonique, trié par image_id"""
        return self.save_jsonl(path, (canonical_record(im) for im in corpus.images))

    def save_lines(self, path: Union[str, Path], lines: Iterable[str]) -> Path:
        path = self._prepare(path)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for line in lines:
                f.write(f"{line}\n")
        return self._register(path)

    def save_json(self, path: Union[str, Path], payload: Any, percent: bool = False) -> Path:
        """
        Écrit un document JSON (clés triées, réels à 6 décimales)

        Args:
            path: Fichier de sortie
            payload: Structure ou modèle pydantic
            percent: Convertir les fractions en pourcentages

        Returns:
            Chemin écrit
        """
        path = self._prepare(path)
        if hasattr(payload, "model_dump"):
            payload = payload.model_dump(mode="json")
        payload = round_floats(payload)
        if percent:
            payload = as_percent(payload)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(payload, f, ensure_ascii=False, sort_keys=True, indent=2)
            f.write("\n")
        return self._register(path)

    def save_csv(self, path: Union[str, Path], header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        """Écrit une table séparée par des virgules avec ligne d'en-tête"""
        path = self._prepare(path)
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow(["" if v is None else (f"{v:.6f}" if isinstance(v, float) else v) for v in row])
        return self._register(path)

    def write_manifest(self, directory: Union[str, Path], command: str,
                       inputs: Dict[str, Optional[Union[str, Path]]],
                       cfg: Optional[EvalConfig] = None) -> Path:
        """
        Écrit le manifeste d'exécution (empreintes des entrées et sorties)

        Args:
            directory: Répertoire du manifeste
            command: Sous-commande exécutée
            inputs: Entrées nommées (chemins)
            cfg: Configuration utilisée

        Returns:
            Chemin du manifeste
        """
        manifest = RunManifest(
            tool=TOOL_NAME,
            tool_version=TOOL_VERSION,
            command=command,
            inputs={name: file_digest(p) for name, p in sorted(inputs.items()) if p is not None},
            config=cfg.model_dump(mode="json") if cfg is not None else {},
            timestamp=datetime.now(timezone.utc).isoformat(),
            outputs={name: file_digest(p) for name, p in sorted(self.outputs.items())},
        )
        path = self._prepare(Path(directory) / f"manifest.{command}.json")
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(manifest.model_dump(mode="json"), f, ensure_ascii=False, sort_keys=True, indent=2)
            f.write("\n")
        self.logger.info(f"Manifeste écrit : {path} ({len(manifest.outputs)} sorties)")
        return path


def write_canonical(corpus: Corpus, path: Union[str, Path]) -> Path:
    """Écrit un corpus au format canonique"""
    return PersistenceService().save_canonical(path, corpus)

