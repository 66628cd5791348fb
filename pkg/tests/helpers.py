"""
Constructeurs de données de test
"""
from typing import Optional, Sequence

import numpy as np

from nlp.models import ImageAnnotation, Polygon, TextInstance
from nlp.reports import Detection


def box(x: float, y: float, w: float, h: float) -> Polygon:
    return Polygon.from_box(x, y, w, h)


def gt(polygon: Polygon, transcription: Optional[str], instance_id: str, legible: bool = True,
       dataset: str = "synth") -> TextInstance:
    return TextInstance(polygon=polygon, transcription=transcription, legible=legible,
                        dataset=dataset, instance_id=instance_id)


def det(polygon: Polygon, transcription: str) -> Detection:
    return Detection(polygon=polygon, transcription=transcription)


def image(image_id: str, instances: Sequence[TextInstance], split: str = "test", dataset: str = "synth",
          width: int = 100, height: int = 100) -> ImageAnnotation:
    return ImageAnnotation(image_id=image_id, width=width, height=height, dataset=dataset,
                           split=split, instances=tuple(instances))


def random_quad(rng: np.random.Generator, size: float = 100.0) -> Polygon:
    """Quadrilatère convexe aléatoire (boîte tournée) dans [0, size]²"""
    cx, cy = rng.uniform(0.2 * size, 0.8 * size, size=2)
    w, h = rng.uniform(0.05 * size, 0.3 * size, size=2)
    theta = rng.uniform(0, np.pi)
    c, s = np.cos(theta), np.sin(theta)
    corners = [(-w / 2, -h / 2), (w / 2, -h / 2), (w / 2, h / 2), (-w / 2, h / 2)]
    return Polygon.model_validate([(cx + c * x - s * y, cy + s * x + c * y) for x, y in corners])
