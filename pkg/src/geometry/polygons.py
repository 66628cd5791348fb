"""
Calculs géométriques exacts sur polygones (aires, intersections, IoU, centroïdes)
"""
import logging
from typing import Dict, List, Sequence

import numpy as np
import shapely
from shapely.errors import GEOSException
from pydantic import BaseModel, Field, model_validator

from config import AREA_EPSILON
from core.exceptions import GeometryError
from nlp.models import Point2D, Polygon

logger = logging.getLogger(__name__)


class OverlapScores(BaseModel):
    """Scores de recouvrement d'une paire (détection, vérité terrain)"""
    iou: float = Field(ge=0, le=1)
    inter_over_det: float = Field(ge=0, le=1)
    intersection_area: float = Field(ge=0)

    @model_validator(mode="after")
    def iou_below_inter_over_det(self) -> "OverlapScores":
        if self.iou > self.inter_over_det + 1e-12:
            raise ValueError("iou > inter_over_det")
        return self


def to_shapely(p: Polygon) -> shapely.Polygon:
    return shapely.Polygon(p.vertices)


def to_shapes(polygons: Sequence[Polygon]) -> np.ndarray:
    """Construit les géométries Shapely d'un lot, regroupées par nombre de sommets"""
    shapes = np.empty(len(polygons), dtype=object)
    by_size: Dict[int, List[int]] = {}
    for index, p in enumerate(polygons):
        by_size.setdefault(len(p.vertices), []).append(index)
    for indices in by_size.values():
        coords = np.array([polygons[i].vertices for i in indices], dtype=np.float64)
        shapes[indices] = shapely.polygons(coords)
    return shapes


def _snap(area: float) -> float:
    return 0.0 if area < AREA_EPSILON else float(area)


def polygon_area(p: Polygon) -> float:
    """Aire absolue en px² (formule du lacet)"""
    return _snap(to_shapely(p).area)


def intersect_area(a: Polygon, b: Polygon) -> float:
    """
    Aire de l'intersection de deux polygones (convexes ou non)

    Args:
        a: Premier polygone
        b: Second polygone

    Returns:
        Aire de a ∩ b en px²
    """
    return _shapely_intersection_area(to_shapely(a), to_shapely(b))


def _shapely_intersection_area(a: shapely.Polygon, b: shapely.Polygon) -> float:
    try:
        return _snap(a.intersection(b).area)
    except GEOSException as e:
        logger.warning(f"Intersection impossible, recouvrement ignoré : {e}")
        return 0.0


def overlap_scores(det: Polygon, gt: Polygon) -> OverlapScores:
    """
    Calcule IoU et intersection / aire de la détection

    Args:
        det: Polygone détecté
        gt: Polygone de vérité terrain

    Returns:
        Scores de recouvrement
    """
    det_shape, gt_shape = to_shapely(det), to_shapely(gt)
    det_area, gt_area = _snap(det_shape.area), _snap(gt_shape.area)
    if det_area == 0.0 or gt_area == 0.0:
        raise GeometryError("polygone d'aire nulle")

    inter = min(_shapely_intersection_area(det_shape, gt_shape), det_area, gt_area)
    union = det_area + gt_area - inter
    return OverlapScores(
        iou=min(inter / union, 1.0),
        inter_over_det=min(inter / det_area, 1.0),
        intersection_area=inter,
    )


def centroid(p: Polygon) -> Point2D:
    """Centroïde pondéré par l'aire"""
    shape = to_shapely(p)
    if _snap(shape.area) == 0.0:
        raise GeometryError("centroïde d'un polygone d'aire nulle")
    c = shape.centroid
    return Point2D(float(c.x), float(c.y))


class PairwiseOverlaps:
    """
    Recouvrements de toutes les paires (détection, vérité terrain) d'une image

    Les paires dont les boîtes englobantes sont disjointes sont écartées avant
    tout calcul d'intersection ; les autres sont traitées de façon vectorisée.
    """

    def __init__(self, dets: Sequence[Polygon], gts: Sequence[Polygon]):
        self.n_dets = len(dets)
        self.n_gts = len(gts)
        self.iou = np.zeros((self.n_dets, self.n_gts), dtype=np.float64)
        self.inter_over_det = np.zeros((self.n_dets, self.n_gts), dtype=np.float64)

        if self.n_dets == 0 or self.n_gts == 0:
            return

        det_shapes = to_shapes(dets)
        gt_shapes = to_shapes(gts)
        det_areas = shapely.area(det_shapes)
        gt_areas = shapely.area(gt_shapes)
        if np.any(det_areas < AREA_EPSILON) or np.any(gt_areas < AREA_EPSILON):
            raise GeometryError("polygone d'aire nulle")

        db = shapely.bounds(det_shapes)
        gb = shapely.bounds(gt_shapes)
        candidates = (
            (db[:, None, 0] <= gb[None, :, 2]) & (gb[None, :, 0] <= db[:, None, 2])
            & (db[:, None, 1] <= gb[None, :, 3]) & (gb[None, :, 1] <= db[:, None, 3])
        )
        di, gi = np.nonzero(candidates)
        if di.size == 0:
            return

        try:
            inter = shapely.area(shapely.intersection(det_shapes[di], gt_shapes[gi]))
        except GEOSException as e:
            logger.warning(f"Intersection vectorisée impossible, calcul paire par paire : {e}")
            inter = np.array([
                _shapely_intersection_area(det_shapes[d], gt_shapes[g]) for d, g in zip(di, gi)
            ])
        inter = np.where(inter < AREA_EPSILON, 0.0, inter)
        inter = np.minimum(inter, np.minimum(det_areas[di], gt_areas[gi]))

        union = det_areas[di] + gt_areas[gi] - inter
        self.iou[di, gi] = np.minimum(inter / union, 1.0)
        self.inter_over_det[di, gi] = np.minimum(inter / det_areas[di], 1.0)

    def pairs_above(self, threshold: float) -> List[tuple]:
        """Paires (det, gt, iou) dont l'IoU dépasse strictement le seuil"""
        di, gi = np.nonzero(self.iou > threshold)
        return [(int(d), int(g), float(self.iou[d, g])) for d, g in zip(di, gi)]
