# Path: /src/evaluation/roc.py
# ROC sweep with trapezoid AUC, fixed false-alarm-rate detection maps, and CSV export.
import csv
import logging
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Tuple

import numpy as np

from src.hsi.cube import Raster

logger = logging.getLogger(__name__)

RESULT_FIELDS = ("image", "detector", "seed", "auc")


class SingleClassError(ValueError):
    def __init__(self, positives, negatives):
        self.message = (f"Reference map must contain both classes, "
                        f"got {positives} anomaly and {negatives} background pixels")
        super().__init__(self.message)


@dataclass(frozen=True, eq=False)
class RocCurve:
    """ROC points from (0, 0) to (1, 1).

    ``thresholds[k]`` is the score at which point ``k`` is reached; the
    leading point carries ``+inf``. ``auc_exact`` is the trapezoid area as
    a rational number.
    """
    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray
    auc_exact: Fraction

    @property
    def auc(self) -> float:
        return float(self.auc_exact)

    @property
    def points(self) -> List[Tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


def _split(scores: Raster, reference: Raster):
    if scores.shape != reference.shape:
        raise ValueError(f"Scores {scores.shape} and reference {reference.shape} differ in size")
    if not reference.is_binary:
        raise ValueError("Reference map must be binary")
    labels = reference.values.astype(bool)
    positives = int(labels.sum())
    negatives = labels.size - positives
    if positives == 0 or negatives == 0:
        raise SingleClassError(positives, negatives)
    return scores.values, labels, positives, negatives


def roc_curve(scores: Raster, reference: Raster) -> RocCurve:
    """Sweep the unique score values in descending order; tied scores share one threshold."""
    values, labels, positives, negatives = _split(scores, reference)
    order = np.argsort(-values, kind="stable")
    ordered, ordered_labels = values[order], labels[order]
    # last index of every run of equal scores
    boundaries = np.flatnonzero(np.diff(ordered) != 0)
    boundaries = np.append(boundaries, ordered.size - 1)
    true_positives = np.concatenate(([0], np.cumsum(ordered_labels)[boundaries]))
    false_positives = np.concatenate(([0], (boundaries + 1) - true_positives[1:]))

    doubled_area = int(np.sum(np.diff(false_positives) * (true_positives[1:] + true_positives[:-1])))
    auc = Fraction(doubled_area, 2 * positives * negatives)
    thresholds = np.concatenate(([np.inf], ordered[boundaries]))
    return RocCurve(thresholds=thresholds, fpr=false_positives / negatives,
                    tpr=true_positives / positives, auc_exact=auc)


def detection_threshold(scores: Raster, reference: Raster, far: float) -> float:
    """Smallest threshold leaving at most floor(far * N_bg) background pixels above it."""
    if not 0.0 <= far <= 1.0:
        raise ValueError(f"False alarm rate must be in [0, 1], got {far}")
    values, labels, _, negatives = _split(scores, reference)
    allowed = math.floor(round(far * negatives, 9))
    if allowed >= negatives:
        return -math.inf
    background = np.sort(values[~labels])[::-1]
    return float(background[allowed])


def detection_map(scores: Raster, reference: Raster, far: float = 0.01) -> Raster:
    threshold = detection_threshold(scores, reference, far)
    flagged = scores.data > threshold
    logger.info("Detection map at FAR %g: threshold %.6g, %d pixels flagged", far, threshold, int(flagged.sum()))
    return Raster(flagged.astype(np.float64))


def save_roc(curve: RocCurve, path: str):
    with open(path, "w", newline="") as file:
        writer = csv.writer(file)
        writer.writerow(("threshold", "fpr", "tpr"))
        for threshold, fpr, tpr in zip(curve.thresholds, curve.fpr, curve.tpr):
            writer.writerow((repr(float(threshold)), repr(float(fpr)), repr(float(tpr))))


def load_roc(path: str) -> RocCurve:
    """Read a curve written by ``save_roc``; the AUC is recomputed from the points."""
    with open(path, newline="") as file:
        rows = list(csv.DictReader(file))
    if not rows:
        raise ValueError(f"ROC file {path} holds no points")
    thresholds = np.array([float(row["threshold"]) for row in rows])
    fpr = np.array([float(row["fpr"]) for row in rows])
    tpr = np.array([float(row["tpr"]) for row in rows])
    area = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2))
    return RocCurve(thresholds=thresholds, fpr=fpr, tpr=tpr, auc_exact=Fraction(area))


def read_results(path: str) -> List[dict]:
    if not os.path.exists(path):
        return []
    with open(path, newline="") as file:
        return list(csv.DictReader(file))


def append_result(path: str, image: str, detector: str, seed, auc: float):
    """Record one AUC row keyed by (image, detector, seed); an existing row with that key is replaced."""
    key = (image, detector, str(seed))
    rows = [row for row in read_results(path) if (row["image"], row["detector"], row["seed"]) != key]
    rows.append({"image": image, "detector": detector, "seed": str(seed), "auc": repr(float(auc))})
    with open(path, "w", newline="") as file:
        writer = csv.DictWriter(file, fieldnames=RESULT_FIELDS, extrasaction="ignore")
        writer.writeheader()
        writer.writerows(rows)
