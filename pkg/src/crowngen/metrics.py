"""Chamfer distances and margin-line distance statistics.

CD-L1 is the symmetric mean nearest-neighbor Euclidean distance between
two point sets; CD-L2 replaces each distance with its square. Chamfer
values are reported in the (dimensionless) normalized frame; margin
statistics are computed in world millimetres and reported in micrometres.
"""

from dataclasses import dataclass

import numpy as np

from crowngen.geometry import as_cloud
from crowngen.kernels import nearest_squared

MM_TO_UM = 1000.0


def nearest_distances(queries, points):
    """Euclidean distance from each query to its nearest point."""
    d2, _ = nearest_squared(queries, points)
    return np.sqrt(d2)


def chamfer(p, g, variant="l1"):
    """Symmetric Chamfer distance between point sets.

    variant "l1": mean nearest distance P->G plus mean nearest distance
    G->P. variant "l2": same with squared distances.
    """
    p = as_cloud(p, "p")
    g = as_cloud(g, "g")
    if len(p) == 0 or len(g) == 0:
        raise ValueError("chamfer requires non-empty clouds")
    d2_pg, _ = nearest_squared(p, g)
    d2_gp, _ = nearest_squared(g, p)
    if variant == "l1":
        return float(np.sqrt(d2_pg).mean() + np.sqrt(d2_gp).mean())
    if variant == "l2":
        return float(d2_pg.mean() + d2_gp.mean())
    raise ValueError(f"unknown chamfer variant {variant!r}")


@dataclass
class MarginReport:
    """Nearest-neighbor distance statistics of an extracted margin line
    against the ground-truth margin, in micrometres."""

    max_um: float
    min_um: float
    avg_um: float
    std_um: float

    def __post_init__(self):
        if not self.min_um <= self.avg_um <= self.max_um:
            raise ValueError("margin stats must satisfy min <= avg <= max")
        if self.std_um < 0:
            raise ValueError("std must be non-negative")

    def to_dict(self):
        return {"max_um": self.max_um, "min_um": self.min_um,
                "avg_um": self.avg_um, "std_um": self.std_um}

    @classmethod
    def from_dict(cls, d):
        return cls(max_um=float(d["max_um"]), min_um=float(d["min_um"]),
                   avg_um=float(d["avg_um"]), std_um=float(d["std_um"]))


def margin_distance_stats(pred_margin, gt_margin, unit_scale=MM_TO_UM,
                          symmetric=False):
    """Distance statistics of the predicted margin against ground truth.

    One-sided by default (each predicted point to its nearest ground-truth
    point; the GT spline is the reference curve). With symmetric=True the
    statistics pool both directions. Inputs are in millimetres; the
    report is scaled by unit_scale (default mm -> um).
    """
    pred_margin = as_cloud(pred_margin, "pred_margin")
    gt_margin = as_cloud(gt_margin, "gt_margin")
    if len(pred_margin) == 0 or len(gt_margin) == 0:
        raise ValueError("margin stats require non-empty clouds")
    dists = nearest_distances(pred_margin, gt_margin)
    if symmetric:
        dists = np.concatenate([dists, nearest_distances(gt_margin, pred_margin)])
    dists = dists * unit_scale
    return MarginReport(
        max_um=float(dists.max()),
        min_um=float(dists.min()),
        avg_um=float(dists.mean()),
        std_um=float(dists.std()),
    )


def case_report(case_id, cd_l1, cd_l2, margin=None):
    """Per-case metric record, the unit the report stage aggregates."""
    rec = {"case_id": case_id, "cd_l1": cd_l1, "cd_l2": cd_l2}
    if margin is not None:
        rec["margin"] = margin.to_dict() if isinstance(margin, MarginReport) else margin
    return rec


def aggregate_margin_reports(reports):
    """Aggregate per-case margin reports.

    Default view: each statistic averaged across cases (per-case-then-
    mean). A global view over the pooled extremes is emitted alongside.
    """
    if not reports:
        raise ValueError("no reports to aggregate")
    arr = np.array([[r.max_um, r.min_um, r.avg_um, r.std_um] for r in reports])
    mean = arr.mean(axis=0)
    return {
        "per_case_mean": {"max_um": float(mean[0]), "min_um": float(mean[1]),
                          "avg_um": float(mean[2]), "std_um": float(mean[3])},
        "global": {"max_um": float(arr[:, 0].max()), "min_um": float(arr[:, 1].min())},
        "n_cases": len(reports),
    }
