"""Case inputs, conditioning-context construction, and fixed-budget
training-sample assembly.

A case directory holds prep_arch.ply, opposing_arch.ply, die.ply,
gt_shell.ply, gt_margin.ply and meta.json; a dataset is a directory of
cases plus a manifest.json of {case_id, split} records.
"""

import json
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from crowngen.geometry import (GINGIVA_LABEL, NormalizationTransform,
                               TriangleMesh, merge_meshes, normalize,
                               sample_mesh_surface)
from crowngen.kernels import nearest_squared
from crowngen.margin import MarginLine, densify_ground_truth
from crowngen.ply_io import (read_ply_mesh, read_ply_points, write_ply_mesh,
                             write_ply_points)

N_TOOTH_CLASSES = 14


@dataclass
class CaseInput:
    """One crown case: labeled arches, the die scan, and ground truth."""

    prep_arch: TriangleMesh
    opposing_arch: TriangleMesh
    die: TriangleMesh
    gt_shell: TriangleMesh
    gt_margin_polyline: np.ndarray
    prep_class: int
    case_id: str = "case"

    def __post_init__(self):
        if not 1 <= self.prep_class <= N_TOOTH_CLASSES:
            raise ValueError(f"prep_class must be 1..14, got {self.prep_class}")
        for name in ("prep_arch", "opposing_arch"):
            if getattr(self, name).face_labels is None:
                raise ValueError(f"{name} must carry face labels")


@dataclass
class SampleBudgets:
    """Point budgets for one training sample."""

    context: int = 10240
    margin: int = 1000
    shell: int = 1568
    die: int = 1024


@dataclass
class TrainingSample:
    """Normalized (input, target) cloud pair sharing one transform, so
    predictions can be mapped back to world millimetres."""

    input_cloud: np.ndarray
    target_cloud: np.ndarray
    transform: NormalizationTransform
    case_id: str
    with_margin: bool = True


def label_centroids(mesh):
    """class id -> mean of that label's face centroids."""
    cents = mesh.face_centroids()
    out = {}
    for cls in np.unique(mesh.face_labels):
        out[int(cls)] = cents[mesh.face_labels == cls].mean(axis=0)
    return out


def _faces_near_teeth(mesh, gingiva_mask, tooth_vertex_ids, band_mm):
    """Gingiva faces with any vertex strictly within band_mm of a vertex
    of the selected teeth."""
    if band_mm <= 0 or not gingiva_mask.any() or len(tooth_vertex_ids) == 0:
        return np.zeros(mesh.n_faces, dtype=bool)
    d2, _ = nearest_squared(mesh.vertices, mesh.vertices[tooth_vertex_ids])
    close_vertex = d2 < band_mm * band_mm
    return gingiva_mask & close_vertex[mesh.faces].any(axis=1)


def build_context(case, gingiva_band_mm=2.0):
    """Conditioning context mesh: the up-to-two neighbor teeth on the prep
    arch, the three opposing teeth nearest the prep centroid, and gingiva
    faces within gingiva_band_mm of those selections."""
    prep = case.prep_arch
    opposing = case.opposing_arch
    if opposing.n_faces == 0:
        raise ValueError("opposing arch is empty")
    prep_labels = set(np.unique(prep.face_labels).tolist())
    if case.prep_class not in prep_labels:
        raise ValueError(f"prep class {case.prep_class} absent from prep arch labels")

    neighbor_classes = [c for c in (case.prep_class - 1, case.prep_class + 1)
                        if c in prep_labels and c != GINGIVA_LABEL]
    if not neighbor_classes:
        raise ValueError("no neighbor tooth present on the prep arch")

    prep_centroid = label_centroids(prep)[case.prep_class]
    opp_cents = label_centroids(opposing)
    opp_classes = sorted(
        (c for c in opp_cents if c != GINGIVA_LABEL),
        key=lambda c: (float(np.linalg.norm(opp_cents[c] - prep_centroid)), c))
    opp_selected = opp_classes[:3]

    pieces = []
    for mesh, classes in ((prep, neighbor_classes), (opposing, opp_selected)):
        tooth_mask = np.isin(mesh.face_labels, classes)
        tooth_verts = np.unique(mesh.faces[tooth_mask])
        gingiva_mask = _faces_near_teeth(
            mesh, mesh.face_labels == GINGIVA_LABEL, tooth_verts,
            gingiva_band_mm)
        pieces.append(mesh.submesh(tooth_mask | gingiva_mask))
    return merge_meshes(pieces)


def assemble_sample(case, context, budgets=None, seed=0, with_margin=True):
    """Fixed-budget training sample: sampled context + margin + die as the
    input set, sampled shell densified with the margin as the target.
    Everything is normalized with the input-set transform. Deterministic
    given the seed."""
    budgets = budgets or SampleBudgets()
    rng = np.random.default_rng(seed)
    context_pts = sample_mesh_surface(context, budgets.context, rng)
    die_pts = sample_mesh_surface(case.die, budgets.die, rng)
    shell_pts = sample_mesh_surface(case.gt_shell, budgets.shell, rng)
    if with_margin:
        margin_pts = MarginLine.fit(case.gt_margin_polyline).sample(budgets.margin)
        input_cloud = np.vstack([context_pts, margin_pts, die_pts])
        target_cloud = densify_ground_truth(shell_pts, margin_pts)
    else:
        input_cloud = np.vstack([context_pts, die_pts])
        target_cloud = shell_pts
    input_norm, transform = normalize(input_cloud)
    return TrainingSample(
        input_cloud=input_norm,
        target_cloud=transform.apply(target_cloud),
        transform=transform,
        case_id=case.case_id,
        with_margin=with_margin,
    )


def baseline_sample(case, context, budgets=None, seed=0):
    """Ablation arm: margin points omitted from both input and target.
    Shares the sampling path (and rng stream order) with assemble_sample."""
    return assemble_sample(case, context, budgets=budgets, seed=seed,
                           with_margin=False)


# --- case and sample persistence -------------------------------------------

def save_case(case, directory):
    os.makedirs(directory, exist_ok=True)
    write_ply_mesh(os.path.join(directory, "prep_arch.ply"), case.prep_arch)
    write_ply_mesh(os.path.join(directory, "opposing_arch.ply"), case.opposing_arch)
    write_ply_mesh(os.path.join(directory, "die.ply"), case.die)
    write_ply_mesh(os.path.join(directory, "gt_shell.ply"), case.gt_shell)
    write_ply_points(os.path.join(directory, "gt_margin.ply"),
                     case.gt_margin_polyline)
    with open(os.path.join(directory, "meta.json"), "w") as fh:
        json.dump({"case_id": case.case_id, "prep_class": case.prep_class},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_case(directory):
    with open(os.path.join(directory, "meta.json")) as fh:
        meta = json.load(fh)
    return CaseInput(
        prep_arch=read_ply_mesh(os.path.join(directory, "prep_arch.ply")),
        opposing_arch=read_ply_mesh(os.path.join(directory, "opposing_arch.ply")),
        die=read_ply_mesh(os.path.join(directory, "die.ply")),
        gt_shell=read_ply_mesh(os.path.join(directory, "gt_shell.ply")),
        gt_margin_polyline=read_ply_points(os.path.join(directory, "gt_margin.ply")),
        prep_class=int(meta["prep_class"]),
        case_id=str(meta["case_id"]),
    )


def save_sample(directory, sample):
    os.makedirs(directory, exist_ok=True)
    write_ply_points(os.path.join(directory, "input.ply"), sample.input_cloud)
    write_ply_points(os.path.join(directory, "target.ply"), sample.target_cloud)
    with open(os.path.join(directory, "sample.json"), "w") as fh:
        json.dump({"case_id": sample.case_id,
                   "with_margin": sample.with_margin,
                   "transform": sample.transform.to_dict()},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_sample(directory):
    with open(os.path.join(directory, "sample.json")) as fh:
        meta = json.load(fh)
    return TrainingSample(
        input_cloud=read_ply_points(os.path.join(directory, "input.ply")),
        target_cloud=read_ply_points(os.path.join(directory, "target.ply")),
        transform=NormalizationTransform.from_dict(meta["transform"]),
        case_id=str(meta["case_id"]),
        with_margin=bool(meta["with_margin"]),
    )


def write_manifest(path, entries):
    with open(path, "w") as fh:
        json.dump(list(entries), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(path):
    with open(path) as fh:
        return json.load(fh)


def manifest_case_ids(manifest, split=None):
    return [e["case_id"] for e in manifest
            if split is None or e["split"] == split]
