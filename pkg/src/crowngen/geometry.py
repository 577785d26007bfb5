"""Point and mesh types plus the geometry kernels used everywhere else:
farthest point sampling, k nearest neighbors, normalization, rigid+scale
augmentation, and area-uniform surface sampling.

Point clouds are plain (n, 3) float64 arrays in millimetres (world frame)
or dimensionless (after normalization).
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from crowngen import kernels

GINGIVA_LABEL = 0


def as_cloud(points, name="points"):
    """Validate and return an (n, 3) float64 point array."""
    arr = np.ascontiguousarray(points, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"{name} must have shape (n, 3), got {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite coordinates")
    return arr


@dataclass
class NormalizationTransform:
    """Similarity transform normalized = (raw - mean) / scale."""

    mean: np.ndarray
    scale: float

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64).reshape(3)
        self.scale = float(self.scale)
        if self.scale <= 0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    def apply(self, points):
        return (as_cloud(points) - self.mean) / self.scale

    def invert(self, points):
        return as_cloud(points) * self.scale + self.mean

    def to_dict(self):
        return {"mean": self.mean.tolist(), "scale": self.scale}

    @classmethod
    def from_dict(cls, d):
        return cls(mean=np.asarray(d["mean"], dtype=np.float64),
                   scale=float(d["scale"]))


@dataclass
class TriangleMesh:
    """Triangle mesh with optional per-face tooth-class labels
    (1..14 teeth, 0 gingiva)."""

    vertices: np.ndarray
    faces: np.ndarray
    face_labels: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        self.vertices = as_cloud(self.vertices, "vertices")
        self.faces = np.ascontiguousarray(self.faces, dtype=np.int64)
        if self.faces.size == 0:
            self.faces = self.faces.reshape(0, 3)
        if self.faces.ndim != 2 or self.faces.shape[1] != 3:
            raise ValueError(f"faces must have shape (m, 3), got {self.faces.shape}")
        if self.faces.size:
            if self.faces.min() < 0 or self.faces.max() >= len(self.vertices):
                raise ValueError("face index out of range")
            a, b, c = self.faces.T
            if ((a == b) | (b == c) | (a == c)).any():
                raise ValueError("degenerate face (repeated vertex index)")
        if self.face_labels is not None:
            self.face_labels = np.ascontiguousarray(self.face_labels, dtype=np.int64)
            if self.face_labels.shape != (len(self.faces),):
                raise ValueError("face_labels must cover every face")

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    def face_corners(self):
        """Corner coordinates, shape (m, 3, 3)."""
        return self.vertices[self.faces]

    def face_areas(self):
        corners = self.face_corners()
        cross = np.cross(corners[:, 1] - corners[:, 0],
                         corners[:, 2] - corners[:, 0])
        return 0.5 * np.linalg.norm(cross, axis=1)

    def face_centroids(self):
        return self.face_corners().mean(axis=1)

    def submesh(self, face_mask):
        """Sub-mesh of the selected faces with reindexed vertices."""
        face_mask = np.asarray(face_mask)
        if face_mask.dtype == bool:
            face_idx = np.flatnonzero(face_mask)
        else:
            face_idx = face_mask.astype(np.int64)
        faces = self.faces[face_idx]
        used = np.unique(faces)
        remap = np.full(self.n_vertices, -1, dtype=np.int64)
        remap[used] = np.arange(len(used))
        labels = None if self.face_labels is None else self.face_labels[face_idx]
        return TriangleMesh(self.vertices[used], remap[faces], labels)


def merge_meshes(meshes):
    """Concatenate meshes, offsetting face indices. Labels are kept only
    when every input carries them."""
    meshes = list(meshes)
    if not meshes:
        raise ValueError("no meshes to merge")
    verts, faces, labels = [], [], []
    offset = 0
    keep_labels = all(m.face_labels is not None for m in meshes)
    for m in meshes:
        verts.append(m.vertices)
        faces.append(m.faces + offset)
        if keep_labels:
            labels.append(m.face_labels)
        offset += m.n_vertices
    return TriangleMesh(
        np.vstack(verts), np.vstack(faces),
        np.concatenate(labels) if keep_labels else None)


def farthest_point_sample(points, k, seed_index=0):
    """k distinct indices: the seed, then greedily the point farthest from
    the chosen set. Deterministic given seed_index."""
    return kernels.farthest_point_indices(points, k, seed_index)


def knn(points, queries, k):
    """Per query row, the k nearest point indices sorted by ascending
    distance; ties break toward the lower index."""
    return kernels.knn(points, queries, k)


def normalize(points):
    """Center on the centroid and divide by the scalar std over all 3n
    coordinate residuals. Returns (normalized, transform)."""
    points = as_cloud(points)
    if len(points) < 2:
        raise ValueError("normalize needs at least 2 points")
    mean = points.mean(axis=0)
    residuals = points - mean
    scale = float(np.sqrt((residuals ** 2).mean()))
    if scale == 0.0:
        raise ValueError("degenerate cloud: zero coordinate spread")
    return residuals / scale, NormalizationTransform(mean=mean, scale=scale)


def rotation_about_z(degrees):
    theta = np.deg2rad(degrees)
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def augment(clouds, rotation_deg=0.0, translation=(0.0, 0.0, 0.0), scale=1.0):
    """Apply one rigid+scale transform to every cloud of a sample so their
    mutual geometry is preserved: p -> scale * R_z(rotation) p + t."""
    scale = float(scale)
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    rot = rotation_about_z(rotation_deg)
    t = np.asarray(translation, dtype=np.float64).reshape(3)
    return [scale * (as_cloud(c) @ rot.T) + t for c in clouds]


def random_augment_params(rng, rotation_range=(0.0, 360.0),
                          translation_sigma=1.0, scale_range=(0.9, 1.1)):
    """Draw augmentation parameters for `augment` from an rng."""
    return {
        "rotation_deg": float(rng.uniform(*rotation_range)),
        "translation": rng.normal(scale=translation_sigma, size=3),
        "scale": float(rng.uniform(*scale_range)),
    }


def sample_mesh_surface(mesh, n, rng):
    """n points drawn area-proportionally across faces, uniformly within
    each face. Deterministic given the rng seed."""
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))
    n = int(n)
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return np.empty((0, 3), dtype=np.float64)
    if mesh.n_faces == 0:
        raise ValueError("mesh has no faces")
    areas = mesh.face_areas()
    total = areas.sum()
    if total <= 0:
        raise ValueError("degenerate mesh: zero total surface area")
    face_idx = rng.choice(mesh.n_faces, size=n, p=areas / total)
    corners = mesh.vertices[mesh.faces[face_idx]]
    u = rng.random(n)
    v = rng.random(n)
    flip = u + v > 1.0
    u[flip] = 1.0 - u[flip]
    v[flip] = 1.0 - v[flip]
    return (corners[:, 0]
            + u[:, None] * (corners[:, 1] - corners[:, 0])
            + v[:, None] * (corners[:, 2] - corners[:, 0]))
