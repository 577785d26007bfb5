"""ASCII PLY reading and writing for point clouds and triangle meshes.

Per-face tooth-class labels are stored as an integer `class_id` property
on the face element. Floats are written with shortest round-trip
formatting, so identical geometry produces identical bytes.
"""

import numpy as np

from crowngen.geometry import TriangleMesh, as_cloud


def _fmt(x):
    return repr(float(x))


def write_ply_points(path, points):
    points = as_cloud(points)
    lines = [
        "ply",
        "format ascii 1.0",
        f"element vertex {len(points)}",
        "property double x",
        "property double y",
        "property double z",
        "end_header",
    ]
    for p in points:
        lines.append(f"{_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_ply_mesh(path, mesh):
    lines = [
        "ply",
        "format ascii 1.0",
        f"element vertex {mesh.n_vertices}",
        "property double x",
        "property double y",
        "property double z",
        f"element face {mesh.n_faces}",
        "property list uchar int vertex_indices",
    ]
    if mesh.face_labels is not None:
        lines.append("property int class_id")
    lines.append("end_header")
    for p in mesh.vertices:
        lines.append(f"{_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])}")
    for i, f in enumerate(mesh.faces):
        row = f"3 {f[0]} {f[1]} {f[2]}"
        if mesh.face_labels is not None:
            row += f" {mesh.face_labels[i]}"
        lines.append(row)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_header(fh):
    if fh.readline().strip() != "ply":
        raise ValueError("not a PLY file")
    if not fh.readline().strip().startswith("format ascii"):
        raise ValueError("only ASCII PLY is supported")
    elements = []  # (name, count, [property names])
    while True:
        line = fh.readline()
        if not line:
            raise ValueError("unexpected end of PLY header")
        tokens = line.split()
        if not tokens or tokens[0] == "comment":
            continue
        if tokens[0] == "element":
            elements.append((tokens[1], int(tokens[2]), []))
        elif tokens[0] == "property":
            if tokens[1] == "list":
                elements[-1][2].append(("list", tokens[-1]))
            else:
                elements[-1][2].append(("scalar", tokens[-1]))
        elif tokens[0] == "end_header":
            return elements


def read_ply(path):
    """Read an ASCII PLY. Returns an (n, 3) array when the file has no
    face element, otherwise a TriangleMesh."""
    with open(path) as fh:
        elements = _parse_header(fh)
        vertices = None
        faces = None
        labels = None
        for name, count, props in elements:
            if name == "vertex":
                names = [p[1] for p in props]
                xi, yi, zi = names.index("x"), names.index("y"), names.index("z")
                data = np.empty((count, 3), dtype=np.float64)
                for i in range(count):
                    row = fh.readline().split()
                    data[i] = float(row[xi]), float(row[yi]), float(row[zi])
                vertices = data
            elif name == "face":
                has_label = ("scalar", "class_id") in props
                faces = np.empty((count, 3), dtype=np.int64)
                labels = np.empty(count, dtype=np.int64) if has_label else None
                for i in range(count):
                    row = fh.readline().split()
                    k = int(row[0])
                    if k != 3:
                        raise ValueError(f"face {i} is not a triangle ({k} vertices)")
                    faces[i] = int(row[1]), int(row[2]), int(row[3])
                    if has_label:
                        labels[i] = int(row[1 + k])
            else:
                for _ in range(count):
                    fh.readline()
    if vertices is None:
        raise ValueError("PLY file has no vertex element")
    if faces is None:
        return vertices
    return TriangleMesh(vertices, faces, labels)


def read_ply_points(path):
    out = read_ply(path)
    if isinstance(out, TriangleMesh):
        return out.vertices
    return out


def read_ply_mesh(path):
    out = read_ply(path)
    if not isinstance(out, TriangleMesh):
        raise ValueError(f"{path} has no face element")
    return out
