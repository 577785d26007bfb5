import numpy as np
import pytest

from crowngen.geometry import TriangleMesh
from crowngen.ply_io import (read_ply, read_ply_mesh, read_ply_points,
                             write_ply_mesh, write_ply_points)


def test_points_round_trip(tmp_path):
    pts = np.random.default_rng(0).normal(size=(17, 3)) * 12.345
    path = tmp_path / "cloud.ply"
    write_ply_points(path, pts)
    back = read_ply_points(path)
    np.testing.assert_array_equal(back, pts)


def test_mesh_round_trip_with_labels(tmp_path):
    verts = np.random.default_rng(1).normal(size=(5, 3))
    faces = np.array([[0, 1, 2], [2, 3, 4]])
    mesh = TriangleMesh(verts, faces, face_labels=[3, 0])
    path = tmp_path / "mesh.ply"
    write_ply_mesh(path, mesh)
    back = read_ply_mesh(path)
    np.testing.assert_array_equal(back.vertices, verts)
    np.testing.assert_array_equal(back.faces, faces)
    assert back.face_labels.tolist() == [3, 0]


def test_mesh_without_labels(tmp_path):
    mesh = TriangleMesh(np.eye(3), np.array([[0, 1, 2]]))
    path = tmp_path / "plain.ply"
    write_ply_mesh(path, mesh)
    back = read_ply_mesh(path)
    assert back.face_labels is None


def test_write_is_byte_stable(tmp_path):
    pts = np.random.default_rng(2).normal(size=(9, 3))
    a, b = tmp_path / "a.ply", tmp_path / "b.ply"
    write_ply_points(a, pts)
    write_ply_points(b, pts)
    assert a.read_bytes() == b.read_bytes()


def test_read_dispatch(tmp_path):
    pts = np.zeros((4, 3))
    p = tmp_path / "pts.ply"
    write_ply_points(p, pts)
    assert isinstance(read_ply(p), np.ndarray)
    with pytest.raises(ValueError):
        read_ply_mesh(p)
    mesh = TriangleMesh(np.eye(3), np.array([[0, 1, 2]]))
    m = tmp_path / "m.ply"
    write_ply_mesh(m, mesh)
    # points-only read of a mesh file returns its vertices
    np.testing.assert_array_equal(read_ply_points(m), mesh.vertices)


def test_rejects_non_ply(tmp_path):
    bad = tmp_path / "bad.ply"
    bad.write_text("not a ply\n")
    with pytest.raises(ValueError):
        read_ply(bad)
