import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crowngen.geometry import (NormalizationTransform, TriangleMesh, augment,
                               farthest_point_sample, knn, merge_meshes,
                               normalize, sample_mesh_surface)


def fps_oracle(points, k, seed_index):
    """Exhaustive greedy reference: each step picks the candidate whose
    min-distance to the chosen set is largest (lowest index on ties)."""
    chosen = [seed_index]
    for _ in range(k - 1):
        best, best_d = None, -1.0
        for c in range(len(points)):
            if c in chosen:
                d = 0.0
            else:
                d = min(np.linalg.norm(points[c] - points[j]) for j in chosen)
            if d > best_d:
                best, best_d = c, d
        chosen.append(best)
    return chosen


class TestFarthestPointSample:
    def test_k_equals_n(self):
        pts = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]])
        idx = farthest_point_sample(pts, 3)
        assert sorted(idx.tolist()) == [0, 1, 2]

    def test_collinear_three(self):
        pts = np.array([[0.0, 0, 0], [5, 0, 0], [10, 0, 0]])
        idx = farthest_point_sample(pts, 2, seed_index=0)
        assert set(idx.tolist()) == {0, 2}

    def test_k_one_returns_seed(self):
        pts = np.random.default_rng(0).normal(size=(10, 3))
        assert farthest_point_sample(pts, 1, seed_index=4).tolist() == [4]

    def test_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(3)
        pts = rng.normal(size=(40, 3))
        idx = farthest_point_sample(pts, 12, seed_index=5)
        assert idx.tolist() == fps_oracle(pts, 12, 5)

    def test_indices_distinct(self):
        rng = np.random.default_rng(1)
        pts = rng.normal(size=(64, 3))
        idx = farthest_point_sample(pts, 64)
        assert len(set(idx.tolist())) == 64

    def test_k_out_of_range(self):
        pts = np.zeros((3, 3))
        with pytest.raises(ValueError):
            farthest_point_sample(pts, 4)


class TestKnn:
    def test_self_query(self):
        pts = np.random.default_rng(2).normal(size=(20, 3))
        idx = knn(pts, pts[7:8], 1)
        assert idx[0, 0] == 7

    def test_hand_distances(self):
        pts = np.array([[0.0, 0, 0], [1, 0, 0], [2, 0, 0]])
        idx = knn(pts, np.array([[0.6, 0.0, 0.0]]), 2)
        assert idx[0].tolist() == [1, 0]

    def test_k_equals_n_sorted(self):
        rng = np.random.default_rng(4)
        pts = rng.normal(size=(15, 3))
        q = rng.normal(size=(5, 3))
        idx = knn(pts, q, 15)
        for row, qi in zip(idx, q):
            d = np.linalg.norm(pts[row] - qi, axis=1)
            assert (np.diff(d) >= 0).all()
            assert sorted(row.tolist()) == list(range(15))

    def test_k_too_large(self):
        pts = np.zeros((3, 3))
        with pytest.raises(ValueError):
            knn(pts, pts, 4)


class TestNormalize:
    def test_already_normalized(self):
        # zero-mean cloud whose coordinate std is exactly 1
        pts = np.array([[1.0, 1, 1], [-1, -1, -1]])
        out, tf = normalize(pts)
        np.testing.assert_allclose(out, pts, atol=1e-15)
        np.testing.assert_allclose(tf.mean, 0, atol=1e-15)
        assert tf.scale == pytest.approx(1.0)

    def test_hand_computed(self):
        # residuals are six values of +-1, so the scalar std is exactly 1
        pts = np.array([[0.0, 0, 0], [2, 2, 2]])
        out, tf = normalize(pts)
        np.testing.assert_allclose(tf.mean, [1, 1, 1])
        assert tf.scale == pytest.approx(1.0)
        np.testing.assert_allclose(out, [[-1, -1, -1], [1, 1, 1]])

    def test_per_axis_means_subtracted(self):
        pts = np.array([[0.0, 0, 10], [2, 2, 12]])
        out, tf = normalize(pts)
        assert tf.scale == pytest.approx(1.0)
        np.testing.assert_allclose(out.mean(axis=0), 0, atol=1e-12)

    def test_degenerate(self):
        pts = np.tile([[1.0, 2, 3]], (5, 1))
        with pytest.raises(ValueError):
            normalize(pts)

    @settings(deadline=None, max_examples=30)
    @given(st.integers(2, 40), st.integers(0, 10_000))
    def test_round_trip(self, n, seed):
        rng = np.random.default_rng(seed)
        pts = rng.normal(size=(n, 3)) * 10 + rng.normal(size=3) * 50
        if np.std(pts) == 0:
            return
        out, tf = normalize(pts)
        np.testing.assert_allclose(out.mean(axis=0), 0, atol=1e-9)
        np.testing.assert_allclose(tf.invert(out), pts, atol=1e-9)

    def test_transform_serialization(self):
        tf = NormalizationTransform(mean=[1.0, 2.0, 3.0], scale=0.5)
        back = NormalizationTransform.from_dict(tf.to_dict())
        np.testing.assert_array_equal(back.mean, tf.mean)
        assert back.scale == tf.scale


class TestAugment:
    def test_identity(self):
        pts = np.random.default_rng(0).normal(size=(6, 3))
        (out,) = augment([pts])
        np.testing.assert_array_equal(out, pts)

    def test_half_turn_involution(self):
        pts = np.random.default_rng(1).normal(size=(8, 3))
        (once,) = augment([pts], rotation_deg=180)
        (twice,) = augment([once], rotation_deg=180)
        np.testing.assert_allclose(twice, pts, atol=1e-9)

    def test_quarter_turn(self):
        (out,) = augment([np.array([[1.0, 0, 0]])], rotation_deg=90)
        np.testing.assert_allclose(out, [[0, 1, 0]], atol=1e-12)

    def test_same_transform_all_clouds(self):
        rng = np.random.default_rng(2)
        a, b = rng.normal(size=(5, 3)), rng.normal(size=(7, 3))
        out_a, out_b = augment([a, b], rotation_deg=33, translation=[1, 2, 3],
                               scale=1.7)
        # cross-cloud distances are scaled uniformly
        d_before = np.linalg.norm(a[0] - b[0])
        d_after = np.linalg.norm(out_a[0] - out_b[0])
        assert d_after == pytest.approx(1.7 * d_before, rel=1e-12)

    @settings(deadline=None, max_examples=25)
    @given(st.floats(0, 360), st.floats(0.1, 5), st.integers(0, 1000))
    def test_distance_ratios_invariant(self, rot, scale, seed):
        rng = np.random.default_rng(seed)
        pts = rng.normal(size=(4, 3)) * 10
        (out,) = augment([pts], rotation_deg=rot,
                         translation=rng.normal(size=3), scale=scale)
        d = lambda q, i, j: np.linalg.norm(q[i] - q[j])
        if d(pts, 2, 3) < 1e-6:
            return
        before = d(pts, 0, 1) / d(pts, 2, 3)
        after = d(out, 0, 1) / d(out, 2, 3)
        assert after == pytest.approx(before, abs=1e-9, rel=1e-9)

    def test_bad_scale(self):
        with pytest.raises(ValueError):
            augment([np.zeros((1, 3))], scale=0.0)


def barycentric(p, a, b, c):
    m = np.column_stack([b - a, c - a])
    uv, *_ = np.linalg.lstsq(m, p - a, rcond=None)
    return uv


class TestSampleMeshSurface:
    def test_points_inside_single_triangle(self):
        tri = TriangleMesh(np.array([[0.0, 0, 0], [4, 0, 0], [0, 4, 0]]),
                           np.array([[0, 1, 2]]))
        pts = sample_mesh_surface(tri, 1000, rng=0)
        for p in pts:
            u, v = barycentric(p, *tri.vertices)
            assert -1e-9 <= u and -1e-9 <= v and u + v <= 1 + 1e-9

    def test_area_proportional(self):
        # areas 4.5 : 0.5, so counts ~ Binomial(10000, 0.9)
        verts = np.array([[0.0, 0, 0], [3, 0, 0], [0, 3, 0],
                          [10, 0, 0], [11, 0, 0], [10, 1, 0]])
        mesh = TriangleMesh(verts, np.array([[0, 1, 2], [3, 4, 5]]))
        pts = sample_mesh_surface(mesh, 10_000, rng=11)
        n_big = int((pts[:, 0] < 5).sum())
        sigma = np.sqrt(10_000 * 0.9 * 0.1)
        assert abs(n_big - 9000) <= 3 * sigma

    def test_n_zero(self):
        tri = TriangleMesh(np.zeros((3, 3)) + np.eye(3), np.array([[0, 1, 2]]))
        assert sample_mesh_surface(tri, 0, rng=0).shape == (0, 3)

    def test_deterministic(self):
        tri = TriangleMesh(np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]]),
                           np.array([[0, 1, 2]]))
        a = sample_mesh_surface(tri, 50, rng=42)
        b = sample_mesh_surface(tri, 50, rng=42)
        np.testing.assert_array_equal(a, b)

    def test_zero_area(self):
        flat = TriangleMesh(np.array([[0.0, 0, 0], [1, 0, 0], [2, 0, 0]]),
                            np.array([[0, 1, 2]]))
        with pytest.raises(ValueError):
            sample_mesh_surface(flat, 10, rng=0)


class TestTriangleMesh:
    def test_invariants(self):
        with pytest.raises(ValueError):
            TriangleMesh(np.zeros((2, 3)), np.array([[0, 1, 2]]))
        with pytest.raises(ValueError):
            TriangleMesh(np.zeros((3, 3)), np.array([[0, 1, 1]]))
        with pytest.raises(ValueError):
            TriangleMesh(np.eye(3), np.array([[0, 1, 2]]), face_labels=[1, 2])

    def test_submesh_and_merge(self):
        verts = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]])
        mesh = TriangleMesh(verts, np.array([[0, 1, 2], [1, 3, 2]]),
                            face_labels=[5, 7])
        sub = mesh.submesh([1])
        assert sub.n_faces == 1 and sub.n_vertices == 3
        assert sub.face_labels.tolist() == [7]
        both = merge_meshes([sub, sub])
        assert both.n_faces == 2 and both.n_vertices == 6
        assert both.faces[1].min() == 3
