"""Margin lines: closed periodic cubic splines, arc-length-uniform
resampling, ground-truth densification, and extraction of the margin as
the longest boundary loop of an open reconstructed shell.
"""

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline

from crowngen.errors import NoBoundaryError, TopologyError
from crowngen.geometry import as_cloud
from crowngen.ply_io import read_ply_points, write_ply_points

N_MARGIN_SAMPLES = 1000

# Gauss-Legendre nodes/weights on [0, 1] for arc-length quadrature.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(5)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


class ClosedSpline:
    """Periodic cubic interpolating spline through an ordered loop of 3D
    points, uniformly parameterized by control index."""

    def __init__(self, control_points):
        control_points = as_cloud(control_points, "control_points")
        m = len(control_points)
        if m < 3:
            raise ValueError(f"closed spline needs >= 3 control points, got {m}")
        wrapped = np.vstack([control_points, control_points[:1]])
        self.control_points = control_points
        self.period = float(m)
        self._spline = CubicSpline(np.arange(m + 1, dtype=np.float64),
                                   wrapped, axis=0, bc_type="periodic")
        self._deriv = self._spline.derivative()

    def __call__(self, t):
        return self._spline(np.mod(t, self.period))

    def speed(self, t):
        return np.linalg.norm(self._deriv(np.mod(t, self.period)), axis=-1)

    def _segment_lengths(self, t0, t1):
        """Arc length over each [t0_i, t1_i] via 5-point Gauss-Legendre."""
        t0 = np.asarray(t0, dtype=np.float64)
        t1 = np.asarray(t1, dtype=np.float64)
        h = t1 - t0
        nodes = t0[..., None] + h[..., None] * _GL_X
        return (self.speed(nodes) * _GL_W).sum(axis=-1) * h

    def arc_length_table(self, subdiv=16):
        """(parameter knots, cumulative arc length); knots subdivide every
        control interval `subdiv` times."""
        n_seg = int(self.period) * subdiv
        knots = np.linspace(0.0, self.period, n_seg + 1)
        seg = self._segment_lengths(knots[:-1], knots[1:])
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        return knots, cum

    def total_length(self, subdiv=16):
        return float(self.arc_length_table(subdiv)[1][-1])


@dataclass
class MarginLine:
    """Closed margin curve: ordered control polyline plus (optionally) its
    arc-length-uniform point sample."""

    control_points: np.ndarray
    spline: ClosedSpline
    samples: Optional[np.ndarray] = field(default=None)

    @classmethod
    def fit(cls, polyline):
        spline = fit_closed_spline(polyline)
        return cls(control_points=spline.control_points, spline=spline)

    def sample(self, n=N_MARGIN_SAMPLES):
        self.samples = resample_arclength(self.spline, n)
        return self.samples


def fit_closed_spline(polyline):
    """Periodic cubic spline through an ordered closed polyline.

    The closing wrap is implied; an explicit duplicate of the first point
    at the end is dropped. Self-intersecting orderings are not detected.
    """
    pts = as_cloud(polyline, "polyline")
    if len(pts) >= 2 and np.array_equal(pts[0], pts[-1]):
        pts = pts[:-1]
    # drop exact consecutive duplicates, which would create zero-speed spans
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = (pts[1:] != pts[:-1]).any(axis=1)
    pts = pts[keep]
    if len(np.unique(pts, axis=0)) < 4:
        raise ValueError("closed spline fit needs >= 4 distinct points")
    return ClosedSpline(pts)


def resample_arclength(spline, n, subdiv=16, tol=1e-6, max_iter=8):
    """n points at equal arc-length spacing along a closed spline.

    Arc length uses piecewise Gauss-Legendre quadrature on a fine
    parameter table; target positions are inverted with Newton steps to
    the requested relative tolerance. Deterministic.
    """
    if isinstance(spline, MarginLine):
        spline = spline.spline
    n = int(n)
    if n < 3:
        raise ValueError(f"resample needs n >= 3, got {n}")
    knots, cum = spline.arc_length_table(subdiv)
    total = cum[-1]
    targets = np.arange(n) * (total / n)
    seg = np.clip(np.searchsorted(cum, targets, side="right") - 1, 0, len(knots) - 2)
    t0, t1 = knots[seg], knots[seg + 1]
    frac = (targets - cum[seg]) / np.maximum(cum[seg + 1] - cum[seg], 1e-300)
    t = t0 + frac * (t1 - t0)
    for _ in range(max_iter):
        err = cum[seg] + spline._segment_lengths(t0, t) - targets
        if np.abs(err).max() <= tol * total:
            break
        t = np.clip(t - err / np.maximum(spline.speed(t), 1e-300), t0, t1)
    return spline(t)


def densify_ground_truth(shell_points, margin_samples):
    """Concatenate margin samples onto the shell cloud; duplicates are
    retained on purpose (extra density at the margin)."""
    shell_points = as_cloud(shell_points, "shell_points")
    if len(margin_samples) == 0:
        return shell_points.copy()
    return np.vstack([shell_points, as_cloud(margin_samples, "margin_samples")])


def boundary_loops(mesh):
    """All closed boundary loops, as ordered vertex-index arrays.

    A boundary edge is used by exactly one face; loops follow that face's
    winding. Every boundary edge lands in exactly one loop.
    """
    edges = np.concatenate([mesh.faces[:, [0, 1]],
                            mesh.faces[:, [1, 2]],
                            mesh.faces[:, [2, 0]]])
    key = np.sort(edges, axis=1)
    _, inverse, counts = np.unique(key, axis=0, return_inverse=True,
                                   return_counts=True)
    boundary = edges[counts[inverse] == 1]
    if len(boundary) == 0:
        return []
    out_edges = {}
    for u, v in boundary:
        out_edges.setdefault(int(u), []).append(int(v))
    for ends in out_edges.values():
        ends.sort()
    loops = []
    n_left = len(boundary)
    while n_left:
        start = min(u for u, ends in out_edges.items() if ends)
        loop = [start]
        cur = out_edges[start].pop(0)
        n_left -= 1
        while cur != start:
            loop.append(cur)
            ends = out_edges.get(cur)
            if not ends:
                raise TopologyError(
                    f"boundary edges do not close a loop at vertex {cur}")
            cur = ends.pop(0)
            n_left -= 1
        loops.append(np.asarray(loop, dtype=np.int64))
    return loops


def loop_length(mesh, loop):
    pts = mesh.vertices[loop]
    return float(np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1).sum())


def _subdivide_loop(points):
    """Insert edge midpoints; used when a loop has fewer than 4 vertices."""
    mids = 0.5 * (points + np.roll(points, -1, axis=0))
    out = np.empty((2 * len(points), 3), dtype=np.float64)
    out[0::2] = points
    out[1::2] = mids
    return out


def select_margin_loop(mesh):
    """The boundary loop of greatest total length; ties (within 1e-9) go
    to the loop containing the lowest vertex index."""
    loops = boundary_loops(mesh)
    if not loops:
        raise NoBoundaryError("mesh is watertight: no margin to extract")
    lengths = np.array([loop_length(mesh, lp) for lp in loops])
    best = lengths.max()
    candidates = [lp for lp, ln in zip(loops, lengths) if best - ln <= 1e-9]
    return min(candidates, key=lambda lp: lp.min())


def extract_margin_from_mesh(mesh, n=N_MARGIN_SAMPLES):
    """Margin line of an open shell: longest boundary loop, spline-fitted
    in cycle order and resampled to n arc-length-uniform points."""
    loop = select_margin_loop(mesh)
    pts = mesh.vertices[loop]
    while len(pts) < 4:
        pts = _subdivide_loop(pts)
    return resample_arclength(fit_closed_spline(pts), n)


def save_margin_line(ply_path, margin, n_samples=None):
    """Persist a margin line as an ordered point-cloud PLY plus a JSON
    sidecar describing the closed curve."""
    write_ply_points(ply_path, margin.control_points)
    sidecar = {
        "closed": True,
        "n_control": int(len(margin.control_points)),
        "n_samples": int(n_samples if n_samples is not None
                         else (0 if margin.samples is None else len(margin.samples))),
    }
    with open(f"{ply_path}.json", "w") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")


def load_margin_line(ply_path):
    margin = MarginLine.fit(read_ply_points(ply_path))
    try:
        with open(f"{ply_path}.json") as fh:
            sidecar = json.load(fh)
        n = int(sidecar.get("n_samples", 0))
    except FileNotFoundError:
        n = 0
    if n >= 3:
        margin.sample(n)
    return margin
