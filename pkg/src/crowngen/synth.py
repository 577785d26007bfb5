"""Procedural desk-scale crown cases: two labeled arches of tooth caps on
gingiva strips, a truncated-cone die at the prep position, and a ground
truth shell whose rim is exactly the stored margin polyline.

Units are millimetres. The vertical axis is z; the lower arch sits at
z = 0 with teeth pointing up and the opposing arch is mirrored above.
"""

import os
from dataclasses import dataclass

import numpy as np

from crowngen.context import (CaseInput, save_case, write_manifest)
from crowngen.geometry import GINGIVA_LABEL, TriangleMesh, merge_meshes

N_TEETH = 14
SPLIT_FRACTIONS = {"train": 0.72, "val": 0.08, "test": 0.20}


@dataclass
class SynthParams:
    seed: int = 0
    n_teeth: int = N_TEETH
    tooth_radius_mm: tuple = (2.0, 2.6)
    tooth_height_mm: tuple = (5.5, 7.0)
    arch_radius_mm: float = 30.0
    jaw_gap_mm: float = 15.0
    prep_class: int = 5
    margin_height_fraction: float = 0.33
    noise_amplitude_mm: float = 0.04
    case_id: str = "case_0000"

    def __post_init__(self):
        if min(self.tooth_radius_mm) <= 0 or min(self.tooth_height_mm) <= 0:
            raise ValueError("tooth sizes must be positive")
        if self.arch_radius_mm <= 0:
            raise ValueError("arch radius must be positive")
        if not 1 <= self.prep_class <= self.n_teeth:
            raise ValueError(f"prep_class must be 1..{self.n_teeth}")
        if not 0.1 <= self.margin_height_fraction <= 0.8:
            raise ValueError("margin height fraction out of range")


def _loft(rows):
    """Triangulate a stack of closed vertex rings (equal length)."""
    n_seg = len(rows[0])
    verts = np.vstack(rows)
    faces = []
    for k in range(len(rows) - 1):
        a, b = k * n_seg, (k + 1) * n_seg
        for i in range(n_seg):
            j = (i + 1) % n_seg
            faces.append([a + i, a + j, b + i])
            faces.append([a + j, b + j, b + i])
    return verts, np.array(faces, dtype=np.int64)


def _cap_apex(verts, faces, ring_start, n_seg, apex):
    """Close the last ring with a fan to an apex vertex."""
    verts = np.vstack([verts, apex[None, :]])
    apex_idx = len(verts) - 1
    fan = [[ring_start + i, ring_start + (i + 1) % n_seg, apex_idx]
           for i in range(n_seg)]
    return verts, np.vstack([faces, np.array(fan, dtype=np.int64)])


def _tooth_cap(center, radius, height, lobe, phase, up=1.0, n_seg=20,
               n_rings=7, rng=None, noise_mm=0.0):
    """Deformed hemisphere: ring ladder from base to an apex fan."""
    phi = np.linspace(0, 2 * np.pi, n_seg, endpoint=False)
    cross = 1.0 + lobe * np.cos(4 * phi + phase)
    rows = []
    for k in range(n_rings):
        t = k / n_rings
        r = radius * np.cos(t * np.pi / 2) * cross
        if rng is not None and noise_mm > 0:
            r = r + rng.normal(scale=noise_mm, size=n_seg)
        z = center[2] + up * height * np.sin(t * np.pi / 2)
        rows.append(np.column_stack([center[0] + r * np.cos(phi),
                                     center[1] + r * np.sin(phi),
                                     np.full(n_seg, z)]))
    verts, faces = _loft(rows)
    apex = np.array([center[0], center[1], center[2] + up * height])
    verts, faces = _cap_apex(verts, faces, (n_rings - 1) * n_seg, n_seg, apex)
    return TriangleMesh(verts, faces)


def _gingiva_strip(arch_radius, theta, z, width=4.5, up=1.0, n_radial=4):
    """Annular ribbon under the tooth row."""
    radii = np.linspace(arch_radius - width, arch_radius + width, n_radial)
    rows = [np.column_stack([r * np.cos(theta), r * np.sin(theta),
                             np.full(len(theta), z - up * 0.3)])
            for r in radii]
    n = len(theta)
    verts = np.vstack(rows)
    faces = []
    for k in range(n_radial - 1):
        a, b = k * n, (k + 1) * n
        for i in range(n - 1):
            faces.append([a + i, a + i + 1, b + i])
            faces.append([a + i + 1, b + i + 1, b + i])
    return TriangleMesh(verts, np.array(faces, dtype=np.int64))


def _size_factor(cls, n_teeth):
    """Molars at the arch ends are larger, incisors in the middle smaller."""
    mid = (n_teeth + 1) / 2
    return 1.2 - 0.4 * (1 - abs(cls - mid) / (mid - 1))


def _tooth_center(cls, n_teeth, arch_radius, z, angle_offset=0.0):
    theta = np.pi * (cls - 0.5) / n_teeth + angle_offset
    return np.array([arch_radius * np.cos(theta),
                     arch_radius * np.sin(theta), z]), theta


def _margin_ring(center, radius, z, n_seg, wobble_r, wobble_z, phase):
    phi = np.linspace(0, 2 * np.pi, n_seg, endpoint=False)
    r = radius * (1.0 + wobble_r * np.cos(3 * phi + phase))
    z_row = z + wobble_z * np.sin(2 * phi + phase)
    return np.column_stack([center[0] + r * np.cos(phi),
                            center[1] + r * np.sin(phi), z_row])


def _prep_geometry(center, radius, height, margin_fraction, rng, n_seg=40):
    """Die and ground-truth shell sharing the exact margin ring.

    Returns (die mesh, shell mesh, margin polyline)."""
    t_m = margin_fraction
    r_m = radius * np.cos(t_m * np.pi / 2)
    z_m = center[2] + height * np.sin(t_m * np.pi / 2)
    margin = _margin_ring(center, r_m, z_m, n_seg,
                          wobble_r=rng.uniform(0.02, 0.06),
                          wobble_z=rng.uniform(0.1, 0.3),
                          phase=rng.uniform(0, 2 * np.pi))

    phi = np.linspace(0, 2 * np.pi, n_seg, endpoint=False)

    # die: emergence skirt below the margin, stump above, flat-ish top
    base = np.column_stack([center[0] + 1.1 * r_m * np.cos(phi),
                            center[1] + 1.1 * r_m * np.sin(phi),
                            np.full(n_seg, center[2])])
    skirt = [base * (1 - s) + margin * s for s in np.linspace(0, 1, 5)]
    r_stump = 0.6 * r_m
    z_top = center[2] + height * 0.55
    stump_top = np.column_stack([center[0] + r_stump * np.cos(phi),
                                 center[1] + r_stump * np.sin(phi),
                                 np.full(n_seg, z_top)])
    stump = [margin * (1 - s) + stump_top * s
             for s in np.linspace(0, 1, 6)[1:]]
    die_verts, die_faces = _loft(skirt + stump)
    die_verts, die_faces = _cap_apex(
        die_verts, die_faces, (len(skirt) + len(stump) - 1) * n_seg, n_seg,
        np.array([center[0], center[1], z_top + 0.4]))
    die = TriangleMesh(die_verts, die_faces)

    # shell: from the same margin ring, bulge outward then dome to an apex
    n_shell_rows = 9
    rows = [margin]
    for k in range(1, n_shell_rows):
        s = k / n_shell_rows
        bulge = 1.0 + 0.30 * np.sin(np.pi * s)
        r_row = r_m * (1 - s) * bulge
        z_row = z_m + (center[2] + height - z_m) * np.sin(s * np.pi / 2)
        rows.append(np.column_stack([center[0] + r_row * np.cos(phi),
                                     center[1] + r_row * np.sin(phi),
                                     np.full(n_seg, z_row)]))
    shell_verts, shell_faces = _loft(rows)
    shell_verts, shell_faces = _cap_apex(
        shell_verts, shell_faces, (n_shell_rows - 1) * n_seg, n_seg,
        np.array([center[0], center[1], center[2] + height]))
    shell = TriangleMesh(shell_verts, shell_faces)
    return die, shell, margin


def _arch(params, rng, z, up, prep_class=None, angle_offset=0.0):
    """Labeled arch of tooth caps plus gingiva; at prep_class the tooth is
    replaced by the die. Returns (arch mesh, die, shell, margin) where the
    last three are None without a prep."""
    pieces, labels = [], []
    die = shell = margin = None
    r_lo, r_hi = params.tooth_radius_mm
    h_lo, h_hi = params.tooth_height_mm
    for cls in range(1, params.n_teeth + 1):
        center, _ = _tooth_center(cls, params.n_teeth, params.arch_radius_mm,
                                  z, angle_offset)
        factor = _size_factor(cls, params.n_teeth)
        radius = rng.uniform(r_lo, r_hi) * factor
        height = rng.uniform(h_lo, h_hi)
        lobe = rng.uniform(0.03, 0.10)
        phase = rng.uniform(0, 2 * np.pi)
        if cls == prep_class:
            die, shell, margin = _prep_geometry(
                center, radius, height, params.margin_height_fraction, rng)
            tooth = die
        else:
            tooth = _tooth_cap(center, radius, height, lobe, phase, up=up,
                               rng=rng, noise_mm=params.noise_amplitude_mm)
        pieces.append(tooth)
        labels.append(np.full(tooth.n_faces, cls, dtype=np.int64))

    theta = np.linspace(np.pi * 0.02, np.pi * 0.98, 8 * params.n_teeth)
    gingiva = _gingiva_strip(params.arch_radius_mm, theta, z, up=up)
    pieces.append(gingiva)
    labels.append(np.full(gingiva.n_faces, GINGIVA_LABEL, dtype=np.int64))

    merged = merge_meshes(pieces)
    merged.face_labels = np.concatenate(labels)
    return merged, die, shell, margin


def generate_case(params):
    """One synthetic case; byte-identical for identical params."""
    rng = np.random.default_rng(params.seed)
    prep_arch, die, shell, margin = _arch(params, rng, z=0.0, up=1.0,
                                          prep_class=params.prep_class)
    opposing_arch, _, _, _ = _arch(params, rng, z=params.jaw_gap_mm, up=-1.0,
                                   angle_offset=0.5 * np.pi / params.n_teeth)
    return CaseInput(
        prep_arch=prep_arch,
        opposing_arch=opposing_arch,
        die=die,
        gt_shell=shell,
        gt_margin_polyline=margin,
        prep_class=params.prep_class,
        case_id=params.case_id,
    )


def split_counts(n):
    """72/8/20% split by largest remainder. Matches 125 -> 90/10/25."""
    if n < 3:
        raise ValueError(f"need at least 3 cases, got {n}")
    names = list(SPLIT_FRACTIONS)
    quotas = {s: n * f for s, f in SPLIT_FRACTIONS.items()}
    counts = {s: int(np.floor(quotas[s])) for s in names}
    leftover = n - sum(counts.values())
    by_fraction = sorted(names, key=lambda s: quotas[s] - counts[s],
                         reverse=True)
    for s in by_fraction[:leftover]:
        counts[s] += 1
    return counts["train"], counts["val"], counts["test"]


def generate_benchmark(n_cases, seed, out_dir):
    """n synthetic cases written in the case-directory layout, plus a
    manifest with split tags. Deterministic given the seed."""
    n_train, n_val, _ = split_counts(n_cases)
    rng = np.random.default_rng(seed)
    entries = []
    for i in range(n_cases):
        params = SynthParams(
            seed=int(rng.integers(0, 2 ** 63 - 1)),
            prep_class=int(rng.integers(2, N_TEETH)),
            arch_radius_mm=float(rng.uniform(28.0, 32.0)),
            margin_height_fraction=float(rng.uniform(0.28, 0.40)),
            case_id=f"case_{i:04d}",
        )
        case = generate_case(params)
        save_case(case, os.path.join(out_dir, case.case_id))
        split = ("train" if i < n_train
                 else "val" if i < n_train + n_val else "test")
        entries.append({"case_id": case.case_id, "split": split})
    manifest_path = os.path.join(out_dir, "manifest.json")
    write_manifest(manifest_path, entries)
    return entries
