"""Collocation point sets over cube, sphere, or user-supplied geometries.

A point set holds exactly ``m * n * p`` points addressed by the same C-order
flattening as the tensors they discretize.  Each point is classified as
interior (where the PDE is enforced) or boundary (where the boundary condition
is enforced); boundary points may carry an outward unit normal.

Point file format (whitespace separated, ``#`` starts a comment line)::

    M N P
    x y z kind [nx ny nz]      # one line per point, kind is I or B

"""

from __future__ import annotations

import math
from typing import NamedTuple, Optional

import numpy as np
from scipy.spatial import cKDTree

from .tensor_core import Shape3, as_shape

INTERIOR = "I"
BOUNDARY = "B"

# Two points closer than this are treated as coincident (kernel tensor singular).
MIN_SEPARATION = 1e-12


class Point(NamedTuple):
    x: float
    y: float
    z: float
    kind: str
    normal: Optional[tuple]


class PointSet:
    """Immutable set of ``shape.total`` classified collocation points.

    Parameters
    ----------
    shape : 3-sequence
        Tensor extents (m, n, p); the i-th point corresponds to the i-th
        flattened tensor index.
    coords : (total, 3) ndarray
        Point coordinates.
    is_boundary : (total,) bool ndarray
        Per-point classification.
    normals : (total, 3) ndarray or None
        Outward unit normals; rows for points without a normal are NaN.
    """

    def __init__(self, shape, coords, is_boundary, normals=None):
        self.shape = as_shape(shape)
        coords = np.ascontiguousarray(coords, dtype=np.float64)
        if coords.shape != (self.shape.total, 3):
            raise ValueError(f"coords shape {coords.shape} does not match "
                             f"{self.shape.total} points")
        if not np.isfinite(coords).all():
            raise ValueError("point coordinates contain non-finite values")
        is_boundary = np.asarray(is_boundary, dtype=bool)
        if is_boundary.shape != (self.shape.total,):
            raise ValueError("is_boundary length does not match point count")
        if normals is None:
            normals = np.full((self.shape.total, 3), np.nan)
        normals = np.ascontiguousarray(normals, dtype=np.float64)
        if normals.shape != (self.shape.total, 3):
            raise ValueError("normals shape does not match point count")
        present = np.isfinite(normals).all(axis=1)
        lengths = np.linalg.norm(normals[present], axis=1)
        if present.any() and np.abs(lengths - 1.0).max() > 1e-12:
            raise ValueError("boundary normals must have unit length")
        self.coords = coords
        self.is_boundary = is_boundary
        self.normals = normals
        self.has_normal = present
        self._check_separation()

    def _check_separation(self):
        n = len(self.coords)
        if n < 2:
            return
        tree = cKDTree(self.coords)
        dist, idx = tree.query(self.coords, k=2)
        nearest = dist[:, 1]
        bad = np.argmin(nearest)
        if nearest[bad] <= MIN_SEPARATION:
            raise ValueError(f"points {bad} and {idx[bad, 1]} coincide "
                             f"(distance {nearest[bad]:.3e})")

    @property
    def total(self) -> int:
        return self.shape.total

    @property
    def counts(self):
        nb = int(self.is_boundary.sum())
        return (self.total - nb, nb)

    @property
    def interior_indices(self) -> np.ndarray:
        return np.flatnonzero(~self.is_boundary)

    @property
    def boundary_indices(self) -> np.ndarray:
        return np.flatnonzero(self.is_boundary)

    def __len__(self) -> int:
        return self.total

    def __getitem__(self, i: int) -> Point:
        x, y, z = self.coords[i]
        kind = BOUNDARY if self.is_boundary[i] else INTERIOR
        normal = tuple(self.normals[i]) if self.has_normal[i] else None
        return Point(float(x), float(y), float(z), kind, normal)


def radical_inverse(index: int, base: int) -> float:
    """Van der Corput radical inverse of ``index >= 1`` in the given base."""
    inv = 0.0
    f = 1.0 / base
    i = index
    while i > 0:
        inv += f * (i % base)
        i //= base
        f /= base
    return inv


def halton_points(count: int, bases=(2, 3, 5), start: int = 1) -> np.ndarray:
    """First ``count`` Halton points in [0,1)^3, starting at sequence index 1."""
    pts = np.empty((count, 3))
    for d, base in enumerate(bases):
        pts[:, d] = [radical_inverse(i, base) for i in range(start, start + count)]
    return pts


def _cube_face_normal(point, tol=0.0):
    """Outward normal of the unit cube at a face/edge/corner point (normalized
    sum of the touched faces' outward normals)."""
    n = np.zeros(3)
    for d in range(3):
        if point[d] <= tol:
            n[d] -= 1.0
        elif point[d] >= 1.0 - tol:
            n[d] += 1.0
    length = np.linalg.norm(n)
    return n / length if length > 0 else n


def _uniform_cube(shape: Shape3):
    m, n, p = shape
    xs = np.linspace(0.0, 1.0, m)
    ys = np.linspace(0.0, 1.0, n)
    zs = np.linspace(0.0, 1.0, p)
    coords = np.stack(np.meshgrid(xs, ys, zs, indexing="ij"), axis=-1).reshape(-1, 3)
    on_face = (coords == 0.0) | (coords == 1.0)
    is_boundary = on_face.any(axis=1)
    return coords, is_boundary


def uniform_cube_boundary_count(shape) -> int:
    """Boundary-point count of the uniform grid with the same extents."""
    m, n, p = as_shape(shape)
    return m * n * p - max(m - 2, 0) * max(n - 2, 0) * max(p - 2, 0)


def _project_nearest_to_cube_faces(coords, n_boundary):
    """Project the ``n_boundary`` points nearest the cube surface onto their
    nearest face; returns (coords, is_boundary, normals)."""
    face_dist = np.minimum(coords, 1.0 - coords)   # distance to each face pair
    dist = face_dist.min(axis=1)
    order = np.argsort(dist, kind="stable")
    chosen = order[:n_boundary]
    coords = coords.copy()
    total = len(coords)
    is_boundary = np.zeros(total, dtype=bool)
    normals = np.full((total, 3), np.nan)
    for i in chosen:
        axis = int(np.argmin(face_dist[i]))
        target = 0.0 if coords[i, axis] <= 0.5 else 1.0
        coords[i, axis] = target
        is_boundary[i] = True
        normals[i] = 0.0
        normals[i, axis] = -1.0 if target == 0.0 else 1.0
    return coords, is_boundary, normals


def gen_cube(shape, dist: str = "uniform", seed: int = 0) -> PointSet:
    """Generate an M x N x P collocation set on the unit cube [0,1]^3.

    ``dist`` is one of ``uniform`` (tensor grid; points on a face are
    boundary), ``random`` (seeded uniform draws) or ``halton`` (bases 2, 3, 5).
    For the non-grid distributions the points nearest the surface are
    projected onto it so that the boundary count matches the uniform grid of
    the same extents.
    """
    shape = as_shape(shape)
    if min(shape) < 2:
        raise ValueError(f"cube generation needs every extent >= 2, got {tuple(shape)}")
    dist = dist.lower()
    if dist == "uniform":
        coords, is_boundary = _uniform_cube(shape)
        normals = np.full((shape.total, 3), np.nan)
        for i in np.flatnonzero(is_boundary):
            normals[i] = _cube_face_normal(coords[i])
        return PointSet(shape, coords, is_boundary, normals)
    if dist == "random":
        rng = np.random.default_rng(seed)
        coords = rng.random((shape.total, 3))
    elif dist == "halton":
        coords = halton_points(shape.total)
    else:
        raise ValueError(f"unknown distribution {dist!r}")
    n_b = uniform_cube_boundary_count(shape)
    coords, is_boundary, normals = _project_nearest_to_cube_faces(coords, n_b)
    return PointSet(shape, coords, is_boundary, normals)


def fibonacci_sphere(count: int) -> np.ndarray:
    """Near-uniform lattice of ``count`` points on the unit sphere."""
    i = np.arange(count, dtype=np.float64)
    golden = (1.0 + math.sqrt(5.0)) / 2.0
    z = 1.0 - (2.0 * i + 1.0) / count
    theta = 2.0 * math.pi * i / golden
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return np.stack([r * np.cos(theta), r * np.sin(theta), z], axis=-1)


def _sphere_uniform_interior(shape: Shape3) -> np.ndarray:
    """Bounding-cube grid points strictly inside the unit ball."""
    m, n, p = shape
    xs = np.linspace(-1.0, 1.0, m)
    ys = np.linspace(-1.0, 1.0, n)
    zs = np.linspace(-1.0, 1.0, p)
    grid = np.stack(np.meshgrid(xs, ys, zs, indexing="ij"), axis=-1).reshape(-1, 3)
    radii = np.linalg.norm(grid, axis=1)
    return grid[radii < 1.0 - 1e-12]


def gen_sphere(shape, dist: str = "uniform", seed: int = 0) -> PointSet:
    """Generate an M x N x P collocation set on the closed unit ball.

    Interior points lie strictly inside the ball; boundary points lie on the
    unit sphere with normal equal to the position vector.  The flattened index
    grid is filled interior-first, then boundary.  ``uniform`` filters a
    bounding-cube grid to the ball and pads with a Fibonacci sphere lattice;
    ``random``/``halton`` keep the same boundary count and project their
    largest-radius points onto the sphere.
    """
    shape = as_shape(shape)
    if shape.total < 8:
        raise ValueError(f"sphere generation needs at least 8 points, got {shape.total}")
    dist = dist.lower()
    if dist == "uniform":
        interior = _sphere_uniform_interior(shape)
        if len(interior) > shape.total:
            interior = interior[: shape.total]
        n_b = shape.total - len(interior)
        boundary = fibonacci_sphere(n_b) if n_b else np.empty((0, 3))
    elif dist in ("random", "halton"):
        n_b = shape.total - len(_sphere_uniform_interior(shape))
        n_b = max(n_b, 0)
        if dist == "random":
            rng = np.random.default_rng(seed)
            pts = np.empty((0, 3))
            while len(pts) < shape.total:
                cand = rng.random((2 * shape.total, 3)) * 2.0 - 1.0
                cand = cand[np.linalg.norm(cand, axis=1) < 1.0 - 1e-12]
                pts = np.concatenate([pts, cand])
            pts = pts[: shape.total]
        else:
            pts = np.empty((0, 3))
            start = 1
            while len(pts) < shape.total:
                cand = halton_points(2 * shape.total, start=start) * 2.0 - 1.0
                start += 2 * shape.total
                cand = cand[np.linalg.norm(cand, axis=1) < 1.0 - 1e-12]
                pts = np.concatenate([pts, cand])
            pts = pts[: shape.total]
        radii = np.linalg.norm(pts, axis=1)
        order = np.argsort(-radii, kind="stable")
        chosen = order[:n_b]
        mask = np.zeros(shape.total, dtype=bool)
        mask[chosen] = True
        interior = pts[~mask]
        boundary = pts[mask] / radii[mask][:, None]
    else:
        raise ValueError(f"unknown distribution {dist!r}")

    coords = np.concatenate([interior, boundary])
    is_boundary = np.zeros(shape.total, dtype=bool)
    is_boundary[len(interior):] = True
    normals = np.full((shape.total, 3), np.nan)
    normals[len(interior):] = boundary
    return PointSet(shape, coords, is_boundary, normals)


def save_points(points: PointSet, path) -> None:
    """Write a point set in the text format read by :func:`load_points`."""
    with open(path, "w") as fh:
        m, n, p = points.shape
        fh.write(f"{m} {n} {p}\n")
        for i in range(points.total):
            x, y, z = (float(v) for v in points.coords[i])
            kind = BOUNDARY if points.is_boundary[i] else INTERIOR
            line = f"{x!r} {y!r} {z!r} {kind}"
            if points.has_normal[i]:
                nx, ny, nz = (float(v) for v in points.normals[i])
                line += f" {nx!r} {ny!r} {nz!r}"
            fh.write(line + "\n")


def load_points(path) -> PointSet:
    """Read a point set from the documented text format.

    Raises ``ValueError`` with the offending line number on malformed input,
    on a header/record count mismatch, and on coincident points.
    """
    records = []
    header = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            if header is None:
                if len(fields) != 3:
                    raise ValueError(f"{path}:{lineno}: header must be 'M N P', got {raw.strip()!r}")
                try:
                    header = as_shape(fields)
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: bad header: {exc}") from None
                continue
            if len(fields) not in (4, 7):
                raise ValueError(f"{path}:{lineno}: expected 'x y z kind [nx ny nz]', "
                                 f"got {len(fields)} fields")
            try:
                xyz = [float(v) for v in fields[:3]]
            except ValueError:
                raise ValueError(f"{path}:{lineno}: bad coordinate in {raw.strip()!r}") from None
            kind = fields[3]
            if kind not in (INTERIOR, BOUNDARY):
                raise ValueError(f"{path}:{lineno}: kind must be I or B, got {kind!r}")
            normal = None
            if len(fields) == 7:
                try:
                    normal = [float(v) for v in fields[4:]]
                except ValueError:
                    raise ValueError(f"{path}:{lineno}: bad normal in {raw.strip()!r}") from None
            records.append((xyz, kind, normal))
    if header is None:
        raise ValueError(f"{path}: empty point file")
    if len(records) != header.total:
        raise ValueError(f"{path}: header promises {header.total} points, file has {len(records)}")
    coords = np.array([r[0] for r in records])
    is_boundary = np.array([r[1] == BOUNDARY for r in records])
    normals = np.full((header.total, 3), np.nan)
    for i, (_, _, normal) in enumerate(records):
        if normal is not None:
            normals[i] = normal
    return PointSet(header, coords, is_boundary, normals)
