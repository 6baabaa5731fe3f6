"""Vortex-ring wake lattice, Biot-Savart induction, and field sampling.

The wake is a lattice of quadrilateral vortex rings shed from the trailing
edge, one spanwise row per time step.  Rings are wound so that shared
edges of neighbouring rings cancel, which makes the lattice equivalent to
the classical superposition of horseshoe vortices while keeping Kelvin
bookkeeping trivial: a ring's circulation is fixed at shed time, forever.

Induction uses the finite-segment Biot-Savart kernel with a cutoff-smoothed
core (denominator regularization), evaluated by a numba kernel that is
parallel over targets but strictly sequential over segments per target, so
results are independent of the thread count.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace

import numpy as np
from numba import njit, prange

INV_4PI = 1.0 / (4.0 * np.pi)


def set_threads(n: int) -> None:
    """Cap the numba worker-thread count (also via env WAKEGAIT_THREADS)."""
    import numba
    numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


_env_threads = os.environ.get("WAKEGAIT_THREADS")
if _env_threads:
    try:
        set_threads(int(_env_threads))
    except ValueError:
        pass


@njit(cache=True, parallel=True, fastmath=True)
def _biot_savart(targets, seg_a, seg_b, seg_g, core2):
    out = np.zeros((targets.shape[0], 3))
    for i in prange(targets.shape[0]):
        px = targets[i, 0]; py = targets[i, 1]; pz = targets[i, 2]
        vx = 0.0; vy = 0.0; vz = 0.0
        for j in range(seg_a.shape[0]):
            ax = seg_a[j, 0]; ay = seg_a[j, 1]; az = seg_a[j, 2]
            bx = seg_b[j, 0]; by = seg_b[j, 1]; bz = seg_b[j, 2]
            r1x = px - ax; r1y = py - ay; r1z = pz - az
            r2x = px - bx; r2y = py - by; r2z = pz - bz
            r0x = bx - ax; r0y = by - ay; r0z = bz - az
            cx = r1y * r2z - r1z * r2y
            cy = r1z * r2x - r1x * r2z
            cz = r1x * r2y - r1y * r2x
            den = (cx * cx + cy * cy + cz * cz
                   + core2 * (r0x * r0x + r0y * r0y + r0z * r0z))
            r1m = (r1x * r1x + r1y * r1y + r1z * r1z) ** 0.5
            r2m = (r2x * r2x + r2y * r2y + r2z * r2z) ** 0.5
            if r1m < 1e-14 or r2m < 1e-14 or den < 1e-30:
                continue
            dot = (r0x * (r1x / r1m - r2x / r2m)
                   + r0y * (r1y / r1m - r2y / r2m)
                   + r0z * (r1z / r1m - r2z / r2m))
            f = seg_g[j] * INV_4PI * dot / den
            vx += f * cx; vy += f * cy; vz += f * cz
        out[i, 0] = vx; out[i, 1] = vy; out[i, 2] = vz
    return out


def biot_savart_segments(targets: np.ndarray, seg_a: np.ndarray, seg_b: np.ndarray,
                         seg_gamma: np.ndarray, core_radius: float) -> np.ndarray:
    """Velocity induced at targets by straight segments seg_a -> seg_b."""
    targets = np.ascontiguousarray(targets, dtype=float)
    if targets.ndim == 1:
        return biot_savart_segments(targets[None, :], seg_a, seg_b,
                                    seg_gamma, core_radius)[0]
    return _biot_savart(targets,
                        np.ascontiguousarray(seg_a, dtype=float),
                        np.ascontiguousarray(seg_b, dtype=float),
                        np.ascontiguousarray(seg_gamma, dtype=float),
                        float(core_radius) ** 2)


@dataclass(frozen=True)
class WakeLattice:
    """Immutable vortex-ring lattice.

    vertices is row-major: vertex (row, j) sits at index row * (n + 1) + j
    for n_strips strips, rows ordered by shed time.  rings holds quads of
    vertex indices (prev_row j, prev_row j+1, new_row j+1, new_row j);
    ring_gamma is fixed at shed time (Kelvin).
    """

    vertices: np.ndarray      # (V, 3)
    rings: np.ndarray         # (R, 4) int64
    ring_gamma: np.ndarray    # (R,)
    ring_time: np.ndarray     # (R,) shed time
    row_times: np.ndarray     # (rows,) time of each vertex row
    n_strips: int
    core_radius: float

    @property
    def n_rows(self) -> int:
        return self.row_times.shape[0]

    @property
    def trailing_row(self) -> np.ndarray:
        """Indices of the current trailing-edge attachment vertices."""
        n1 = self.n_strips + 1
        return np.arange(self.vertices.shape[0] - n1, self.vertices.shape[0])


def seed_lattice(te_points: np.ndarray, t: float, core_radius: float) -> WakeLattice:
    """Start a lattice from the trailing-edge nodes (one row, no rings yet)."""
    te_points = np.asarray(te_points, dtype=float)
    n_strips = te_points.shape[0] - 1
    if n_strips < 1:
        raise ValueError("need at least two trailing-edge nodes")
    return WakeLattice(
        vertices=te_points.copy(),
        rings=np.zeros((0, 4), dtype=np.int64),
        ring_gamma=np.zeros(0),
        ring_time=np.zeros(0),
        row_times=np.array([t]),
        n_strips=n_strips,
        core_radius=float(core_radius),
    )


def shed(lattice: WakeLattice, te_points: np.ndarray, gamma: np.ndarray,
         t: float) -> WakeLattice:
    """Append one row of rings between the previous trailing row and te_points."""
    te_points = np.asarray(te_points, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    n = lattice.n_strips
    if te_points.shape[0] != n + 1 or gamma.shape[0] != n:
        raise ValueError("trailing-edge nodes/circulations do not match strip count")
    v0 = lattice.vertices.shape[0]
    prev = np.arange(v0 - (n + 1), v0)
    new = np.arange(v0, v0 + n + 1)
    quads = np.column_stack([prev[:-1], prev[1:], new[1:], new[:-1]])
    return replace(
        lattice,
        vertices=np.vstack([lattice.vertices, te_points]),
        rings=np.vstack([lattice.rings, quads]),
        ring_gamma=np.concatenate([lattice.ring_gamma, gamma]),
        ring_time=np.concatenate([lattice.ring_time, np.full(n, float(t))]),
        row_times=np.concatenate([lattice.row_times, [float(t)]]),
    )


def ring_segments(lattice: WakeLattice, t_min: float | None = None,
                  t_max: float | None = None):
    """Ring edges as (seg_a, seg_b, gamma) arrays, optionally filtered by shed time."""
    mask = np.ones(lattice.rings.shape[0], dtype=bool)
    if t_min is not None:
        mask &= lattice.ring_time >= t_min
    if t_max is not None:
        mask &= lattice.ring_time <= t_max
    quads = lattice.rings[mask]
    gam = lattice.ring_gamma[mask]
    a_idx = quads.ravel()
    b_idx = quads[:, [1, 2, 3, 0]].ravel()
    return (lattice.vertices[a_idx], lattice.vertices[b_idx], np.repeat(gam, 4))


def induced_velocity(lattice: WakeLattice, bound_filaments, targets: np.ndarray,
                     t_min: float | None = None) -> np.ndarray:
    """Velocity induced at targets by the lattice rings plus bound filaments.

    bound_filaments is None or a (seg_a, seg_b, gamma) triple of straight
    segments.  Cost is O(segments * targets); the cutoff core removes all
    singularities, including targets sitting on lattice vertices.
    """
    seg_a, seg_b, seg_g = ring_segments(lattice, t_min=t_min)
    if bound_filaments is not None:
        ba, bb, bg = bound_filaments
        seg_a = np.vstack([seg_a, np.asarray(ba, dtype=float)])
        seg_b = np.vstack([seg_b, np.asarray(bb, dtype=float)])
        seg_g = np.concatenate([seg_g, np.asarray(bg, dtype=float)])
    targets = np.asarray(targets, dtype=float)
    if seg_a.shape[0] == 0:
        return np.zeros_like(targets, dtype=float)
    return biot_savart_segments(targets, seg_a, seg_b, seg_g, lattice.core_radius)


def advect(lattice: WakeLattice, dt: float, freestream: np.ndarray,
           mode: str = "free", t_min: float | None = None) -> WakeLattice:
    """Transport wake vertices one forward-Euler step.

    free: freestream plus the lattice's own induced velocity at every
    vertex (rings older than t_min excluded as sources).  prescribed:
    freestream only.  Circulations are untouched (Kelvin).
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    freestream = np.asarray(freestream, dtype=float)
    if mode == "prescribed":
        vel = np.broadcast_to(freestream, lattice.vertices.shape)
    elif mode == "free":
        vel = induced_velocity(lattice, None, lattice.vertices, t_min=t_min)
        vel = vel + freestream
        if not np.all(np.isfinite(vel)):
            bad = int(np.flatnonzero(~np.isfinite(vel).all(axis=1))[0])
            raise RuntimeError(f"non-finite wake velocity at vertex {bad}")
    else:
        raise ValueError(f"unknown advect mode {mode!r}")
    return replace(lattice, vertices=lattice.vertices + vel * dt)


@dataclass(frozen=True)
class WakeStructure:
    """Polygon-mesh wake geometry: the 3D shape of one gait.

    Vertices keep the lattice's row-major ordering (shed row x spanwise
    index), which is the index-alignment contract the gait-design cost
    relies on.  phase holds the gait phase in [0, 1) per vertex row.
    """

    vertices: np.ndarray   # (V, 3)
    faces: np.ndarray      # (F, 4) int64, quads
    edges: np.ndarray      # (E, 2) int64, unique, sorted
    phase: np.ndarray      # (rows,)
    n_strips: int

    @property
    def n_rows(self) -> int:
        return self.phase.shape[0]


def wake_mesh(lattice: WakeLattice, period: float,
              last_rows: int | None = None) -> WakeStructure:
    """Extract the quad mesh of the lattice (optionally only the newest rows).

    last_rows counts ring rows; the mesh then has last_rows + 1 vertex rows
    and last_rows * n_strips faces.  Identical lattices yield byte-identical
    meshes.
    """
    if lattice.vertices.shape[0] == 0:
        raise ValueError("empty lattice")
    n1 = lattice.n_strips + 1
    rows = lattice.n_rows
    keep = rows if last_rows is None else min(last_rows + 1, rows)
    row0 = rows - keep
    verts = lattice.vertices[row0 * n1:].copy()
    times = lattice.row_times[row0:]

    n = lattice.n_strips
    faces = np.empty(((keep - 1) * n, 4), dtype=np.int64)
    for r in range(keep - 1):
        base = r * n1
        idx = np.arange(n)
        faces[r * n:(r + 1) * n, 0] = base + idx
        faces[r * n:(r + 1) * n, 1] = base + idx + 1
        faces[r * n:(r + 1) * n, 2] = base + n1 + idx + 1
        faces[r * n:(r + 1) * n, 3] = base + n1 + idx

    pairs = np.vstack([faces[:, [0, 1]], faces[:, [1, 2]],
                       faces[:, [2, 3]], faces[:, [3, 0]]])
    pairs.sort(axis=1)
    edges = np.unique(pairs, axis=0)

    phase = np.mod(times / period, 1.0)
    return WakeStructure(vertices=verts, faces=faces, edges=edges,
                         phase=phase, n_strips=n)


@dataclass(frozen=True)
class FieldGrid:
    """Sampled velocity/vorticity box.

    Points sit at origin + (i, j, k) * spacing; velocity is (nx, ny, nz, 3)
    and omega_x (nx, ny, nz) holds the streamwise vorticity
    dv_z/dy - dv_y/dz from central differences (zero on the boundary, which
    is excluded from every integral metric).
    """

    origin: np.ndarray
    spacing: np.ndarray
    dims: tuple[int, int, int]
    iso_thresholds: tuple[float, ...] = (300.0, 100.0, -300.0, -100.0)
    velocity: np.ndarray | None = None
    omega_x: np.ndarray | None = None

    def points(self) -> np.ndarray:
        ax = [self.origin[d] + self.spacing[d] * np.arange(self.dims[d])
              for d in range(3)]
        xx, yy, zz = np.meshgrid(*ax, indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel(), zz.ravel()])

    def axis(self, d: int) -> np.ndarray:
        return self.origin[d] + self.spacing[d] * np.arange(self.dims[d])


def vorticity_field(lattice: WakeLattice, grid: FieldGrid,
                    t_min: float | None = None,
                    t_max: float | None = None) -> FieldGrid:
    """Sample induced velocity on the grid and form streamwise vorticity.

    Rings outside [t_min, t_max] shed time are excluded, which lets callers
    isolate e.g. the upstroke-shed part of a cycle.
    """
    nx, ny, nz = grid.dims
    if min(nx, ny, nz) < 3:
        raise ValueError("grid interior empty: need at least 3 points per axis")
    seg_a, seg_b, seg_g = ring_segments(lattice, t_min=t_min, t_max=t_max)
    pts = grid.points()
    if seg_a.shape[0] == 0:
        vel = np.zeros((pts.shape[0], 3))
    else:
        vel = biot_savart_segments(pts, seg_a, seg_b, seg_g, lattice.core_radius)
    v = vel.reshape(nx, ny, nz, 3)

    omega = np.zeros((nx, ny, nz))
    dy, dz = grid.spacing[1], grid.spacing[2]
    omega[:, 1:-1, 1:-1] = (
        (v[:, 2:, 1:-1, 2] - v[:, :-2, 1:-1, 2]) / (2.0 * dy)
        - (v[:, 1:-1, 2:, 1] - v[:, 1:-1, :-2, 1]) / (2.0 * dz)
    )
    return replace(grid, velocity=v, omega_x=omega)


def divergence(grid: FieldGrid) -> np.ndarray:
    """Central-difference divergence of the sampled velocity (interior points)."""
    if grid.velocity is None:
        raise ValueError("grid has no sampled velocity")
    v = grid.velocity
    dx, dy, dz = grid.spacing
    return ((v[2:, 1:-1, 1:-1, 0] - v[:-2, 1:-1, 1:-1, 0]) / (2.0 * dx)
            + (v[1:-1, 2:, 1:-1, 1] - v[1:-1, :-2, 1:-1, 1]) / (2.0 * dy)
            + (v[1:-1, 1:-1, 2:, 2] - v[1:-1, 1:-1, :-2, 2]) / (2.0 * dz))
