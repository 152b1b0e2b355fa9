"""Discrete parallel-beam Radon transform and its exact algebraic adjoint.

The forward map approximates, for each angle theta_q and signed detector
offset s_p, the line integral of the bilinear interpolant of the image
along the ray

    (x, y) = s_p * (cos theta, sin theta) + t * (-sin theta, cos theta),

with equispaced samples in t (spacing ``step``) clipped to the bounding
circle of the square, trapezoid end-weights, and the interpolant extended
by zero outside [-1, 1]^2. The whole map is a sparse gather with fixed
indices and weights; the adjoint scatters the same weights, so the pair is
an exact transpose up to float64 summation order.
"""

from __future__ import annotations

import functools
import math
import struct
from dataclasses import dataclass

import numpy as np

from .grid import ImageGrid
from .linop import LinearOperator

SINF_MAGIC = b"SINF"


@dataclass(frozen=True)
class RadonGeometry:
    """Projection geometry: angles theta_q = q * pi / n_angles, q = 0..n_angles-1.

    Parameters
    ----------
    n_angles : int
        Number of projection angles in [0, pi).
    n_bins : int
        Detector bins per angle.
    det_halfwidth : float
        Detector axis covers [-det_halfwidth, det_halfwidth].
    step : float
        Sample spacing along each ray.
    """

    n_angles: int
    n_bins: int
    det_halfwidth: float
    step: float

    def __post_init__(self):
        if self.n_angles < 1:
            raise ValueError(f"need at least one angle, got {self.n_angles}")
        if self.n_bins < 1:
            raise ValueError(f"need at least one detector bin, got {self.n_bins}")
        if self.det_halfwidth <= 0 or self.step <= 0:
            raise ValueError("det_halfwidth and step must be positive")

    @classmethod
    def for_grid(cls, nx, n_angles, det_halfwidth=math.sqrt(2.0)):
        """Default geometry for an nx-wide grid.

        Bin spacing matches the pixel width, so n_bins = ceil(nx *
        det_halfwidth); with the default detector covering the image
        diagonal this gives 182 bins at nx = 128. step = one pixel width.
        """
        return cls(
            n_angles=n_angles,
            n_bins=math.ceil(nx * det_halfwidth),
            det_halfwidth=det_halfwidth,
            step=2.0 / nx,
        )

    @property
    def angles(self):
        return np.arange(self.n_angles) * (np.pi / self.n_angles)

    @property
    def offsets(self):
        if self.n_bins == 1:
            return np.zeros(1)
        return np.linspace(-self.det_halfwidth, self.det_halfwidth, self.n_bins)

    @property
    def size(self):
        return self.n_bins * self.n_angles


@dataclass(frozen=True)
class SinogramGrid:
    """Radon data on the (offset, angle) lattice.

    ``values`` has length n_bins * n_angles, angle-major with the bin index
    fastest: entry q * n_bins + p is the ray (s_p, theta_q).
    """

    geometry: RadonGeometry
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).ravel()
        if v.size != self.geometry.size:
            raise ValueError(f"expected {self.geometry.size} values, got {v.size}")
        object.__setattr__(self, "values", v)

    def as_array(self):
        """Values as an (n_angles, n_bins) array."""
        return self.values.reshape(self.geometry.n_angles, self.geometry.n_bins)


@functools.lru_cache(maxsize=8)
def _interp_tables(geom: RadonGeometry, nx: int, ny: int):
    """Gather indices and weights of the discretized transform.

    Returns (idx, w, n_s): both (n_rays * n_s, 4) with rays angle-major,
    n_s samples per ray. Out-of-image stencil entries carry zero weight and
    a clamped index, so gathers and scatters never go out of range.
    """
    offsets = geom.offsets
    radius = math.sqrt(2.0)  # bounding circle of [-1, 1]^2
    n_s = int(math.floor(2.0 * radius / geom.step)) + 1
    t = (np.arange(n_s) - (n_s - 1) / 2.0) * geom.step
    hx, hy = 2.0 / nx, 2.0 / ny

    # trapezoid weights, shared by all angles: full step inside the chord
    # |t| <= L(s), half step at the first/last inside sample
    chord = np.sqrt(np.maximum(radius**2 - offsets**2, 0.0))
    inside = np.abs(t)[None, :] <= chord[:, None] + 1e-12
    ray_w = np.where(inside, geom.step, 0.0)
    has_any = inside.any(axis=1)
    first = inside.argmax(axis=1)
    last = n_s - 1 - inside[:, ::-1].argmax(axis=1)
    rows = np.nonzero(has_any)[0]
    ray_w[rows, first[rows]] *= 0.5
    ray_w[rows, last[rows]] *= 0.5

    idx_parts, w_parts = [], []
    for theta in geom.angles:
        normal = np.array([math.cos(theta), math.sin(theta)])
        tangent = np.array([-math.sin(theta), math.cos(theta)])
        px = offsets[:, None] * normal[0] + t[None, :] * tangent[0]
        py = offsets[:, None] * normal[1] + t[None, :] * tangent[1]
        fx = (px + 1.0) / hx - 0.5
        fy = (py + 1.0) / hy - 0.5
        ix0 = np.floor(fx).astype(np.int64)
        iy0 = np.floor(fy).astype(np.int64)
        rx = fx - ix0
        ry = fy - iy0
        w4 = np.stack(
            [(1 - rx) * (1 - ry), rx * (1 - ry), (1 - rx) * ry, rx * ry], axis=-1
        )
        ix = np.stack([ix0, ix0 + 1, ix0, ix0 + 1], axis=-1)
        iy = np.stack([iy0, iy0, iy0 + 1, iy0 + 1], axis=-1)
        valid = (ix >= 0) & (ix < nx) & (iy >= 0) & (iy < ny)
        w4 = w4 * valid * ray_w[..., None]
        flat = np.where(valid, iy * nx + ix, 0)
        idx_parts.append(flat.reshape(-1, 4))
        w_parts.append(w4.reshape(-1, 4))

    idx = np.concatenate(idx_parts).astype(np.int32)
    w = np.concatenate(w_parts)
    return idx, w, n_s


def radon_forward(image: ImageGrid, geom: RadonGeometry) -> SinogramGrid:
    """Apply the discrete Radon transform to an image."""
    idx, w, n_s = _interp_tables(geom, image.nx, image.ny)
    contrib = (image.values[idx] * w).sum(axis=1)
    values = contrib.reshape(geom.size, n_s).sum(axis=1)
    return SinogramGrid(geometry=geom, values=values)


def radon_adjoint(sino: SinogramGrid, nx, ny) -> ImageGrid:
    """Apply the exact transpose of :func:`radon_forward`.

    Scatters each ray value back through the same interpolation weights;
    satisfies <Rx, y> = <x, R^T y> to floating-point accuracy.
    """
    if nx < 1 or ny < 1:
        raise ValueError(f"grid must have at least one pixel per axis, got {nx}x{ny}")
    geom = sino.geometry
    idx, w, n_s = _interp_tables(geom, nx, ny)
    per_sample = np.repeat(sino.values, n_s)
    values = np.bincount(idx.ravel(), weights=(w * per_sample[:, None]).ravel(), minlength=nx * ny)
    return ImageGrid(nx=nx, ny=ny, values=values)


def radon_operator(geom: RadonGeometry, nx, ny) -> LinearOperator:
    """Flat-vector LinearOperator view of the transform pair."""

    def apply(x):
        return radon_forward(ImageGrid(nx=nx, ny=ny, values=x), geom).values

    def apply_adjoint(y):
        return radon_adjoint(SinogramGrid(geometry=geom, values=y), nx, ny).values

    return LinearOperator(
        domain_dim=nx * ny, range_dim=geom.size, apply=apply, apply_adjoint=apply_adjoint
    )


def dense_matrix(geom: RadonGeometry, nx, ny):
    """Materialize the transform as a dense (M, N) array. Test-scale only."""
    op = radon_operator(geom, nx, ny)
    cols = []
    for k in range(op.domain_dim):
        e = np.zeros(op.domain_dim)
        e[k] = 1.0
        cols.append(op.apply(e))
    return np.column_stack(cols)


def write_sinf(path, sino: SinogramGrid):
    """Write raw float64 little-endian sinogram.

    Layout: magic ``SINF``, u32 n_bins, u32 n_angles, f64 det_halfwidth,
    then n_bins * n_angles values angle-major (bin index fastest).
    """
    geom = sino.geometry
    with open(path, "wb") as f:
        f.write(SINF_MAGIC)
        f.write(struct.pack("<IId", geom.n_bins, geom.n_angles, geom.det_halfwidth))
        f.write(sino.values.astype("<f8").tobytes())


def read_sinf(path, step=None):
    """Read a sinogram written by :func:`write_sinf`.

    The header does not carry the ray sampling step; pass ``step`` to
    reconstruct the exact geometry, otherwise it defaults to the bin
    spacing 2 * det_halfwidth / n_bins.
    """
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != SINF_MAGIC:
            raise ValueError(f"bad magic {magic!r}, expected {SINF_MAGIC!r}")
        n_bins, n_angles, det_halfwidth = struct.unpack("<IId", f.read(16))
        values = np.frombuffer(f.read(8 * n_bins * n_angles), dtype="<f8")
    if step is None:
        step = 2.0 * det_halfwidth / n_bins
    geom = RadonGeometry(
        n_angles=n_angles, n_bins=n_bins, det_halfwidth=det_halfwidth, step=step
    )
    return SinogramGrid(geometry=geom, values=values.copy())
