"""Shared domain types: volumes, point clouds, graphs, fields, landmarks."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class FormatError(ValueError):
    """Raised when an on-disk artefact violates its format contract."""


class ParameterError(ValueError):
    """Raised when an operation is called with invalid parameters."""


class NumericError(ArithmeticError):
    """Raised when a computation produces non-finite values."""


@dataclass(frozen=True)
class Volume:
    """3D scalar (or multi-channel) grid with physical spacing in mm.

    ``data`` is indexed ``[x, y, z]`` (channels last when present); world
    coordinates are ``origin + voxel * spacing``.
    """

    data: np.ndarray
    spacing: np.ndarray
    origin: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        spacing = np.asarray(self.spacing, dtype=np.float64).reshape(3)
        origin = np.asarray(self.origin, dtype=np.float64).reshape(3)
        if data.ndim not in (3, 4):
            raise ParameterError(f"volume data must be 3D or 4D, got ndim={data.ndim}")
        if np.any(spacing <= 0):
            raise ParameterError(f"spacing must be positive, got {spacing}")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "origin", origin)

    @property
    def dims(self):
        return self.data.shape[:3]

    @property
    def channels(self):
        return 1 if self.data.ndim == 3 else self.data.shape[3]

    def voxel_to_world(self, vox):
        """Map voxel indices to mm coordinates (affine is total, no range check)."""
        vox = np.asarray(vox, dtype=np.float64)
        return self.origin + vox * self.spacing

    def world_to_voxel(self, world):
        """Inverse of :meth:`voxel_to_world`; returns fractional voxel coordinates."""
        world = np.asarray(world, dtype=np.float64)
        return (world - self.origin) / self.spacing


@dataclass(frozen=True)
class Mask:
    """Binary companion grid of a :class:`Volume`."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 3:
            raise ParameterError(f"mask must be 3D, got ndim={data.ndim}")
        object.__setattr__(self, "data", data.astype(bool))

    @property
    def dims(self):
        return self.data.shape


@dataclass(frozen=True)
class PointCloud:
    """Set of 3D points in world coordinates (mm)."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ParameterError(f"points must be N x 3, got shape {pts.shape}")
        if pts.shape[0] < 1:
            raise ParameterError("point cloud must contain at least one point")
        if not np.all(np.isfinite(pts)):
            raise NumericError("point cloud contains non-finite coordinates")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.shape[0]


@dataclass(frozen=True)
class KnnGraph:
    """Symmetric k-nearest-neighbour graph over a point cloud.

    ``edges`` holds each undirected pair once with i < j; ``directed_edges``
    holds both orientations, sorted lexicographically. Symmetrisation is by
    union, so node degrees may exceed ``k``.
    """

    k: int
    n_nodes: int
    edges: np.ndarray
    directed_edges: np.ndarray = field(init=False)

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if edges.size and (edges.min() < 0 or edges.max() >= self.n_nodes):
            raise ParameterError("edge endpoint out of node range")
        lo = np.minimum(edges[:, 0], edges[:, 1])
        hi = np.maximum(edges[:, 0], edges[:, 1])
        if np.any(lo == hi):
            raise ParameterError("self-loops are not allowed")
        und = np.unique(np.stack([lo, hi], axis=1), axis=0)
        both = np.concatenate([und, und[:, ::-1]], axis=0)
        order = np.lexsort((both[:, 1], both[:, 0]))
        object.__setattr__(self, "edges", und)
        object.__setattr__(self, "directed_edges", both[order])

    @property
    def degrees(self):
        return np.bincount(self.directed_edges[:, 0], minlength=self.n_nodes)

    def neighbor_csr(self):
        """Return (indptr, indices) of neighbours per node, CSR layout."""
        src = self.directed_edges[:, 0]
        indptr = np.zeros(self.n_nodes + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        np.cumsum(indptr, out=indptr)
        return indptr, self.directed_edges[:, 1].copy()


@dataclass(frozen=True)
class DisplacementField:
    """Per-keypoint motion vectors plus an optional dense 3-channel grid."""

    sparse: np.ndarray
    dense: Volume | None = None

    def __post_init__(self):
        sp = np.asarray(self.sparse, dtype=np.float64).reshape(-1, 3)
        if not np.all(np.isfinite(sp)):
            raise NumericError("sparse displacement field contains non-finite values")
        if self.dense is not None:
            if self.dense.channels != 3:
                raise ParameterError("dense displacement field must have 3 channels")
            if not np.all(np.isfinite(self.dense.data)):
                raise NumericError("dense displacement field contains non-finite values")
        object.__setattr__(self, "sparse", sp)


@dataclass(frozen=True)
class LandmarkPairs:
    """Corresponding voxel-index landmarks in fixed and moving volumes."""

    fixed_vox: np.ndarray
    moving_vox: np.ndarray

    def __post_init__(self):
        fv = np.asarray(self.fixed_vox, dtype=np.int64).reshape(-1, 3)
        mv = np.asarray(self.moving_vox, dtype=np.int64).reshape(-1, 3)
        if fv.shape[0] != mv.shape[0]:
            raise FormatError(
                f"landmark count mismatch: {fv.shape[0]} fixed vs {mv.shape[0]} moving"
            )
        object.__setattr__(self, "fixed_vox", fv)
        object.__setattr__(self, "moving_vox", mv)

    def __len__(self):
        return self.fixed_vox.shape[0]


def voxel_to_world(vox, vol: Volume):
    return vol.voxel_to_world(vox)


def world_to_voxel(world, vol: Volume):
    return vol.world_to_voxel(world)
