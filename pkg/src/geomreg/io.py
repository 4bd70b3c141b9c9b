"""On-disk formats: header+raw grid pairs, point cloud text, landmark text,
weight manifests. All loaders round-trip bit-exactly against their savers."""
from __future__ import annotations

import os

import numpy as np

from .types import (
    DisplacementField,
    FormatError,
    LandmarkPairs,
    Mask,
    PointCloud,
    Volume,
)

_GRID_DTYPE = np.dtype("<f4")
_MASK_DTYPE = np.dtype("u1")


def _base_path(path):
    path = os.fspath(path)
    for ext in (".hdr", ".raw"):
        if path.endswith(ext):
            return path[: -len(ext)]
    return path


def _header_path(path):
    return _base_path(path) + ".hdr"


def _raw_path(path):
    return _base_path(path) + ".raw"


def _write_header(path, fields):
    lines = [f"{key}: {value}\n" for key, value in fields.items()]
    with open(path, "w") as fh:
        fh.writelines(lines)


def _read_header(path):
    fields = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if ":" not in line:
                raise FormatError(f"{path}:{lineno}: expected 'key: value', got {line!r}")
            key, value = line.split(":", 1)
            fields[key.strip()] = value.strip()
    return fields


def _header_ints(fields, key, n, path):
    if key not in fields:
        raise FormatError(f"{path}: missing header field '{key}'")
    try:
        vals = [int(tok) for tok in fields[key].split()]
    except ValueError:
        raise FormatError(f"{path}: field '{key}' is not a list of integers") from None
    if len(vals) != n:
        raise FormatError(f"{path}: field '{key}' needs {n} entries, got {len(vals)}")
    return vals


def _header_floats(fields, key, n, path):
    if key not in fields:
        raise FormatError(f"{path}: missing header field '{key}'")
    try:
        vals = [float(tok) for tok in fields[key].split()]
    except ValueError:
        raise FormatError(f"{path}: field '{key}' is not a list of numbers") from None
    if len(vals) != n:
        raise FormatError(f"{path}: field '{key}' needs {n} entries, got {len(vals)}")
    return vals


def _expect_kind(fields, kind, path):
    found = fields.get("kind", kind)
    if found != kind:
        raise FormatError(f"{path}: expected kind '{kind}', found '{found}'")


def _check_payload(raw, expected, path):
    if raw.size != expected:
        raise FormatError(
            f"{path}: raw payload holds {raw.size} values, header implies {expected}"
        )


# --- grids ---------------------------------------------------------------

def save_volume(vol: Volume, path):
    """Write a volume as header + little-endian f32 raw in x-fastest order."""
    data = np.asarray(vol.data, dtype=_GRID_DTYPE)
    _write_header(
        _header_path(path),
        {
            "kind": "volume",
            "dims": "{} {} {}".format(*vol.dims),
            "spacing": "{!r} {!r} {!r}".format(*vol.spacing.tolist()),
            "origin": "{!r} {!r} {!r}".format(*vol.origin.tolist()),
            "channels": vol.channels,
            "dtype": "f32le",
        },
    )
    with open(_raw_path(path), "wb") as fh:
        if data.ndim == 3:
            fh.write(data.ravel(order="F").tobytes())
        else:
            for c in range(data.shape[3]):
                fh.write(data[..., c].ravel(order="F").tobytes())


def load_volume(path) -> Volume:
    hdr_path = _header_path(path)
    fields = _read_header(hdr_path)
    _expect_kind(fields, "volume", hdr_path)
    dims = _header_ints(fields, "dims", 3, hdr_path)
    spacing = _header_floats(fields, "spacing", 3, hdr_path)
    origin = _header_floats(fields, "origin", 3, hdr_path)
    channels = _header_ints(fields, "channels", 1, hdr_path)[0]
    if fields.get("dtype") != "f32le":
        raise FormatError(f"{hdr_path}: field 'dtype' must be f32le")
    raw = np.fromfile(_raw_path(path), dtype=_GRID_DTYPE)
    _check_payload(raw, int(np.prod(dims)) * channels, _raw_path(path))
    if not np.all(np.isfinite(raw)):
        raise FormatError(f"{_raw_path(path)}: field 'data' contains non-finite values")
    if channels == 1:
        data = raw.reshape(dims, order="F")
    else:
        planes = raw.reshape(channels, -1)
        data = np.stack(
            [planes[c].reshape(dims, order="F") for c in range(channels)], axis=-1
        )
    return Volume(data=data, spacing=spacing, origin=origin)


def save_mask(mask: Mask, path):
    _write_header(
        _header_path(path),
        {"kind": "mask", "dims": "{} {} {}".format(*mask.dims), "dtype": "u8"},
    )
    data = mask.data.astype(_MASK_DTYPE)
    with open(_raw_path(path), "wb") as fh:
        fh.write(data.ravel(order="F").tobytes())


def load_mask(path) -> Mask:
    hdr_path = _header_path(path)
    fields = _read_header(hdr_path)
    _expect_kind(fields, "mask", hdr_path)
    dims = _header_ints(fields, "dims", 3, hdr_path)
    if fields.get("dtype") != "u8":
        raise FormatError(f"{hdr_path}: field 'dtype' must be u8")
    raw = np.fromfile(_raw_path(path), dtype=_MASK_DTYPE)
    _check_payload(raw, int(np.prod(dims)), _raw_path(path))
    return Mask(data=raw.reshape(dims, order="F") != 0)


def save_displacement_field(field: DisplacementField, path):
    """Sparse rows (and the dense grid when present) in one header+raw pair."""
    sparse = np.asarray(field.sparse, dtype=_GRID_DTYPE)
    fields = {
        "kind": "displacement",
        "count": sparse.shape[0],
        "has_dense": int(field.dense is not None),
    }
    if field.dense is not None:
        fields["dims"] = "{} {} {}".format(*field.dense.dims)
        fields["spacing"] = "{!r} {!r} {!r}".format(*field.dense.spacing.tolist())
        fields["origin"] = "{!r} {!r} {!r}".format(*field.dense.origin.tolist())
        fields["channels"] = 3
    fields["dtype"] = "f32le"
    _write_header(_header_path(path), fields)
    with open(_raw_path(path), "wb") as fh:
        fh.write(sparse.ravel(order="C").tobytes())
        if field.dense is not None:
            dense = np.asarray(field.dense.data, dtype=_GRID_DTYPE)
            for c in range(3):
                fh.write(dense[..., c].ravel(order="F").tobytes())


def load_displacement_field(path) -> DisplacementField:
    hdr_path = _header_path(path)
    fields = _read_header(hdr_path)
    _expect_kind(fields, "displacement", hdr_path)
    count = _header_ints(fields, "count", 1, hdr_path)[0]
    has_dense = _header_ints(fields, "has_dense", 1, hdr_path)[0]
    raw = np.fromfile(_raw_path(path), dtype=_GRID_DTYPE)
    expected = count * 3
    dims = spacing = origin = None
    if has_dense:
        dims = _header_ints(fields, "dims", 3, hdr_path)
        spacing = _header_floats(fields, "spacing", 3, hdr_path)
        origin = _header_floats(fields, "origin", 3, hdr_path)
        expected += int(np.prod(dims)) * 3
    _check_payload(raw, expected, _raw_path(path))
    if not np.all(np.isfinite(raw)):
        raise FormatError(f"{_raw_path(path)}: field 'data' contains non-finite values")
    sparse = raw[: count * 3].reshape(count, 3)
    dense = None
    if has_dense:
        planes = raw[count * 3 :].reshape(3, -1)
        grid = np.stack([planes[c].reshape(dims, order="F") for c in range(3)], axis=-1)
        dense = Volume(data=grid, spacing=spacing, origin=origin)
    return DisplacementField(sparse=sparse, dense=dense)


# --- text formats --------------------------------------------------------

def save_point_cloud(cloud: PointCloud, path, comments=()):
    with open(path, "w") as fh:
        for comment in comments:
            fh.write(f"# {comment}\n")
        for x, y, z in cloud.points:
            fh.write(f"{float(x)!r} {float(y)!r} {float(z)!r}\n")


def load_point_cloud(path) -> PointCloud:
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            toks = line.split()
            if len(toks) != 3:
                raise FormatError(f"{path}:{lineno}: expected 3 coordinates, got {len(toks)}")
            try:
                rows.append([float(t) for t in toks])
            except ValueError:
                raise FormatError(f"{path}:{lineno}: non-numeric coordinate") from None
    if not rows:
        raise FormatError(f"{path}: point cloud file holds no points")
    return PointCloud(points=np.array(rows, dtype=np.float64))


def save_landmarks(pairs: LandmarkPairs, fixed_path, moving_path):
    for arr, path in ((pairs.fixed_vox, fixed_path), (pairs.moving_vox, moving_path)):
        with open(path, "w") as fh:
            for x, y, z in arr:
                fh.write(f"{x} {y} {z}\n")


def _load_landmark_file(path):
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            toks = line.split()
            if len(toks) != 3:
                raise FormatError(f"{path}:{lineno}: expected 3 voxel indices, got {len(toks)}")
            try:
                rows.append([int(float(t)) for t in toks])
            except ValueError:
                raise FormatError(f"{path}:{lineno}: non-numeric voxel index") from None
    return np.array(rows, dtype=np.int64).reshape(-1, 3)


def load_landmarks(fixed_path, moving_path) -> LandmarkPairs:
    return LandmarkPairs(
        fixed_vox=_load_landmark_file(fixed_path),
        moving_vox=_load_landmark_file(moving_path),
    )


# --- model weights -------------------------------------------------------

def save_weights(named_arrays, path):
    """Write an ordered name/shape manifest plus a flat f32le payload.

    ``named_arrays`` is a list of ``(name, array)`` pairs; order is preserved
    and is the payload order.
    """
    base = _base_path(path)
    with open(base + ".manifest", "w") as fh:
        for name, arr in named_arrays:
            arr = np.asarray(arr)
            fh.write(name + " " + " ".join(str(d) for d in arr.shape) + "\n")
    with open(base + ".bin", "wb") as fh:
        for _, arr in named_arrays:
            fh.write(np.asarray(arr, dtype=_GRID_DTYPE).ravel(order="C").tobytes())


def load_weights(path):
    """Return the ordered ``(name, array)`` list saved by :func:`save_weights`."""
    base = _base_path(path) if not os.fspath(path).endswith(".manifest") else os.fspath(path)[:-9]
    entries = []
    with open(base + ".manifest") as fh:
        for lineno, line in enumerate(fh, 1):
            toks = line.split()
            if not toks:
                continue
            try:
                shape = tuple(int(t) for t in toks[1:])
            except ValueError:
                raise FormatError(
                    f"{base}.manifest:{lineno}: field 'shape' is not integral"
                ) from None
            entries.append((toks[0], shape))
    raw = np.fromfile(base + ".bin", dtype=_GRID_DTYPE)
    total = sum(int(np.prod(shape)) if shape else 1 for _, shape in entries)
    _check_payload(raw, total, base + ".bin")
    if not np.all(np.isfinite(raw)):
        raise FormatError(f"{base}.bin: field 'weights' contains non-finite values")
    out, offset = [], 0
    for name, shape in entries:
        size = int(np.prod(shape)) if shape else 1
        out.append((name, raw[offset : offset + size].reshape(shape).astype(np.float64)))
        offset += size
    return out
