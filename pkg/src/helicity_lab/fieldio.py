"""Binary field files: one JSON header line plus raw little-endian doubles.

Header keys, in order: schema ("field/v1"), N, rank, layout
("row-major x-fastest"), dtype ("f64-le"), count. The payload is `count`
consecutive component blocks of N^3 doubles each, flattened with x varying
fastest. Writes are atomic (temp file + rename) so readers never observe a
torn file.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile

import numpy as np

from .grid import Grid3, PeriodicField, PreconditionError

__all__ = [
    "write_field",
    "read_field",
    "sha256_file",
    "atomic_write_bytes",
    "atomic_write_text",
]

SCHEMA = "field/v1"
LAYOUT = "row-major x-fastest"
DTYPE = "f64-le"

_RANK_COUNT = {"scalar": 1, "vector3": 3, "tensor3x3": 9}


def atomic_write_bytes(path, data: bytes) -> None:
    """Write bytes so the destination is either absent, old, or complete."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def _header_bytes(n: int, rank: str, count: int) -> bytes:
    header = {
        "schema": SCHEMA,
        "N": n,
        "rank": rank,
        "layout": LAYOUT,
        "dtype": DTYPE,
        "count": count,
    }
    return (json.dumps(header, separators=(",", ":")) + "\n").encode("utf-8")


def write_field(path, field: PeriodicField) -> None:
    """Serialize a field; component blocks are x-fastest flattened doubles."""
    rank = field.rank
    count = _RANK_COUNT[rank]
    blocks = []
    values = field.values
    if rank == "scalar":
        comps = [values]
    elif rank == "vector3":
        comps = [values[i] for i in range(3)]
    else:
        comps = [values[i, j] for i in range(3) for j in range(3)]
    for comp in comps:
        blocks.append(np.ascontiguousarray(comp, dtype="<f8").tobytes(order="F"))
    atomic_write_bytes(path, _header_bytes(field.grid.n, rank, count) + b"".join(blocks))


def read_field(path, grid: Grid3 | None = None) -> PeriodicField:
    """Deserialize a field/v1 file; validates the header and payload size.

    The solenoidal flag is not part of the format, so the result never
    claims it; re-project if the downstream computation requires it.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    nl = raw.find(b"\n")
    if nl < 0:
        raise PreconditionError(f"{path}: missing field/v1 header line")
    try:
        header = json.loads(raw[:nl].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise PreconditionError(f"{path}: malformed field/v1 header") from exc
    if header.get("schema") != SCHEMA:
        raise PreconditionError(f"{path}: schema {header.get('schema')!r} is not {SCHEMA!r}")
    for key, want in (("layout", LAYOUT), ("dtype", DTYPE)):
        if header.get(key) != want:
            raise PreconditionError(f"{path}: unsupported {key} {header.get(key)!r}")
    rank = header.get("rank")
    if rank not in _RANK_COUNT:
        raise PreconditionError(f"{path}: unknown rank {rank!r}")
    n = header.get("N")
    if not isinstance(n, int):
        raise PreconditionError(f"{path}: header N must be an integer")
    count = header.get("count")
    if count != _RANK_COUNT[rank]:
        raise PreconditionError(
            f"{path}: count {count} does not match rank {rank}"
        )
    if grid is None:
        grid = Grid3(n)
    elif grid.n != n:
        raise PreconditionError(f"{path}: file is N={n}, expected N={grid.n}")
    payload = raw[nl + 1:]
    expected = count * n**3 * 8
    if len(payload) != expected:
        raise PreconditionError(
            f"{path}: payload is {len(payload)} bytes, expected {expected}"
        )
    flat = np.frombuffer(payload, dtype="<f8")
    comps = [
        flat[b * n**3:(b + 1) * n**3].reshape((n, n, n), order="F")
        for b in range(count)
    ]
    if rank == "scalar":
        values = comps[0]
    elif rank == "vector3":
        values = np.stack(comps)
    else:
        values = np.stack(comps).reshape((3, 3, n, n, n))
    return PeriodicField(grid, np.ascontiguousarray(values))


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()
