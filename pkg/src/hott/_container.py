"""Self-describing array container: plain-text header, little-endian float64 payload.

Layout::

    HOTT-CONTAINER 1
    kind: "<kind>"
    <key>: <json value>
    ...
    array: {"name": ..., "shape": [...]}
    END
    <raw bytes of each array, row-major '<f8', in header order>

Header values are JSON encoded with sorted keys so identical inputs give
identical bytes.
"""
import json

import numpy as np

MAGIC = "HOTT-CONTAINER 1"
_DTYPE = np.dtype("<f8")


class ContainerError(ValueError):
    pass


def _dump(value):
    return json.dumps(value, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def write_container(path, kind, meta, arrays):
    """Write ``arrays`` (name -> ndarray) with metadata ``meta`` to ``path``."""
    lines = [MAGIC, "kind: " + _dump(kind)]
    for key in sorted(meta):
        if key in ("kind", "array") or ":" in key or "\n" in key:
            raise ContainerError(f"invalid header key {key!r}")
        lines.append(f"{key}: {_dump(meta[key])}")
    payloads = []
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr, dtype=_DTYPE)
        lines.append("array: " + _dump({"name": name, "shape": list(arr.shape)}))
        payloads.append(arr.tobytes(order="C"))
    lines.append("END")
    header = ("\n".join(lines) + "\n").encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(header)
        for chunk in payloads:
            fh.write(chunk)


def read_container(path, expect_kind=None):
    """Return ``(kind, meta, arrays)`` from a container written by :func:`write_container`."""
    with open(path, "rb") as fh:
        data = fh.read()
    first = data.split(b"\n", 1)[0].decode("utf-8", errors="replace")
    if first != MAGIC:
        raise ContainerError(f"{path}: not a container file (bad magic line)")
    end = data.find(b"\nEND\n")
    if end < 0:
        raise ContainerError(f"{path}: truncated header")
    header = data[: end].decode("utf-8").split("\n")[1:]
    offset = end + len(b"\nEND\n")

    kind = None
    meta = {}
    specs = []
    for line in header:
        key, _, raw = line.partition(": ")
        value = json.loads(raw)
        if key == "kind":
            kind = value
        elif key == "array":
            specs.append(value)
        else:
            meta[key] = value
    if expect_kind is not None and kind != expect_kind:
        raise ContainerError(f"{path}: expected a {expect_kind!r} container, found {kind!r}")

    arrays = {}
    for spec in specs:
        shape = tuple(spec["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * _DTYPE.itemsize
        if offset + nbytes > len(data):
            raise ContainerError(f"{path}: payload shorter than header declares")
        arr = np.frombuffer(data, dtype=_DTYPE, count=count, offset=offset)
        arrays[spec["name"]] = arr.reshape(shape).astype(np.float64)
        offset += nbytes
    if offset != len(data):
        raise ContainerError(f"{path}: trailing bytes after payload")
    return kind, meta, arrays
