"""
File utility functions - atomic writes and the text codecs shared by datasets,
checkpoints, manifests and reports
"""
import json
import os
import tempfile

import numpy as np

from ..errors import FormatError


def ensure_dir_exists(file_path):
    """Make sure the parent directory of a file exists"""
    directory = os.path.dirname(os.path.abspath(file_path))
    if not os.path.exists(directory):
        os.makedirs(directory)


def atomic_write_text(path, text):
    """Write text to path through a temporary file in the same directory"""
    ensure_dir_exists(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
    return path


def atomic_write_frame(path, frame):
    """Write a pandas DataFrame as CSV atomically"""
    return atomic_write_text(path, frame.to_csv(index=False, lineterminator="\n"))


def dumps(obj):
    """Deterministic JSON: sorted keys, shortest round-trip float repr"""
    return json.dumps(obj, sort_keys=True, allow_nan=False, separators=(",", ":"))


def write_json(path, obj):
    """Write one JSON document atomically, pretty printed"""
    return atomic_write_text(path, json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n")


def read_json(path):
    """Read one JSON document"""
    with open(path, "r", encoding="utf-8") as handle:
        try:
            return json.load(handle)
        except json.JSONDecodeError as e:
            raise FormatError(f"{path}: not valid JSON ({e})") from e


def write_jsonl(path, records):
    """Write an iterable of JSON records, one per line, atomically"""
    return atomic_write_text(path, "".join(dumps(r) + "\n" for r in records))


def read_jsonl(path):
    """Read all JSON-lines records from path"""
    records = []
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise FormatError(f"{path}:{line_no}: not valid JSON ({e})") from e
    return records


def complex_to_pairs(array):
    """Complex array -> nested lists whose leaves are [re, im] pairs"""
    array = np.asarray(array, dtype=complex)
    return np.stack([array.real, array.imag], axis=-1).tolist()


def pairs_to_complex(pairs):
    """Inverse of complex_to_pairs"""
    raw = np.asarray(pairs, dtype=float)
    if raw.ndim == 0 or raw.shape[-1] != 2:
        raise FormatError("complex values must be stored as [re, im] pairs")
    return raw[..., 0] + 1j * raw[..., 1]


def tensor_to_record(name, array):
    """Named tensor -> {name, shape, values} with row-major values"""
    array = np.asarray(array, dtype=float)
    return {"name": name, "shape": list(array.shape), "values": array.ravel(order="C").tolist()}


def record_to_tensor(record):
    """Inverse of tensor_to_record"""
    try:
        values = np.asarray(record["values"], dtype=float)
        return values.reshape(tuple(record["shape"]), order="C")
    except (KeyError, ValueError) as e:
        raise FormatError(f"bad tensor record {record.get('name', '?')}: {e}") from e
