"""Deterministic run artifacts: fixed-format JSON, CSV tables, flat configs.

Every float is rendered with 17 significant digits and dictionary keys are
sorted, so identical inputs produce byte-identical files; that is the
reproducibility contract the sweep manifests rely on.
"""

from __future__ import annotations

import json

import numpy as np

__all__ = [
    "format_float",
    "dumps_json",
    "write_json",
    "write_csv",
    "read_config_file",
    "parse_sweep",
]


def format_float(x: float) -> str:
    """17-significant-digit decimal form; round trips any double exactly."""
    x = float(x)
    if np.isnan(x):
        return "NaN"
    if np.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def _serialize(obj) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _serialize(obj.tolist())
    if isinstance(obj, dict):
        items = sorted(obj.items(), key=lambda kv: str(kv[0]))
        body = ", ".join(f"{json.dumps(str(k))}: {_serialize(v)}" for k, v in items)
        return "{" + body + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_serialize(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__} deterministically")


def dumps_json(obj) -> str:
    return _serialize(obj) + "\n"


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_json(obj))


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def write_csv(path, columns: dict) -> None:
    """Write named equal-length columns; floats use the fixed format."""
    names = list(columns)
    cols = [np.atleast_1d(np.asarray(columns[name])) for name in names]
    length = cols[0].shape[0]
    if any(c.shape[0] != length for c in cols):
        raise ValueError("columns must have equal length")
    with open(path, "w") as fh:
        fh.write(",".join(names) + "\n")
        for i in range(length):
            fh.write(",".join(_cell(c[i]) for c in cols) + "\n")


def _parse_scalar(text: str):
    text = text.strip()
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    return text.strip("\"'")


def read_config_file(path) -> dict:
    """Flat key = value document; '#' starts a comment; later keys win."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = _parse_scalar(value)
    return out


def parse_sweep(text: str):
    """'eps=0.2,0.1,0.05' -> ('eps', [0.2, 0.1, 0.05])."""
    if "=" not in text:
        raise ValueError("sweep must look like name=v1,v2,...")
    key, values = text.split("=", 1)
    vals = [float(v) for v in values.split(",") if v.strip()]
    if not vals:
        raise ValueError("sweep carries no values")
    return key.strip(), vals
