"""Reproducible result files: JSON envelopes and CSV tables with a meta line.

Floats are written with ``repr`` (shortest round-trip form), keys are sorted,
and files are replaced atomically, so a rerun with the same inputs yields a
byte-identical file.
"""

from __future__ import annotations

import io
import json
import math
import os
import subprocess
import tempfile
from functools import lru_cache
from pathlib import Path

import numpy as np


@lru_cache(maxsize=1)
def git_describe() -> str:
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], cwd=here,
                             capture_output=True, text=True, timeout=5)
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return out.stdout.strip() or "unknown"


def clean(obj):
    """Convert numpy scalars/arrays and non-finite floats into JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def envelope(params: dict, seed, data) -> dict:
    return {"meta": {"params": clean(params), "seed": seed, "git_describe": git_describe()},
            "data": clean(data)}


def dumps_json(obj) -> str:
    return json.dumps(clean(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        return repr(x)
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    return str(x)


def dumps_csv(columns: dict, meta: dict | None = None) -> str:
    """Comma-separated table; the optional first line is '# ' + JSON meta."""
    names = list(columns)
    cols = [list(np.asarray(columns[n]).tolist()) for n in names]
    lengths = {len(c) for c in cols}
    if len(lengths) > 1:
        raise ValueError("columns must have equal length")
    buf = io.StringIO()
    if meta is not None:
        buf.write("# " + json.dumps(clean(meta), sort_keys=True) + "\n")
    buf.write(",".join(names) + "\n")
    for row in zip(*cols):
        buf.write(",".join(_fmt(x) for x in row) + "\n")
    return buf.getvalue()


def atomic_write(path, text: str) -> Path:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix="." + path.name + ".", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path
