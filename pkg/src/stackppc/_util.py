"""Small shared helpers: type-7 quantiles, logsumexp, atomic writes."""
import json
import os
import tempfile

import numpy as np
from scipy.special import logsumexp

__all__ = ["quantile7", "logsumexp", "atomic_write_text", "dump_json", "fmt17"]


def quantile7(values, q):
    """Linear-interpolation sample quantile (Hyndman-Fan type 7).

    Uses ``x[lo] + (h - lo) * (x[lo+1] - x[lo])`` with ``h = q * (n - 1)`` so
    results are reproducible from a plain sorted list.
    """
    x = np.sort(np.asarray(values, dtype=float), kind="mergesort")
    if x.size == 0:
        raise ValueError("quantile of an empty sample")
    qs = np.atleast_1d(np.asarray(q, dtype=float))
    out = np.empty(qs.shape)
    n = x.size
    for j, qq in enumerate(qs):
        if not 0.0 <= qq <= 1.0:
            raise ValueError(f"quantile level {qq} outside [0, 1]")
        h = qq * (n - 1)
        lo = int(np.floor(h))
        hi = min(lo + 1, n - 1)
        out[j] = x[lo] + (h - lo) * (x[hi] - x[lo])
    return out if np.ndim(q) else float(out[0])


def fmt17(v):
    """Format a float so that parsing it back gives the identical double."""
    return format(float(v), ".17g")


def _to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if np.isnan(v):
            return None
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def dump_json(obj):
    return json.dumps(_to_jsonable(obj), indent=2) + "\n"


def atomic_write_text(path, text):
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
