"""CSV / JSON emission and observation-trace ingestion.

Every CSV starts with one ``#`` comment line holding JSON metadata (tool
version, config hash, seed, run sizes).  Data rows use ``repr`` of Python
floats, the shortest string that round-trips, so reruns with the same
config are byte-identical.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from . import __version__
from .errors import ConfigError


def metadata(config=None, **extra) -> dict:
    meta = {"tool": "randur", "version": __version__}
    if config is not None:
        meta["config_hash"] = config.hash()
        meta["seed"] = config.seed
        meta["config"] = config.to_dict()
    meta.update(extra)
    return meta


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else str(value)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence], meta: Optional[Mapping] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write("# " + json.dumps(_jsonable(dict(meta or {})), sort_keys=True) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def write_json(path, payload: Mapping, meta: Optional[Mapping] = None) -> Path:
    """JSON object with the metadata under a ``metadata`` key (JSON has no comments)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = dict(payload)
    body["metadata"] = dict(meta or {})
    path.write_text(json.dumps(_jsonable(body), sort_keys=True, indent=2) + "\n")
    return path


def read_csv_rows(path):
    """Data rows of a CSV written by ``write_csv`` (metadata line skipped)."""
    with Path(path).open() as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.reader(lines))


def read_trace(path) -> np.ndarray:
    """Observations from a ``t,x`` CSV, ordered by ``t``.

    Comment lines starting with ``#`` are skipped.  Errors cite the line.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"trace file not found: {path}")
    header_seen = False
    ts, xs = [], []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            cells = [c.strip() for c in text.split(",")]
            if not header_seen:
                if cells[:2] != ["t", "x"]:
                    raise ConfigError(f"{path}:{lineno}: expected header 't,x', got {text!r}")
                header_seen = True
                continue
            if len(cells) < 2:
                raise ConfigError(f"{path}:{lineno}: expected two columns, got {text!r}")
            try:
                t, x = int(cells[0]), float(cells[1])
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: malformed row {text!r}") from None
            if not math.isfinite(x):
                raise ConfigError(f"{path}:{lineno}: non-finite observation")
            ts.append(t)
            xs.append(x)
    if not xs:
        raise ConfigError(f"{path}: no observations")
    order = np.argsort(ts, kind="stable")
    t_sorted = np.asarray(ts)[order]
    if np.any(np.diff(t_sorted) == 0):
        raise ConfigError(f"{path}: duplicate t values")
    return np.asarray(xs)[order]
