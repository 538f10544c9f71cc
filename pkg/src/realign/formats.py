"""On-disk formats: text matrices, flat JSON configs, PGM heatmaps, run manifests.

A matrix file starts with a ``rows cols`` header followed by ``rows`` lines of
space-separated decimals written with 17 significant digits, so a write/read
round trip is bit-exact.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import platform
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "FormatError",
    "ConfigError",
    "write_matrix",
    "read_matrix",
    "write_json",
    "read_json",
    "split_config",
    "write_pgm",
    "file_digest",
    "RunManifest",
]


class FormatError(ValueError):
    """A file could not be parsed."""


class ConfigError(ValueError):
    """A configuration is malformed or names unknown keys."""


def write_matrix(path, a) -> None:
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError("only 1-D or 2-D arrays can be written")
    lines = [f"{a.shape[0]} {a.shape[1]}"]
    lines.extend(" ".join(f"{v:.17g}" for v in row) for row in a)
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix(path) -> np.ndarray:
    """Parse a matrix file; errors name the offending line."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(f"{path}: cannot read ({exc.strerror})") from exc
    lines = [(i + 1, ln) for i, ln in enumerate(text.splitlines()) if ln.strip()]
    if not lines:
        raise FormatError(f"{path}: empty file")
    lineno, header = lines[0]
    parts = header.split()
    try:
        rows, cols = (int(p) for p in parts)
    except ValueError:
        raise FormatError(f"{path}:{lineno}: header must be 'rows cols', got {header!r}") from None
    if rows < 0 or cols < 0:
        raise FormatError(f"{path}:{lineno}: negative dimensions in header")
    body = lines[1:]
    if len(body) != rows:
        where = body[rows][0] if len(body) > rows else (body[-1][0] + 1 if body else lineno + 1)
        raise FormatError(f"{path}:{where}: expected {rows} data rows, found {len(body)}")
    out = np.empty((rows, cols))
    for r, (lineno, ln) in enumerate(body):
        fields = ln.split()
        if len(fields) != cols:
            raise FormatError(f"{path}:{lineno}: expected {cols} values, found {len(fields)}")
        try:
            out[r] = [float(v) for v in fields]
        except ValueError:
            raise FormatError(f"{path}:{lineno}: non-numeric value in {ln.strip()!r}") from None
    if not np.all(np.isfinite(out)):
        raise FormatError(f"{path}: non-finite values")
    return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if v != v or v in (float("inf"), float("-inf")):
            return str(v)
        return v
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def read_json(path):
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise FormatError(f"{path}: cannot read ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from exc


def _coerce(value, current):
    if isinstance(value, str) and value.lower() in ("inf", "infinity"):
        return float("inf")
    if isinstance(current, tuple) and isinstance(value, list):
        return tuple(value)
    return value


def split_config(raw: dict, *classes) -> list[dict]:
    """Route a flat key-value config to the dataclasses whose fields it names.

    A key may feed several classes (e.g. ``seed``); keys no class knows are
    rejected so typos surface immediately.
    """
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    names = [{f.name: f for f in dataclasses.fields(c)} for c in classes]
    unknown = sorted(k for k in raw if not any(k in n for n in names))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    out = []
    for fields in names:
        out.append({k: _coerce(v, fields[k].default) for k, v in raw.items() if k in fields})
    return out


def write_pgm(path, a) -> None:
    """Max-normalized 8-bit plain graymap (P2) of a nonnegative matrix."""
    a = np.asarray(a, dtype=float)
    peak = float(a.max()) if a.size else 0.0
    img = np.zeros(a.shape, dtype=int) if peak <= 0 else np.rint(255.0 * np.clip(a, 0, None) / peak).astype(int)
    rows = [" ".join(str(v) for v in row) for row in img]
    Path(path).write_text(f"P2\n{a.shape[1]} {a.shape[0]}\n255\n" + "\n".join(rows) + "\n")


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int | None = None
    inputs: dict[str, str] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)
    version: str = ""
    python: str = field(default_factory=platform.python_version)
    numpy: str = np.__version__
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)
