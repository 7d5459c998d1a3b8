"""Field files, run configuration and report writers.

PSN1 field file, all little-endian::

    b"PSN1" | u32 version | u32 n | f64 L | f64 a | f64 omega | 2 n^2 f64

The payload holds the samples in row-major order with real and imaginary
parts interleaved.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
import struct
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .energy import Couplings
from .field import ComplexField2D, PotentialSpec
from .grid import Grid2D
from .minimize import MinimizeConfig

MAGIC = b"PSN1"
VERSION = 1
_HEADER = struct.Struct("<4sII3d")


class FieldFileError(ValueError):
    pass


class BadMagicError(FieldFileError):
    pass


class VersionMismatchError(FieldFileError):
    pass


class TruncatedPayloadError(FieldFileError):
    pass


class ConfigError(ValueError):
    """Invalid or unreadable run configuration."""


def save_field(path, u: ComplexField2D, meta: dict | None = None) -> None:
    """Write ``u`` as a PSN1 file; ``meta`` may carry ``a`` and ``omega``."""
    meta = meta or {}
    g = u.grid
    a = float(meta.get("a", g.integrate(np.abs(u.values) ** 2)))
    omega = float(meta.get("omega", 0.0))
    header = _HEADER.pack(MAGIC, VERSION, g.n, g.half_width, a, omega)
    payload = np.ascontiguousarray(u.values, dtype="<c16").tobytes()
    Path(path).write_bytes(header + payload)


def load_field(path) -> tuple[ComplexField2D, dict]:
    """Read a PSN1 file. Returns the field and ``{n, L, a, omega, version}``."""
    raw = Path(path).read_bytes()
    if len(raw) < 4 or raw[:4] != MAGIC:
        raise BadMagicError(f"bad magic in {path}: expected {MAGIC!r}, found {raw[:4]!r}")
    if len(raw) < _HEADER.size:
        raise TruncatedPayloadError(f"truncated header in {path}")
    _, version, n, L, a, omega = _HEADER.unpack_from(raw)
    if version != VERSION:
        raise VersionMismatchError(f"version mismatch in {path}: file has {version}, reader supports {VERSION}")
    expected = 16 * n * n
    payload = raw[_HEADER.size :]
    if len(payload) != expected:
        raise TruncatedPayloadError(
            f"truncated payload in {path}: header n={n} needs {expected} bytes, found {len(payload)}"
        )
    vals = np.frombuffer(payload, dtype="<c16").reshape(n, n).astype(np.complex128)
    u = ComplexField2D(Grid2D(n, L), vals)
    return u, {"n": n, "L": L, "a": a, "omega": omega, "version": version}


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    n: int = 256
    half_width: float = 16.0
    comoving: bool = True
    decay_lengths: float = 30.0
    singular: str = "lattice"
    potential: dict = field(default_factory=lambda: {"kind": "harmonic", "lam": 2.0, "omega": 1.0})
    solver: dict = field(default_factory=dict)
    a_values: list | None = None
    a_fractions: list | None = None
    continuation: bool = True
    seed: int = 0
    out: str | None = None

    def potential_spec(self) -> PotentialSpec:
        p = dict(self.potential)
        kind = p.pop("kind", "harmonic")
        if "lambda" in p:
            p["lam"] = p.pop("lambda")
        try:
            return PotentialSpec(kind=kind, **p)
        except TypeError as exc:
            raise ConfigError(f"bad potential settings {self.potential}: {exc}") from None

    def minimize_config(self) -> MinimizeConfig:
        s = dict(self.solver)
        if "couplings" in s:
            s["couplings"] = Couplings(**s["couplings"])
        s.setdefault("seed", self.seed)
        try:
            return MinimizeConfig(**s)
        except TypeError as exc:
            raise ConfigError(f"bad solver settings: {exc}") from None

    def masses(self, a_star: float) -> list:
        if self.a_values is not None:
            return [float(x) for x in self.a_values]
        if self.a_fractions is not None:
            fr = [float(x) for x in self.a_fractions]
            if any(not 0 < x < 1 for x in fr):
                raise ConfigError("a_fractions must lie in (0, 1)")
            return [x * a_star for x in fr]
        return []


def load_config(path) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    return config_from_dict(data)


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    data = dict(data)
    grid = data.pop("grid", {}) or {}
    sweep = data.pop("sweep", {}) or {}
    known = {f.name for f in fields(RunConfig)}
    kw = {}
    if "n" in grid:
        kw["n"] = int(grid["n"])
    if "L" in grid:
        kw["half_width"] = float(grid["L"])
    for key in ("comoving", "decay_lengths", "singular"):
        if key in grid:
            kw[key] = grid[key]
    for key in ("a_values", "a_fractions", "continuation"):
        if key in sweep:
            kw[key] = sweep[key]
    for key, val in data.items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        kw[key] = val
    cfg = RunConfig(**kw)
    try:
        Grid2D(cfg.n, cfg.half_width)
        cfg.potential_spec()
        cfg.minimize_config()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


# ---------------------------------------------------------------------------
# reports


def fmt(x) -> str:
    """Fixed 17-significant-digit rendering used in every text report."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def _encode(obj, indent: int) -> str:
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = sorted((str(k), v) for k, v in obj.items())
        body = ",\n".join(f"{pad}{json.dumps(k)}: {_encode(v, indent + 1)}" for k, v in items)
        return "{\n" + body + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        body = ",\n".join(pad + _encode(v, indent + 1) for v in obj)
        return "[\n" + body + "\n" + end + "]"
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return "null" if obj is None else ("true" if obj else "false")
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        return fmt(x)
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps_json(obj) -> str:
    """JSON with sorted keys and floats printed to 17 significant digits."""
    return _encode(obj, 0) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps_json(obj))


def write_csv(path, header: list, rows: list) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_csv(path) -> tuple[list, list]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigError(f"empty CSV file {path}")
    return rows[0], rows[1:]
