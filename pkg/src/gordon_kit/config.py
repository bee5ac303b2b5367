"""Run configuration: parsing, validation and defaults.

Canonical documents are JSON; TOML with the same structure is accepted.
Example::

    {"mode": "jacobi-scan", "C": 2.0,
     "coefficients": {"generator": "constant", "params": {"a": 1, "b": 0, "window": [-40, 80]}},
     "periods": [1, 2, 4],
     "grid": {"center": [0, 0], "radius": 0.5, "counts": [21, 21]},
     "output": {"format": "csv"}}
"""

import json
import math
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

MODES = (
    "jacobi-bound", "jacobi-scan", "jacobi-defect", "quasi-gen",
    "sl-bound", "sl-scan", "sl-defect", "spectrum", "verify",
)
JACOBI_MODES = {"jacobi-bound", "jacobi-scan", "jacobi-defect", "quasi-gen", "spectrum"}
SL_MODES = {"sl-bound", "sl-scan", "sl-defect"}
JACOBI_GENERATORS = {"liouville", "golden", "rational", "constant"}
QUASI_GENERATORS = {"liouville", "golden", "rational"}
SL_GENERATORS = {"gordon_comb", "constant"}
FORMATS = ("csv", "json")
DEFAULT_COUNTS = (21, 21)


class ConfigError(ValueError):
    """Semantic problem; ``field`` names the offending entry."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class ConfigParseError(ValueError):
    """Document is not well-formed; carries line and column when known."""

    def __init__(self, message, line=None, column=None):
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Grid:
    center: complex = 0j
    radius: float = None  # None: 0.9 times the certified disk radius
    counts: tuple = DEFAULT_COUNTS

    def points(self, radius=None):
        """Square grid of half-width radius/sqrt(2), so every point lies in the disk."""
        r = self.radius if radius is None else radius
        h = r / math.sqrt(2)
        nx, ny = self.counts
        xs = [self.center.real] if nx == 1 else [self.center.real - h + 2 * h * i / (nx - 1) for i in range(nx)]
        ys = [self.center.imag] if ny == 1 else [self.center.imag - h + 2 * h * j / (ny - 1) for j in range(ny)]
        return [complex(x, y) for x in xs for y in ys]

    def to_dict(self):
        return {"center": [self.center.real, self.center.imag], "radius": self.radius, "counts": list(self.counts)}


@dataclass(frozen=True)
class RunConfig:
    mode: str
    C: float = None
    coefficients: dict = None
    norms: dict = None
    periods: tuple = None
    depths: tuple = None
    grid: Grid = field(default_factory=Grid)
    N: int = None
    start: int = None
    alpha: int = 1
    seed: int = 0
    trials: int = 50
    out_path: str = None
    out_format: str = "csv"

    def to_dict(self):
        doc = {"mode": self.mode, "output": {"path": self.out_path, "format": self.out_format}}
        for key in ("C", "coefficients", "norms", "N", "start"):
            if getattr(self, key) is not None:
                doc[key] = getattr(self, key)
        for key in ("periods", "depths"):
            if getattr(self, key) is not None:
                doc[key] = list(getattr(self, key))
        if self.mode in ("jacobi-scan", "sl-scan"):
            doc["grid"] = self.grid.to_dict()
        if self.mode == "sl-scan":
            doc["alpha"] = self.alpha
        if self.mode == "verify":
            doc["seed"] = self.seed
            doc["trials"] = self.trials
        return doc

    def dumps(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)


# low-level checks ------------------------------------------------------------


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _real(doc, key, positive=False, nonneg=False, required=False):
    v = doc.get(key)
    if v is None:
        if required:
            raise ConfigError(key, "required field is missing")
        return None
    if not _is_num(v) or not math.isfinite(v):
        raise ConfigError(key, f"expected a finite number, got {v!r}")
    if positive and v <= 0:
        raise ConfigError(key, "must be positive")
    if nonneg and v < 0:
        raise ConfigError(key, "must be nonnegative")
    return float(v)


def _int(doc, key, minimum=None, required=False):
    v = doc.get(key)
    if v is None:
        if required:
            raise ConfigError(key, "required field is missing")
        return None
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(key, f"expected an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise ConfigError(key, f"must be at least {minimum}")
    return v


def _increasing(doc, key, minimum):
    v = doc.get(key)
    if v is None:
        return None
    if not isinstance(v, list) or not v:
        raise ConfigError(key, "expected a nonempty array of integers")
    for x in v:
        if isinstance(x, bool) or not isinstance(x, int):
            raise ConfigError(key, f"expected integers, got {x!r}")
    if v[0] < minimum:
        raise ConfigError(key, f"entries must be at least {minimum}")
    if any(b <= a for a, b in zip(v, v[1:])):
        raise ConfigError(key, "must be strictly increasing")
    return tuple(v)


def _complex(v, key):
    if _is_num(v):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(_is_num(x) for x in v):
        return complex(v[0], v[1])
    raise ConfigError(key, f"expected a number or [re, im], got {v!r}")


def _grid(doc):
    g = doc.get("grid", {})
    if not isinstance(g, dict):
        raise ConfigError("grid", "expected an object")
    unknown = set(g) - {"center", "radius", "counts"}
    if unknown:
        raise ConfigError(f"grid.{sorted(unknown)[0]}", "unknown field")
    center = _complex(g.get("center", 0), "grid.center")
    radius = g.get("radius")
    if radius is not None and (not _is_num(radius) or not radius > 0 or not math.isfinite(radius)):
        raise ConfigError("grid.radius", "must be a positive number")
    counts = g.get("counts", list(DEFAULT_COUNTS))
    if isinstance(counts, int) and not isinstance(counts, bool):
        counts = [counts, counts]
    if (not isinstance(counts, list) or len(counts) != 2
            or any(isinstance(c, bool) or not isinstance(c, int) or c < 1 for c in counts)):
        raise ConfigError("grid.counts", "expected [nx, ny] with positive integers")
    return Grid(center, None if radius is None else float(radius), tuple(counts))


def _coefficients(doc, mode):
    c = doc.get("coefficients")
    if c is None:
        return None
    if not isinstance(c, dict):
        raise ConfigError("coefficients", "expected an object")
    kinds = [k for k in ("inline", "file", "generator") if k in c]
    if len(kinds) != 1:
        raise ConfigError("coefficients", "give exactly one of 'inline', 'file', 'generator'")
    kind = kinds[0]
    if kind == "inline":
        if not isinstance(c["inline"], dict):
            raise ConfigError("coefficients.inline", "expected an object")
        return {"inline": c["inline"]}
    if kind == "file":
        if not isinstance(c["file"], str) or not c["file"]:
            raise ConfigError("coefficients.file", "expected a path")
        return {"file": c["file"]}
    name = c["generator"]
    allowed = SL_GENERATORS if mode in SL_MODES else JACOBI_GENERATORS
    if mode == "quasi-gen":
        allowed = QUASI_GENERATORS
    if name not in allowed:
        raise ConfigError("coefficients.generator", f"{name!r} not available here; choose from {sorted(allowed)}")
    params = c.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("coefficients.params", "expected an object")
    return {"generator": name, "params": params}


# public ------------------------------------------------------------------------


def parse_document(text, fmt=None):
    """Text to a plain dict.  ``fmt`` is 'json', 'toml' or None (sniff)."""
    if fmt is None:
        fmt = "json" if text.lstrip().startswith("{") else "toml"
    if fmt == "json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigParseError(exc.msg, exc.lineno, exc.colno) from None
    elif fmt == "toml":
        try:
            doc = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            line, col = _toml_position(str(exc))
            raise ConfigParseError(str(exc), line, col) from None
    else:
        raise ValueError(f"unknown document format {fmt!r}")
    if not isinstance(doc, dict):
        raise ConfigParseError("top level must be an object")
    return doc


def _toml_position(message):
    import re

    m = re.search(r"line (\d+), column (\d+)", message)
    return (int(m.group(1)), int(m.group(2))) if m else (None, None)


def validate(doc):
    """Dict to a validated :class:`RunConfig` with defaults applied."""
    mode = doc.get("mode")
    if mode is None:
        raise ConfigError("mode", "required field is missing")
    if mode not in MODES:
        raise ConfigError("mode", f"unknown mode {mode!r}; choose from {', '.join(MODES)}")
    known = {"mode", "C", "coefficients", "norms", "periods", "depths", "grid", "N", "start",
             "alpha", "seed", "trials", "output"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown field")

    out = doc.get("output", {})
    if not isinstance(out, dict):
        raise ConfigError("output", "expected an object")
    fmt = out.get("format", "csv")
    if fmt not in FORMATS:
        raise ConfigError("output.format", f"expected one of {FORMATS}")
    path = out.get("path")
    if path is not None and not isinstance(path, str):
        raise ConfigError("output.path", "expected a string")

    needs_C = {"jacobi-bound", "jacobi-scan", "quasi-gen", "sl-bound", "sl-scan"}
    C = _real(doc, "C", positive=True, required=mode in needs_C)
    coeffs = _coefficients(doc, mode)
    norms = doc.get("norms")
    if norms is not None:
        if not isinstance(norms, dict):
            raise ConfigError("norms", "expected an object")
        names = ("norm_a", "norm_ainv", "norm_b") if mode == "jacobi-bound" else ("norm_ainv", "mu_unif")
        if mode not in ("jacobi-bound", "sl-bound"):
            raise ConfigError("norms", f"not used by mode {mode}")
        extra = set(norms) - set(names)
        if extra:
            raise ConfigError(f"norms.{sorted(extra)[0]}", "unknown field")
        norms = {n: _real(norms, n, nonneg=True, required=True) for n in names}
        for n in names:
            if n != "norm_b" and n != "mu_unif" and norms[n] <= 0:
                raise ConfigError(f"norms.{n}", "must be positive")
    if mode in ("jacobi-bound", "sl-bound") and norms is None and coeffs is None:
        raise ConfigError("norms", "give norms or coefficients")
    needs_coeffs = {"jacobi-scan", "jacobi-defect", "quasi-gen", "sl-scan", "sl-defect", "spectrum"}
    if mode in needs_coeffs and coeffs is None:
        raise ConfigError("coefficients", "required field is missing")

    periods = _increasing(doc, "periods", 4 if mode in SL_MODES else 1)
    depths = _increasing(doc, "depths", 1)
    quasi = coeffs is not None and coeffs.get("generator") in QUASI_GENERATORS
    if mode in ("jacobi-scan", "jacobi-defect", "sl-scan", "sl-defect") and periods is None:
        if not (quasi and depths is not None):
            raise ConfigError("periods", "required field is missing")
    if depths is not None and not quasi:
        raise ConfigError("depths", "only meaningful for quasiperiodic generators")

    N = _int(doc, "N", minimum=1, required=mode == "spectrum")
    start = _int(doc, "start")
    alpha = _int(doc, "alpha", minimum=1)
    seed = _int(doc, "seed", minimum=0)
    trials = _int(doc, "trials", minimum=1)
    return RunConfig(
        mode=mode, C=C, coefficients=coeffs, norms=norms, periods=periods, depths=depths,
        grid=_grid(doc), N=N, start=start, alpha=1 if alpha is None else alpha,
        seed=0 if seed is None else seed, trials=50 if trials is None else trials,
        out_path=path, out_format=fmt,
    )


def parse_config(text, fmt=None):
    return validate(parse_document(text, fmt))


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    fmt = "toml" if str(path).endswith(".toml") else "json" if str(path).endswith(".json") else None
    return parse_config(text, fmt)
