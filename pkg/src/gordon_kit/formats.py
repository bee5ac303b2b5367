"""JSON layouts for coefficient files.

Jacobi::

    {"n_lo": -10, "a": [1.0, [0.5, 0.25], ...], "b": [...],
     "norm_a": 2.0, "norm_ainv": 1.0, "norm_b": 0.5}   # norms optional

Sturm-Liouville::

    {"a_pieces": [[x0, x1, re, im], ...],        # contiguous, cover the window
     "density_pieces": [[x0, x1, re, im], ...],  # disjoint; zero elsewhere
     "atoms": [[position, re, im], ...],
     "window": [lo, hi],                          # optional, defaults to a's span
     "norm_a": ..., "norm_ainv": ...}             # optional

A complex number is written either as a plain number or as ``[re, im]``.
"""

import json
import math


from .jacobi import CoeffSeq
from .measures import LocalMeasure, PiecewiseConstant
from .sturm import SLCoeff


class FormatError(ValueError):
    pass


def _num(v, where):
    if isinstance(v, bool):
        raise FormatError(f"{where}: expected a number, got {v!r}")
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in v
    ):
        return complex(v[0], v[1])
    raise FormatError(f"{where}: expected a number or [re, im], got {v!r}")


def _real(v, where):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise FormatError(f"{where}: expected a finite real number, got {v!r}")
    return float(v)


def _rows(doc, key, width):
    rows = doc.get(key, [])
    if not isinstance(rows, list):
        raise FormatError(f"{key}: expected an array")
    for i, r in enumerate(rows):
        if not isinstance(r, list) or len(r) != width:
            raise FormatError(f"{key}[{i}]: expected an array of {width} numbers")
    return [[_real(x, f"{key}[{i}]") for x in r] for i, r in enumerate(rows)]


def _optional_norms(doc, names):
    out = {}
    for n in names:
        if doc.get(n) is not None:
            out[n] = _real(doc[n], n)
    return out


def jacobi_from_dict(doc):
    if not isinstance(doc, dict):
        raise FormatError("Jacobi coefficients must be an object")
    for key in ("a", "b", "n_lo"):
        if key not in doc:
            raise FormatError(f"missing field {key!r}")
    n_lo = doc["n_lo"]
    if isinstance(n_lo, bool) or not isinstance(n_lo, int):
        raise FormatError("n_lo: expected an integer")
    if not isinstance(doc["a"], list) or not isinstance(doc["b"], list):
        raise FormatError("a and b must be arrays")
    a = [_num(v, f"a[{i}]") for i, v in enumerate(doc["a"])]
    b = [_num(v, f"b[{i}]") for i, v in enumerate(doc["b"])]
    try:
        return CoeffSeq(n_lo, a, b, **_optional_norms(doc, ("norm_a", "norm_ainv", "norm_b")))
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def _pair(z):
    z = complex(z)
    return [z.real, z.imag]


def jacobi_to_dict(coeffs):
    return {
        "n_lo": coeffs.n_lo,
        "a": [_pair(v) for v in coeffs.a],
        "b": [_pair(v) for v in coeffs.b],
        "norm_a": coeffs.norm_a,
        "norm_ainv": coeffs.norm_ainv,
        "norm_b": coeffs.norm_b,
    }


def _pieces_to_pc(pieces, key, contiguous):
    pieces = sorted(pieces, key=lambda r: r[0])
    breaks, values = [], []
    for i, (x0, x1, re, im) in enumerate(pieces):
        if not x1 > x0:
            raise FormatError(f"{key}[{i}]: empty or reversed piece")
        if breaks:
            if x0 < breaks[-1] - 1e-12:
                raise FormatError(f"{key}: pieces overlap near {x0}")
            if x0 > breaks[-1] + 1e-12:
                if contiguous:
                    raise FormatError(f"{key}: gap between {breaks[-1]} and {x0}")
                values.append(0.0)
                breaks.append(x0)
        else:
            breaks.append(x0)
        values.append(complex(re, im))
        breaks.append(x1)
    return breaks, values


def sl_from_dict(doc):
    if not isinstance(doc, dict):
        raise FormatError("Sturm-Liouville coefficients must be an object")
    if "a_pieces" not in doc:
        raise FormatError("missing field 'a_pieces'")
    a_rows = _rows(doc, "a_pieces", 4)
    if not a_rows:
        raise FormatError("a_pieces: need at least one piece")
    a_breaks, a_vals = _pieces_to_pc(a_rows, "a_pieces", contiguous=True)
    d_breaks, d_vals = _pieces_to_pc(_rows(doc, "density_pieces", 4), "density_pieces", contiguous=False)
    atoms = [(x, complex(re, im)) for x, re, im in _rows(doc, "atoms", 3)]
    window = doc.get("window", [a_breaks[0], a_breaks[-1]])
    if not isinstance(window, list) or len(window) != 2:
        raise FormatError("window: expected [lo, hi]")
    lo, hi = _real(window[0], "window"), _real(window[1], "window")
    if not lo < hi:
        raise FormatError("window: need lo < hi")
    try:
        a = PiecewiseConstant(a_breaks, a_vals)
        mu = LocalMeasure(atoms, d_breaks, d_vals, window=(lo, hi))
        return SLCoeff(a, mu, **_optional_norms(doc, ("norm_a", "norm_ainv")))
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def _pc_rows(pc):
    return [
        [float(x0), float(x1), complex(v).real, complex(v).imag]
        for x0, x1, v in zip(pc.breaks[:-1], pc.breaks[1:], pc.values)
        if v != 0 or pc.fill is None
    ]


def sl_to_dict(coeff):
    mu = coeff.mu
    return {
        "a_pieces": _pc_rows(coeff.a),
        "density_pieces": _pc_rows(mu.density),
        "atoms": [[float(x), w.real, w.imag] for x, w in zip(mu.atom_pos, mu.atom_w)],
        "window": list(coeff.window),
        "norm_a": coeff.norm_a,
        "norm_ainv": coeff.norm_ainv,
    }


def load_coefficients(path, kind):
    """Read a coefficient file; ``kind`` is 'jacobi' or 'sl'."""
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return jacobi_from_dict(doc) if kind == "jacobi" else sl_from_dict(doc)


def dump_coefficients(obj, path):
    doc = jacobi_to_dict(obj) if isinstance(obj, CoeffSeq) else sl_to_dict(obj)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


__all__ = [
    "FormatError", "jacobi_from_dict", "jacobi_to_dict", "sl_from_dict", "sl_to_dict",
    "load_coefficients", "dump_coefficients",
]
