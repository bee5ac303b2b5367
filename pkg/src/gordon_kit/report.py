"""Report container and its CSV/JSON serializations."""

import csv
import io
import json
import math
from dataclasses import dataclass, field

__version__ = "0.1.0"


@dataclass
class ScanReport:
    """Tabular result of a run.

    ``columns`` lists logical column names; complex-valued columns are
    flattened to ``<name>_re`` and ``<name>_im`` on output.  ``declined``
    marks a run that finished but could not certify.
    """

    mode: str
    columns: list
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    declined: bool = False

    def flat_columns(self):
        out = []
        for c in self.columns:
            if any(isinstance(r.get(c), complex) for r in self.rows):
                out += [f"{c}_re", f"{c}_im"]
            else:
                out.append(c)
        return out

    def flat_rows(self):
        cols = self.flat_columns()
        complex_cols = {c for c in self.columns if f"{c}_re" in cols}
        for r in self.rows:
            flat = {}
            for c in self.columns:
                v = r.get(c)
                if c in complex_cols:
                    v = complex(v)
                    flat[f"{c}_re"], flat[f"{c}_im"] = v.real, v.imag
                else:
                    flat[c] = v
            yield flat


def _big_int(v):
    """Decimal string, or a size note once Python refuses the conversion."""
    if v.bit_length() <= 14000:
        return str(v)
    return f"<{v.bit_length()}-bit integer>"


def _jsonable(v):
    if isinstance(v, bool) or v is None or isinstance(v, str):
        return v
    if isinstance(v, int):
        return v if abs(v) < 2**63 else _big_int(v)
    if isinstance(v, float):
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, complex):
        return [_jsonable(v.real), _jsonable(v.imag)]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "item"):  # numpy scalar
        return _jsonable(v.item())
    return str(v)


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, int) and not isinstance(v, bool):
        return _big_int(v)
    return str(v)


def meta_block(report):
    meta = {"tool_version": __version__, "mode": report.mode, "declined": report.declined}
    meta.update(report.meta)
    return _jsonable(meta)


def to_csv(report):
    buf = io.StringIO()
    for key, value in sorted(meta_block(report).items()):
        buf.write(f"# meta: {key}={json.dumps(value, sort_keys=True)}\n")
    writer = csv.DictWriter(buf, fieldnames=report.flat_columns(), lineterminator="\r\n")
    writer.writeheader()
    for r in report.flat_rows():
        writer.writerow({k: _cell(v) for k, v in r.items()})
    return buf.getvalue()


def to_json(report):
    doc = {
        "meta": meta_block(report),
        "columns": report.flat_columns(),
        "rows": [_jsonable(r) for r in report.flat_rows()],
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def render(report, fmt):
    if fmt == "csv":
        return to_csv(report)
    if fmt == "json":
        return to_json(report)
    raise ValueError(f"unknown format {fmt!r}")


def write_report(report, path, fmt):
    text = render(report, fmt)
    if path is None or path == "-":
        return text
    newline = "" if fmt == "csv" else None
    with open(path, "w", encoding="utf-8", newline=newline) as fh:
        fh.write(text)
    return text


def read_csv(text):
    """Inverse of :func:`to_csv` for tests and downstream scripts: (meta, rows)."""
    meta, body = {}, []
    for line in text.splitlines(keepends=True):
        if line.startswith("# meta: "):
            key, _, value = line[len("# meta: "):].rstrip("\r\n").partition("=")
            meta[key] = json.loads(value)
        else:
            body.append(line)
    rows = list(csv.DictReader(io.StringIO("".join(body))))
    return meta, rows
